#include "gsal/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsal/error.hpp"

namespace gsal {
namespace {

constexpr std::string_view kMagic = "GSAL";

std::uint32_t read_u32_le(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
  return v;
}

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::string header_json(std::string_view dtype, std::span<const std::size_t> shape) {
  nlohmann::json header;
  header["dtype"] = dtype;
  header["order"] = "row-major";
  header["shape"] = std::vector<std::size_t>(shape.begin(), shape.end());
  return header.dump();
}

}  // namespace

std::size_t shape_product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw Error(ErrorCode::ShapeMismatch, "tensor dimensions must be positive");
  }
  if (shape_product(shape_) != data_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor data length " + std::to_string(data_.size()) +
                                              " does not match shape product " +
                                              std::to_string(shape_product(shape_)));
  }
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : Tensor(shape, std::vector<float>(shape_product(shape), 0.0f)) {}

std::span<const float> Tensor::plane(std::size_t index) const {
  if (shape_.empty() || index >= shape_[0]) {
    throw Error(ErrorCode::ShapeMismatch, "plane index out of range");
  }
  const std::size_t stride = data_.size() / shape_[0];
  return std::span<const float>(data_).subspan(index * stride, stride);
}

RawArray decode_array(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != kMagic) {
    throw Error(ErrorCode::BadMagic, "missing GSAL magic");
  }
  const std::uint32_t header_len = read_u32_le(bytes.data() + 4);
  if (bytes.size() < 8 + static_cast<std::size_t>(header_len)) {
    throw Error(ErrorCode::BadHeader, "header length exceeds file size");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadHeader, std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("dtype") || !header.contains("shape")) {
    throw Error(ErrorCode::BadHeader, "header must contain dtype and shape");
  }
  if (header.contains("order") && header["order"] != "row-major") {
    throw Error(ErrorCode::BadHeader, "only row-major order is supported");
  }

  RawArray out;
  try {
    out.dtype = header["dtype"].get<std::string>();
    for (const auto& d : header["shape"]) {
      const auto v = d.get<std::int64_t>();
      if (v <= 0) throw Error(ErrorCode::ShapeMismatch, "shape dimensions must be positive");
      out.shape.push_back(static_cast<std::size_t>(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadHeader, std::string("malformed header field: ") + e.what());
  }

  const std::string_view payload = bytes.substr(8 + header_len);
  const std::size_t count = shape_product(out.shape);
  if (out.dtype == "f32") {
    if (payload.size() != count * 4) {
      throw Error(ErrorCode::ShapeMismatch, "payload holds " + std::to_string(payload.size() / 4) +
                                                " floats, header shape requires " +
                                                std::to_string(count));
    }
    out.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t bits = read_u32_le(payload.data() + 4 * i);
      out.values[i] = std::bit_cast<float>(bits);
    }
  } else if (out.dtype == "u8") {
    if (payload.size() != count) {
      throw Error(ErrorCode::ShapeMismatch, "u8 payload length does not match header shape");
    }
    out.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      out.values[i] = static_cast<float>(static_cast<std::uint8_t>(payload[i]));
    }
  } else {
    throw Error(ErrorCode::BadHeader, "unsupported dtype '" + out.dtype + "'");
  }
  for (float v : out.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "tensor contains NaN or Inf");
  }
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  RawArray raw = decode_array(bytes);
  if (raw.dtype != "f32") {
    throw Error(ErrorCode::BadHeader, "expected dtype f32, found " + raw.dtype);
  }
  return Tensor(std::move(raw.shape), std::move(raw.values));
}

std::string encode_tensor(const Tensor& tensor) {
  const std::string header = header_json("f32", tensor.shape());
  std::string out;
  out.reserve(8 + header.size() + 4 * tensor.size());
  out.append(kMagic);
  append_u32_le(out, static_cast<std::uint32_t>(header.size()));
  out.append(header);
  for (float v : tensor.data()) append_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

std::string encode_u8(std::span<const std::size_t> shape, std::span<const std::uint8_t> bytes) {
  if (shape_product(shape) != bytes.size()) {
    throw Error(ErrorCode::ShapeMismatch, "u8 data length does not match shape");
  }
  const std::string header = header_json("u8", shape);
  std::string out;
  out.append(kMagic);
  append_u32_le(out, static_cast<std::uint32_t>(header.size()));
  out.append(header);
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string()).with_path(path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string()).with_path(path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string()).with_path(path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_tensor(bytes);
  } catch (Error& e) {
    throw e.with_path(path.string());
  }
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  write_file(path, encode_tensor(tensor));
}

}  // namespace gsal
