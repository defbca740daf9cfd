#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsal {

// Dense row-major float32 array. Shape dimensions are strictly positive and
// data().size() always equals the product of the shape.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);
  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  // 2-D element access; only valid on rank-2 tensors.
  float at(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }
  float& at(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }

  // Contiguous slice along the leading axis (e.g. one class plane of K×H×W).
  std::span<const float> plane(std::size_t index) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

std::size_t shape_product(std::span<const std::size_t> shape);

// ".gst" interchange container:
//   "GSAL" | u32 LE header length | JSON header | raw LE payload.
// The header is {"dtype":"f32"|"u8","order":"row-major","shape":[...]}.
// Writers emit the header in canonical compact form so a load/save cycle of a
// canonically written file is byte-identical.
std::string encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::string_view bytes);

Tensor load_tensor(const std::filesystem::path& path);
void save_tensor(const std::filesystem::path& path, const Tensor& tensor);

// Raw decoded container, before dtype-specific interpretation. Used by mask
// loading, which accepts both u8 and f32 payloads.
struct RawArray {
  std::string dtype;
  std::vector<std::size_t> shape;
  std::vector<float> values;  // u8 payloads are widened to float
};
RawArray decode_array(std::string_view bytes);
std::string encode_u8(std::span<const std::size_t> shape, std::span<const std::uint8_t> bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace gsal
