#pragma once

// Hyperspectral cube and CTIS sensor image value types, plus their binary
// file formats.
//
// HCUB layout (all little-endian):
//   "HCUB" | u32 version=1 | u32 height | u32 width | u32 channels | f32[h*w*c]
// HIMG layout:
//   "HIMG" | u32 version=1 | u32 side | f32[side*side]
// Voxels are row-major with the spectral channel fastest, so the spectrum of
// one spatial pixel is contiguous.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace ctis {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kCubeHeaderBytes = 20;
inline constexpr std::size_t kImageHeaderBytes = 12;

struct CubeShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  [[nodiscard]] std::size_t voxels() const { return height * width * channels; }
  [[nodiscard]] std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const {
    return (row * width + col) * channels + ch;
  }
  friend bool operator==(const CubeShape&, const CubeShape&) = default;
};

/// The cube f: height x width spatial pixels, `channels` spectral samples each.
/// All values are finite and non-negative; enforced at construction.
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(CubeShape shape, std::vector<float> values);

  static HyperCube filled(CubeShape shape, float value);
  /// Narrowing conversion from a double-precision voxel vector; tiny negative
  /// values produced by round-off (> -1e-12) are clamped to zero.
  static HyperCube from_doubles(CubeShape shape, std::span<const double> values);

  [[nodiscard]] const CubeShape& shape() const { return shape_; }
  [[nodiscard]] std::size_t height() const { return shape_.height; }
  [[nodiscard]] std::size_t width() const { return shape_.width; }
  [[nodiscard]] std::size_t channels() const { return shape_.channels; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return values_.empty(); }

  [[nodiscard]] float operator()(std::size_t row, std::size_t col, std::size_t ch) const {
    return values_[shape_.index(row, col, ch)];
  }
  [[nodiscard]] std::span<const float> values() const { return values_; }
  [[nodiscard]] std::span<const float> spectrum(std::size_t row, std::size_t col) const {
    return std::span<const float>(values_).subspan(shape_.index(row, col, 0), shape_.channels);
  }
  [[nodiscard]] std::vector<double> to_doubles() const;

  friend bool operator==(const HyperCube&, const HyperCube&) = default;

 private:
  CubeShape shape_;
  std::vector<float> values_;
};

/// The square q x q sensor frame g, row-major.
class CtisImage {
 public:
  CtisImage() = default;
  CtisImage(std::size_t side, std::vector<float> values);

  static CtisImage filled(std::size_t side, float value);
  static CtisImage from_doubles(std::size_t side, std::span<const double> values);

  [[nodiscard]] std::size_t side() const { return side_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] float operator()(std::size_t row, std::size_t col) const {
    return values_[row * side_ + col];
  }
  [[nodiscard]] std::span<const float> values() const { return values_; }
  [[nodiscard]] std::vector<double> to_doubles() const;

  friend bool operator==(const CtisImage&, const CtisImage&) = default;

 private:
  std::size_t side_ = 0;
  std::vector<float> values_;
};

void write_cube(const HyperCube& cube, std::ostream& out);
HyperCube read_cube(std::istream& in);
void write_image(const CtisImage& image, std::ostream& out);
CtisImage read_image(std::istream& in);

/// File variants. Saving goes through a temporary sibling file followed by a
/// rename, so readers never observe a partially written file.
void save_cube(const HyperCube& cube, const std::filesystem::path& path);
HyperCube load_cube(const std::filesystem::path& path);
void save_image(const CtisImage& image, const std::filesystem::path& path);
CtisImage load_image(const std::filesystem::path& path);

/// Writes `bytes` to `path` atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes);

}  // namespace ctis
