#include "ctis/cube.hpp"

#include <bit>
#include <limits>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "ctis/error.hpp"

namespace ctis {
namespace {

static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 floats required");

void check_values(std::span<const float> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (!std::isfinite(v)) {
      throw ValueError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
    if (v < 0.0f) {
      throw ValueError(std::string(what) + ": negative value at index " + std::to_string(i));
    }
  }
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_floats(std::string& buf, std::span<const float> values) {
  buf.reserve(buf.size() + 4 * values.size());
  for (float v : values) put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

std::vector<float> get_floats(const unsigned char* p, std::size_t count) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  return out;
}

std::string slurp(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void check_header(const std::string& bytes, const char* magic, std::size_t header_bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
  if (bytes.size() < header_bytes) throw FormatError(std::string(magic) + ": truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = get_u32(p + 4);
  if (version != kFormatVersion) {
    throw FormatError(std::string(magic) + ": unsupported version " + std::to_string(version));
  }
}

void check_payload(const std::string& bytes, std::size_t header_bytes, std::size_t count,
                   const char* magic) {
  const std::size_t expected = header_bytes + 4 * count;
  if (bytes.size() != expected) {
    throw FormatError(std::string(magic) + ": payload is " +
                      std::to_string(bytes.size() - header_bytes) + " bytes, header implies " +
                      std::to_string(4 * count));
  }
}

std::string encode_cube(const HyperCube& cube) {
  std::string buf = "HCUB";
  put_u32(buf, kFormatVersion);
  put_u32(buf, static_cast<std::uint32_t>(cube.height()));
  put_u32(buf, static_cast<std::uint32_t>(cube.width()));
  put_u32(buf, static_cast<std::uint32_t>(cube.channels()));
  put_floats(buf, cube.values());
  return buf;
}

std::string encode_image(const CtisImage& image) {
  std::string buf = "HIMG";
  put_u32(buf, kFormatVersion);
  put_u32(buf, static_cast<std::uint32_t>(image.side()));
  put_floats(buf, image.values());
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return slurp(in);
}

}  // namespace

HyperCube::HyperCube(CubeShape shape, std::vector<float> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape_.height == 0 || shape_.width == 0 || shape_.channels == 0) {
    throw DimensionError("cube dimensions must be >= 1");
  }
  if (values_.size() != shape_.voxels()) throw_dimension("cube voxel count", shape_.voxels(), values_.size());
  check_values(values_, "cube");
}

HyperCube HyperCube::filled(CubeShape shape, float value) {
  return HyperCube(shape, std::vector<float>(shape.voxels(), value));
}

HyperCube HyperCube::from_doubles(CubeShape shape, std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    out[i] = (v < 0.0 && v > -1e-12) ? 0.0f : static_cast<float>(v);
  }
  return HyperCube(shape, std::move(out));
}

std::vector<double> HyperCube::to_doubles() const {
  return std::vector<double>(values_.begin(), values_.end());
}

CtisImage::CtisImage(std::size_t side, std::vector<float> values)
    : side_(side), values_(std::move(values)) {
  if (side_ == 0) throw DimensionError("image side must be >= 1");
  if (values_.size() != side_ * side_) throw_dimension("image pixel count", side_ * side_, values_.size());
  check_values(values_, "image");
}

CtisImage CtisImage::filled(std::size_t side, float value) {
  return CtisImage(side, std::vector<float>(side * side, value));
}

CtisImage CtisImage::from_doubles(std::size_t side, std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    out[i] = (v < 0.0 && v > -1e-12) ? 0.0f : static_cast<float>(v);
  }
  return CtisImage(side, std::move(out));
}

std::vector<double> CtisImage::to_doubles() const {
  return std::vector<double>(values_.begin(), values_.end());
}

void write_cube(const HyperCube& cube, std::ostream& out) {
  const std::string buf = encode_cube(cube);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing HCUB stream");
}

HyperCube read_cube(std::istream& in) {
  const std::string bytes = slurp(in);
  check_header(bytes, "HCUB", kCubeHeaderBytes);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const CubeShape shape{get_u32(p + 8), get_u32(p + 12), get_u32(p + 16)};
  // Reject headers whose implied payload cannot possibly fit before multiplying
  // all three dimensions together.
  const std::size_t available = (bytes.size() - kCubeHeaderBytes) / 4;
  if (shape.height > available || shape.width > available || shape.channels > available ||
      shape.height * shape.width > available) {
    throw FormatError("HCUB: truncated payload");
  }
  check_payload(bytes, kCubeHeaderBytes, shape.voxels(), "HCUB");
  return HyperCube(shape, get_floats(p + kCubeHeaderBytes, shape.voxels()));
}

void write_image(const CtisImage& image, std::ostream& out) {
  const std::string buf = encode_image(image);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing HIMG stream");
}

CtisImage read_image(std::istream& in) {
  const std::string bytes = slurp(in);
  check_header(bytes, "HIMG", kImageHeaderBytes);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t side = get_u32(p + 8);
  if (side > (bytes.size() - kImageHeaderBytes) / 4) throw FormatError("HIMG: truncated payload");
  check_payload(bytes, kImageHeaderBytes, side * side, "HIMG");
  return CtisImage(side, get_floats(p + kImageHeaderBytes, side * side));
}

void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

void save_cube(const HyperCube& cube, const std::filesystem::path& path) {
  const std::string buf = encode_cube(cube);
  write_file_atomic(path, buf);
}

HyperCube load_cube(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_cube(in);
}

void save_image(const CtisImage& image, const std::filesystem::path& path) {
  const std::string buf = encode_image(image);
  write_file_atomic(path, buf);
}

CtisImage load_image(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_image(in);
}

}  // namespace ctis
