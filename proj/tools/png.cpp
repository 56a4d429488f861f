#include "png.hpp"

#include <png.h>

#include <csetjmp>
#include <vector>

#include "ctis/cube.hpp"
#include "ctis/error.hpp"

namespace ctis::tools {

namespace {

void append(png_structp png, png_bytep data, png_size_t length) {
  auto* buffer = static_cast<std::vector<char>*>(png_get_io_ptr(png));
  buffer->insert(buffer->end(), reinterpret_cast<const char*>(data),
                 reinterpret_cast<const char*>(data) + length);
}

void flush(png_structp) {}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   std::span<const std::uint8_t> rgb) {
  if (rgb.size() != width * height * 3) throw_dimension("rgb buffer", width * height * 3, rgb.size());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: cannot allocate info");
  }

  std::vector<char> buffer;
  // libpng reports errors by longjmp; nothing between here and the jump owns resources.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encoding failed for " + path.string());
  }
  png_set_write_fn(png, &buffer, append, flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() + r * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  write_file_atomic(path, buffer);
}

}  // namespace ctis::tools
