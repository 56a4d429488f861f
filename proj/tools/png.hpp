#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

namespace ctis::tools {

/// Writes 8-bit RGB pixels (row-major, 3 bytes per pixel) as a PNG file.
/// The file appears atomically.
void write_png_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   std::span<const std::uint8_t> rgb);

}  // namespace ctis::tools
