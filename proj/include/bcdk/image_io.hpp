#pragma once

#include <filesystem>

#include "bcdk/raster.hpp"

namespace bcdk {

// Format chosen by extension: .png (8-bit gray/RGB), .pgm (P5), .ppm (P6).
// PNG input with alpha, palette, or 16-bit samples is reduced to 8-bit gray
// or RGB. Throws IoError.
RasterImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const RasterImage& image);

bool is_supported_image_path(const std::filesystem::path& path);

}  // namespace bcdk
