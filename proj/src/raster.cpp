#include "bcdk/raster.hpp"

#include <stdexcept>
#include <string>

namespace bcdk {

namespace {

void check_channels(int channels) {
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("raster images have 1 or 3 channels, got " +
                                std::to_string(channels));
  }
}

}  // namespace

RasterImage::RasterImage(ImageGeometry geometry, int channels, std::uint8_t fill)
    : geometry_(geometry), channels_(channels) {
  check_channels(channels);
  pixels_.assign(geometry.pixel_count() * channels, fill);
}

RasterImage::RasterImage(ImageGeometry geometry, int channels,
                         std::vector<std::uint8_t> pixels)
    : geometry_(geometry), channels_(channels), pixels_(std::move(pixels)) {
  check_channels(channels);
  if (pixels_.size() != geometry.pixel_count() * channels) {
    throw std::invalid_argument("pixel buffer size does not match " +
                                geometry.to_string() + "x" +
                                std::to_string(channels));
  }
}

}  // namespace bcdk
