#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bcdk/camera.hpp"

namespace bcdk {

// 8-bit gray (1 channel) or RGB (3 channels), row-major, interleaved.
class RasterImage {
 public:
  RasterImage(ImageGeometry geometry, int channels, std::uint8_t fill = 0);
  RasterImage(ImageGeometry geometry, int channels,
              std::vector<std::uint8_t> pixels);

  const ImageGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width(); }
  int height() const { return geometry_.height(); }
  int channels() const { return channels_; }

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels_[index(x, y, c)];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels_[index(x, y, c)];
  }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  bool operator==(const RasterImage&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * geometry_.width() + x) * channels_ + c;
  }

  ImageGeometry geometry_;
  int channels_;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace bcdk
