#include "bcdk/warp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "bcdk/errors.hpp"
#include "bcdk/parallel.hpp"

namespace bcdk {

bool inside_frame(const PixelPoint& p, const ImageGeometry& geometry) {
  return p.u >= -kFrameEpsilonPx && p.v >= -kFrameEpsilonPx &&
         p.u <= (geometry.width() - 1) + kFrameEpsilonPx &&
         p.v <= (geometry.height() - 1) + kFrameEpsilonPx;
}

bool sample_bilinear(const RasterImage& image, const PixelPoint& p,
                     std::uint8_t* out) {
  if (!inside_frame(p, image.geometry())) return false;
  const int w = image.width();
  const int h = image.height();
  const double u = std::clamp(p.u, 0.0, double(w - 1));
  const double v = std::clamp(p.v, 0.0, double(h - 1));
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double ax = u - x0;
  const double ay = v - y0;
  for (int c = 0; c < image.channels(); ++c) {
    const double top = (1.0 - ax) * image.at(x0, y0, c) + ax * image.at(x1, y0, c);
    const double bottom =
        (1.0 - ax) * image.at(x0, y1, c) + ax * image.at(x1, y1, c);
    const double value = (1.0 - ay) * top + ay * bottom;
    out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
  }
  return true;
}

bool try_distortion_source_location(const PixelPoint& dest,
                                    const Intrinsics& source,
                                    const Intrinsics& destination,
                                    const DistortionCoefficients& d,
                                    const UndistortOptions& options,
                                    PixelPoint* out) {
  const UndistortResult r =
      try_undistort(pixel_to_normalized(dest, destination), d, options);
  if (!r.converged) return false;
  *out = normalized_to_pixel(r.point, source);
  return true;
}

namespace {

// Fills every destination pixel from `src` at locate(x, y). `locate` returns
// false to signal a numeric failure, which is reported for the first failing
// pixel in row-major order.
RasterImage remap(const RasterImage& src, const ImageGeometry& dest_geometry,
                  int threads,
                  const std::function<bool(int, int, PixelPoint*)>& locate,
                  std::size_t* black_filled) {
  RasterImage out(dest_geometry, src.channels(), 0);
  const int w = dest_geometry.width();
  const std::size_t rows = static_cast<std::size_t>(dest_geometry.height());
  std::vector<std::size_t> black_per_row(rows, 0);

  parallel_for(rows, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < w; ++x) {
        PixelPoint q;
        if (!locate(x, y, &q)) {
          throw NonConvergence("inverse distortion did not converge at pixel (" +
                                   std::to_string(x) + ", " + std::to_string(y) +
                                   ")",
                               {}, 0.0, 0);
        }
        if (!sample_bilinear(src, q, &out.at(x, y, 0))) ++black_per_row[row];
      }
    }
  });

  if (black_filled) {
    std::size_t total = 0;
    for (std::size_t n : black_per_row) total += n;
    *black_filled = total;
  }
  return out;
}

}  // namespace

RasterImage apply_distortion_to_image(const RasterImage& src,
                                      const Intrinsics& source,
                                      const Intrinsics& destination,
                                      const DistortionCoefficients& d,
                                      const WarpOptions& options,
                                      std::size_t* black_filled) {
  if (!(src.geometry() == source.geometry)) {
    throw GeometryMismatch("image is " + src.geometry().to_string() +
                           " but the source camera is " +
                           source.geometry.to_string());
  }
  return remap(
      src, destination.geometry, options.threads,
      [&](int x, int y, PixelPoint* q) {
        return try_distortion_source_location({double(x), double(y)}, source,
                                              destination, d, options.undistort,
                                              q);
      },
      black_filled);
}

RasterImage apply_distortion_to_image(const RasterImage& src,
                                      const Intrinsics& k,
                                      const DistortionCoefficients& d,
                                      const WarpOptions& options,
                                      std::size_t* black_filled) {
  return apply_distortion_to_image(src, k, k, d, options, black_filled);
}

RasterImage undistort_image(const RasterImage& src, const Intrinsics& k,
                            const DistortionCoefficients& d,
                            const WarpOptions& options,
                            std::size_t* black_filled) {
  if (!(src.geometry() == k.geometry)) {
    throw GeometryMismatch("image is " + src.geometry().to_string() +
                           " but the camera is " + k.geometry.to_string());
  }
  return remap(
      src, k.geometry, options.threads,
      [&](int x, int y, PixelPoint* q) {
        *q = normalized_to_pixel(
            distort(pixel_to_normalized({double(x), double(y)}, k), d), k);
        return true;
      },
      black_filled);
}

RasterImage generate_grid_image(const ImageGeometry& geometry, int spacing_px,
                                int line_width_px) {
  if (line_width_px < 1 || spacing_px <= line_width_px) {
    throw std::invalid_argument(
        "grid needs spacing_px > line_width_px >= 1, got spacing " +
        std::to_string(spacing_px) + ", width " + std::to_string(line_width_px));
  }
  const double half_width = (line_width_px + 1) / 2.0;
  auto on_line = [&](int i, int extent) {
    const double center = (extent - 1) / 2.0;
    const double phase = std::fmod(std::abs(i - center), double(spacing_px));
    return std::min(phase, spacing_px - phase) < half_width;
  };

  RasterImage img(geometry, 1, 255);
  std::vector<bool> column_on(geometry.width());
  for (int x = 0; x < geometry.width(); ++x) column_on[x] = on_line(x, geometry.width());
  for (int y = 0; y < geometry.height(); ++y) {
    const bool row_on = on_line(y, geometry.height());
    for (int x = 0; x < geometry.width(); ++x) {
      if (row_on || column_on[x]) img.at(x, y) = 0;
    }
  }
  return img;
}

}  // namespace bcdk
