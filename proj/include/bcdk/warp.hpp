// Raster warping through the distortion model, plus the straight-line grid
// test pattern.
//
// Rendering a distortion uses inverse mapping: each destination (distorted)
// pixel is undistorted to find where it samples the source. Removing a
// distortion uses the closed-form forward map the same way. Sampling is
// bilinear; samples outside [0, W-1] x [0, H-1] are filled with 0.

#pragma once

#include <cstddef>
#include <cstdint>

#include "bcdk/camera.hpp"
#include "bcdk/raster.hpp"

namespace bcdk {

// Slack for the frame test so that exact pixel-grid round trips through the
// projection (off by a few ulps) are not rejected at the border.
inline constexpr double kFrameEpsilonPx = 1e-6;

bool inside_frame(const PixelPoint& p, const ImageGeometry& geometry);

// Bilinear sample of all channels at `p` into `out`. Returns false (and
// writes nothing) when `p` is outside the frame.
bool sample_bilinear(const RasterImage& image, const PixelPoint& p,
                     std::uint8_t* out);

// Source location sampled by distorted destination pixel `dest`:
// dest -> normalized (destination) -> undistort -> pixel (source).
// Returns false if the undistortion does not converge.
bool try_distortion_source_location(const PixelPoint& dest,
                                    const Intrinsics& source,
                                    const Intrinsics& destination,
                                    const DistortionCoefficients& d,
                                    const UndistortOptions& options,
                                    PixelPoint* out);

struct WarpOptions {
  UndistortOptions undistort;
  int threads = 1;
};

// Renders `src` as seen through the distortion. `source` describes the camera
// `src` was captured with, `destination` the distorted camera; the output
// has the destination geometry. Throws NonConvergence naming the first
// destination pixel (row-major) whose undistortion fails, and
// GeometryMismatch if src does not match `source`.
// `black_filled`, when non-null, receives the number of out-of-frame pixels.
RasterImage apply_distortion_to_image(const RasterImage& src,
                                      const Intrinsics& source,
                                      const Intrinsics& destination,
                                      const DistortionCoefficients& d,
                                      const WarpOptions& options = {},
                                      std::size_t* black_filled = nullptr);

RasterImage apply_distortion_to_image(const RasterImage& src,
                                      const Intrinsics& k,
                                      const DistortionCoefficients& d,
                                      const WarpOptions& options = {},
                                      std::size_t* black_filled = nullptr);

// Removes the distortion: output(x_i) samples src at K(distort(K^-1 x_i)).
RasterImage undistort_image(const RasterImage& src, const Intrinsics& k,
                            const DistortionCoefficients& d,
                            const WarpOptions& options = {},
                            std::size_t* black_filled = nullptr);

// White background with black horizontal and vertical lines every
// `spacing_px`, placed symmetrically about the image center ((W-1)/2,
// (H-1)/2 in pixel indices). A pixel is on a line when its distance to the
// line position is below (line_width_px + 1) / 2, so a line is line_width_px
// wide when its position is compatible with the pixel grid and one pixel
// wider otherwise. Gray, one channel. Throws std::invalid_argument unless
// spacing_px > line_width_px >= 1.
RasterImage generate_grid_image(const ImageGeometry& geometry, int spacing_px,
                                int line_width_px);

}  // namespace bcdk
