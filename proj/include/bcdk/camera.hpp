// Pinhole projection and the Brown-Conrady distortion model.
//
// Distortion is always evaluated in normalized coordinates (principal point
// subtracted, divided by focal length). Pixel-space callers go through
// pixel_to_normalized / normalized_to_pixel with an Intrinsics.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bcdk {

class ImageGeometry {
 public:
  // Throws std::invalid_argument unless both dimensions are >= 1.
  ImageGeometry(int width_px, int height_px);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  // "WxH", e.g. "1392x512".
  std::string to_string() const;
  static ImageGeometry parse(std::string_view text);

  bool operator==(const ImageGeometry&) const = default;

 private:
  int width_;
  int height_;
};

struct NormalizedPoint {
  double x = 0.0;
  double y = 0.0;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct Intrinsics {
  double fx;
  double fy;
  double cx;
  double cy;
  double skew = 0.0;
  ImageGeometry geometry;

  // Unit aspect ratio (fy = fx), principal point at (W/2, H/2).
  static Intrinsics from_hfov(double hfov_deg, const ImageGeometry& geometry);

  Intrinsics with_focal_scale(double scale) const;
  Intrinsics with_principal_point(double new_cx, double new_cy) const;
  double hfov_deg() const;
};

enum class Coefficient { k1, k2, k3, p1, p2 };

inline constexpr std::array<Coefficient, 5> kAllCoefficients = {
    Coefficient::k1, Coefficient::k2, Coefficient::k3, Coefficient::p1,
    Coefficient::p2};

std::string_view coefficient_name(Coefficient c);
std::optional<Coefficient> parse_coefficient(std::string_view name);

struct DistortionCoefficients {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  double& operator[](Coefficient c);
  double operator[](Coefficient c) const;

  bool is_zero() const;
  bool all_finite() const;

  bool operator==(const DistortionCoefficients&) const = default;
};

// fx = (W/2) / tan(hfov/2). Throws std::domain_error unless 0 < hfov < 180.
double hfov_to_fx(double hfov_deg, int width_px);
double fx_to_hfov(double fx, int width_px);

NormalizedPoint pixel_to_normalized(const PixelPoint& p, const Intrinsics& k);
PixelPoint normalized_to_pixel(const NormalizedPoint& n, const Intrinsics& k);

// Forward Brown-Conrady map, ideal -> distorted.
NormalizedPoint distort(const NormalizedPoint& ideal,
                        const DistortionCoefficients& d);

// Row-major 2x2 Jacobian of distort() at `ideal`.
std::array<double, 4> distort_jacobian(const NormalizedPoint& ideal,
                                       const DistortionCoefficients& d);

struct UndistortOptions {
  double tol = 1e-10;  // max-norm residual, normalized units
  int max_iter = 50;
};

struct UndistortResult {
  NormalizedPoint point;
  double residual = 0.0;  // max-norm of distort(point) - target
  int iterations = 0;
  bool converged = false;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, NormalizedPoint last_iterate,
                 double residual, int iterations)
      : std::runtime_error(what),
        last_iterate_(last_iterate),
        residual_(residual),
        iterations_(iterations) {}

  NormalizedPoint last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  NormalizedPoint last_iterate_;
  double residual_;
  int iterations_;
};

// Inverts distort() for a distorted point. Starts with the fixed-point update
// x <- (x_d - tangential(x)) / radial(x) seeded at x_d, then refines with
// Newton steps. A step is accepted only if it shrinks the max-norm residual;
// otherwise the other update, then damped Newton, is tried. Never throws.
UndistortResult try_undistort(const NormalizedPoint& distorted,
                              const DistortionCoefficients& d,
                              const UndistortOptions& options = {});

// Newton-first variant seeded at `guess`, for callers that already know a
// nearby solution. Falls back to try_undistort for a non-finite guess.
UndistortResult try_undistort_from(const NormalizedPoint& distorted,
                                   const NormalizedPoint& guess,
                                   const DistortionCoefficients& d,
                                   const UndistortOptions& options = {});

// Same as try_undistort but throws NonConvergence on failure.
NormalizedPoint undistort(const NormalizedPoint& distorted,
                          const DistortionCoefficients& d,
                          const UndistortOptions& options = {});

}  // namespace bcdk
