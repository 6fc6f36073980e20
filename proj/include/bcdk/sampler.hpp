// Adaptive distortion-parameter sampling.
//
// Each coefficient's admissible range is the interval around zero within
// which the top-left pixel (the point of interest, POI) moves by at most the
// displacement budget. Coefficients are bounded and drawn one at a time in a
// random order, holding the already-drawn ones at their values, so the joint
// set always respects the budget. The principal point is then shifted and the
// focal length scaled up until the distorted render has no out-of-frame
// samples.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bcdk/camera.hpp"
#include "bcdk/rng.hpp"

namespace bcdk {

struct SamplerConfig {
  double max_displacement_px = 50.0;
  std::vector<double> hfov_choices_deg = {30, 40,  50,  60,  70,  80, 90,
                                          100, 110, 120, 130, 140, 150};
  // Per axis (x, y). Unset means 4% of the image width / height.
  std::optional<std::array<double, 2>> principal_shift_max_px;
  std::uint64_t seed = 0;
  double bisection_tol = 1e-4;
  int bisection_max_iter = 100;
  // Initial bracket per coefficient, indexed like kAllCoefficients. Doubled
  // up to four times when the budget is not reached, then saturated.
  std::array<double, 5> coefficient_search_limit = {2.0, 5.0, 10.0, 0.5, 0.5};
  // Coefficients held at a fixed value instead of being drawn.
  std::array<std::optional<double>, 5> fixed;

  // Throws ConfigError.
  void validate() const;
  // Throws ConfigError if the budget does not fit the geometry.
  void validate_for(const ImageGeometry& geometry) const;

  std::array<double, 2> principal_shift_for(const ImageGeometry& geometry) const;
};

// "key = value" lines, '#' comments. Lists are comma and/or space separated.
// Throws ConfigError on unknown keys or malformed values.
SamplerConfig parse_sampler_config(std::string_view text);
SamplerConfig load_sampler_config(const std::filesystem::path& path);
std::string format_sampler_config(const SamplerConfig& cfg);

struct BoundInterval {
  double lower = 0.0;
  double upper = 0.0;
  int iterations_lower = 0;
  int iterations_upper = 0;
};

struct SampledCamera {
  // Ground-truth camera of the distorted image: shifted principal point and
  // rescaled focal length.
  Intrinsics intrinsics;
  // Camera the undistorted source image is assumed to come from: centered
  // principal point, focal length from base_hfov_deg.
  Intrinsics source_intrinsics;
  DistortionCoefficients coefficients;
  double hfov_deg = 0.0;
  double base_hfov_deg = 0.0;
  double focal_scale = 1.0;
  std::vector<Coefficient> draw_order;
  std::vector<BoundInterval> bounds;  // parallel to draw_order
};

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(Coefficient coefficient, double displacement_px,
                  double budget_px);

  Coefficient coefficient() const { return coefficient_; }
  double displacement_px() const { return displacement_px_; }
  double budget_px() const { return budget_px_; }

 private:
  Coefficient coefficient_;
  double displacement_px_;
  double budget_px_;
};

// Pixel distance the top-left pixel (0, 0) moves under the forward
// distortion, evaluated through `k`.
double poi_displacement(const DistortionCoefficients& d, const Intrinsics& k);

// Admissible interval for one coefficient given the others in `fixed` (the
// named coefficient's own value in `fixed` is ignored). Each endpoint is found
// by bisection on poi_displacement - budget and always lies on the admissible
// side. Throws BudgetExhausted when `fixed` alone exceeds the budget.
BoundInterval bound_coefficient(Coefficient name,
                                const DistortionCoefficients& fixed,
                                const Intrinsics& k, const SamplerConfig& cfg);

struct FocalScaleOptions {
  UndistortOptions undistort;
  double rel_tol = 1e-4;
  double max_scale = 64.0;
};

// Smallest s >= 1 (to rel_tol, rounded up) such that every border pixel of a
// destination camera with focal lengths multiplied by s maps, through
// undistort, to a location inside the source frame. Border pixels whose
// undistortion does not converge count as outside. Throws NonConvergence if
// no scale up to max_scale works.
double compute_focal_scale(const Intrinsics& source,
                           const Intrinsics& destination,
                           const DistortionCoefficients& d,
                           const FocalScaleOptions& options = {});

// Source and destination share `k`.
double compute_focal_scale(const Intrinsics& k, const DistortionCoefficients& d,
                           const FocalScaleOptions& options = {});

// Draws one camera. Consumes from `rng` in a fixed order: H-FOV choice,
// coefficient order, one value per drawn coefficient, then the x and y
// principal shifts.
SampledCamera sample_camera(const ImageGeometry& geometry,
                            const SamplerConfig& cfg, Rng& rng);

}  // namespace bcdk
