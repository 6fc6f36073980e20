#include "bcdk/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "bcdk/errors.hpp"
#include "bcdk/warp.hpp"

namespace bcdk {

BudgetExhausted::BudgetExhausted(Coefficient coefficient, double displacement_px,
                                 double budget_px)
    : std::runtime_error(
          "displacement budget exhausted while bounding " +
          std::string(coefficient_name(coefficient)) +
          ": fixed coefficients already move the POI by " +
          std::to_string(displacement_px) + " px (budget " +
          std::to_string(budget_px) + " px)"),
      coefficient_(coefficient),
      displacement_px_(displacement_px),
      budget_px_(budget_px) {}

double poi_displacement(const DistortionCoefficients& d, const Intrinsics& k) {
  const PixelPoint poi{0.0, 0.0};
  const PixelPoint moved =
      normalized_to_pixel(distort(pixel_to_normalized(poi, k), d), k);
  return std::hypot(moved.u - poi.u, moved.v - poi.v);
}

namespace {

struct Endpoint {
  double value;
  int iterations;
};

// Searches [0, sign * limit] for the admissible end of the interval.
Endpoint find_endpoint(Coefficient name, DistortionCoefficients coeffs,
                       const Intrinsics& k, const SamplerConfig& cfg,
                       double sign) {
  const double budget = cfg.max_displacement_px;
  // Tiny coefficients can round to a zero displacement, so a zero budget
  // is handled directly.
  if (budget <= 0.0) return {0.0, 0};
  auto excess = [&](double magnitude) {
    coeffs[name] = sign * magnitude;
    return poi_displacement(coeffs, k) - budget;
  };

  double limit =
      cfg.coefficient_search_limit[static_cast<std::size_t>(name)];
  for (int expansion = 0; expansion < 4 && excess(limit) <= 0.0; ++expansion) {
    limit *= 2.0;
  }
  if (excess(limit) <= 0.0) return {sign * limit, 0};

  // excess(lo) <= 0 < excess(hi). The displacement is convex in the
  // coefficient, so there is exactly one crossing in between.
  double lo = 0.0;
  double hi = limit;
  int it = 0;
  while (it < cfg.bisection_max_iter) {
    ++it;
    const double mid = 0.5 * (lo + hi);
    const double g = excess(mid);
    if (g <= 0.0) {
      lo = mid;
      if (g >= -cfg.bisection_tol) break;
    } else {
      hi = mid;
    }
  }
  return {sign * lo, it};
}

}  // namespace

BoundInterval bound_coefficient(Coefficient name,
                                const DistortionCoefficients& fixed,
                                const Intrinsics& k, const SamplerConfig& cfg) {
  DistortionCoefficients base = fixed;
  base[name] = 0.0;
  const double already = poi_displacement(base, k);
  if (already > cfg.max_displacement_px + cfg.bisection_tol) {
    throw BudgetExhausted(name, already, cfg.max_displacement_px);
  }
  const Endpoint upper = find_endpoint(name, base, k, cfg, +1.0);
  const Endpoint lower = find_endpoint(name, base, k, cfg, -1.0);
  return {lower.value, upper.value, lower.iterations, upper.iterations};
}

namespace {

struct BorderCheck {
  bool feasible = true;
  // Largest ratio between a border sample's offset from the source principal
  // point and the room the source frame leaves in that direction. Infinite
  // when an undistortion failed.
  double overshoot = 0.0;
};

double overshoot_ratio(double offset, double room_negative, double room_positive) {
  const double room = offset < 0.0 ? room_negative : room_positive;
  if (offset == 0.0) return 0.0;
  if (room <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(offset) / room;
}

class BorderChecker {
 public:
  BorderChecker(const Intrinsics& source, const Intrinsics& destination,
                const DistortionCoefficients& d, const UndistortOptions& options)
      : source_(source), destination_(destination), d_(d), options_(options) {
    // Four runs of neighbouring pixels so each solve can start from the
    // previous one.
    const int w = destination.geometry.width();
    const int h = destination.geometry.height();
    auto add_run = [&](int x0, int y0, int dx, int dy, int n) {
      for (int i = 0; i < n; ++i) {
        pixels_.push_back({x0 + i * dx, y0 + i * dy});
        run_start_.push_back(i == 0);
      }
    };
    add_run(0, 0, 1, 0, w);
    if (h > 1) add_run(0, h - 1, 1, 0, w);
    if (h > 2) {
      add_run(0, 1, 0, 1, h - 2);
      if (w > 1) add_run(w - 1, 1, 0, 1, h - 2);
    }
    ratios_.assign(pixels_.size(), 0.0);
    solutions_.assign(pixels_.size(), {kNaN, kNaN});
  }

  // The pixels that came closest to the frame edge last time are tried
  // first. An infeasible scale is reported as soon as one of them leaves the
  // frame, with the overshoot taken over those pixels only.
  BorderCheck check(double scale) {
    const Intrinsics dst = destination_.with_focal_scale(scale);
    BorderCheck result;
    // Undistorted points shrink roughly like 1/s.
    const double shrink = solved_scale_ / scale;
    for (std::size_t i : hot_) {
      visit(i, dst, {solutions_[i].x * shrink, solutions_[i].y * shrink},
            result, false);
    }
    if (!result.feasible) return result;
    NormalizedPoint guess{kNaN, kNaN};
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      if (run_start_[i]) guess = {kNaN, kNaN};
      guess = visit(i, dst, guess, result, true);
    }
    solved_scale_ = scale;
    refresh_hot(result.overshoot);
    return result;
  }

 private:
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  // Returns the undistorted point, NaN when the solve failed.
  NormalizedPoint visit(std::size_t i, const Intrinsics& dst,
                        const NormalizedPoint& guess, BorderCheck& result,
                        bool full_pass) {
    const auto [x, y] = pixels_[i];
    const ImageGeometry& g = source_.geometry;
    double ratio = std::numeric_limits<double>::infinity();
    const UndistortResult r = try_undistort_from(
        pixel_to_normalized({double(x), double(y)}, dst), guess, d_, options_);
    const NormalizedPoint solution =
        r.converged ? r.point : NormalizedPoint{kNaN, kNaN};
    if (full_pass) solutions_[i] = solution;
    if (r.converged) {
      const PixelPoint q = normalized_to_pixel(r.point, source_);
      if (!inside_frame(q, g)) result.feasible = false;
      ratio = std::max(
          overshoot_ratio(q.u - source_.cx, source_.cx,
                          (g.width() - 1) - source_.cx),
          overshoot_ratio(q.v - source_.cy, source_.cy,
                          (g.height() - 1) - source_.cy));
    } else {
      result.feasible = false;
    }
    if (full_pass) ratios_[i] = ratio;
    result.overshoot = std::max(result.overshoot, ratio);
    return solution;
  }

  void refresh_hot(double worst) {
    hot_.clear();
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      if (!std::isfinite(worst) ? !std::isfinite(ratios_[i])
                                : ratios_[i] >= 0.97 * worst) {
        hot_.push_back(i);
      }
    }
  }

  const Intrinsics& source_;
  const Intrinsics& destination_;
  const DistortionCoefficients& d_;
  const UndistortOptions& options_;
  std::vector<std::pair<int, int>> pixels_;
  std::vector<bool> run_start_;
  std::vector<double> ratios_;
  std::vector<NormalizedPoint> solutions_;
  double solved_scale_ = 1.0;
  std::vector<std::size_t> hot_;
};

}  // namespace

double compute_focal_scale(const Intrinsics& source,
                           const Intrinsics& destination,
                           const DistortionCoefficients& d,
                           const FocalScaleOptions& options) {
  struct Probe {
    double scale;
    BorderCheck check;
  };
  BorderChecker checker(source, destination, d, options.undistort);
  auto probe = [&](double s) { return Probe{s, checker.check(s)}; };

  Probe lo = probe(1.0);
  if (lo.check.feasible) return 1.0;

  // Border offsets shrink roughly like 1/s, so s * overshoot is a good first
  // guess for the boundary. Grow until feasible.
  Probe hi = lo;
  while (!hi.check.feasible) {
    if (hi.scale >= options.max_scale) {
      throw NonConvergence("no focal scale up to " +
                               std::to_string(options.max_scale) +
                               " keeps the distorted border inside the source",
                           {}, hi.check.overshoot, 0);
    }
    const double r = hi.check.overshoot;
    double next = std::isfinite(r) && r > 1.0 ? hi.scale * r : hi.scale * 2.0;
    next = std::min(std::max(next, hi.scale * (1.0 + options.rel_tol)),
                    options.max_scale);
    lo = hi;
    hi = probe(next);
  }

  // Regula falsi (Illinois) on overshoot - 1 over [lo, hi]. Probes are
  // nudged just past the interpolated root so an accurate estimate closes
  // the bracket from both sides in two steps.
  double g_lo = lo.check.overshoot - 1.0;
  double g_hi = hi.check.overshoot - 1.0;
  int last_side = +1;
  while (hi.scale - lo.scale > options.rel_tol * hi.scale) {
    double trial = 0.5 * (lo.scale + hi.scale);
    if (std::isfinite(g_lo) && g_lo > 0.0 && g_hi < 0.0) {
      const double root =
          hi.scale - g_hi * (hi.scale - lo.scale) / (g_hi - g_lo);
      const double nudge = 0.4 * options.rel_tol * root;
      const double aimed = last_side > 0 ? root - nudge : root + nudge;
      if (aimed > lo.scale && aimed < hi.scale) trial = aimed;
    }
    const Probe p = probe(trial);
    if (p.check.feasible) {
      if (last_side > 0) g_lo *= 0.5;
      hi = p;
      g_hi = p.check.overshoot - 1.0;
      last_side = +1;
    } else {
      if (last_side < 0) g_hi *= 0.5;
      lo = p;
      g_lo = p.check.overshoot - 1.0;
      last_side = -1;
    }
  }
  return hi.scale;
}

double compute_focal_scale(const Intrinsics& k, const DistortionCoefficients& d,
                           const FocalScaleOptions& options) {
  return compute_focal_scale(k, k, d, options);
}

SampledCamera sample_camera(const ImageGeometry& geometry,
                            const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  cfg.validate_for(geometry);

  const double hfov =
      cfg.hfov_choices_deg[rng.below(cfg.hfov_choices_deg.size())];
  const Intrinsics base = Intrinsics::from_hfov(hfov, geometry);

  DistortionCoefficients coeffs;
  std::vector<Coefficient> order;
  for (Coefficient c : kAllCoefficients) {
    const auto& held = cfg.fixed[static_cast<std::size_t>(c)];
    if (held) {
      coeffs[c] = *held;
    } else {
      order.push_back(c);
    }
  }
  rng.shuffle(std::span<Coefficient>(order));

  if (order.empty()) {
    const double moved = poi_displacement(coeffs, base);
    if (moved > cfg.max_displacement_px + cfg.bisection_tol) {
      throw BudgetExhausted(Coefficient::k1, moved, cfg.max_displacement_px);
    }
  }

  SampledCamera cam{base, base, {}, 0.0, hfov, 1.0, order, {}};
  for (Coefficient c : order) {
    const BoundInterval b = bound_coefficient(c, coeffs, base, cfg);
    coeffs[c] = rng.uniform(b.lower, b.upper);
    cam.bounds.push_back(b);
  }
  cam.coefficients = coeffs;

  const auto shift = cfg.principal_shift_for(geometry);
  const double dx = rng.uniform(-shift[0], shift[0]);
  const double dy = rng.uniform(-shift[1], shift[1]);
  const Intrinsics shifted = base.with_principal_point(base.cx + dx, base.cy + dy);

  cam.focal_scale = compute_focal_scale(base, shifted, coeffs);
  cam.intrinsics = shifted.with_focal_scale(cam.focal_scale);
  cam.hfov_deg = cam.intrinsics.hfov_deg();
  return cam;
}

}  // namespace bcdk
