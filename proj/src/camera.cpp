#include "bcdk/camera.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace bcdk {

ImageGeometry::ImageGeometry(int width_px, int height_px)
    : width_(width_px), height_(height_px) {
  if (width_px < 1 || height_px < 1) {
    throw std::invalid_argument("image geometry must be at least 1x1, got " +
                                std::to_string(width_px) + "x" +
                                std::to_string(height_px));
  }
}

std::string ImageGeometry::to_string() const {
  return std::to_string(width_) + "x" + std::to_string(height_);
}

ImageGeometry ImageGeometry::parse(std::string_view text) {
  const auto sep = text.find_first_of("xX");
  int w = 0;
  int h = 0;
  bool ok = sep != std::string_view::npos;
  if (ok) {
    const auto* wb = text.data();
    const auto* we = text.data() + sep;
    const auto* hb = we + 1;
    const auto* he = text.data() + text.size();
    auto rw = std::from_chars(wb, we, w);
    auto rh = std::from_chars(hb, he, h);
    ok = rw.ec == std::errc() && rw.ptr == we && rh.ec == std::errc() &&
         rh.ptr == he;
  }
  if (!ok) {
    throw std::invalid_argument("malformed geometry '" + std::string(text) +
                                "', expected WxH");
  }
  return ImageGeometry(w, h);
}

Intrinsics Intrinsics::from_hfov(double hfov_deg, const ImageGeometry& geometry) {
  const double f = hfov_to_fx(hfov_deg, geometry.width());
  return Intrinsics{f, f, geometry.width() / 2.0, geometry.height() / 2.0, 0.0,
                    geometry};
}

Intrinsics Intrinsics::with_focal_scale(double scale) const {
  Intrinsics k = *this;
  k.fx *= scale;
  k.fy *= scale;
  return k;
}

Intrinsics Intrinsics::with_principal_point(double new_cx, double new_cy) const {
  Intrinsics k = *this;
  k.cx = new_cx;
  k.cy = new_cy;
  return k;
}

double Intrinsics::hfov_deg() const { return fx_to_hfov(fx, geometry.width()); }

std::string_view coefficient_name(Coefficient c) {
  switch (c) {
    case Coefficient::k1: return "k1";
    case Coefficient::k2: return "k2";
    case Coefficient::k3: return "k3";
    case Coefficient::p1: return "p1";
    case Coefficient::p2: return "p2";
  }
  return "?";
}

std::optional<Coefficient> parse_coefficient(std::string_view name) {
  for (Coefficient c : kAllCoefficients) {
    if (coefficient_name(c) == name) return c;
  }
  return std::nullopt;
}

double& DistortionCoefficients::operator[](Coefficient c) {
  switch (c) {
    case Coefficient::k1: return k1;
    case Coefficient::k2: return k2;
    case Coefficient::k3: return k3;
    case Coefficient::p1: return p1;
    case Coefficient::p2: return p2;
  }
  return k1;
}

double DistortionCoefficients::operator[](Coefficient c) const {
  return const_cast<DistortionCoefficients&>(*this)[c];
}

bool DistortionCoefficients::is_zero() const {
  return k1 == 0.0 && k2 == 0.0 && k3 == 0.0 && p1 == 0.0 && p2 == 0.0;
}

bool DistortionCoefficients::all_finite() const {
  return std::isfinite(k1) && std::isfinite(k2) && std::isfinite(k3) &&
         std::isfinite(p1) && std::isfinite(p2);
}

double hfov_to_fx(double hfov_deg, int width_px) {
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) {
    throw std::domain_error("horizontal FOV must lie in (0, 180) degrees, got " +
                            std::to_string(hfov_deg));
  }
  return (width_px / 2.0) / std::tan(hfov_deg * std::numbers::pi / 360.0);
}

double fx_to_hfov(double fx, int width_px) {
  if (!(fx > 0.0)) {
    throw std::domain_error("focal length must be positive");
  }
  return 360.0 / std::numbers::pi * std::atan((width_px / 2.0) / fx);
}

NormalizedPoint pixel_to_normalized(const PixelPoint& p, const Intrinsics& k) {
  const double y = (p.v - k.cy) / k.fy;
  const double x = (p.u - k.cx - k.skew * y) / k.fx;
  return {x, y};
}

PixelPoint normalized_to_pixel(const NormalizedPoint& n, const Intrinsics& k) {
  return {k.fx * n.x + k.skew * n.y + k.cx, k.fy * n.y + k.cy};
}

namespace {

struct Terms {
  double radial;
  double tx;
  double ty;
};

Terms distortion_terms(double x, double y, const DistortionCoefficients& d) {
  const double r2 = x * x + y * y;
  const double r4 = r2 * r2;
  const double r6 = r4 * r2;
  return {1.0 + d.k1 * r2 + d.k2 * r4 + d.k3 * r6,
          2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
          d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y};
}

}  // namespace

NormalizedPoint distort(const NormalizedPoint& ideal,
                        const DistortionCoefficients& d) {
  const Terms t = distortion_terms(ideal.x, ideal.y, d);
  return {ideal.x * t.radial + t.tx, ideal.y * t.radial + t.ty};
}

std::array<double, 4> distort_jacobian(const NormalizedPoint& ideal,
                                       const DistortionCoefficients& d) {
  const double x = ideal.x;
  const double y = ideal.y;
  const double r2 = x * x + y * y;
  const double r4 = r2 * r2;
  const double radial = 1.0 + d.k1 * r2 + d.k2 * r4 + d.k3 * r2 * r4;
  // d(radial)/dx = dradial * x, d(radial)/dy = dradial * y
  const double dradial = 2.0 * d.k1 + 4.0 * d.k2 * r2 + 6.0 * d.k3 * r4;
  return {radial + dradial * x * x + 2.0 * d.p1 * y + 6.0 * d.p2 * x,
          dradial * x * y + 2.0 * d.p1 * x + 2.0 * d.p2 * y,
          dradial * x * y + 2.0 * d.p1 * x + 2.0 * d.p2 * y,
          radial + dradial * y * y + 6.0 * d.p1 * y + 2.0 * d.p2 * x};
}

namespace {

UndistortResult solve_undistort(const NormalizedPoint& distorted,
                                const NormalizedPoint& seed, bool seeded,
                                const DistortionCoefficients& d,
                                const UndistortOptions& options) {
  auto residual_at = [&](const NormalizedPoint& p, Terms* terms) {
    *terms = distortion_terms(p.x, p.y, d);
    return std::max(std::abs(p.x * terms->radial + terms->tx - distorted.x),
                    std::abs(p.y * terms->radial + terms->ty - distorted.y));
  };
  auto newton_step = [&](const NormalizedPoint& p, const Terms& t,
                         NormalizedPoint* step) {
    const double rx = p.x * t.radial + t.tx - distorted.x;
    const double ry = p.y * t.radial + t.ty - distorted.y;
    const auto j = distort_jacobian(p, d);
    const double det = j[0] * j[3] - j[1] * j[2];
    if (det == 0.0 || !std::isfinite(det)) return false;
    *step = {(j[3] * rx - j[1] * ry) / det, (-j[2] * rx + j[0] * ry) / det};
    return true;
  };

  NormalizedPoint x = seeded ? seed : distorted;
  Terms terms;
  double residual = residual_at(x, &terms);
  int it = 1;
  for (; it <= options.max_iter; ++it) {
    if (residual <= options.tol) return {x, residual, it, true};

    // The first update is the fixed-point step from the seed; later updates
    // use Newton refinement. Each is kept only if it shrinks the residual,
    // otherwise the other update is tried, then a damped Newton step.
    NormalizedPoint candidate;
    Terms candidate_terms;
    double candidate_residual = std::numeric_limits<double>::infinity();
    NormalizedPoint step;
    const bool have_newton = newton_step(x, terms, &step);
    auto try_fixed_point = [&] {
      if (!(terms.radial > 0.0)) return false;
      candidate = {(distorted.x - terms.tx) / terms.radial,
                   (distorted.y - terms.ty) / terms.radial};
      candidate_residual = residual_at(candidate, &candidate_terms);
      return candidate_residual < residual;
    };
    auto try_newton = [&](double scale) {
      if (!have_newton) return false;
      candidate = {x.x - scale * step.x, x.y - scale * step.y};
      candidate_residual = residual_at(candidate, &candidate_terms);
      return candidate_residual < residual;
    };

    bool accepted = it == 1 && !seeded ? (try_fixed_point() || try_newton(1.0))
                            : (try_newton(1.0) || try_fixed_point());
    for (double scale = 0.5; !accepted && scale > 1e-3; scale *= 0.5) {
      accepted = try_newton(scale);
    }
    if (!accepted) break;
    x = candidate;
    terms = candidate_terms;
    residual = candidate_residual;
  }
  const bool converged = residual <= options.tol;
  return {x, residual, std::min(it, options.max_iter), converged};
}

}  // namespace

UndistortResult try_undistort(const NormalizedPoint& distorted,
                              const DistortionCoefficients& d,
                              const UndistortOptions& options) {
  return solve_undistort(distorted, distorted, false, d, options);
}

UndistortResult try_undistort_from(const NormalizedPoint& distorted,
                                   const NormalizedPoint& guess,
                                   const DistortionCoefficients& d,
                                   const UndistortOptions& options) {
  if (!std::isfinite(guess.x) || !std::isfinite(guess.y)) {
    return try_undistort(distorted, d, options);
  }
  return solve_undistort(distorted, guess, true, d, options);
}

NormalizedPoint undistort(const NormalizedPoint& distorted,
                          const DistortionCoefficients& d,
                          const UndistortOptions& options) {
  const UndistortResult r = try_undistort(distorted, d, options);
  if (!r.converged) {
    throw NonConvergence(
        "undistort did not converge for (" + std::to_string(distorted.x) +
            ", " + std::to_string(distorted.y) + "): residual " +
            std::to_string(r.residual) + " after " +
            std::to_string(r.iterations) + " iterations",
        r.point, r.residual, r.iterations);
  }
  return r.point;
}

}  // namespace bcdk
