#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bcdk/errors.hpp"
#include "bcdk/sampler.hpp"

namespace bcdk {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    throw ConfigError("config key '" + std::string(key) +
                      "': expected a real number, got '" + std::string(text) +
                      "'");
  }
  return v;
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view text) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw ConfigError("config key '" + std::string(key) +
                      "': expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto next = text.find_first_of(", \t", pos);
    const auto item =
        trim(text.substr(pos, next == std::string_view::npos ? text.npos
                                                              : next - pos));
    if (!item.empty()) out.push_back(parse_real(key, item));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (out.empty()) {
    throw ConfigError("config key '" + std::string(key) + "' has no values");
  }
  return out;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(max_displacement_px >= 0.0) || !std::isfinite(max_displacement_px)) {
    throw ConfigError("max_displacement_px must be a non-negative number");
  }
  if (hfov_choices_deg.empty()) {
    throw ConfigError("hfov_choices_deg must list at least one value");
  }
  for (double h : hfov_choices_deg) {
    if (!(h > 0.0 && h < 180.0)) {
      throw ConfigError("hfov_choices_deg values must lie in (0, 180), got " +
                        format_real(h));
    }
  }
  if (principal_shift_max_px) {
    for (double s : *principal_shift_max_px) {
      if (!(s >= 0.0) || !std::isfinite(s)) {
        throw ConfigError("principal_shift_max_px must be non-negative");
      }
    }
  }
  if (!(bisection_tol > 0.0)) {
    throw ConfigError("bisection_tol must be positive");
  }
  if (bisection_max_iter < 1) {
    throw ConfigError("bisection_max_iter must be at least 1");
  }
  for (Coefficient c : kAllCoefficients) {
    const auto i = static_cast<std::size_t>(c);
    if (!(coefficient_search_limit[i] > 0.0) ||
        !std::isfinite(coefficient_search_limit[i])) {
      throw ConfigError("coefficient_search_limit_" +
                        std::string(coefficient_name(c)) + " must be positive");
    }
    if (fixed[i] && !std::isfinite(*fixed[i])) {
      throw ConfigError("fixed_" + std::string(coefficient_name(c)) +
                        " must be finite");
    }
  }
}

void SamplerConfig::validate_for(const ImageGeometry& geometry) const {
  const double half = std::min(geometry.width(), geometry.height()) / 2.0;
  if (max_displacement_px > 0.0 && !(max_displacement_px < half)) {
    throw ConfigError("max_displacement_px " + format_real(max_displacement_px) +
                      " must be below half the smaller side of " +
                      geometry.to_string());
  }
}

std::array<double, 2> SamplerConfig::principal_shift_for(
    const ImageGeometry& geometry) const {
  if (principal_shift_max_px) return *principal_shift_max_px;
  return {0.04 * geometry.width(), 0.04 * geometry.height()};
}

SamplerConfig parse_sampler_config(std::string_view text) {
  SamplerConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" +
                        key + "' has no value");
    }

    if (key == "max_displacement_px") {
      cfg.max_displacement_px = parse_real(key, value);
    } else if (key == "hfov_choices_deg") {
      cfg.hfov_choices_deg = parse_list(key, value);
    } else if (key == "principal_shift_max_px") {
      const auto v = parse_list(key, value);
      if (v.size() == 1) {
        cfg.principal_shift_max_px = std::array<double, 2>{v[0], v[0]};
      } else if (v.size() == 2) {
        cfg.principal_shift_max_px = std::array<double, 2>{v[0], v[1]};
      } else {
        throw ConfigError("principal_shift_max_px takes one or two values");
      }
    } else if (key == "seed") {
      cfg.seed = parse_integer<std::uint64_t>(key, value);
    } else if (key == "bisection_tol") {
      cfg.bisection_tol = parse_real(key, value);
    } else if (key == "bisection_max_iter") {
      cfg.bisection_max_iter = parse_integer<int>(key, value);
    } else if (key.starts_with("coefficient_search_limit_")) {
      const auto c = parse_coefficient(
          std::string_view(key).substr(sizeof("coefficient_search_limit_") - 1));
      if (!c) throw ConfigError("unknown config key '" + key + "'");
      cfg.coefficient_search_limit[static_cast<std::size_t>(*c)] =
          parse_real(key, value);
    } else if (key.starts_with("fixed_")) {
      const auto c =
          parse_coefficient(std::string_view(key).substr(sizeof("fixed_") - 1));
      if (!c) throw ConfigError("unknown config key '" + key + "'");
      cfg.fixed[static_cast<std::size_t>(*c)] = parse_real(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "' on line " +
                        std::to_string(line_no));
    }
  }
  cfg.validate();
  return cfg;
}

SamplerConfig load_sampler_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sampler_config(buf.str());
}

std::string format_sampler_config(const SamplerConfig& cfg) {
  std::ostringstream os;
  os << "max_displacement_px = " << format_real(cfg.max_displacement_px) << "\n";
  os << "hfov_choices_deg = ";
  for (std::size_t i = 0; i < cfg.hfov_choices_deg.size(); ++i) {
    os << (i ? ", " : "") << format_real(cfg.hfov_choices_deg[i]);
  }
  os << "\n";
  if (cfg.principal_shift_max_px) {
    os << "principal_shift_max_px = "
       << format_real((*cfg.principal_shift_max_px)[0]) << ", "
       << format_real((*cfg.principal_shift_max_px)[1]) << "\n";
  }
  os << "seed = " << cfg.seed << "\n";
  os << "bisection_tol = " << format_real(cfg.bisection_tol) << "\n";
  os << "bisection_max_iter = " << cfg.bisection_max_iter << "\n";
  for (Coefficient c : kAllCoefficients) {
    const auto i = static_cast<std::size_t>(c);
    os << "coefficient_search_limit_" << coefficient_name(c) << " = "
       << format_real(cfg.coefficient_search_limit[i]) << "\n";
  }
  for (Coefficient c : kAllCoefficients) {
    const auto i = static_cast<std::size_t>(c);
    if (cfg.fixed[i]) {
      os << "fixed_" << coefficient_name(c) << " = " << format_real(*cfg.fixed[i])
         << "\n";
    }
  }
  return os.str();
}

}  // namespace bcdk
