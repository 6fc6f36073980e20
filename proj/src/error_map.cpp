#include "bcdk/error_map.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bcdk/parallel.hpp"

namespace bcdk {

Intrinsics CameraParameterVector::intrinsics(const ImageGeometry& geometry) const {
  const double f = hfov_to_fx(hfov_deg, geometry.width());
  return Intrinsics{f, f, cx, cy, 0.0, geometry};
}

DistortionCoefficients CameraParameterVector::coefficients() const {
  return {k1, k2, k3, p1, p2};
}

void CameraParameterVector::validate() const {
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) {
    throw std::invalid_argument("hfov_deg must lie in (0, 180)");
  }
  for (double v : {cx, cy, k1, k2, k3, p1, p2}) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("camera parameters must be finite");
    }
  }
}

ErrorMap::ErrorMap(ImageGeometry geometry, double fill)
    : geometry_(geometry), values_(geometry.pixel_count(), fill) {}

ErrorMap::ErrorMap(ImageGeometry geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values)) {
  if (values_.size() != geometry_.pixel_count()) {
    throw std::invalid_argument("error map size does not match " +
                                geometry_.to_string());
  }
}

double ErrorMap::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

ErrorMap pixel_error_map(const CameraParameterVector& truth,
                         const CameraParameterVector& predicted,
                         const ImageGeometry& geometry,
                         const ErrorMapOptions& options) {
  truth.validate();
  predicted.validate();
  const Intrinsics kt = truth.intrinsics(geometry);
  const Intrinsics kp = predicted.intrinsics(geometry);
  const DistortionCoefficients dt = truth.coefficients();
  const DistortionCoefficients dp = predicted.coefficients();
  const double width = geometry.width();

  ErrorMap map(geometry);
  parallel_for(static_cast<std::size_t>(geometry.height()),
               resolve_threads(options.threads),
               [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < geometry.width(); ++x) {
        const PixelPoint original{double(x), double(y)};
        // The distorted point stays in the true camera's normalized frame;
        // only the final projection uses the predicted intrinsics.
        const NormalizedPoint distorted =
            distort(pixel_to_normalized(original, kt), dt);
        const UndistortResult r = try_undistort(distorted, dp, options.undistort);
        if (!r.converged) {
          throw NonConvergence("undistortion with the predicted parameters "
                               "did not converge at pixel (" +
                                   std::to_string(x) + ", " + std::to_string(y) +
                                   ")",
                               r.point, r.residual, r.iterations);
        }
        const PixelPoint final_position = normalized_to_pixel(r.point, kp);
        map.at(x, y) = std::hypot(final_position.u - original.u,
                                  final_position.v - original.v) /
                       width;
      }
    }
  });
  return map;
}

void MeanAccumulator::add(const ErrorMap& map) {
  if (!geometry_) {
    geometry_ = map.geometry();
    sum_.assign(map.values().size(), 0.0);
  } else if (!(*geometry_ == map.geometry())) {
    throw GeometryMismatch("cannot average a " + map.geometry().to_string() +
                           " map with " + geometry_->to_string() + " maps");
  }
  const auto& v = map.values();
  for (std::size_t i = 0; i < v.size(); ++i) sum_[i] += v[i];
  ++count_;
}

ErrorMap MeanAccumulator::mean() const {
  if (count_ == 0) throw std::invalid_argument("mean of zero error maps");
  std::vector<double> out(sum_.size());
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sum_[i] / n;
  return ErrorMap(*geometry_, std::move(out));
}

ErrorMap mean_error_map(std::span<const ErrorMap> maps) {
  MeanAccumulator acc;
  for (const ErrorMap& m : maps) acc.add(m);
  return acc.mean();
}

std::string_view line_position_name(LinePosition p) {
  switch (p) {
    case LinePosition::top: return "top";
    case LinePosition::middle: return "middle";
    case LinePosition::bottom: return "bottom";
  }
  return "?";
}

namespace {

std::optional<LinePosition> parse_line_position(std::string_view s) {
  for (auto p : {LinePosition::top, LinePosition::middle, LinePosition::bottom}) {
    if (line_position_name(p) == s) return p;
  }
  return std::nullopt;
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::array<LineProfile, 3> extract_line_profiles(const ErrorMap& map) {
  const int h = map.geometry().height();
  const int w = map.geometry().width();
  if (h < 3) {
    throw std::invalid_argument("line profiles need at least 3 rows, map is " +
                                map.geometry().to_string());
  }
  auto row = [&](LinePosition p, int y) {
    LineProfile prof{p, y, std::vector<double>(static_cast<std::size_t>(w))};
    for (int x = 0; x < w; ++x) prof.values[x] = map.at(x, y);
    return prof;
  };
  return {row(LinePosition::top, 0), row(LinePosition::middle, h / 2),
          row(LinePosition::bottom, h - 1)};
}

std::vector<SummaryRow> summarize(std::span<const LineProfile> profiles) {
  std::vector<SummaryRow> rows;
  for (const LineProfile& p : profiles) {
    if (p.values.empty()) {
      throw std::invalid_argument("cannot summarize an empty line profile");
    }
    const auto [lo, hi] = std::minmax_element(p.values.begin(), p.values.end());
    rows.push_back({p.position, *lo, *hi});
  }
  return rows;
}

std::string format_milli(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2fe-03", value * 1e3);
  return buf;
}

std::string render_summary(std::span<const SummaryRow> rows) {
  std::string out = "position & min error & max error \\\\\n";
  for (const SummaryRow& r : rows) {
    out += std::string(line_position_name(r.position)) + " & " +
           format_milli(r.min_error) + " & " + format_milli(r.max_error) +
           " \\\\\n";
  }
  return out;
}

std::string render_report_table(std::span<const LabelledSummary> summaries) {
  std::string out =
      "method & top min & top max & middle min & middle max & bottom min & "
      "bottom max \\\\\n";
  for (const LabelledSummary& s : summaries) {
    out += s.label;
    for (auto pos : {LinePosition::top, LinePosition::middle, LinePosition::bottom}) {
      const auto it = std::find_if(s.rows.begin(), s.rows.end(),
                                   [&](const SummaryRow& r) { return r.position == pos; });
      if (it == s.rows.end()) {
        out += " & - & -";
      } else {
        out += " & " + format_milli(it->min_error) + " & " +
               format_milli(it->max_error);
      }
    }
    out += " \\\\\n";
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out = "position,min,max\n";
  for (const SummaryRow& r : rows) {
    out += std::string(line_position_name(r.position)) + "," +
           shortest(r.min_error) + "," + shortest(r.max_error) + "\n";
  }
  return out;
}

std::vector<SummaryRow> parse_summary_csv(std::string_view text) {
  std::vector<SummaryRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "position,min,max") {
        throw IoError("summary CSV must start with 'position,min,max'");
      }
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw IoError("summary CSV line " + std::to_string(line_no) +
                    ": expected 3 fields");
    }
    const auto pos = parse_line_position(std::string_view(line).substr(0, c1));
    double lo = 0.0;
    double hi = 0.0;
    const char* b1 = line.data() + c1 + 1;
    const char* e1 = line.data() + c2;
    const char* b2 = e1 + 1;
    const char* e2 = line.data() + line.size();
    const auto r1 = std::from_chars(b1, e1, lo);
    const auto r2 = std::from_chars(b2, e2, hi);
    if (!pos || r1.ec != std::errc() || r1.ptr != e1 || r2.ec != std::errc() ||
        r2.ptr != e2) {
      throw IoError("summary CSV line " + std::to_string(line_no) +
                    ": malformed row '" + line + "'");
    }
    rows.push_back({*pos, lo, hi});
  }
  return rows;
}

std::string profiles_csv(std::span<const LineProfile> profiles) {
  std::string out = "position,row,x,value\n";
  for (const LineProfile& p : profiles) {
    const std::string prefix = std::string(line_position_name(p.position)) +
                               "," + std::to_string(p.row_index) + ",";
    for (std::size_t x = 0; x < p.values.size(); ++x) {
      out += prefix + std::to_string(x) + "," + shortest(p.values[x]) + "\n";
    }
  }
  return out;
}

RasterImage error_heat_image(const ErrorMap& map) {
  // Piecewise-linear dark-to-bright ramp.
  static constexpr std::array<std::array<double, 3>, 5> kStops = {{
      {0, 0, 4}, {87, 16, 110}, {188, 55, 84}, {249, 142, 9}, {252, 255, 164}}};
  const double peak = map.max_value();
  RasterImage img(map.geometry(), 3);
  for (int y = 0; y < map.geometry().height(); ++y) {
    for (int x = 0; x < map.geometry().width(); ++x) {
      const double t = peak > 0.0 ? std::clamp(map.at(x, y) / peak, 0.0, 1.0) : 0.0;
      const double scaled = t * (kStops.size() - 1);
      const std::size_t i = std::min<std::size_t>(std::size_t(scaled), kStops.size() - 2);
      const double f = scaled - double(i);
      for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - f) * kStops[i][c] + f * kStops[i + 1][c];
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return img;
}

void write_error_map_raw(const std::filesystem::path& path, const ErrorMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (double v : map.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw IoError("cannot write " + path.string());
}

ErrorMap read_error_map_raw(const std::filesystem::path& path,
                            const ImageGeometry& geometry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<double> values(geometry.pixel_count());
  for (double& v : values) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw IoError(path.string() + " is shorter than a " + geometry.to_string() +
                    " map");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return ErrorMap(geometry, std::move(values));
}

namespace {

using nlohmann::json;

CameraParameterVector parameters_from_json(const json& j, std::string_view side) {
  if (!j.is_object()) {
    throw std::invalid_argument("'" + std::string(side) + "' must be an object");
  }
  std::array<double, 8> v{};
  for (std::size_t i = 0; i < kParameterNames.size(); ++i) {
    const std::string key(kParameterNames[i]);
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
      throw std::invalid_argument("'" + std::string(side) + "." + key +
                                  "' missing or not a number");
    }
    v[i] = it->get<double>();
  }
  CameraParameterVector p{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
  p.validate();
  return p;
}

nlohmann::ordered_json parameters_to_json(const CameraParameterVector& p) {
  nlohmann::ordered_json j;
  j["hfov_deg"] = p.hfov_deg;
  j["cx"] = p.cx;
  j["cy"] = p.cy;
  j["k1"] = p.k1;
  j["k2"] = p.k2;
  j["k3"] = p.k3;
  j["p1"] = p.p1;
  j["p2"] = p.p2;
  return j;
}

}  // namespace

std::vector<PredictionRecord> parse_predictions(std::istream& in) {
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw std::invalid_argument("record is not an object");
      const auto id = j.find("id");
      const auto w = j.find("width");
      const auto h = j.find("height");
      const auto t = j.find("true");
      const auto p = j.find("pred");
      if (id == j.end() || !id->is_string()) {
        throw std::invalid_argument("'id' missing or not a string");
      }
      if (w == j.end() || !w->is_number_integer() || h == j.end() ||
          !h->is_number_integer()) {
        throw std::invalid_argument("'width'/'height' missing or not integers");
      }
      if (t == j.end() || p == j.end()) {
        throw std::invalid_argument("'true' and 'pred' objects are required");
      }
      records.push_back({id->get<std::string>(),
                         ImageGeometry(w->get<int>(), h->get<int>()),
                         parameters_from_json(*t, "true"),
                         parameters_from_json(*p, "pred")});
    } catch (const json::exception& e) {
      throw PredictionParseError(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw PredictionParseError(line_no, e.what());
    }
  }
  return records;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read predictions file " + path.string());
  return parse_predictions(in);
}

std::string format_prediction(const PredictionRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["width"] = record.geometry.width();
  j["height"] = record.geometry.height();
  j["true"] = parameters_to_json(record.truth);
  j["pred"] = parameters_to_json(record.predicted);
  return j.dump();
}

CameraParameterVector rescale_parameters(const CameraParameterVector& p,
                                         const ImageGeometry& from,
                                         const ImageGeometry& to) {
  CameraParameterVector out = p;
  out.cx = p.cx * double(to.width()) / double(from.width());
  out.cy = p.cy * double(to.height()) / double(from.height());
  return out;
}

}  // namespace bcdk
