// Pixel-wise evaluation of predicted camera parameters.
//
// Every pixel of a blank frame is normalized and distorted with the true
// camera, undistorted with the predicted coefficients and projected with the
// predicted intrinsics; the error is the Euclidean distance between where it
// started and where it ended, divided by the image width.
// Maps are averaged over a prediction set and summarized on three rows.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcdk/camera.hpp"
#include "bcdk/errors.hpp"
#include "bcdk/raster.hpp"

namespace bcdk {

struct CameraParameterVector {
  double hfov_deg = 90.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  // fx = fy from the H-FOV and the geometry width, zero skew.
  Intrinsics intrinsics(const ImageGeometry& geometry) const;
  DistortionCoefficients coefficients() const;

  // Throws std::invalid_argument unless 0 < hfov_deg < 180 and all finite.
  void validate() const;

  bool operator==(const CameraParameterVector&) const = default;
};

// Field names used by every file format: hfov_deg, cx, cy, k1 ... p2.
inline constexpr std::array<std::string_view, 8> kParameterNames = {
    "hfov_deg", "cx", "cy", "k1", "k2", "k3", "p1", "p2"};

class ErrorMap {
 public:
  explicit ErrorMap(ImageGeometry geometry, double fill = 0.0);
  ErrorMap(ImageGeometry geometry, std::vector<double> values);

  const ImageGeometry& geometry() const { return geometry_; }
  double at(int x, int y) const { return values_[index(x, y)]; }
  double& at(int x, int y) { return values_[index(x, y)]; }
  const std::vector<double>& values() const { return values_; }

  double max_value() const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * geometry_.width() + x;
  }

  ImageGeometry geometry_;
  std::vector<double> values_;
};

struct ErrorMapOptions {
  UndistortOptions undistort;
  int threads = 1;
};

// Throws NonConvergence naming the first failing pixel in row-major order.
ErrorMap pixel_error_map(const CameraParameterVector& truth,
                         const CameraParameterVector& predicted,
                         const ImageGeometry& geometry,
                         const ErrorMapOptions& options = {});

// Running element-wise sum, divided out on demand. Maps are accumulated in
// the order they are added.
class MeanAccumulator {
 public:
  void add(const ErrorMap& map);
  std::size_t count() const { return count_; }
  // Throws std::invalid_argument if nothing was added.
  ErrorMap mean() const;

 private:
  std::vector<double> sum_;
  std::optional<ImageGeometry> geometry_;
  std::size_t count_ = 0;
};

// Throws std::invalid_argument on empty input, GeometryMismatch on mixed
// geometries.
ErrorMap mean_error_map(std::span<const ErrorMap> maps);

enum class LinePosition { top, middle, bottom };
std::string_view line_position_name(LinePosition p);

struct LineProfile {
  LinePosition position;
  int row_index;
  std::vector<double> values;
};

// Rows 0, floor(H/2) and H-1. Throws std::invalid_argument if H < 3.
std::array<LineProfile, 3> extract_line_profiles(const ErrorMap& map);

struct SummaryRow {
  LinePosition position;
  double min_error;
  double max_error;
};

std::vector<SummaryRow> summarize(std::span<const LineProfile> profiles);

// Fixed e-03 scaling with two decimals: 0.00584 -> "5.84e-03",
// 0.0412 -> "41.20e-03".
std::string format_milli(double value);

// "position & min error & max error \\" followed by one line per row.
std::string render_summary(std::span<const SummaryRow> rows);

struct LabelledSummary {
  std::string label;
  std::vector<SummaryRow> rows;
};

// One line per label with min/max for top, middle and bottom.
std::string render_report_table(std::span<const LabelledSummary> summaries);

// "position,min,max" CSV with shortest round-trip decimal values.
std::string summary_csv(std::span<const SummaryRow> rows);
std::vector<SummaryRow> parse_summary_csv(std::string_view text);

// Line profiles as "position,row,x,value" CSV.
std::string profiles_csv(std::span<const LineProfile> profiles);

// RGB heat rendering, scaled to the map maximum.
RasterImage error_heat_image(const ErrorMap& map);

// Row-major little-endian float64, no header.
void write_error_map_raw(const std::filesystem::path& path, const ErrorMap& map);
ErrorMap read_error_map_raw(const std::filesystem::path& path,
                            const ImageGeometry& geometry);

struct PredictionRecord {
  std::string id;
  ImageGeometry geometry;
  CameraParameterVector truth;
  CameraParameterVector predicted;
};

// A malformed predictions line; line() is 1-based.
class PredictionParseError : public IoError {
 public:
  PredictionParseError(std::size_t line, const std::string& what)
      : IoError("predictions line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Newline-delimited JSON objects {id, width, height, true: {...}, pred: {...}}.
// Blank lines are skipped.
std::vector<PredictionRecord> parse_predictions(std::istream& in);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
std::string format_prediction(const PredictionRecord& record);

// Expresses `p` (given for `from`) in the pixel frame of `to`: principal point
// scaled per axis, H-FOV unchanged.
CameraParameterVector rescale_parameters(const CameraParameterVector& p,
                                         const ImageGeometry& from,
                                         const ImageGeometry& to);

}  // namespace bcdk
