// Synthetic dataset generation, annotation records, splits and regression
// target encoding.
//
// On-disk layout of a generated dataset:
//   out_dir/manifest.json      header: geometry, count, sampler config, seed,
//                              source list, name of the annotation file
//   out_dir/annotations.jsonl  one AnnotationRecord per line, index order
//   out_dir/images/NNNNNN.png  distorted images
// Paths inside these files are relative to out_dir.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcdk/camera.hpp"
#include "bcdk/error_map.hpp"
#include "bcdk/sampler.hpp"

namespace bcdk {

struct AnnotationRecord {
  std::string id;
  std::string image_path;
  int width_px = 0;
  int height_px = 0;
  double hfov_deg = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double focal_scale = 1.0;
  std::string source_image;
  std::uint64_t seed_index = 0;

  ImageGeometry geometry() const { return ImageGeometry(width_px, height_px); }
  CameraParameterVector parameters() const;

  bool operator==(const AnnotationRecord&) const = default;
};

// One JSON object per line, fields in declaration order.
std::string format_annotation(const AnnotationRecord& record);
// Throws IoError on malformed input.
AnnotationRecord parse_annotation(std::string_view line);

void write_annotations(const std::filesystem::path& path,
                       std::span<const AnnotationRecord> records);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

// hfov/180, cx/W, cy/H, then the five coefficients unscaled.
struct TargetEncoding {
  std::array<double, 8> values{};
};

TargetEncoding encode_targets(const CameraParameterVector& p,
                              const ImageGeometry& geometry);
TargetEncoding encode_targets(const AnnotationRecord& record);
CameraParameterVector decode_targets(const TargetEncoding& encoding,
                                     const ImageGeometry& geometry);

struct DatasetOptions {
  int threads = 0;
  // 0 samples a camera per image. N > 0 samples N cameras (streams 0..N-1)
  // and image i uses camera i mod N.
  int parameter_sets = 0;
  UndistortOptions undistort;
};

struct Manifest {
  ImageGeometry geometry{1, 1};
  SamplerConfig sampler;
  int parameter_sets = 0;
  std::vector<std::string> sources;
  std::vector<AnnotationRecord> records;
};

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kAnnotationsFile = "annotations.jsonl";

// Source images are every .png/.pgm/.ppm file directly in source_dir, in
// lexicographic order; image i uses source i mod count and sampler stream i
// (or i mod parameter_sets). Throws IoError for an empty or unreadable
// corpus, GeometryMismatch when a source does not match `geometry`, and
// propagates sampler errors.
Manifest generate_dataset(const std::filesystem::path& source_dir,
                          const ImageGeometry& geometry, std::size_t n_images,
                          const SamplerConfig& sampler,
                          const std::filesystem::path& out_dir,
                          const DatasetOptions& options = {});

std::string format_manifest_header(const Manifest& manifest);
void write_manifest(const std::filesystem::path& out_dir, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& manifest_path);

struct DatasetSplit {
  std::vector<AnnotationRecord> train;
  std::vector<AnnotationRecord> val;
  std::vector<AnnotationRecord> test;
};

// Seeded shuffle, then floor(0.7 n) / floor(0.15 n) / remainder. Each part
// keeps the input order.
DatasetSplit split_dataset(std::span<const AnnotationRecord> records,
                           std::uint64_t seed);

}  // namespace bcdk
