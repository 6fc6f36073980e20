#include "bcdk/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bcdk/errors.hpp"
#include "bcdk/image_io.hpp"
#include "bcdk/parallel.hpp"
#include "bcdk/rng.hpp"
#include "bcdk/warp.hpp"

namespace fs = std::filesystem;

namespace bcdk {

using ojson = nlohmann::ordered_json;

CameraParameterVector AnnotationRecord::parameters() const {
  return {hfov_deg, cx, cy, k1, k2, k3, p1, p2};
}

std::string format_annotation(const AnnotationRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["image_path"] = r.image_path;
  j["width_px"] = r.width_px;
  j["height_px"] = r.height_px;
  j["hfov_deg"] = r.hfov_deg;
  j["cx"] = r.cx;
  j["cy"] = r.cy;
  j["k1"] = r.k1;
  j["k2"] = r.k2;
  j["k3"] = r.k3;
  j["p1"] = r.p1;
  j["p2"] = r.p2;
  j["focal_scale"] = r.focal_scale;
  j["source_image"] = r.source_image;
  j["seed_index"] = r.seed_index;
  return j.dump();
}

AnnotationRecord parse_annotation(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    AnnotationRecord r;
    r.id = j.at("id").get<std::string>();
    r.image_path = j.at("image_path").get<std::string>();
    r.width_px = j.at("width_px").get<int>();
    r.height_px = j.at("height_px").get<int>();
    r.hfov_deg = j.at("hfov_deg").get<double>();
    r.cx = j.at("cx").get<double>();
    r.cy = j.at("cy").get<double>();
    r.k1 = j.at("k1").get<double>();
    r.k2 = j.at("k2").get<double>();
    r.k3 = j.at("k3").get<double>();
    r.p1 = j.at("p1").get<double>();
    r.p2 = j.at("p2").get<double>();
    r.focal_scale = j.at("focal_scale").get<double>();
    r.source_image = j.at("source_image").get<std::string>();
    r.seed_index = j.at("seed_index").get<std::uint64_t>();
    r.parameters().validate();
    (void)r.geometry();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed annotation record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid annotation record: ") + e.what());
  }
}

void write_annotations(const fs::path& path,
                       std::span<const AnnotationRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << format_annotation(r) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

std::vector<AnnotationRecord> read_annotations(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<AnnotationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_annotation(line));
    } catch (const IoError& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " +
                    e.what());
    }
  }
  return records;
}

TargetEncoding encode_targets(const CameraParameterVector& p,
                              const ImageGeometry& geometry) {
  return {{p.hfov_deg / 180.0, p.cx / geometry.width(), p.cy / geometry.height(),
           p.k1, p.k2, p.k3, p.p1, p.p2}};
}

TargetEncoding encode_targets(const AnnotationRecord& record) {
  return encode_targets(record.parameters(), record.geometry());
}

CameraParameterVector decode_targets(const TargetEncoding& e,
                                     const ImageGeometry& geometry) {
  const auto& v = e.values;
  return {v[0] * 180.0, v[1] * geometry.width(), v[2] * geometry.height(),
          v[3], v[4], v[5], v[6], v[7]};
}

namespace {

std::string index_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return buf;
}

std::vector<fs::path> list_sources(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("source directory does not exist: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image_path(entry.path())) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  if (out.empty()) {
    throw IoError("no .png/.pgm/.ppm images in " + dir.string());
  }
  return out;
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  return fs::relative(fs::absolute(target), fs::absolute(base)).generic_string();
}

}  // namespace

Manifest generate_dataset(const fs::path& source_dir, const ImageGeometry& geometry,
                          std::size_t n_images, const SamplerConfig& sampler,
                          const fs::path& out_dir, const DatasetOptions& options) {
  sampler.validate();
  sampler.validate_for(geometry);
  if (options.parameter_sets < 0) {
    throw ConfigError("parameter_sets must be non-negative");
  }

  const auto source_paths = list_sources(source_dir);
  std::vector<RasterImage> sources;
  sources.reserve(source_paths.size());
  for (const auto& p : source_paths) {
    sources.push_back(read_image(p));
    if (!(sources.back().geometry() == geometry)) {
      throw GeometryMismatch("source " + p.string() + " is " +
                             sources.back().geometry().to_string() +
                             ", expected " + geometry.to_string());
    }
  }

  fs::create_directories(out_dir / "images");

  Manifest manifest;
  manifest.geometry = geometry;
  manifest.sampler = sampler;
  manifest.parameter_sets = options.parameter_sets;
  for (const auto& p : source_paths) {
    manifest.sources.push_back(relative_to(p, out_dir));
  }

  // Shared cameras for grouped generation are sampled once, up front.
  std::vector<SampledCamera> shared;
  for (int s = 0; s < options.parameter_sets; ++s) {
    Rng rng = Rng::for_stream(sampler.seed, static_cast<std::uint64_t>(s));
    shared.push_back(sample_camera(geometry, sampler, rng));
  }

  std::vector<AnnotationRecord> records(n_images);
  WarpOptions warp;
  warp.undistort = options.undistort;
  warp.threads = 1;

  parallel_for(n_images, resolve_threads(options.threads),
               [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::uint64_t stream = i;
      SampledCamera cam = [&] {
        if (options.parameter_sets > 0) {
          stream = i % static_cast<std::size_t>(options.parameter_sets);
          return shared[stream];
        }
        Rng rng = Rng::for_stream(sampler.seed, stream);
        return sample_camera(geometry, sampler, rng);
      }();

      const std::size_t src_index = i % sources.size();
      const RasterImage out = apply_distortion_to_image(
          sources[src_index], cam.source_intrinsics, cam.intrinsics,
          cam.coefficients, warp);

      const std::string id = index_id(i);
      const std::string image_rel = "images/" + id + ".png";
      write_image(out_dir / image_rel, out);

      AnnotationRecord& r = records[i];
      r.id = id;
      r.image_path = image_rel;
      r.width_px = geometry.width();
      r.height_px = geometry.height();
      r.hfov_deg = cam.hfov_deg;
      r.cx = cam.intrinsics.cx;
      r.cy = cam.intrinsics.cy;
      r.k1 = cam.coefficients.k1;
      r.k2 = cam.coefficients.k2;
      r.k3 = cam.coefficients.k3;
      r.p1 = cam.coefficients.p1;
      r.p2 = cam.coefficients.p2;
      r.focal_scale = cam.focal_scale;
      r.source_image = manifest.sources[src_index];
      r.seed_index = stream;
    }
  });

  manifest.records = std::move(records);
  write_manifest(out_dir, manifest);
  return manifest;
}

std::string format_manifest_header(const Manifest& m) {
  ojson j;
  j["format"] = "bcdk-dataset";
  j["version"] = 1;
  j["width"] = m.geometry.width();
  j["height"] = m.geometry.height();
  j["count"] = m.records.size();
  j["seed"] = m.sampler.seed;
  j["parameter_sets"] = m.parameter_sets;
  j["sampler_config"] = format_sampler_config(m.sampler);
  j["sources"] = m.sources;
  j["annotations"] = std::string(kAnnotationsFile);
  return j.dump(2) + "\n";
}

void write_manifest(const fs::path& out_dir, const Manifest& manifest) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / kManifestFile, std::ios::binary);
    if (!out) throw IoError("cannot write manifest in " + out_dir.string());
    out << format_manifest_header(manifest);
  }
  write_annotations(out_dir / kAnnotationsFile, manifest.records);
}

Manifest load_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + manifest_path.string());
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format").get<std::string>() != "bcdk-dataset") {
      throw IoError(manifest_path.string() + " is not a dataset manifest");
    }
    m.geometry = ImageGeometry(j.at("width").get<int>(), j.at("height").get<int>());
    m.sampler = parse_sampler_config(j.at("sampler_config").get<std::string>());
    m.parameter_sets = j.at("parameter_sets").get<int>();
    m.sources = j.at("sources").get<std::vector<std::string>>();
    const auto annotations =
        manifest_path.parent_path() / j.at("annotations").get<std::string>();
    m.records = read_annotations(annotations);
    if (m.records.size() != j.at("count").get<std::size_t>()) {
      throw IoError(manifest_path.string() +
                    ": record count does not match the annotation file");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  return m;
}

DatasetSplit split_dataset(std::span<const AnnotationRecord> records,
                           std::uint64_t seed) {
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(splitmix64(seed));
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t n_train = 7 * n / 10;
  const std::size_t n_val = 15 * n / 100;
  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(order.begin() + begin, order.begin() + end);
    std::sort(idx.begin(), idx.end());
    std::vector<AnnotationRecord> part;
    part.reserve(idx.size());
    for (std::size_t i : idx) part.push_back(records[i]);
    return part;
  };
  return {take(0, n_train), take(n_train, n_train + n_val),
          take(n_train + n_val, n)};
}

}  // namespace bcdk
