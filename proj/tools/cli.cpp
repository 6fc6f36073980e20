#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include "bcdk/camera.hpp"
#include "bcdk/dataset.hpp"
#include "bcdk/error_map.hpp"
#include "bcdk/errors.hpp"
#include "bcdk/image_io.hpp"
#include "bcdk/parallel.hpp"
#include "bcdk/rng.hpp"
#include "bcdk/sampler.hpp"
#include "bcdk/warp.hpp"

namespace fs = std::filesystem;

namespace bcdk::cli {

namespace {

using ojson = nlohmann::ordered_json;

// Raised for bad flag values detected after parsing.
class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

// Writes to `path`, or to `out` when no path was given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

struct SamplerOverrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "sampler config file (key = value)");
    cmd->add_option("--seed", seed, "overrides the config seed");
    cmd->add_option("--budget", budget,
                    "overrides max_displacement_px from the config");
  }

  SamplerConfig load() const {
    SamplerConfig cfg = config.empty() ? SamplerConfig{} : load_sampler_config(config);
    if (seed) cfg.seed = *seed;
    if (budget) cfg.max_displacement_px = *budget;
    cfg.validate();
    return cfg;
  }
};

ImageGeometry parse_geometry_flag(const std::string& text) {
  try {
    return ImageGeometry::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError("--geometry: " + std::string(e.what()));
  }
}

std::string format_camera(std::size_t index, const ImageGeometry& g,
                          const SampledCamera& cam) {
  ojson j;
  j["index"] = index;
  j["width"] = g.width();
  j["height"] = g.height();
  j["hfov_deg"] = cam.hfov_deg;
  j["base_hfov_deg"] = cam.base_hfov_deg;
  j["focal_scale"] = cam.focal_scale;
  j["fx"] = cam.intrinsics.fx;
  j["fy"] = cam.intrinsics.fy;
  j["cx"] = cam.intrinsics.cx;
  j["cy"] = cam.intrinsics.cy;
  for (Coefficient c : kAllCoefficients) {
    j[std::string(coefficient_name(c))] = cam.coefficients[c];
  }
  ojson order = ojson::array();
  ojson bounds = ojson::object();
  for (std::size_t i = 0; i < cam.draw_order.size(); ++i) {
    const std::string name(coefficient_name(cam.draw_order[i]));
    order.push_back(name);
    bounds[name] = {cam.bounds[i].lower, cam.bounds[i].upper};
  }
  j["draw_order"] = order;
  j["bounds"] = bounds;
  return j.dump();
}

// Camera parameter file: a JSON object with hfov_deg, cx, cy, k1, k2, k3,
// p1, p2 and optionally focal_scale and width/height (or width_px/height_px).
// Records written by sample-params and gen-dataset qualify.
struct CameraFile {
  CameraParameterVector params;
  std::optional<double> focal_scale;
  std::optional<ImageGeometry> geometry;
};

CameraFile load_camera_file(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    const auto j = nlohmann::json::parse(text);
    CameraFile f;
    double* fields[] = {&f.params.hfov_deg, &f.params.cx, &f.params.cy,
                        &f.params.k1,       &f.params.k2, &f.params.k3,
                        &f.params.p1,       &f.params.p2};
    for (std::size_t i = 0; i < kParameterNames.size(); ++i) {
      *fields[i] = j.at(std::string(kParameterNames[i])).get<double>();
    }
    f.params.validate();
    if (j.contains("focal_scale")) {
      f.focal_scale = j.at("focal_scale").get<double>();
      if (!(*f.focal_scale > 0.0) || !std::isfinite(*f.focal_scale)) {
        throw std::invalid_argument("focal_scale must be positive");
      }
    }
    for (const auto& [wk, hk] : {std::pair{"width", "height"},
                                 std::pair{"width_px", "height_px"}}) {
      if (j.contains(wk) && j.contains(hk)) {
        f.geometry = ImageGeometry(j.at(wk).get<int>(), j.at(hk).get<int>());
      }
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed parameter file " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("invalid parameter file " + path.string() + ": " + e.what());
  }
}

void check_geometry(const CameraFile& f, const RasterImage& img) {
  if (f.geometry && !(*f.geometry == img.geometry())) {
    throw GeometryMismatch("parameters are for " + f.geometry->to_string() +
                           " but the image is " + img.geometry().to_string());
  }
}

// ---------------------------------------------------------------------------

struct SampleParamsArgs {
  std::string geometry;
  SamplerOverrides sampler;
  std::size_t count = 0;
  std::string out;
  int threads = 0;
};

int sample_params(const SampleParamsArgs& a, std::ostream& out) {
  const ImageGeometry g = parse_geometry_flag(a.geometry);
  const SamplerConfig cfg = a.sampler.load();
  cfg.validate_for(g);

  std::vector<std::string> lines(a.count);
  parallel_for(a.count, resolve_threads(a.threads),
               [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::for_stream(cfg.seed, i);
      lines[i] = format_camera(i, g, sample_camera(g, cfg, rng));
    }
  });
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  emit(a.out, text, out);
  return kExitOk;
}

struct WarpArgs {
  std::string in;
  std::string out;
  std::string params;
  int threads = 0;
};

int distort_cmd(const WarpArgs& a) {
  const RasterImage src = read_image(a.in);
  const CameraFile f = load_camera_file(a.params);
  check_geometry(f, src);
  const ImageGeometry& g = src.geometry();
  const Intrinsics dst = f.params.intrinsics(g);
  // A scaled camera renders from a centered source with the unscaled focal
  // length, which is how gen-dataset produced it.
  const Intrinsics source =
      f.focal_scale ? dst.with_focal_scale(1.0 / *f.focal_scale)
                          .with_principal_point(g.width() / 2.0, g.height() / 2.0)
                    : dst;
  WarpOptions opts;
  opts.threads = resolve_threads(a.threads);
  write_image(a.out, apply_distortion_to_image(src, source, dst,
                                               f.params.coefficients(), opts));
  return kExitOk;
}

int undistort_cmd(const WarpArgs& a) {
  const RasterImage src = read_image(a.in);
  const CameraFile f = load_camera_file(a.params);
  check_geometry(f, src);
  WarpOptions opts;
  opts.threads = resolve_threads(a.threads);
  write_image(a.out, undistort_image(src, f.params.intrinsics(src.geometry()),
                                     f.params.coefficients(), opts));
  return kExitOk;
}

struct GridArgs {
  std::string geometry;
  int spacing = 64;
  int line_width = 1;
  std::string out;
};

int gen_grid(const GridArgs& a) {
  const ImageGeometry g = parse_geometry_flag(a.geometry);
  RasterImage img = [&] {
    try {
      return generate_grid_image(g, a.spacing, a.line_width);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  write_image(a.out, img);
  return kExitOk;
}

struct DatasetArgs {
  std::string source_dir;
  std::string geometry;
  std::size_t count = 0;
  SamplerOverrides sampler;
  std::string out_dir;
  int threads = 0;
  int parameter_sets = 0;
};

int gen_dataset(const DatasetArgs& a, std::ostream& err) {
  const ImageGeometry g = parse_geometry_flag(a.geometry);
  const SamplerConfig cfg = a.sampler.load();
  DatasetOptions opts;
  opts.threads = a.threads;
  opts.parameter_sets = a.parameter_sets;
  const Manifest m = generate_dataset(a.source_dir, g, a.count, cfg, a.out_dir, opts);
  err << "wrote " << m.records.size() << " images to " << a.out_dir << "\n";
  return kExitOk;
}

struct SplitArgs {
  std::string manifest;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int split_cmd(const SplitArgs& a, std::ostream& err) {
  const fs::path manifest_path(a.manifest);
  const Manifest m = load_manifest(manifest_path);
  const fs::path dataset_dir = manifest_path.parent_path();
  const fs::path out_dir = a.out_dir.empty() ? dataset_dir : fs::path(a.out_dir);
  fs::create_directories(out_dir);

  DatasetSplit parts = split_dataset(m.records, a.seed);
  // Record paths stay relative to the directory holding the split files.
  if (!a.out_dir.empty()) {
    for (auto* part : {&parts.train, &parts.val, &parts.test}) {
      for (auto& r : *part) {
        r.image_path = fs::relative(fs::absolute(dataset_dir / r.image_path),
                                    fs::absolute(out_dir))
                           .generic_string();
      }
    }
  }
  write_annotations(out_dir / "train.jsonl", parts.train);
  write_annotations(out_dir / "val.jsonl", parts.val);
  write_annotations(out_dir / "test.jsonl", parts.test);
  err << "split " << m.records.size() << " records: " << parts.train.size()
      << " train, " << parts.val.size() << " val, " << parts.test.size()
      << " test\n";
  return kExitOk;
}

struct EvalArgs {
  std::string predictions;
  std::string geometry = "1392x512";
  std::size_t subset = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
};

int eval_cmd(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const ImageGeometry g = parse_geometry_flag(a.geometry);
  std::vector<PredictionRecord> records = load_predictions(a.predictions);
  if (records.empty()) throw IoError(a.predictions + ": no prediction records");

  if (a.subset > 0 && a.subset < records.size()) {
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(splitmix64(a.seed));
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(a.subset);
    std::sort(order.begin(), order.end());
    std::vector<PredictionRecord> picked;
    for (std::size_t i : order) picked.push_back(records[i]);
    records = std::move(picked);
  }

  ErrorMapOptions opts;
  opts.threads = resolve_threads(a.threads);
  MeanAccumulator acc;
  for (const auto& r : records) {
    const auto truth = rescale_parameters(r.truth, r.geometry, g);
    const auto pred = rescale_parameters(r.predicted, r.geometry, g);
    acc.add(pixel_error_map(truth, pred, g, opts));
  }
  const ErrorMap mean = acc.mean();
  const auto profiles = extract_line_profiles(mean);
  const auto rows = summarize(profiles);

  if (a.out_dir.empty()) {
    out << summary_csv(rows);
  } else {
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    write_image(dir / "error_map.png", error_heat_image(mean));
    write_error_map_raw(dir / "error_map.f64", mean);
    write_text(dir / "profiles.csv", profiles_csv(profiles));
    write_text(dir / "summary.csv", summary_csv(rows));
    write_text(dir / "summary.txt", render_summary(rows));
  }
  err << "evaluated " << acc.count() << " records at " << g.to_string() << "\n";
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> summaries;
  std::vector<std::string> labels;
  bool rows = false;
  std::string out;
};

int report_cmd(const ReportArgs& a, std::ostream& out) {
  if (!a.labels.empty() && a.labels.size() != a.summaries.size()) {
    throw UsageError("--label must be given once per --summary file");
  }
  std::vector<LabelledSummary> table;
  for (std::size_t i = 0; i < a.summaries.size(); ++i) {
    const fs::path path(a.summaries[i]);
    std::vector<SummaryRow> rows;
    try {
      rows = parse_summary_csv(read_text(path));
    } catch (const std::invalid_argument& e) {
      throw IoError(path.string() + ": " + e.what());
    }
    const std::string label = a.labels.empty()
                                  ? path.parent_path().filename().string()
                                  : a.labels[i];
    table.push_back({label.empty() ? path.stem().string() : label, rows});
  }

  std::string text;
  if (a.rows) {
    for (const auto& s : table) {
      if (table.size() > 1) text += s.label + "\n";
      text += render_summary(s.rows);
    }
  } else {
    text = render_report_table(table);
  }
  emit(a.out, text, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Lens distortion toolkit", "bcdk"};
  app.require_subcommand(1);

  SampleParamsArgs sp;
  auto* c_sp = app.add_subcommand("sample-params", "draw camera parameter sets");
  c_sp->add_option("--geometry", sp.geometry, "WxH")->required();
  sp.sampler.add_to(c_sp);
  c_sp->add_option("--count", sp.count)->required();
  c_sp->add_option("--out", sp.out, "JSONL output (stdout when absent)");
  c_sp->add_option("--threads", sp.threads);

  WarpArgs dw;
  auto* c_d = app.add_subcommand("distort", "render an image through a distortion");
  WarpArgs uw;
  auto* c_u = app.add_subcommand("undistort", "remove a distortion from an image");
  for (auto [cmd, w] : {std::pair{c_d, &dw}, std::pair{c_u, &uw}}) {
    cmd->add_option("--in", w->in)->required();
    cmd->add_option("--out", w->out)->required();
    cmd->add_option("--params", w->params, "camera parameter JSON")->required();
    cmd->add_option("--threads", w->threads);
  }

  GridArgs gg;
  auto* c_g = app.add_subcommand("gen-grid", "straight-line grid test pattern");
  c_g->add_option("--geometry", gg.geometry, "WxH")->required();
  c_g->add_option("--spacing", gg.spacing, "line spacing in pixels");
  c_g->add_option("--line-width", gg.line_width, "line width in pixels");
  c_g->add_option("--out", gg.out)->required();

  DatasetArgs gd;
  auto* c_gd = app.add_subcommand("gen-dataset", "generate a distorted dataset");
  c_gd->add_option("--source-dir", gd.source_dir)->required();
  c_gd->add_option("--geometry", gd.geometry, "WxH")->required();
  c_gd->add_option("--count", gd.count)->required();
  gd.sampler.add_to(c_gd);
  c_gd->add_option("--out-dir", gd.out_dir)->required();
  c_gd->add_option("--threads", gd.threads);
  c_gd->add_option("--parameter-sets", gd.parameter_sets,
                   "share N sampled cameras across the images");

  SplitArgs sa;
  auto* c_s = app.add_subcommand("split", "70/15/15 train/val/test split");
  c_s->add_option("--manifest", sa.manifest)->required();
  c_s->add_option("--seed", sa.seed);
  c_s->add_option("--out-dir", sa.out_dir, "defaults to the manifest directory");

  EvalArgs ea;
  auto* c_e = app.add_subcommand("eval", "mean error map of a predictions file");
  c_e->add_option("--predictions", ea.predictions)->required();
  c_e->add_option("--geometry", ea.geometry, "evaluation frame WxH");
  c_e->add_option("--subset", ea.subset, "evaluate N records chosen by --seed");
  c_e->add_option("--seed", ea.seed);
  c_e->add_option("--out-dir", ea.out_dir);
  c_e->add_option("--threads", ea.threads);

  ReportArgs ra;
  auto* c_r = app.add_subcommand("report", "min/max table from summary CSVs");
  c_r->add_option("--summary", ra.summaries)->required();
  c_r->add_option("--label", ra.labels, "one per --summary");
  c_r->add_flag("--rows", ra.rows, "one line per position instead of a table");
  c_r->add_option("--out", ra.out);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (c_sp->parsed()) return sample_params(sp, out);
    if (c_d->parsed()) return distort_cmd(dw);
    if (c_u->parsed()) return undistort_cmd(uw);
    if (c_g->parsed()) return gen_grid(gg);
    if (c_gd->parsed()) return gen_dataset(gd, err);
    if (c_s->parsed()) return split_cmd(sa, err);
    if (c_e->parsed()) return eval_cmd(ea, out, err);
    if (c_r->parsed()) return report_cmd(ra, out);
  } catch (const BudgetExhausted& e) {
    err << "error: budget exhausted at coefficient "
        << coefficient_name(e.coefficient()) << ": " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const PredictionParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GeometryMismatch& e) {
    err << "geometry mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace bcdk::cli
