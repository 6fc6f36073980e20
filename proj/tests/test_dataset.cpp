#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bcdk/dataset.hpp"
#include "bcdk/image_io.hpp"
#include "bcdk/warp.hpp"
#include "test_util.hpp"

namespace bcdk {
namespace {

namespace fs = std::filesystem;
using bcdk::testing::slurp;
using bcdk::testing::TempDir;

const ImageGeometry kSmall(96, 72);

std::string index_string(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return buf;
}

AnnotationRecord sample_annotation(std::size_t i) {
  AnnotationRecord r;
  r.id = "00000" + std::to_string(i);
  r.image_path = "images/" + r.id + ".png";
  r.width_px = 1392;
  r.height_px = 512;
  r.hfov_deg = 61.25 + i;
  r.cx = 700.125;
  r.cy = 250.0 - i;
  r.k1 = -0.1 * (i + 1) / 3.0;
  r.k2 = 0.01;
  r.k3 = -1e-4;
  r.p1 = 3.3e-4;
  r.p2 = -0.0;
  r.focal_scale = 1.0 + 1e-3 * i;
  r.source_image = "../src/grid.png";
  r.seed_index = 1000 + i;
  return r;
}

// Writes `count` grid sources of `g` into a fresh directory.
void write_sources(const fs::path& dir, const ImageGeometry& g, int count) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    write_image(dir / ("src" + std::to_string(i) + ".png"),
                generate_grid_image(g, 12 + 4 * i, 1));
  }
}

SamplerConfig small_config(double budget = 4.0) {
  SamplerConfig cfg;
  cfg.max_displacement_px = budget;
  cfg.seed = 99;
  return cfg;
}

TEST(Annotation, FormatParseRoundTrip) {
  const AnnotationRecord r = sample_annotation(2);
  const std::string line = format_annotation(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const AnnotationRecord back = parse_annotation(line);
  EXPECT_EQ(back, r);
  EXPECT_EQ(format_annotation(back), line);
}

TEST(Annotation, FieldNames) {
  const std::string line = format_annotation(sample_annotation(0));
  std::size_t last = 0;
  for (const char* key :
       {"\"id\"", "\"image_path\"", "\"width_px\"", "\"height_px\"", "\"hfov_deg\"",
        "\"cx\"", "\"cy\"", "\"k1\"", "\"k2\"", "\"k3\"", "\"p1\"", "\"p2\"",
        "\"focal_scale\"", "\"source_image\"", "\"seed_index\""}) {
    const std::size_t at = line.find(key);
    ASSERT_NE(at, std::string::npos) << key;
    EXPECT_GE(at, last) << key;
    last = at;
  }
}

TEST(Annotation, FileRoundTripIsByteIdentical) {
  const TempDir dir("annot");
  std::vector<AnnotationRecord> recs;
  for (std::size_t i = 0; i < 5; ++i) recs.push_back(sample_annotation(i));
  write_annotations(dir / "a.jsonl", recs);
  const auto back = read_annotations(dir / "a.jsonl");
  EXPECT_EQ(back, recs);
  write_annotations(dir / "b.jsonl", back);
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
}

TEST(Annotation, MalformedRecords) {
  EXPECT_THROW(parse_annotation("{"), IoError);
  EXPECT_THROW(parse_annotation("{\"id\":\"x\"}"), IoError);
  std::string line = format_annotation(sample_annotation(0));
  line.replace(line.find("61.25"), 5, "200.0");
  EXPECT_THROW(parse_annotation(line), IoError);

  const TempDir dir("annot_bad");
  bcdk::testing::spit(dir / "a.jsonl",
                      format_annotation(sample_annotation(0)) + "\nnot json\n");
  try {
    read_annotations(dir / "a.jsonl");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("a.jsonl:2"), std::string::npos);
  }
  EXPECT_THROW(read_annotations(dir / "missing.jsonl"), IoError);
}

TEST(Targets, CenteredNinetyDegrees) {
  const ImageGeometry g(1392, 512);
  const CameraParameterVector p{90.0, 696.0, 256.0, 0, 0, 0, 0, 0};
  const TargetEncoding e = encode_targets(p, g);
  const std::array<double, 8> expected = {0.5, 0.5, 0.5, 0, 0, 0, 0, 0};
  EXPECT_EQ(e.values, expected);
  EXPECT_EQ(decode_targets(e, g), p);
}

TEST(Targets, RoundTrip) {
  for (std::size_t i = 0; i < 6; ++i) {
    const AnnotationRecord r = sample_annotation(i);
    const TargetEncoding e = encode_targets(r);
    for (int j = 0; j < 3; ++j) {
      EXPECT_GT(e.values[j], 0.0);
      EXPECT_LT(e.values[j], 1.0);
    }
    const CameraParameterVector back = decode_targets(e, r.geometry());
    const CameraParameterVector p = r.parameters();
    const std::array<double, 8> a = {p.hfov_deg, p.cx, p.cy, p.k1, p.k2, p.k3, p.p1, p.p2};
    const std::array<double, 8> b = {back.hfov_deg, back.cx, back.cy, back.k1,
                                     back.k2, back.k3, back.p1, back.p2};
    for (int j = 0; j < 8; ++j) {
      EXPECT_LE(std::fabs(a[j] - b[j]), 1e-12 * std::max(1.0, std::fabs(a[j])));
    }
  }
}

std::vector<AnnotationRecord> numbered(std::size_t n) {
  std::vector<AnnotationRecord> recs(n);
  for (std::size_t i = 0; i < n; ++i) {
    recs[i].id = std::to_string(i);
    recs[i].seed_index = i;
  }
  return recs;
}

std::vector<std::uint64_t> ids(const std::vector<AnnotationRecord>& recs) {
  std::vector<std::uint64_t> out;
  for (const auto& r : recs) out.push_back(r.seed_index);
  return out;
}

TEST(Split, TwentyRecords) {
  const auto recs = numbered(20);
  const DatasetSplit s = split_dataset(recs, 7);
  EXPECT_EQ(s.train.size(), 14u);
  EXPECT_EQ(s.val.size(), 3u);
  EXPECT_EQ(s.test.size(), 3u);

  std::set<std::uint64_t> all;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    const auto v = ids(*part);
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
    for (auto i : v) EXPECT_TRUE(all.insert(i).second) << "duplicate " << i;
  }
  EXPECT_EQ(all.size(), 20u);
}

TEST(Split, Deterministic) {
  const auto recs = numbered(57);
  const DatasetSplit a = split_dataset(recs, 11);
  const DatasetSplit b = split_dataset(recs, 11);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(ids(split_dataset(recs, 12).test), ids(a.test));
}

TEST(Split, Proportions) {
  for (std::size_t n : {1u, 2u, 7u, 10u, 33u, 100u, 1001u}) {
    const auto s = split_dataset(numbered(n), 1);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), n);
    EXPECT_LE(std::fabs(s.train.size() - 0.7 * n), 1.0) << n;
    EXPECT_LE(std::fabs(s.val.size() - 0.15 * n), 1.0) << n;
    // The remainder absorbs both floor losses, so it can be off by up to 2.
    EXPECT_LT(std::fabs(s.test.size() - 0.15 * n), 2.0) << n;
  }
}

TEST(Generate, EmptyManifest) {
  const TempDir dir("gen_empty");
  write_sources(dir / "src", kSmall, 1);
  const Manifest m =
      generate_dataset(dir / "src", kSmall, 0, small_config(), dir / "out");
  EXPECT_TRUE(m.records.empty());
  EXPECT_EQ(slurp(dir / "out" / "annotations.jsonl"), "");
  EXPECT_TRUE(load_manifest(dir / "out" / "manifest.json").records.empty());
}

TEST(Generate, ZeroBudgetCopiesSources) {
  const TempDir dir("gen_zero");
  write_sources(dir / "src", kSmall, 2);
  SamplerConfig cfg = small_config(0.0);
  cfg.principal_shift_max_px = std::array<double, 2>{0.0, 0.0};
  const Manifest m = generate_dataset(dir / "src", kSmall, 5, cfg, dir / "out");
  ASSERT_EQ(m.records.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    const AnnotationRecord& r = m.records[i];
    EXPECT_EQ(r.k1, 0.0);
    EXPECT_EQ(r.k2, 0.0);
    EXPECT_EQ(r.k3, 0.0);
    EXPECT_EQ(r.p1, 0.0);
    EXPECT_EQ(r.p2, 0.0);
    EXPECT_EQ(r.focal_scale, 1.0);
    EXPECT_EQ(r.source_image, "../src/src" + std::to_string(i % 2) + ".png");
    EXPECT_EQ(read_image(dir / "out" / r.image_path),
              read_image(dir / "src" / ("src" + std::to_string(i % 2) + ".png")));
  }
}

TEST(Generate, RecordsRespectBudget) {
  const TempDir dir("gen_budget");
  write_sources(dir / "src", kSmall, 3);
  const SamplerConfig cfg = small_config(6.0);
  const Manifest m = generate_dataset(dir / "src", kSmall, 12, cfg, dir / "out");
  ASSERT_EQ(m.records.size(), 12u);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const AnnotationRecord& r = m.records[i];
    EXPECT_EQ(r.id, index_string(i));
    EXPECT_EQ(r.image_path, "images/" + r.id + ".png");
    EXPECT_EQ(r.seed_index, i);
    EXPECT_TRUE(fs::exists(dir / "out" / r.image_path));
    EXPECT_EQ(read_image(dir / "out" / r.image_path).geometry(), kSmall);
    // The undistorted source camera is centered with fx / focal_scale.
    const double fx = hfov_to_fx(r.hfov_deg, r.width_px) / r.focal_scale;
    const Intrinsics source{fx, fx, r.width_px / 2.0, r.height_px / 2.0, 0.0,
                            r.geometry()};
    const DistortionCoefficients d{r.k1, r.k2, r.k3, r.p1, r.p2};
    EXPECT_LE(poi_displacement(d, source), cfg.max_displacement_px + 1e-3) << i;
    EXPECT_GE(r.focal_scale, 1.0);
  }
}

TEST(Generate, DeterministicAcrossThreads) {
  const TempDir dir("gen_threads");
  write_sources(dir / "src", kSmall, 2);
  DatasetOptions one;
  one.threads = 1;
  DatasetOptions three;
  three.threads = 3;
  generate_dataset(dir / "src", kSmall, 7, small_config(), dir / "a", one);
  generate_dataset(dir / "src", kSmall, 7, small_config(), dir / "b", three);
  EXPECT_EQ(slurp(dir / "a" / "manifest.json"), slurp(dir / "b" / "manifest.json"));
  EXPECT_EQ(slurp(dir / "a" / "annotations.jsonl"),
            slurp(dir / "b" / "annotations.jsonl"));
  for (int i = 0; i < 7; ++i) {
    const std::string img = "images/" + index_string(i) + ".png";
    EXPECT_EQ(slurp(dir / "a" / img), slurp(dir / "b" / img)) << img;
  }
}

TEST(Generate, GroupedParameterSets) {
  const TempDir dir("gen_sets");
  write_sources(dir / "src", kSmall, 1);
  DatasetOptions opts;
  opts.parameter_sets = 2;
  const Manifest m =
      generate_dataset(dir / "src", kSmall, 5, small_config(), dir / "out", opts);
  ASSERT_EQ(m.records.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(m.records[i].seed_index, i % 2);
    const AnnotationRecord& same = m.records[i % 2];
    EXPECT_EQ(m.records[i].k1, same.k1);
    EXPECT_EQ(m.records[i].cx, same.cx);
    EXPECT_EQ(m.records[i].hfov_deg, same.hfov_deg);
  }
  EXPECT_EQ(m.parameter_sets, 2);
  // Per-image stream 1 and shared set 1 are the same camera.
  const Manifest per_image =
      generate_dataset(dir / "src", kSmall, 2, small_config(), dir / "per");
  EXPECT_EQ(per_image.records[1].k1, m.records[1].k1);
}

TEST(Generate, ManifestLoadsBack) {
  const TempDir dir("gen_load");
  write_sources(dir / "src", kSmall, 2);
  const Manifest m = generate_dataset(dir / "src", kSmall, 4, small_config(), dir / "out");
  const Manifest back = load_manifest(dir / "out" / "manifest.json");
  EXPECT_EQ(back.geometry, m.geometry);
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(back.sources, m.sources);
  EXPECT_EQ(back.sampler.seed, 99u);
  EXPECT_EQ(back.sampler.max_displacement_px, 4.0);
  EXPECT_EQ(format_manifest_header(back), slurp(dir / "out" / "manifest.json"));
}

TEST(Generate, Errors) {
  const TempDir dir("gen_err");
  fs::create_directories(dir / "empty");
  EXPECT_THROW(generate_dataset(dir / "empty", kSmall, 1, small_config(), dir / "o"),
               IoError);
  EXPECT_THROW(generate_dataset(dir / "nope", kSmall, 1, small_config(), dir / "o"),
               IoError);
  write_sources(dir / "src", kSmall, 1);
  EXPECT_THROW(generate_dataset(dir / "src", ImageGeometry(64, 64), 1, small_config(),
                                dir / "o"),
               GeometryMismatch);
  bcdk::testing::spit(dir / "bad" / "x.png", "not a png");
  EXPECT_THROW(generate_dataset(dir / "bad", kSmall, 1, small_config(), dir / "o"),
               IoError);
  EXPECT_THROW(load_manifest(dir / "missing.json"), IoError);
  bcdk::testing::spit(dir / "m.json", "{\"format\":\"other\"}");
  EXPECT_THROW(load_manifest(dir / "m.json"), IoError);
}

}  // namespace
}  // namespace bcdk
