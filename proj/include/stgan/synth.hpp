#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "stgan/catalog.hpp"
#include "stgan/cloud.hpp"
#include "stgan/dates.hpp"
#include "stgan/errors.hpp"
#include "stgan/image.hpp"
#include "stgan/pairing.hpp"
#include "stgan/parallel.hpp"
#include "stgan/perlin.hpp"
#include "stgan/rng.hpp"

namespace stgan {

// Land-cover classes mirroring the 10 EuroSat categories.
inline const std::vector<std::string>& land_class_names() {
  static const std::vector<std::string> names = {
      "sea_lake", "river",      "residential", "permanent_crop", "pasture",
      "industrial", "highway",  "herbaceous",  "forest",         "annual_crop"};
  return names;
}

struct SynthSceneSpec {
  uint64_t seed = 0;
  int size = 64;
  int class_id = 0;     // 0..9
  int n_cloudy = 3;     // T
  float opacity_scale = 1.0f;

  void validate() const {
    if (class_id < 0 || class_id >= 10) throw ContractError("class_id must be in [0,10)");
    if (size < 32) throw ContractError("scene size must be >= 32");
    if (n_cloudy < 1) throw ContractError("n_cloudy must be >= 1");
    if (opacity_scale < 0.f || opacity_scale > 1.f) throw ContractError("opacity_scale must be in [0,1]");
  }
};

struct SynthConfig {
  float cloud_rgb = 250.f;   // slightly below saturation so clouds are not separable by value alone
  float cloud_ir = 230.f;    // clouds read a bit thinner in IR
  double persistence = 0.5;
  double base_cell = 16.0;
  int octaves = 4;
  double cover_min = 0.12;   // per-view target for the opaque cloud core
  double cover_max = 0.24;
  double feather = 0.15;
};

namespace synthdetail {

struct Palette {
  float a[3];
  float b[3];
  float vegetation;  // drives the IR response
};

// Colors are kept away from bright neutrals so clear terrain never trips the
// cloud score (score < 0.8 requires 2*min - max < 153 per pixel).
inline const Palette& palette(int class_id) {
  static const Palette palettes[10] = {
      {{16, 40, 110}, {30, 70, 150}, 0.05f},    // sea_lake
      {{36, 66, 112}, {70, 105, 140}, 0.15f},   // river
      {{96, 96, 100}, {126, 122, 118}, 0.20f},  // residential
      {{90, 110, 40}, {120, 140, 60}, 0.70f},   // permanent_crop
      {{70, 130, 50}, {108, 158, 80}, 0.80f},   // pasture
      {{110, 100, 95}, {138, 128, 122}, 0.12f}, // industrial
      {{78, 78, 84}, {108, 108, 116}, 0.10f},   // highway
      {{100, 140, 70}, {128, 168, 90}, 0.75f},  // herbaceous
      {{22, 70, 26}, {40, 96, 44}, 1.00f},      // forest
      {{128, 108, 50}, {158, 138, 70}, 0.60f},  // annual_crop
  };
  return palettes[class_id];
}

}  // namespace synthdetail

// Deterministic terrain: low-frequency noise mixes the two palette colors,
// a second field modulates brightness, a fine field adds texture. The IR
// channel tracks green scaled by the class vegetation coefficient.
inline MultispectralImage synth_clear(const SynthSceneSpec& spec, const SynthConfig& cfg = {}) {
  spec.validate();
  const synthdetail::Palette& pal = synthdetail::palette(spec.class_id);
  double coarse_cell = double(spec.size) / 3.0;
  CloudField mixf = perlin(spec.size, spec.size, 2, mix64(spec.seed, 11), coarse_cell, cfg.persistence);
  CloudField brightf = perlin(spec.size, spec.size, 2, mix64(spec.seed, 23), coarse_cell, cfg.persistence);
  CloudField finef = perlin(spec.size, spec.size, 1, mix64(spec.seed, 37), 4.0, cfg.persistence);

  MultispectralImage img = MultispectralImage::make_u8(spec.size, spec.size, 4);
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      float m = mixf.at(x, y);
      float brightness = 0.85f + 0.3f * brightf.at(x, y);
      float texture = (finef.at(x, y) - 0.5f) * 14.f;
      float rgb[3];
      for (int c = 0; c < 3; ++c) {
        float v = (pal.a[c] + m * (pal.b[c] - pal.a[c])) * brightness + texture;
        rgb[c] = v;
        img.at8(x, y, c) = quantize_u8(v);
      }
      float ir = 0.5f * rgb[1] + pal.vegetation * 95.f * (0.8f + 0.2f * m) + texture;
      img.at8(x, y, 3) = quantize_u8(ir);
    }
  }
  return img;
}

// Alpha-composites a cloud deck over the ground: per pixel
// alpha = opacity_scale * field(p); RGB -> alpha*cloud_rgb + (1-alpha)*v,
// IR -> alpha*cloud_ir + (1-alpha)*v, rounded half-up to u8.
inline MultispectralImage apply_clouds(const MultispectralImage& clear, const CloudField& field,
                                       float opacity_scale, const SynthConfig& cfg = {}) {
  if (clear.dtype != Dtype::U8) throw ContractError("apply_clouds expects a u8 image");
  if (clear.width != field.width || clear.height != field.height)
    throw ContractError("apply_clouds: image and cloud field shapes differ");
  if (opacity_scale < 0.f || opacity_scale > 1.f) throw ContractError("opacity_scale must be in [0,1]");

  MultispectralImage out = clear;
  for (int y = 0; y < clear.height; ++y) {
    for (int x = 0; x < clear.width; ++x) {
      float alpha = opacity_scale * field.at(x, y);
      for (int c = 0; c < clear.channels; ++c) {
        float cloud = (c == 3) ? cfg.cloud_ir : cfg.cloud_rgb;
        float v = alpha * cloud + (1.f - alpha) * float(clear.at8(x, y, c));
        out.at8(x, y, c) = quantize_u8(v);
      }
    }
  }
  return out;
}

struct SynthDatasetConfig {
  int n_groups = 10;
  int t = 3;
  int size = 64;
  uint64_t seed = 0;
  float opacity_scale = 1.0f;
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  SynthConfig synth;
};

struct SynthDataset {
  Manifest manifest;
  std::filesystem::path manifest_path;
  std::filesystem::path labels_path;
};

inline std::map<std::string, int> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::map<std::string, int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected 'group_id<TAB>class_id'", line_no);
    labels[line.substr(0, tab)] = int(manifestdetail::parse_i64(line.substr(tab + 1), line_no));
  }
  return labels;
}

// Generates a paired temporal dataset entirely from seeds: per group one
// clear terrain image and T cloudy views with distinct cloud decks at
// timestamps t-1..t-T. Images are written as MSI1, the manifest is written
// and validated, and a labels.tsv sidecar records each group's land class.
inline SynthDataset synth_dataset(const SynthDatasetConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.n_groups < 1) throw ContractError("n_groups must be >= 1");
  if (cfg.t != 1 && cfg.t != 3) throw ContractError("dataset kinds are single (t=1) and temporal (t=3)");
  std::filesystem::create_directories(out_dir / "images");

  std::vector<TemporalGroup> groups(size_t(cfg.n_groups));
  std::vector<int> class_ids(size_t(cfg.n_groups));
  const int64_t base_day = days_from_civil(2021, 1, 1);

  parallel_for(size_t(cfg.n_groups), [&](size_t gi) {
    uint64_t group_seed = mix64(cfg.seed, uint64_t(gi) * 0x9e3779b97f4a7c15ULL + 1);
    Rng rng(group_seed);
    char tile_id[32];
    std::snprintf(tile_id, sizeof(tile_id), "synt%05zu", gi);

    SynthSceneSpec scene;
    scene.seed = group_seed;
    scene.size = cfg.size;
    scene.class_id = int(gi % 10);
    scene.n_cloudy = cfg.t;
    scene.opacity_scale = cfg.opacity_scale;
    MultispectralImage clear = synth_clear(scene, cfg.synth);

    TemporalGroup group;
    group.clear.tile_id = tile_id;
    group.clear.crop_index = 0;
    group.clear.lat = std::floor(rng.uniform(-60.0, 60.0) * 1e4) / 1e4;
    group.clear.lon = std::floor(rng.uniform(-180.0, 180.0) * 1e4) / 1e4;
    group.clear.timestamp = base_day + int64_t(gi % 331);
    group.clear.label = CropClass::Clear;
    char name[64];
    std::snprintf(name, sizeof(name), "images/g%05zu_clear.msi", gi);
    group.clear.path = name;
    save_image(clear, out_dir / name);

    for (int i = 1; i <= cfg.t; ++i) {
      double target_cover = rng.uniform(cfg.synth.cover_min, cfg.synth.cover_max);
      CloudField noise = perlin(cfg.size, cfg.size, cfg.synth.octaves, mix64(group_seed, uint64_t(100 + i)),
                                cfg.synth.base_cell, cfg.synth.persistence);
      CloudField deck = shape_cloud_alpha(noise, target_cover, cfg.synth.feather);
      MultispectralImage cloudy = apply_clouds(clear, deck, cfg.opacity_scale, cfg.synth);

      CropRecord rec = group.clear;
      rec.label = CropClass::Cloudy;
      rec.timestamp = group.clear.timestamp - i;
      std::snprintf(name, sizeof(name), "images/g%05zu_t%d.msi", gi, i);
      rec.path = name;
      rec.cover_fraction = cover_fraction(cloud_score(cloudy));
      save_image(cloudy, out_dir / name);
      group.cloudy.push_back(std::move(rec));
    }
    groups[gi] = std::move(group);
    class_ids[gi] = scene.class_id;
  });

  Manifest manifest;
  manifest.kind = cfg.t == 1 ? Manifest::Kind::Single : Manifest::Kind::Temporal;
  manifest.groups = std::move(groups);
  manifest = split_manifest(manifest, cfg.train_frac, cfg.val_frac, cfg.test_frac, cfg.seed);
  manifest.validate();

  SynthDataset result;
  result.manifest_path = out_dir / "manifest.tsv";
  result.labels_path = out_dir / "labels.tsv";
  write_manifest(manifest, result.manifest_path);
  std::ofstream labels(result.labels_path, std::ios::binary);
  if (!labels) throw IoError("cannot open '" + result.labels_path.string() + "' for writing");
  for (size_t gi = 0; gi < manifest.groups.size(); ++gi)
    labels << manifest.groups[gi].group_id() << '\t' << class_ids[gi] << '\n';
  result.manifest = std::move(manifest);
  return result;
}

}  // namespace stgan
