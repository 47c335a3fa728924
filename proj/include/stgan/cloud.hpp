#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "stgan/errors.hpp"
#include "stgan/image.hpp"

namespace stgan {

// Brightness+whiteness cloud score. This is the documented stand-in for the
// external decision-tree detector the dataset rules assume; weights and
// threshold are exposed through the cloud.* config keys.
struct CloudScoreConfig {
  float threshold = 0.8f;
  float brightness_weight = 0.5f;
  float whiteness_weight = 0.5f;
};

struct OceanConfig {
  float blue_ratio = 1.2f;  // blue must exceed ratio * red and ratio * green
  float blue_floor = 20.f;  // and this absolute level
};

// Per-pixel cloudiness in [0,1] with the threshold that defines the binary mask.
struct CloudMask {
  int width = 0;
  int height = 0;
  std::vector<float> scores;
  float threshold = 0.8f;

  float score(int x, int y) const { return scores[size_t(y) * size_t(width) + size_t(x)]; }
  bool binary(int x, int y) const { return score(x, y) >= threshold; }
};

enum class CropClass { Clear, Cloudy, Rejected };

inline const char* to_string(CropClass c) {
  switch (c) {
    case CropClass::Clear: return "clear";
    case CropClass::Cloudy: return "cloudy";
    default: return "rejected";
  }
}

struct CropLabel {
  CropClass cls = CropClass::Rejected;
  double cover_fraction = 0.0;
  double ocean_fraction = 0.0;
};

// score(p) = clamp01(wb * min(R,G,B)/255 + ww * (1 - (max(R,G,B)-min(R,G,B))/255)).
// Bright and unsaturated pixels score high; the IR channel is ignored.
inline CloudMask cloud_score(const MultispectralImage& img, const CloudScoreConfig& cfg = {}) {
  if (img.dtype != Dtype::U8) throw ContractError("cloud_score expects a u8 image");
  if (img.channels < 3) throw ContractError("cloud_score needs RGB channels");
  CloudMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.threshold = cfg.threshold;
  mask.scores.resize(size_t(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      uint8_t r = img.at8(x, y, 0), g = img.at8(x, y, 1), b = img.at8(x, y, 2);
      float lo = float(std::min({r, g, b}));
      float hi = float(std::max({r, g, b}));
      float brightness = lo / 255.f;
      float whiteness = 1.f - (hi - lo) / 255.f;
      float s = cfg.brightness_weight * brightness + cfg.whiteness_weight * whiteness;
      mask.scores[size_t(y) * img.width + size_t(x)] = std::clamp(s, 0.f, 1.f);
    }
  }
  return mask;
}

inline double cover_fraction(const CloudMask& mask) {
  size_t total = size_t(mask.width) * size_t(mask.height);
  if (total == 0) return 0.0;
  size_t cloudy = 0;
  for (float s : mask.scores) cloudy += s >= mask.threshold ? 1 : 0;
  return double(cloudy) / double(total);
}

// Fraction of non-cloudy pixels that look like open water (blue-dominant and
// not too dark). Zero when every pixel is cloudy.
inline double ocean_fraction(const MultispectralImage& img, const CloudScoreConfig& cloud_cfg = {},
                             const OceanConfig& ocean_cfg = {}) {
  CloudMask mask = cloud_score(img, cloud_cfg);
  size_t clear_pixels = 0, ocean_pixels = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (mask.binary(x, y)) continue;
      ++clear_pixels;
      float r = img.at8(x, y, 0), g = img.at8(x, y, 1), b = img.at8(x, y, 2);
      if (b > ocean_cfg.blue_ratio * r && b > ocean_cfg.blue_ratio * g && b > ocean_cfg.blue_floor) ++ocean_pixels;
    }
  }
  if (clear_pixels == 0) return 0.0;
  return double(ocean_pixels) / double(clear_pixels);
}

// Dataset membership rule: cover < 1% is clear, 10%..30% inclusive is cloudy,
// everything else (including the 1%-10% gap) is rejected.
inline CropLabel classify_crop(const MultispectralImage& img, const CloudScoreConfig& cloud_cfg = {},
                               const OceanConfig& ocean_cfg = {}) {
  CloudMask mask = cloud_score(img, cloud_cfg);
  CropLabel label;
  label.cover_fraction = cover_fraction(mask);
  label.ocean_fraction = ocean_fraction(img, cloud_cfg, ocean_cfg);
  if (label.cover_fraction < 0.01)
    label.cls = CropClass::Clear;
  else if (label.cover_fraction >= 0.10 && label.cover_fraction <= 0.30)
    label.cls = CropClass::Cloudy;
  else
    label.cls = CropClass::Rejected;
  return label;
}

}  // namespace stgan
