#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "stgan/errors.hpp"
#include "stgan/rng.hpp"

namespace stgan {

// Procedural opacity field. alpha is in [0,1] and a pure function of
// (seed, octaves, shape, generation parameters).
struct CloudField {
  int width = 0;
  int height = 0;
  std::vector<float> alpha;
  uint64_t seed = 0;
  int octaves = 1;

  float at(int x, int y) const { return alpha[size_t(y) * size_t(width) + size_t(x)]; }
};

namespace perlindetail {

// Unit gradient for lattice corner (ix, iy); eight fixed directions.
inline void gradient(uint64_t seed, int64_t ix, int64_t iy, float& gx, float& gy) {
  static constexpr float kDirs[8][2] = {
      {1.f, 0.f},           {-1.f, 0.f},          {0.f, 1.f},           {0.f, -1.f},
      {0.70710678f, 0.70710678f},  {-0.70710678f, 0.70710678f},
      {0.70710678f, -0.70710678f}, {-0.70710678f, -0.70710678f}};
  uint64_t h = mix64(seed, mix64(uint64_t(ix) * 0x8da6b343ULL, uint64_t(iy) * 0xd8163841ULL));
  const float* d = kDirs[h & 7];
  gx = d[0];
  gy = d[1];
}

inline float smootherstep(float t) { return t * t * t * (t * (t * 6.f - 15.f) + 10.f); }

// Classic gradient noise at (x, y): zero at integer lattice points, range
// within [-sqrt(2)/2, sqrt(2)/2].
inline float gradient_noise(uint64_t seed, float x, float y) {
  float fx = std::floor(x), fy = std::floor(y);
  int64_t ix = int64_t(fx), iy = int64_t(fy);
  float dx = x - fx, dy = y - fy;
  float g00x, g00y, g10x, g10y, g01x, g01y, g11x, g11y;
  gradient(seed, ix, iy, g00x, g00y);
  gradient(seed, ix + 1, iy, g10x, g10y);
  gradient(seed, ix, iy + 1, g01x, g01y);
  gradient(seed, ix + 1, iy + 1, g11x, g11y);
  float n00 = g00x * dx + g00y * dy;
  float n10 = g10x * (dx - 1.f) + g10y * dy;
  float n01 = g01x * dx + g01y * (dy - 1.f);
  float n11 = g11x * (dx - 1.f) + g11y * (dy - 1.f);
  float u = smootherstep(dx), v = smootherstep(dy);
  float nx0 = n00 + u * (n10 - n00);
  float nx1 = n01 + u * (n11 - n01);
  return nx0 + v * (nx1 - nx0);
}

}  // namespace perlindetail

// Octave-summed Perlin noise mapped to [0,1]. Frequencies double per octave
// and amplitudes decay by `persistence`; the weighted sum is renormalized so
// lattice corners of the base grid land exactly on 0.5.
inline CloudField perlin(int width, int height, int octaves, uint64_t seed, double base_cell = 16.0,
                         double persistence = 0.5) {
  if (width <= 0 || height <= 0) throw ContractError("perlin: field extent must be positive");
  if (octaves < 1) throw ContractError("perlin: octaves must be >= 1");
  if (base_cell <= 0) throw ContractError("perlin: base_cell must be positive");

  CloudField field;
  field.width = width;
  field.height = height;
  field.seed = seed;
  field.octaves = octaves;
  field.alpha.resize(size_t(width) * size_t(height));

  float total_amp = 0.f;
  for (int o = 0; o < octaves; ++o) total_amp += float(std::pow(persistence, o));

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      float sum = 0.f;
      float amp = 1.f;
      float freq = float(1.0 / base_cell);
      for (int o = 0; o < octaves; ++o) {
        uint64_t oseed = mix64(seed, 0x9e3779b97f4a7c15ULL * uint64_t(o + 1));
        sum += amp * perlindetail::gradient_noise(oseed, float(x) * freq, float(y) * freq);
        amp *= float(persistence);
        freq *= 2.f;
      }
      float v = (sum / total_amp + 1.f) * 0.5f;
      field.alpha[size_t(y) * size_t(width) + size_t(x)] = std::clamp(v, 0.f, 1.f);
    }
  }
  return field;
}

// Reshapes a noise field into a cloud opacity field whose fully opaque core
// covers roughly `target_cover` of the pixels: values above the matching
// quantile saturate to 1 and a feather band below it ramps smoothly to 0.
inline CloudField shape_cloud_alpha(const CloudField& noise, double target_cover, double feather = 0.15) {
  if (target_cover <= 0.0 || target_cover >= 1.0) throw ContractError("target_cover must be in (0,1)");
  std::vector<float> sorted = noise.alpha;
  size_t k = size_t(double(sorted.size()) * (1.0 - target_cover));
  k = std::min(k, sorted.size() - 1);
  std::nth_element(sorted.begin(), sorted.begin() + ptrdiff_t(k), sorted.end());
  float t1 = sorted[k];
  float t0 = t1 - float(feather);

  CloudField out = noise;
  for (float& a : out.alpha) {
    float t = (a - t0) / (t1 - t0);
    t = std::clamp(t, 0.f, 1.f);
    a = t * t * (3.f - 2.f * t);  // smoothstep ramp, 1 at and above the quantile
  }
  return out;
}

}  // namespace stgan
