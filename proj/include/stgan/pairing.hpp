#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stgan/catalog.hpp"
#include "stgan/errors.hpp"
#include "stgan/image.hpp"
#include "stgan/rng.hpp"

namespace stgan {

constexpr int kPairingWindowDays = 35;

struct CropPlacement {
  MultispectralImage image;
  int crop_index = 0;  // stable across revisits of the same tile
  int offset_x = 0;
  int offset_y = 0;
};

// Cuts n non-overlapping size x size crops at seeded-random grid cells.
// Offsets depend only on (seed, tile_id), so every date of a tile yields
// crops from the same ground locations and crop_index identifies one.
inline std::vector<CropPlacement> extract_crops(const MultispectralImage& tile, const std::string& tile_id,
                                                int n = 100, int size = 256, uint64_t seed = 0) {
  if (tile.dtype != Dtype::U8) throw ContractError("extract_crops expects a u8 tile");
  if (size <= 0 || n <= 0) throw ContractError("extract_crops: n and size must be positive");
  int cells_x = tile.width / size;
  int cells_y = tile.height / size;
  int64_t capacity = int64_t(cells_x) * int64_t(cells_y);
  if (n > capacity)
    throw CapacityError("requested " + std::to_string(n) + " crops but tile capacity is " +
                        std::to_string(capacity));

  std::vector<int> cells(size_t(capacity));
  for (size_t i = 0; i < cells.size(); ++i) cells[i] = int(i);
  Rng rng(mix64(seed, fnv1a(tile_id)));
  rng.shuffle(cells);

  std::vector<CropPlacement> out;
  out.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    int cell = cells[size_t(i)];
    int ox = (cell % cells_x) * size;
    int oy = (cell / cells_x) * size;
    CropPlacement placement;
    placement.crop_index = cell;
    placement.offset_x = ox;
    placement.offset_y = oy;
    placement.image = MultispectralImage::make_u8(size, size, tile.channels);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        for (int c = 0; c < tile.channels; ++c)
          placement.image.at8(x, y, c) = tile.at8(ox + x, oy + y, c);
    out.push_back(std::move(placement));
  }
  return out;
}

namespace pairdetail {

// Most recent first; equal timestamps break toward the lexicographically
// lower path so pairing is deterministic.
inline bool newer(const CropRecord& a, const CropRecord& b) {
  if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
  return a.path < b.path;
}

using LocationKey = std::pair<std::string, int>;

inline std::map<LocationKey, std::pair<std::vector<CropRecord>, std::vector<CropRecord>>> group_by_location(
    const std::vector<CropRecord>& catalog) {
  std::map<LocationKey, std::pair<std::vector<CropRecord>, std::vector<CropRecord>>> by_loc;
  for (const CropRecord& r : catalog) {
    if (r.label == CropClass::Rejected) continue;
    auto& bucket = by_loc[{r.tile_id, r.crop_index}];
    (r.label == CropClass::Clear ? bucket.first : bucket.second).push_back(r);
  }
  for (auto& [key, bucket] : by_loc) {
    std::sort(bucket.first.begin(), bucket.first.end(), newer);
    std::sort(bucket.second.begin(), bucket.second.end(), newer);
  }
  return by_loc;
}

// Pairs every clear record with its T most recent in-window cloudy records;
// clears with fewer than T candidates are skipped.
inline Manifest pair_with_t(const std::vector<CropRecord>& catalog, int t, Manifest::Kind kind,
                            int window_days) {
  Manifest manifest;
  manifest.kind = kind;
  auto by_loc = group_by_location(catalog);
  for (auto& [key, bucket] : by_loc) {
    for (const CropRecord& clear : bucket.first) {
      TemporalGroup group;
      group.clear = clear;
      for (const CropRecord& cloudy : bucket.second) {
        if (cloudy.timestamp >= clear.timestamp) continue;
        if (cloudy.timestamp < clear.timestamp - window_days) continue;
        group.cloudy.push_back(cloudy);
        if (int(group.cloudy.size()) == t) break;
      }
      if (int(group.cloudy.size()) == t) manifest.groups.push_back(std::move(group));
    }
  }
  return manifest;
}

}  // namespace pairdetail

// The one-cloudy-input dataset: each clear image with the single most recent
// cloudy image of the same location within the pairing window.
inline Manifest pair_single(const std::vector<CropRecord>& catalog, int window_days = kPairingWindowDays) {
  return pairdetail::pair_with_t(catalog, 1, Manifest::Kind::Single, window_days);
}

// The temporal dataset: each clear image with its T most recent in-window
// cloudy images, discarding clears with fewer than T.
inline Manifest pair_temporal(const std::vector<CropRecord>& catalog, int t = 3,
                              int window_days = kPairingWindowDays) {
  return pairdetail::pair_with_t(catalog, t, Manifest::Kind::Temporal, window_days);
}

// Caps ocean-dominated groups (clear image more than `ocean_threshold`
// ocean) at floor(cap * total groups), dropping the oldest ocean groups
// first.
inline Manifest enforce_ocean_cap(const Manifest& manifest, double cap = 0.10, double ocean_threshold = 0.5) {
  std::vector<size_t> ocean_indices;
  for (size_t i = 0; i < manifest.groups.size(); ++i)
    if (manifest.groups[i].clear.ocean_fraction > ocean_threshold) ocean_indices.push_back(i);

  size_t allowed = size_t(cap * double(manifest.groups.size()));
  if (ocean_indices.size() <= allowed) return manifest;

  // Oldest first: ascending clear timestamp, path as the deterministic tie-break.
  std::sort(ocean_indices.begin(), ocean_indices.end(), [&](size_t a, size_t b) {
    const CropRecord& ra = manifest.groups[a].clear;
    const CropRecord& rb = manifest.groups[b].clear;
    if (ra.timestamp != rb.timestamp) return ra.timestamp < rb.timestamp;
    return ra.path < rb.path;
  });
  size_t n_drop = ocean_indices.size() - allowed;
  std::set<size_t> drop(ocean_indices.begin(), ocean_indices.begin() + ptrdiff_t(n_drop));
  Manifest out;
  out.kind = manifest.kind;
  for (size_t i = 0; i < manifest.groups.size(); ++i)
    if (!drop.count(i)) out.groups.push_back(manifest.groups[i]);
  return out;
}

// Assigns splits at tile granularity: distinct tiles are shuffled by seed and
// partitioned by the fractions; every group inherits its tile's split. The
// train split receives the rounding remainder.
inline Manifest split_manifest(const Manifest& manifest, double train_frac = 0.8, double val_frac = 0.1,
                               double test_frac = 0.1, uint64_t seed = 0) {
  if (train_frac < 0 || val_frac < 0 || test_frac < 0 || train_frac + val_frac + test_frac > 1.0 + 1e-9)
    throw ContractError("split fractions must be nonnegative and sum to at most 1");
  std::set<std::string> tile_set;
  for (const TemporalGroup& g : manifest.groups) tile_set.insert(g.clear.tile_id);
  std::vector<std::string> tiles(tile_set.begin(), tile_set.end());
  Rng rng(mix64(seed, 0x5eedULL));
  rng.shuffle(tiles);

  size_t n = tiles.size();
  size_t n_val = size_t(val_frac * double(n));
  size_t n_test = size_t(test_frac * double(n));
  std::map<std::string, std::string> split_of;
  for (size_t i = 0; i < n; ++i) {
    if (i < n - n_val - n_test)
      split_of[tiles[i]] = "train";
    else if (i < n - n_test)
      split_of[tiles[i]] = "val";
    else
      split_of[tiles[i]] = "test";
  }

  Manifest out = manifest;
  for (TemporalGroup& g : out.groups) g.split = split_of.at(g.clear.tile_id);
  return out;
}

}  // namespace stgan
