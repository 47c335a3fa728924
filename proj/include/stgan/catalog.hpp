#pragma once

#include <charconv>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stgan/cloud.hpp"
#include "stgan/errors.hpp"

namespace stgan {

// One dated, located, labeled crop on disk.
struct CropRecord {
  std::string tile_id;
  int crop_index = 0;
  double lat = 0.0;
  double lon = 0.0;
  int64_t timestamp = 0;  // days since epoch
  CropClass label = CropClass::Rejected;
  std::string path;             // relative to the manifest location
  double cover_fraction = 0.0;  // cloud cover of this crop
  double ocean_fraction = 0.0;  // catalog-internal, not serialized

  bool operator==(const CropRecord&) const = default;
};

// One clear target plus its T time-ordered (most recent first) cloudy inputs.
struct TemporalGroup {
  CropRecord clear;
  std::vector<CropRecord> cloudy;
  std::string split = "train";

  std::string group_id() const {
    return clear.tile_id + "/" + std::to_string(clear.crop_index) + "/" + std::to_string(clear.timestamp);
  }

  void validate(int expected_t, int window_days = 35) const {
    if (int(cloudy.size()) != expected_t)
      throw ContractError("group " + group_id() + ": expected " + std::to_string(expected_t) + " cloudy records");
    int64_t prev = INT64_MAX;
    for (const CropRecord& c : cloudy) {
      if (c.tile_id != clear.tile_id || c.crop_index != clear.crop_index)
        throw ContractError("group " + group_id() + ": cloudy record from a different location");
      if (c.timestamp >= clear.timestamp)
        throw ContractError("group " + group_id() + ": cloudy record not prior to the clear image");
      if (c.timestamp < clear.timestamp - window_days)
        throw ContractError("group " + group_id() + ": cloudy record outside the pairing window");
      if (c.timestamp >= prev)
        throw ContractError("group " + group_id() + ": cloudy records not strictly decreasing in time");
      prev = c.timestamp;
    }
  }

  bool operator==(const TemporalGroup&) const = default;
};

struct Manifest {
  enum class Kind { Single, Temporal };
  Kind kind = Kind::Single;
  std::vector<TemporalGroup> groups;

  int t() const { return kind == Kind::Single ? 1 : 3; }

  void validate(int window_days = 35) const {
    for (const TemporalGroup& g : groups) g.validate(t(), window_days);
  }

  bool operator==(const Manifest&) const = default;
};

inline const char* to_string(Manifest::Kind k) { return k == Manifest::Kind::Single ? "single" : "temporal"; }

namespace manifestdetail {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

inline double parse_double(const std::string& s, int line_no) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("bad number '" + s + "'", line_no);
  return v;
}

inline int64_t parse_i64(const std::string& s, int line_no) {
  int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("bad integer '" + s + "'", line_no);
  return v;
}

}  // namespace manifestdetail

// UTF-8, one group per line, tab-separated fields:
//   kind, tile_id, crop_index, lat, lon, split, clear_ts, clear_path,
//   then per cloudy record: cloudy_ts, cloudy_path, cover_fraction.
inline void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const TemporalGroup& g : manifest.groups) {
    for (const std::string& p : {g.clear.path, g.split, g.clear.tile_id})
      if (p.find('\t') != std::string::npos || p.find('\n') != std::string::npos)
        throw ContractError("manifest field contains a tab or newline: '" + p + "'");
    out << to_string(manifest.kind) << '\t' << g.clear.tile_id << '\t' << g.clear.crop_index << '\t'
        << manifestdetail::format_double(g.clear.lat) << '\t' << manifestdetail::format_double(g.clear.lon) << '\t'
        << g.split << '\t' << g.clear.timestamp << '\t' << g.clear.path;
    for (const CropRecord& c : g.cloudy)
      out << '\t' << c.timestamp << '\t' << c.path << '\t' << manifestdetail::format_double(c.cover_fraction);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Manifest manifest;
  bool kind_set = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    size_t start = 0;
    for (;;) {
      size_t tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() < 8) throw ParseError("expected at least 8 fields, got " + std::to_string(f.size()), line_no);

    Manifest::Kind kind;
    if (f[0] == "single")
      kind = Manifest::Kind::Single;
    else if (f[0] == "temporal")
      kind = Manifest::Kind::Temporal;
    else
      throw ParseError("unknown manifest kind '" + f[0] + "'", line_no);
    if (!kind_set) {
      manifest.kind = kind;
      kind_set = true;
    } else if (kind != manifest.kind) {
      throw ParseError("mixed manifest kinds", line_no);
    }

    TemporalGroup g;
    g.clear.tile_id = f[1];
    g.clear.crop_index = int(manifestdetail::parse_i64(f[2], line_no));
    g.clear.lat = manifestdetail::parse_double(f[3], line_no);
    g.clear.lon = manifestdetail::parse_double(f[4], line_no);
    g.split = f[5];
    if (g.split != "train" && g.split != "val" && g.split != "test")
      throw ParseError("unknown split '" + g.split + "'", line_no);
    g.clear.timestamp = manifestdetail::parse_i64(f[6], line_no);
    g.clear.path = f[7];
    g.clear.label = CropClass::Clear;

    size_t rest = f.size() - 8;
    if (rest == 0 || rest % 3 != 0)
      throw ParseError("cloudy fields not a multiple of 3", line_no);
    size_t t = rest / 3;
    if (t != size_t(kind == Manifest::Kind::Single ? 1 : 3))
      throw ParseError("cloudy record count inconsistent with kind", line_no);
    for (size_t i = 0; i < t; ++i) {
      CropRecord c;
      c.tile_id = g.clear.tile_id;
      c.crop_index = g.clear.crop_index;
      c.lat = g.clear.lat;
      c.lon = g.clear.lon;
      c.label = CropClass::Cloudy;
      c.timestamp = manifestdetail::parse_i64(f[8 + i * 3], line_no);
      c.path = f[9 + i * 3];
      c.cover_fraction = manifestdetail::parse_double(f[10 + i * 3], line_no);
      g.cloudy.push_back(std::move(c));
    }
    manifest.groups.push_back(std::move(g));
  }
  return manifest;
}

}  // namespace stgan
