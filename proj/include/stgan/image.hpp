#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stgan/errors.hpp"

namespace stgan {

// Sample encodings of the MSI1 container.
enum class Dtype : uint8_t {
  U8 = 0,          // [0, 255]
  UnitFloat = 1,   // [0, 1]
  SignedFloat = 2  // [-1, 1]
};

inline size_t dtype_size(Dtype d) { return d == Dtype::U8 ? 1 : 4; }

// Row-major, channel-interleaved multispectral raster. Channels are
// RGB (3), RGB+IR (4), or a single plane for masks and IR exports.
// Images are plain values; all operations on them return new images.
struct MultispectralImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  Dtype dtype = Dtype::U8;
  std::vector<uint8_t> u8;  // populated when dtype == U8
  std::vector<float> f32;   // populated otherwise

  size_t sample_count() const { return size_t(width) * size_t(height) * size_t(channels); }

  size_t index(int x, int y, int c) const {
    return (size_t(y) * size_t(width) + size_t(x)) * size_t(channels) + size_t(c);
  }

  uint8_t& at8(int x, int y, int c) { return u8[index(x, y, c)]; }
  uint8_t at8(int x, int y, int c) const { return u8[index(x, y, c)]; }
  float& atf(int x, int y, int c) { return f32[index(x, y, c)]; }
  float atf(int x, int y, int c) const { return f32[index(x, y, c)]; }

  static MultispectralImage make_u8(int w, int h, int c, uint8_t fill = 0) {
    MultispectralImage img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.dtype = Dtype::U8;
    img.u8.assign(size_t(w) * h * c, fill);
    return img;
  }

  static MultispectralImage make_float(int w, int h, int c, Dtype d, float fill = 0.f) {
    MultispectralImage img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.dtype = d;
    img.f32.assign(size_t(w) * h * c, fill);
    return img;
  }

  // Enforces the type invariants: sample length, declared range, channel set.
  void validate() const {
    if (width <= 0 || height <= 0) throw ContractError("image has empty extent");
    if (channels != 1 && channels != 3 && channels != 4)
      throw ContractError("channels must be 1, 3 or 4, got " + std::to_string(channels));
    if (dtype == Dtype::U8) {
      if (u8.size() != sample_count()) throw ContractError("u8 sample buffer length mismatch");
    } else {
      if (f32.size() != sample_count()) throw ContractError("f32 sample buffer length mismatch");
      float lo = dtype == Dtype::UnitFloat ? 0.f : -1.f;
      for (float v : f32)
        if (!(v >= lo && v <= 1.f))
          throw ContractError("sample value " + std::to_string(v) + " outside declared dtype range");
    }
  }

  bool operator==(const MultispectralImage& o) const {
    return width == o.width && height == o.height && channels == o.channels && dtype == o.dtype &&
           u8 == o.u8 && f32 == o.f32;
  }
};

// Round half up; inputs are clamped to [0, 255] first.
inline uint8_t quantize_u8(float v) {
  float c = v < 0.f ? 0.f : (v > 255.f ? 255.f : v);
  return uint8_t(std::floor(c + 0.5f));
}

// v -> v / 127.5 - 1, the input conditioning expected by the generators
// (their output nonlinearity is odd and saturates at +-1).
inline MultispectralImage normalize(const MultispectralImage& img) {
  if (img.dtype != Dtype::U8) throw ContractError("normalize expects a u8 image");
  MultispectralImage out = MultispectralImage::make_float(img.width, img.height, img.channels, Dtype::SignedFloat);
  for (size_t i = 0; i < img.u8.size(); ++i) out.f32[i] = float(img.u8[i]) / 127.5f - 1.f;
  return out;
}

// v -> round_half_up(clamp(v, -1, 1) * 127.5 + 127.5). Exact inverse of
// normalize over all 256 u8 values.
inline MultispectralImage denormalize(const MultispectralImage& img) {
  if (img.dtype != Dtype::SignedFloat) throw ContractError("denormalize expects a signed-float image");
  MultispectralImage out = MultispectralImage::make_u8(img.width, img.height, img.channels);
  for (size_t i = 0; i < img.f32.size(); ++i) {
    float v = img.f32[i];
    v = v < -1.f ? -1.f : (v > 1.f ? 1.f : v);
    out.u8[i] = uint8_t(std::floor(v * 127.5f + 127.5f + 0.5f));
  }
  return out;
}

namespace detail {
constexpr size_t kMsiHeaderSize = 20;
constexpr char kMsiMagic[4] = {'M', 'S', 'I', '1'};

inline void put_u16le(uint8_t* p, uint16_t v) {
  p[0] = uint8_t(v & 0xff);
  p[1] = uint8_t(v >> 8);
}
inline uint16_t get_u16le(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(uint16_t(p[1]) << 8); }
}  // namespace detail

// MSI1 layout (little-endian): "MSI1", u16 width, u16 height, u8 channels,
// u8 dtype code, 10 reserved zero bytes, then the raw sample grid.
inline void save_image(const MultispectralImage& img, const std::filesystem::path& path) {
  img.validate();
  if (img.width > 0xffff || img.height > 0xffff) throw ContractError("image extent exceeds MSI1 u16 range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  uint8_t header[detail::kMsiHeaderSize] = {};
  std::memcpy(header, detail::kMsiMagic, 4);
  detail::put_u16le(header + 4, uint16_t(img.width));
  detail::put_u16le(header + 6, uint16_t(img.height));
  header[8] = uint8_t(img.channels);
  header[9] = uint8_t(img.dtype);
  out.write(reinterpret_cast<const char*>(header), detail::kMsiHeaderSize);
  if (img.dtype == Dtype::U8) {
    out.write(reinterpret_cast<const char*>(img.u8.data()), std::streamsize(img.u8.size()));
  } else {
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(img.f32.data()), std::streamsize(img.f32.size() * 4));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline MultispectralImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  uint8_t header[detail::kMsiHeaderSize];
  in.read(reinterpret_cast<char*>(header), detail::kMsiHeaderSize);
  if (in.gcount() != std::streamsize(detail::kMsiHeaderSize))
    throw CorruptionError("'" + path.string() + "' shorter than an MSI1 header");
  if (std::memcmp(header, detail::kMsiMagic, 4) != 0)
    throw FormatError("'" + path.string() + "' is not an MSI1 file (bad magic)");
  MultispectralImage img;
  img.width = detail::get_u16le(header + 4);
  img.height = detail::get_u16le(header + 6);
  img.channels = header[8];
  if (header[9] > 2) throw FormatError("unknown dtype code " + std::to_string(header[9]));
  img.dtype = Dtype(header[9]);
  if (img.width == 0 || img.height == 0) throw FormatError("zero extent in MSI1 header");
  if (img.channels != 1 && img.channels != 3 && img.channels != 4)
    throw FormatError("unsupported channel count " + std::to_string(img.channels));

  size_t payload = img.sample_count() * dtype_size(img.dtype);
  std::vector<char> buf(payload);
  in.read(buf.data(), std::streamsize(payload));
  if (in.gcount() != std::streamsize(payload))
    throw CorruptionError("'" + path.string() + "' payload truncated");
  in.peek();
  if (!in.eof()) throw CorruptionError("'" + path.string() + "' has trailing bytes");
  if (img.dtype == Dtype::U8) {
    img.u8.resize(payload);
    std::memcpy(img.u8.data(), buf.data(), payload);
  } else {
    img.f32.resize(img.sample_count());
    std::memcpy(img.f32.data(), buf.data(), payload);
  }
  img.validate();
  return img;
}

// First three channels as an RGB view; identity for 3-channel input.
inline MultispectralImage rgb_of(const MultispectralImage& img) {
  if (img.channels == 3) return img;
  if (img.channels != 4) throw ContractError("rgb_of expects a 3- or 4-channel image");
  MultispectralImage out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 3;
  out.dtype = img.dtype;
  size_t pixels = size_t(img.width) * img.height;
  if (img.dtype == Dtype::U8) {
    out.u8.resize(pixels * 3);
    for (size_t p = 0; p < pixels; ++p)
      for (int c = 0; c < 3; ++c) out.u8[p * 3 + size_t(c)] = img.u8[p * 4 + size_t(c)];
  } else {
    out.f32.resize(pixels * 3);
    for (size_t p = 0; p < pixels; ++p)
      for (int c = 0; c < 3; ++c) out.f32[p * 3 + size_t(c)] = img.f32[p * 4 + size_t(c)];
  }
  return out;
}

// Single-channel image holding channel c of img.
inline MultispectralImage channel_of(const MultispectralImage& img, int c) {
  if (c < 0 || c >= img.channels) throw ContractError("channel index out of range");
  MultispectralImage out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 1;
  out.dtype = img.dtype;
  size_t pixels = size_t(img.width) * img.height;
  if (img.dtype == Dtype::U8) {
    out.u8.resize(pixels);
    for (size_t p = 0; p < pixels; ++p) out.u8[p] = img.u8[p * size_t(img.channels) + size_t(c)];
  } else {
    out.f32.resize(pixels);
    for (size_t p = 0; p < pixels; ++p) out.f32[p] = img.f32[p * size_t(img.channels) + size_t(c)];
  }
  return out;
}

}  // namespace stgan
