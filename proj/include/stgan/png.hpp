#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "stgan/errors.hpp"
#include "stgan/image.hpp"

namespace stgan {
namespace pngdetail {

inline void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

inline uint32_t get_u32be(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline void write_chunk(std::vector<uint8_t>& out, const char type[4], const uint8_t* data, size_t len) {
  put_u32be(out, uint32_t(len));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  if (len) out.insert(out.end(), data, data + len);
  uint32_t crc = uint32_t(::crc32(0, out.data() + start, uInt(out.size() - start)));
  put_u32be(out, crc);
}

}  // namespace pngdetail

// Encodes an 8-bit grayscale (channels=1) or RGB (channels=3) PNG.
// Scanlines use filter 0; deflate level is fixed so output bytes are stable.
inline std::vector<uint8_t> encode_png(int width, int height, int channels, const uint8_t* samples) {
  if (channels != 1 && channels != 3) throw ContractError("encode_png supports 1 or 3 channels");
  if (width <= 0 || height <= 0) throw ContractError("encode_png: empty image");

  size_t stride = size_t(width) * size_t(channels);
  std::vector<uint8_t> raw((stride + 1) * size_t(height));
  for (int y = 0; y < height; ++y) {
    uint8_t* row = raw.data() + size_t(y) * (stride + 1);
    row[0] = 0;  // filter: none
    std::memcpy(row + 1, samples + size_t(y) * stride, stride);
  }

  uLongf bound = ::compressBound(uLong(raw.size()));
  std::vector<uint8_t> deflated(bound);
  if (::compress2(deflated.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw IoError("deflate failed");
  deflated.resize(bound);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  uint8_t ihdr[13];
  ihdr[0] = uint8_t(uint32_t(width) >> 24);
  ihdr[1] = uint8_t(uint32_t(width) >> 16);
  ihdr[2] = uint8_t(uint32_t(width) >> 8);
  ihdr[3] = uint8_t(width);
  ihdr[4] = uint8_t(uint32_t(height) >> 24);
  ihdr[5] = uint8_t(uint32_t(height) >> 16);
  ihdr[6] = uint8_t(uint32_t(height) >> 8);
  ihdr[7] = uint8_t(height);
  ihdr[8] = 8;                                 // bit depth
  ihdr[9] = channels == 1 ? 0 : 2;             // gray / truecolor
  ihdr[10] = ihdr[11] = ihdr[12] = 0;          // deflate, adaptive, no interlace
  pngdetail::write_chunk(out, "IHDR", ihdr, 13);
  pngdetail::write_chunk(out, "IDAT", deflated.data(), deflated.size());
  pngdetail::write_chunk(out, "IEND", nullptr, 0);
  return out;
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> samples;
};

// Decodes non-interlaced 8-bit gray/RGB/RGBA PNGs (all five scanline filters).
inline DecodedPng decode_png(const std::vector<uint8_t>& bytes) {
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0) throw FormatError("not a PNG file");

  DecodedPng png;
  int bit_depth = 0, color_type = -1;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    uint32_t len = pngdetail::get_u32be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw CorruptionError("PNG chunk overruns file");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const uint8_t* data = bytes.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      png.width = int(pngdetail::get_u32be(data));
      png.height = int(pngdetail::get_u32be(data + 4));
      bit_depth = data[8];
      color_type = data[9];
      if (data[12] != 0) throw FormatError("interlaced PNG not supported");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (bit_depth != 8) throw FormatError("only 8-bit PNG supported");
  switch (color_type) {
    case 0: png.channels = 1; break;
    case 2: png.channels = 3; break;
    case 6: png.channels = 4; break;
    default: throw FormatError("unsupported PNG color type " + std::to_string(color_type));
  }
  if (png.width <= 0 || png.height <= 0) throw FormatError("bad PNG extent");

  size_t stride = size_t(png.width) * size_t(png.channels);
  std::vector<uint8_t> raw((stride + 1) * size_t(png.height));
  uLongf raw_len = uLongf(raw.size());
  if (::uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK || raw_len != raw.size())
    throw CorruptionError("PNG IDAT inflate failed");

  png.samples.resize(stride * size_t(png.height));
  int bpp = png.channels;
  for (int y = 0; y < png.height; ++y) {
    const uint8_t* src = raw.data() + size_t(y) * (stride + 1);
    uint8_t* cur = png.samples.data() + size_t(y) * stride;
    const uint8_t* up = y > 0 ? png.samples.data() + size_t(y - 1) * stride : nullptr;
    uint8_t filter = src[0];
    for (size_t i = 0; i < stride; ++i) {
      int a = i >= size_t(bpp) ? cur[i - size_t(bpp)] : 0;  // left
      int b = up ? up[i] : 0;                               // above
      int c = (up && i >= size_t(bpp)) ? up[i - size_t(bpp)] : 0;
      int x = src[1 + i];
      switch (filter) {
        case 0: cur[i] = uint8_t(x); break;
        case 1: cur[i] = uint8_t(x + a); break;
        case 2: cur[i] = uint8_t(x + b); break;
        case 3: cur[i] = uint8_t(x + (a + b) / 2); break;
        case 4: {
          int p = a + b - c;
          int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
          int pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          cur[i] = uint8_t(x + pred);
          break;
        }
        default: throw CorruptionError("unknown PNG filter " + std::to_string(filter));
      }
    }
  }
  return png;
}

inline DecodedPng read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

// Writes a u8 image as PNG for visual inspection. 4-channel images become an
// RGB PNG plus a 1-channel IR PNG at "<stem>_ir<ext>".
inline void export_png(const MultispectralImage& img, const std::filesystem::path& path) {
  if (img.dtype != Dtype::U8) throw ContractError("export_png expects a u8 image");
  if (img.channels != 1 && img.channels != 3 && img.channels != 4)
    throw ContractError("export_png supports 1, 3 or 4 channels, got " + std::to_string(img.channels));

  auto write_file = [](const std::filesystem::path& p, const std::vector<uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed for '" + p.string() + "'");
  };

  if (img.channels == 4) {
    MultispectralImage rgb = rgb_of(img);
    MultispectralImage ir = channel_of(img, 3);
    write_file(path, encode_png(rgb.width, rgb.height, 3, rgb.u8.data()));
    std::filesystem::path ir_path = path.parent_path() / (path.stem().string() + "_ir" + path.extension().string());
    write_file(ir_path, encode_png(ir.width, ir.height, 1, ir.u8.data()));
    return;
  }
  write_file(path, encode_png(img.width, img.height, img.channels, img.u8.data()));
}

}  // namespace stgan
