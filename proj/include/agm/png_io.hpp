// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Self-contained PNG reader/writer over zlib, covering exactly what label
// exchange needs: 16-bit grayscale id maps and 8-bit RGB visualizations.
// No interlacing, no palettes, no ancillary chunks.

#ifndef AGM_PNG_IO_HPP
#define AGM_PNG_IO_HPP

#include <zlib.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agm/grid.hpp"

namespace agm {

class PngError : public std::runtime_error {
 public:
  explicit PngError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace pngdetail {

inline void put_u32be(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

inline uint32_t get_u32be(const unsigned char* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

inline void append_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32be(out, static_cast<uint32_t>(data.size()));
  size_t start = out.size();
  out.append(type, 4);
  out += data;
  uint32_t crc = static_cast<uint32_t>(
      ::crc32(0, reinterpret_cast<const Bytef*>(out.data() + start), static_cast<uInt>(4 + data.size())));
  put_u32be(out, crc);
}

inline std::string zlib_compress(const std::string& raw) {
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::string out(bound, '\0');
  if (::compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw PngError("zlib compression failed");
  out.resize(bound);
  return out;
}

inline std::vector<unsigned char> zlib_decompress(const std::vector<unsigned char>& in,
                                                  size_t expected) {
  std::vector<unsigned char> out(expected);
  uLongf len = static_cast<uLongf>(expected);
  int rc = ::uncompress(out.data(), &len, in.data(), static_cast<uLong>(in.size()));
  if (rc != Z_OK || len != expected) throw PngError("zlib decompression failed");
  return out;
}

inline int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

// Reverses PNG row filters in place. `bpp` is bytes per pixel.
inline void unfilter(std::vector<unsigned char>& raw, int height, size_t rowbytes, int bpp) {
  std::vector<unsigned char> prev(rowbytes, 0);
  for (int y = 0; y < height; ++y) {
    unsigned char* row = raw.data() + static_cast<size_t>(y) * (rowbytes + 1);
    int ft = row[0];
    unsigned char* cur = row + 1;
    for (size_t i = 0; i < rowbytes; ++i) {
      int a = i >= static_cast<size_t>(bpp) ? cur[i - bpp] : 0;
      int b = prev[i];
      int c = i >= static_cast<size_t>(bpp) ? prev[i - bpp] : 0;
      int x = cur[i];
      switch (ft) {
        case 0: break;
        case 1: x += a; break;
        case 2: x += b; break;
        case 3: x += (a + b) / 2; break;
        case 4: x += paeth(a, b, c); break;
        default: throw PngError("unsupported PNG filter type");
      }
      cur[i] = static_cast<unsigned char>(x & 0xff);
    }
    std::memcpy(prev.data(), cur, rowbytes);
  }
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw PngError("cannot open " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw PngError("write failed: " + path);
}

inline std::string encode(int width, int height, int bitdepth, int colortype,
                          const std::string& scanlines) {
  std::string ihdr;
  put_u32be(ihdr, static_cast<uint32_t>(width));
  put_u32be(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(static_cast<char>(bitdepth));
  ihdr.push_back(static_cast<char>(colortype));
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace

  std::string out("\x89PNG\r\n\x1a\n", 8);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", zlib_compress(scanlines));
  append_chunk(out, "IEND", "");
  return out;
}

struct Decoded {
  int width = 0, height = 0, bitdepth = 0, colortype = 0;
  std::vector<unsigned char> pixels;  // unfiltered scanline bytes, no filter bytes
};

inline Decoded decode(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PngError("cannot open " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 8 || std::memcmp(raw.data(), "\x89PNG\r\n\x1a\n", 8) != 0)
    throw PngError("not a PNG file: " + path);

  Decoded d;
  std::vector<unsigned char> idat;
  size_t pos = 8;
  bool saw_end = false;
  while (pos + 8 <= raw.size() && !saw_end) {
    uint32_t len = get_u32be(raw.data() + pos);
    if (pos + 12 + len > raw.size()) throw PngError("truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(raw.data() + pos + 4);
    const unsigned char* data = raw.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw PngError("bad IHDR length");
      d.width = static_cast<int>(get_u32be(data));
      d.height = static_cast<int>(get_u32be(data + 4));
      d.bitdepth = data[8];
      d.colortype = data[9];
      if (data[12] != 0) throw PngError("interlaced PNG unsupported");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_end = true;
    }
    pos += 12 + len;
  }
  if (d.width <= 0 || d.height <= 0) throw PngError("missing IHDR");

  int channels;
  if (d.colortype == 0) channels = 1;
  else if (d.colortype == 2) channels = 3;
  else throw PngError("unsupported PNG color type " + std::to_string(d.colortype));
  if (d.bitdepth != 8 && d.bitdepth != 16) throw PngError("unsupported PNG bit depth");

  int bpp = channels * d.bitdepth / 8;
  size_t rowbytes = static_cast<size_t>(d.width) * bpp;
  size_t expected = static_cast<size_t>(d.height) * (rowbytes + 1);
  std::vector<unsigned char> lines = zlib_decompress(idat, expected);
  unfilter(lines, d.height, rowbytes, bpp);
  d.pixels.resize(static_cast<size_t>(d.height) * rowbytes);
  for (int y = 0; y < d.height; ++y)
    std::memcpy(d.pixels.data() + static_cast<size_t>(y) * rowbytes,
                lines.data() + static_cast<size_t>(y) * (rowbytes + 1) + 1, rowbytes);
  return d;
}

}  // namespace pngdetail

/// Writes a 16-bit single-channel PNG; value 0 is background, k is id k.
inline void write_label_png(const std::string& path, const LabelMap& labels) {
  for (int32_t id : labels.v)
    if (id < 0 || id > 65535)
      throw PngError("label id out of 16-bit range: " + std::to_string(id));
  std::string scan;
  scan.reserve(static_cast<size_t>(labels.h) * (static_cast<size_t>(labels.w) * 2 + 1));
  for (int y = 0; y < labels.h; ++y) {
    scan.push_back(0);  // filter: none
    for (int x = 0; x < labels.w; ++x) {
      uint16_t v = static_cast<uint16_t>(labels.at(y, x));
      scan.push_back(static_cast<char>((v >> 8) & 0xff));  // PNG samples are big-endian
      scan.push_back(static_cast<char>(v & 0xff));
    }
  }
  pngdetail::write_file(path, pngdetail::encode(labels.w, labels.h, 16, 0, scan));
}

inline LabelMap read_label_png(const std::string& path) {
  pngdetail::Decoded d = pngdetail::decode(path);
  if (d.colortype != 0) throw PngError("label PNG must be single-channel");
  LabelMap out(d.height, d.width);
  if (d.bitdepth == 16) {
    for (size_t i = 0; i < out.v.size(); ++i)
      out.v[i] = (static_cast<int32_t>(d.pixels[2 * i]) << 8) | d.pixels[2 * i + 1];
  } else {
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = d.pixels[i];
  }
  return out;
}

/// Writes an 8-bit RGB PNG from interleaved rgb bytes (3 per pixel).
inline void write_rgb_png(const std::string& path, int height, int width,
                          const std::vector<uint8_t>& rgb) {
  if (rgb.size() != static_cast<size_t>(height) * width * 3)
    throw PngError("rgb buffer size mismatch");
  std::string scan;
  scan.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    scan.push_back(0);
    scan.append(reinterpret_cast<const char*>(rgb.data() + static_cast<size_t>(y) * width * 3),
                static_cast<size_t>(width) * 3);
  }
  pngdetail::write_file(path, pngdetail::encode(width, height, 8, 2, scan));
}

}  // namespace agm

#endif  // AGM_PNG_IO_HPP
