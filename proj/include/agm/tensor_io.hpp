// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Minimal binary tensor container ("AGMT"). Layout, all little-endian:
//   magic   4 bytes  "AGMT"
//   version u8       1
//   dtype   u8       0 = float32
//   ndim    u8       2 or 3
//   dims    ndim × u32
//   payload product(dims) float32 values, row-major ([H][W] or [H][W][C])

#ifndef AGM_TENSOR_IO_HPP
#define AGM_TENSOR_IO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "agm/grid.hpp"

namespace agm {

struct Tensor {
  std::vector<uint32_t> dims;  // size 2 or 3
  std::vector<float> data;     // row-major

  uint64_t element_count() const {
    uint64_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
  }
};

class TensorIoError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kBadDtype, kBadDims, kTruncated };
  TensorIoError(Kind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

inline void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline uint32_t get_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline void write_tensor(const std::string& path, const Tensor& t) {
  if (t.dims.size() != 2 && t.dims.size() != 3)
    throw TensorIoError(TensorIoError::Kind::kBadDims,
                        "tensor must be 2-D or 3-D");
  for (uint32_t d : t.dims)
    if (d < 1)
      throw TensorIoError(TensorIoError::Kind::kBadDims, "tensor dim < 1");
  if (t.element_count() != t.data.size())
    throw TensorIoError(TensorIoError::Kind::kBadDims,
                        "dims do not match payload size");

  std::string buf;
  buf.reserve(19 + t.data.size() * 4);
  buf += "AGMT";
  buf.push_back(1);  // version
  buf.push_back(0);  // dtype: float32
  buf.push_back(static_cast<char>(t.dims.size()));
  for (uint32_t d : t.dims) detail::put_u32le(buf, d);
  size_t head = buf.size();
  buf.resize(head + t.data.size() * 4);
  static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 floats required");
  // Little-endian host assumed (x86/arm); byte order pinned by the format.
  std::memcpy(buf.data() + head, t.data.data(), t.data.size() * 4);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw TensorIoError(TensorIoError::Kind::kIo, "cannot open " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw TensorIoError(TensorIoError::Kind::kIo, "write failed: " + path);
}

inline Tensor read_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw TensorIoError(TensorIoError::Kind::kIo, "cannot open " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());

  if (raw.size() < 7 || std::memcmp(raw.data(), "AGMT", 4) != 0)
    throw TensorIoError(TensorIoError::Kind::kBadMagic, "bad magic in " + path);
  if (raw[4] != 1)
    throw TensorIoError(TensorIoError::Kind::kBadVersion,
                        "unsupported version " + std::to_string(raw[4]));
  if (raw[5] != 0)
    throw TensorIoError(TensorIoError::Kind::kBadDtype,
                        "unsupported dtype " + std::to_string(raw[5]));
  unsigned ndim = raw[6];
  if (ndim != 2 && ndim != 3)
    throw TensorIoError(TensorIoError::Kind::kBadDims,
                        "unsupported ndim " + std::to_string(ndim));
  size_t header = 7 + 4 * static_cast<size_t>(ndim);
  if (raw.size() < header)
    throw TensorIoError(TensorIoError::Kind::kTruncated, "truncated header");

  Tensor t;
  for (unsigned i = 0; i < ndim; ++i) {
    uint32_t d = detail::get_u32le(raw.data() + 7 + 4 * i);
    if (d < 1)
      throw TensorIoError(TensorIoError::Kind::kBadDims, "dim < 1 in " + path);
    t.dims.push_back(d);
  }
  uint64_t want = t.element_count() * 4;
  uint64_t have = raw.size() - header;
  if (have != want)
    throw TensorIoError(TensorIoError::Kind::kTruncated,
                        "payload size mismatch: expected " + std::to_string(want) +
                            " bytes, found " + std::to_string(have));
  t.data.resize(t.element_count());
  std::memcpy(t.data.data(), raw.data() + header, want);
  return t;
}

inline Tensor to_tensor(const Grid& g) {
  Tensor t;
  t.dims = {static_cast<uint32_t>(g.height()), static_cast<uint32_t>(g.width()),
            static_cast<uint32_t>(g.channels())};
  t.data = g.data();
  return t;
}

inline Grid to_grid(const Tensor& t) {
  if (t.dims.size() == 2) {
    Grid g(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), 1);
    g.data() = t.data;
    return g;
  }
  Grid g(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
         static_cast<int>(t.dims[2]));
  g.data() = t.data;
  return g;
}

}  // namespace agm

#endif  // AGM_TENSOR_IO_HPP
