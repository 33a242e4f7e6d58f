#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "hsicnn/binary_io.hpp"
#include "hsicnn/error.hpp"
#include "hsicnn/rng.hpp"
#include "hsicnn/tensor.hpp"

namespace hsicnn {

// Reflectance volume stored band-sequential: shape [l, m, n].
struct HsiCube {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t l = 0;
  Tensor<float> reflectance;

  HsiCube() = default;
  HsiCube(std::size_t rows, std::size_t cols, std::size_t bands, float fill = 0.0f)
      : m(rows), n(cols), l(bands), reflectance({bands, rows, cols}, fill) {}

  float& at(std::size_t band, std::size_t row, std::size_t col) {
    return reflectance[(band * m + row) * n + col];
  }
  float at(std::size_t band, std::size_t row, std::size_t col) const {
    return reflectance[(band * m + row) * n + col];
  }
  std::size_t pixels() const noexcept { return m * n; }
};

// Class-id grid, 0 = unlabeled, 1..c = classes.
struct GroundTruth {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t c = 0;
  std::vector<std::uint16_t> labels;

  GroundTruth() = default;
  GroundTruth(std::size_t rows, std::size_t cols, std::size_t classes)
      : m(rows), n(cols), c(classes), labels(rows * cols, 0) {}

  std::uint16_t& at(std::size_t row, std::size_t col) { return labels[row * n + col]; }
  std::uint16_t at(std::size_t row, std::size_t col) const { return labels[row * n + col]; }

  std::size_t labeled_count() const {
    std::size_t k = 0;
    for (auto v : labels) k += v != 0;
    return k;
  }
};

struct Coord {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const Coord&) const = default;
};

struct SplitIndices {
  std::vector<Coord> train;
  std::vector<Coord> val;
  std::vector<Coord> test;
};

inline constexpr char kCubeMagic[] = "HSIC";
inline constexpr char kLabelMagic[] = "HSIL";
inline constexpr std::uint8_t kFormatVersion = 1;

inline std::string encode_cube(const HsiCube& cube) {
  io::Writer w;
  w.bytes(kCubeMagic);
  w.u8(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(cube.m));
  w.u32(static_cast<std::uint32_t>(cube.n));
  w.u32(static_cast<std::uint32_t>(cube.l));
  for (float v : cube.reflectance.data()) w.f32(v);
  return w.take();
}

inline HsiCube decode_cube(std::string_view bytes, const std::string& what = "cube") {
  io::Reader r(bytes, what);
  r.expect_magic(kCubeMagic);
  r.expect_version(kFormatVersion);
  const std::uint32_t m = r.u32();
  const std::uint32_t n = r.u32();
  const std::uint32_t l = r.u32();
  if (m == 0 || n == 0 || l == 0) r.fail("zero dimension in header");
  const std::uint64_t count = std::uint64_t{m} * n * l;
  r.need(count * 4);
  HsiCube cube(m, n, l);
  for (auto& v : cube.reflectance.data()) {
    v = r.f32();
    if (!std::isfinite(v)) r.fail("non-finite reflectance");
  }
  r.expect_end();
  return cube;
}

inline void save_cube(const HsiCube& cube, const std::string& path) {
  io::write_file(path, encode_cube(cube));
}

inline HsiCube load_cube(const std::string& path) {
  return decode_cube(io::read_file(path), path);
}

inline std::string encode_labels(const GroundTruth& gt) {
  io::Writer w;
  w.bytes(kLabelMagic);
  w.u8(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(gt.m));
  w.u32(static_cast<std::uint32_t>(gt.n));
  w.u32(static_cast<std::uint32_t>(gt.c));
  for (auto v : gt.labels) w.u16(v);
  return w.take();
}

inline GroundTruth decode_labels(std::string_view bytes,
                                 const std::string& what = "labels") {
  io::Reader r(bytes, what);
  r.expect_magic(kLabelMagic);
  r.expect_version(kFormatVersion);
  const std::uint32_t m = r.u32();
  const std::uint32_t n = r.u32();
  const std::uint32_t c = r.u32();
  if (m == 0 || n == 0) r.fail("zero dimension in header");
  r.need(std::uint64_t{m} * n * 2);
  GroundTruth gt(m, n, c);
  for (auto& v : gt.labels) {
    v = r.u16();
    if (v > c) {
      throw Error(ErrorKind::format,
                  what + ": label " + std::to_string(v) + " exceeds class count " +
                      std::to_string(c) + " at byte offset " +
                      std::to_string(r.offset() - 2));
    }
  }
  r.expect_end();
  return gt;
}

inline void save_labels(const GroundTruth& gt, const std::string& path) {
  io::write_file(path, encode_labels(gt));
}

inline GroundTruth load_labels(const std::string& path) {
  return decode_labels(io::read_file(path), path);
}

inline void check_paired(const HsiCube& cube, const GroundTruth& gt) {
  if (cube.m != gt.m || cube.n != gt.n) {
    throw Error(ErrorKind::dimension,
                "cube is " + std::to_string(cube.m) + "x" + std::to_string(cube.n) +
                    " but labels are " + std::to_string(gt.m) + "x" +
                    std::to_string(gt.n));
  }
}

// Round half up.
inline std::size_t stratum_size(double frac, std::size_t total) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(total) + 0.5));
}

// Per-class seeded split. Within each class the labeled pixels are taken in
// row-major order, permuted with the split stream, and cut into
// round(trainFrac*n_k) train, round(valFrac*n_k) val, remainder test.
// Classes are processed in ascending id so the stream is consumed in a fixed
// order.
inline SplitIndices stratified_split(const GroundTruth& gt, double train_frac,
                                     double val_frac, std::uint64_t seed) {
  if (!(train_frac >= 0.0) || !(val_frac >= 0.0) || !(train_frac + val_frac < 1.0)) {
    throw Error(ErrorKind::split, "fractions must be >= 0 and sum below 1 (got " +
                                      std::to_string(train_frac) + ", " +
                                      std::to_string(val_frac) + ")");
  }
  std::vector<std::vector<Coord>> by_class(gt.c + 1);
  for (std::size_t r = 0; r < gt.m; ++r) {
    for (std::size_t c = 0; c < gt.n; ++c) {
      const auto k = gt.at(r, c);
      if (k == 0) continue;
      if (k > gt.c) {
        throw Error(ErrorKind::split, "label " + std::to_string(k) +
                                          " exceeds class count " + std::to_string(gt.c));
      }
      by_class[k].push_back({r, c});
    }
  }
  Rng rng(seed, Stream::split);
  SplitIndices out;
  for (std::size_t k = 1; k <= gt.c; ++k) {
    auto& pool = by_class[k];
    if (pool.empty()) {
      throw Error(ErrorKind::split, "class " + std::to_string(k) + " has no labeled pixels");
    }
    rng.shuffle(pool);
    const std::size_t n_train = std::min(stratum_size(train_frac, pool.size()), pool.size());
    const std::size_t n_val =
        std::min(stratum_size(val_frac, pool.size()), pool.size() - n_train);
    auto it = pool.begin();
    out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(n_train));
    it += static_cast<std::ptrdiff_t>(n_train);
    out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    out.test.insert(out.test.end(), it, pool.end());
  }
  return out;
}

}  // namespace hsicnn
