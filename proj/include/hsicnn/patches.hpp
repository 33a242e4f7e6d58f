#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsicnn/error.hpp"
#include "hsicnn/ingest.hpp"
#include "hsicnn/tensor.hpp"

namespace hsicnn {

// Overlapping S x S x B windows labeled by their center pixel.
struct PatchSet {
  Tensor<float> patches;      // [n, s, s, b, 1]
  std::vector<int> labels;    // 0-based class ids
  std::vector<Coord> coords;  // patch centers
  std::size_t s = 0;
  std::size_t b = 0;
  std::size_t skipped = 0;    // requested centers outside the valid region

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t patch_volume() const noexcept { return s * s * b; }
  std::span<const float> patch(std::size_t i) const {
    return patches.data().subspan(i * patch_volume(), patch_volume());
  }
};

inline void check_window(std::size_t s) {
  if (s == 0 || s % 2 == 0) {
    throw Error(ErrorKind::invalid_window, "window size " + std::to_string(s) + " must be odd");
  }
}

// Number of valid-region windows, (m - s + 1)(n - s + 1).
inline std::size_t count_candidates(std::size_t m, std::size_t n, std::size_t s) {
  check_window(s);
  if (s > m || s > n) {
    throw Error(ErrorKind::invalid_window, "window " + std::to_string(s) + " exceeds scene " +
                                               std::to_string(m) + "x" + std::to_string(n));
  }
  return (m - s + 1) * (n - s + 1);
}

inline bool in_valid_region(const Coord& c, std::size_t m, std::size_t n, std::size_t s) {
  const std::size_t h = s / 2;
  return c.row >= h && c.col >= h && c.row + h < m && c.col + h < n;
}

// Writes the window whose top-left corner is (row0, col0) into `out` in
// [s, s, b] order (spatial row, spatial col, band).
inline void copy_window(const HsiCube& cube, std::size_t row0, std::size_t col0, std::size_t s,
                        std::span<float> out) {
  const std::size_t px = cube.pixels();
  std::size_t k = 0;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const std::size_t pix = (row0 + i) * cube.n + (col0 + j);
      for (std::size_t band = 0; band < cube.l; ++band) out[k++] = cube.reflectance[band * px + pix];
    }
  }
}

inline PatchSet extract_labeled(const HsiCube& reduced, const GroundTruth& gt, std::size_t s,
                                std::span<const Coord> centers) {
  check_paired(reduced, gt);
  count_candidates(reduced.m, reduced.n, s);
  const std::size_t h = s / 2;
  std::vector<Coord> kept;
  kept.reserve(centers.size());
  PatchSet set;
  set.s = s;
  set.b = reduced.l;
  for (const Coord& c : centers) {
    if (c.row >= gt.m || c.col >= gt.n || !in_valid_region(c, reduced.m, reduced.n, s) ||
        gt.at(c.row, c.col) == 0) {
      ++set.skipped;
      continue;
    }
    kept.push_back(c);
  }
  if (kept.empty()) return set;
  set.patches = Tensor<float>({kept.size(), s, s, reduced.l, 1});
  const std::size_t vol = set.patch_volume();
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const Coord& c = kept[i];
    copy_window(reduced, c.row - h, c.col - h, s, set.patches.data().subspan(i * vol, vol));
    set.labels.push_back(static_cast<int>(gt.at(c.row, c.col)) - 1);
  }
  set.coords = std::move(kept);
  return set;
}

// All labeled pixels that admit a full window.
inline std::vector<Coord> labeled_in_region(const GroundTruth& gt, std::size_t s) {
  std::vector<Coord> out;
  for (std::size_t r = 0; r < gt.m; ++r)
    for (std::size_t c = 0; c < gt.n; ++c)
      if (gt.at(r, c) != 0 && in_valid_region({r, c}, gt.m, gt.n, s)) out.push_back({r, c});
  return out;
}

// Zero border of (s-1)/2 on every spatial side so every pixel is a center.
inline HsiCube pad_for_full_map(const HsiCube& reduced, std::size_t s) {
  check_window(s);
  const std::size_t h = s / 2;
  HsiCube out(reduced.m + s - 1, reduced.n + s - 1, reduced.l, 0.0f);
  for (std::size_t band = 0; band < reduced.l; ++band)
    for (std::size_t r = 0; r < reduced.m; ++r)
      for (std::size_t c = 0; c < reduced.n; ++c)
        out.at(band, r + h, c + h) = reduced.at(band, r, c);
  return out;
}

}  // namespace hsicnn
