#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hsicnn/dimred.hpp"
#include "hsicnn/ingest.hpp"
#include "hsicnn/model.hpp"
#include "hsicnn/patches.hpp"
#include "hsicnn/train.hpp"

namespace hsicnn {

// Window sizes of the reference experiment grid.
inline const std::vector<std::size_t> kSweepWindows{11, 13, 15, 17, 19, 21, 25};

struct DataConfig {
  std::size_t window = 11;
  std::size_t components = 20;
  double train_frac = 0.35;
  double val_frac = 0.35;
  std::uint64_t seed = 0;
  bool pca_on_train_only = false;
  std::size_t pca_chunk = 4096;
};

struct PreparedData {
  PcaModel pca;
  HsiCube reduced;
  SplitIndices split;
  PatchSet train;
  PatchSet val;
  PatchSet test;
};

// split -> PCA fit (unless given) -> projection -> valid-region patches.
inline PreparedData prepare_data(const HsiCube& cube, const GroundTruth& gt, const DataConfig& cfg,
                                 const PcaModel* pca = nullptr) {
  check_paired(cube, gt);
  PreparedData out;
  out.split = stratified_split(gt, cfg.train_frac, cfg.val_frac, cfg.seed);
  if (pca) {
    out.pca = *pca;
  } else {
    PcaAccumulator acc(cube.l);
    fit_cube(acc, cube, cfg.pca_chunk, cfg.pca_on_train_only ? &out.split.train : nullptr);
    out.pca = finalize(acc, cfg.components);
  }
  out.reduced = transform(out.pca, cube, cfg.components);
  out.train = extract_labeled(out.reduced, gt, cfg.window, out.split.train);
  out.val = extract_labeled(out.reduced, gt, cfg.window, out.split.val);
  out.test = extract_labeled(out.reduced, gt, cfg.window, out.split.test);
  return out;
}

// Class id (1-based) for every pixel via zero-padded windows; pixels whose
// ground truth is unlabeled are written as 0 when `mask` is given.
template <typename T>
std::vector<std::uint16_t> predict_map(const Model<T>& model, const HsiCube& reduced,
                                       const GroundTruth* mask = nullptr, std::size_t threads = 1) {
  const std::size_t s = model.config().window;
  const HsiCube padded = pad_for_full_map(reduced, s);
  std::vector<std::uint16_t> out(reduced.pixels(), 0);
  const std::size_t vol = s * s * reduced.l;
  detail::parallel_ranges(reduced.m, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<float> buf(vol);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < reduced.n; ++c) {
        if (mask && mask->at(r, c) == 0) continue;
        copy_window(padded, r, c, s, buf);
        out[r * reduced.n + c] = static_cast<std::uint16_t>(model.predict_one(buf) + 1);
      }
    }
  });
  return out;
}

// Binary PGM (P5), one byte per pixel. Comment lines carry the run config.
inline std::string encode_pgm(const std::vector<std::uint16_t>& pixels, std::size_t rows,
                              std::size_t cols, const std::vector<std::string>& comments = {}) {
  std::ostringstream os;
  os << "P5\n";
  for (const auto& c : comments) os << "# " << c << '\n';
  os << cols << ' ' << rows << "\n255\n";
  std::string out = os.str();
  for (auto v : pixels) out.push_back(static_cast<char>(std::min<std::uint16_t>(v, 255)));
  return out;
}

inline std::string history_header() { return "epoch,train_loss,train_acc,val_loss,val_acc,seconds\n"; }

inline std::string format_epoch(const EpochRecord& r) {
  std::ostringstream os;
  os << std::setprecision(9) << r.epoch << ',' << r.train_loss << ',' << r.train_acc << ','
     << r.val_loss << ',' << r.val_acc << ',' << std::setprecision(4) << std::fixed << r.seconds
     << '\n';
  return os.str();
}

}  // namespace hsicnn
