#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsicnn/binary_io.hpp"
#include "hsicnn/error.hpp"
#include "hsicnn/ingest.hpp"
#include "hsicnn/linalg.hpp"

namespace hsicnn {

// Streaming first and second moments of pixel spectra. Always 64-bit.
class PcaAccumulator {
 public:
  explicit PcaAccumulator(std::size_t dim) : dim_(dim), sum_(dim, 0.0), outer_(dim * dim, 0.0) {
    if (dim == 0) throw Error(ErrorKind::dimension, "spectrum length must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t count() const noexcept { return count_; }
  const std::vector<double>& sum() const noexcept { return sum_; }
  const std::vector<double>& outer_sum() const noexcept { return outer_; }

  // `chunk` is a row-major [k, dim] block of spectra.
  template <typename T>
  void fit_chunk(std::span<const T> chunk) {
    if (chunk.size() % dim_ != 0) {
      throw Error(ErrorKind::dimension, "chunk of " + std::to_string(chunk.size()) +
                                            " values is not a whole number of length-" +
                                            std::to_string(dim_) + " spectra");
    }
    std::vector<double> x(dim_);
    for (std::size_t off = 0; off < chunk.size(); off += dim_) {
      for (std::size_t i = 0; i < dim_; ++i) x[i] = static_cast<double>(chunk[off + i]);
      add(x);
    }
  }

  template <typename T>
  void fit_spectrum(std::span<const T> spectrum) {
    if (spectrum.size() != dim_) {
      throw Error(ErrorKind::dimension, "spectrum length " + std::to_string(spectrum.size()) +
                                            " != " + std::to_string(dim_));
    }
    fit_chunk(spectrum);
  }

  void merge(const PcaAccumulator& other) {
    if (other.dim_ != dim_) throw Error(ErrorKind::dimension, "accumulator length mismatch");
    count_ += other.count_;
    for (std::size_t i = 0; i < dim_; ++i) sum_[i] += other.sum_[i];
    for (std::size_t i = 0; i < outer_.size(); ++i) outer_[i] += other.outer_[i];
  }

 private:
  void add(const std::vector<double>& x) {
    ++count_;
    for (std::size_t i = 0; i < dim_; ++i) {
      sum_[i] += x[i];
      double* row = &outer_[i * dim_];
      for (std::size_t j = i; j < dim_; ++j) {
        row[j] += x[i] * x[j];
        outer_[j * dim_ + i] = row[j];
      }
    }
  }

  std::size_t dim_;
  std::uint64_t count_ = 0;
  std::vector<double> sum_;
  std::vector<double> outer_;
};

struct PcaModel {
  std::size_t l = 0;                // input bands
  std::size_t b = 0;                // retained components
  std::vector<double> mean;         // length l
  std::vector<double> components;   // b x l, rows orthonormal
  std::vector<double> eigenvalues;  // length b, non-increasing
  std::vector<double> all_eigenvalues;  // length l; empty when loaded from file
};

// Covariance = outer/count - mean*mean^T, eigendecomposed by cyclic Jacobi.
// Each component is sign-normalized so its largest-magnitude entry is positive.
inline PcaModel finalize(const PcaAccumulator& acc, std::size_t b) {
  if (acc.count() < 2) {
    throw Error(ErrorKind::insufficient_data,
                "PCA needs at least 2 spectra, have " + std::to_string(acc.count()));
  }
  const std::size_t l = acc.dim();
  if (b < 1 || b > l) {
    throw Error(ErrorKind::dimension,
                "component count " + std::to_string(b) + " outside [1, " + std::to_string(l) + "]");
  }
  const double n = static_cast<double>(acc.count());
  PcaModel model;
  model.l = l;
  model.b = b;
  model.mean.resize(l);
  for (std::size_t i = 0; i < l; ++i) model.mean[i] = acc.sum()[i] / n;

  std::vector<double> cov(l * l);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i; j < l; ++j) {
      const double c = acc.outer_sum()[i * l + j] / n - model.mean[i] * model.mean[j];
      cov[i * l + j] = c;
      cov[j * l + i] = c;
    }
  }
  auto eig = linalg::jacobi_eigen(std::move(cov), l);
  model.all_eigenvalues = eig.values;
  model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(b));
  model.components.assign(eig.vectors.begin(),
                          eig.vectors.begin() + static_cast<std::ptrdiff_t>(b * l));
  for (std::size_t r = 0; r < b; ++r) {
    double* row = &model.components[r * l];
    std::size_t arg = 0;
    for (std::size_t k = 1; k < l; ++k)
      if (std::abs(row[k]) > std::abs(row[arg])) arg = k;
    if (row[arg] < 0.0)
      for (std::size_t k = 0; k < l; ++k) row[k] = -row[k];
  }
  return model;
}

// Feeds the cube's pixel spectra to the accumulator `chunk_pixels` at a time.
// With `only` set, just those pixels are used.
inline void fit_cube(PcaAccumulator& acc, const HsiCube& cube, std::size_t chunk_pixels = 4096,
                     const std::vector<Coord>* only = nullptr) {
  if (cube.l != acc.dim()) {
    throw Error(ErrorKind::dimension, "cube has " + std::to_string(cube.l) +
                                          " bands, accumulator expects " +
                                          std::to_string(acc.dim()));
  }
  chunk_pixels = std::max<std::size_t>(chunk_pixels, 1);
  const std::size_t total = only ? only->size() : cube.pixels();
  std::vector<float> chunk;
  chunk.reserve(chunk_pixels * cube.l);
  for (std::size_t start = 0; start < total; start += chunk_pixels) {
    const std::size_t stop = std::min(total, start + chunk_pixels);
    chunk.clear();
    for (std::size_t p = start; p < stop; ++p) {
      const std::size_t pix = only ? (*only)[p].row * cube.n + (*only)[p].col : p;
      for (std::size_t band = 0; band < cube.l; ++band)
        chunk.push_back(cube.reflectance[band * cube.pixels() + pix]);
    }
    acc.fit_chunk(std::span<const float>(chunk));
  }
}

// Projects every pixel spectrum x to components[:b] * (x - mean).
inline HsiCube transform(const PcaModel& model, const HsiCube& cube, std::size_t b) {
  if (cube.l != model.l) {
    throw Error(ErrorKind::dimension, "cube has " + std::to_string(cube.l) +
                                          " bands, PCA model expects " + std::to_string(model.l));
  }
  if (b < 1 || b > model.b) {
    throw Error(ErrorKind::dimension, "requested " + std::to_string(b) + " components, model has " +
                                          std::to_string(model.b));
  }
  HsiCube out(cube.m, cube.n, b);
  const std::size_t px = cube.pixels();
  std::vector<double> centered(cube.l);
  for (std::size_t p = 0; p < px; ++p) {
    for (std::size_t band = 0; band < cube.l; ++band)
      centered[band] = static_cast<double>(cube.reflectance[band * px + p]) - model.mean[band];
    for (std::size_t r = 0; r < b; ++r) {
      const double* row = &model.components[r * model.l];
      double acc = 0.0;
      for (std::size_t band = 0; band < cube.l; ++band) acc += row[band] * centered[band];
      out.reflectance[r * px + p] = static_cast<float>(acc);
    }
  }
  return out;
}

inline constexpr char kPcaMagic[] = "HSIP";

inline std::string encode_pca(const PcaModel& model) {
  io::Writer w;
  w.bytes(kPcaMagic);
  w.u8(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.l));
  w.u32(static_cast<std::uint32_t>(model.b));
  for (double v : model.mean) w.f32(static_cast<float>(v));
  for (double v : model.components) w.f32(static_cast<float>(v));
  for (double v : model.eigenvalues) w.f32(static_cast<float>(v));
  return w.take();
}

inline PcaModel decode_pca(std::string_view bytes, const std::string& what = "pca") {
  io::Reader r(bytes, what);
  r.expect_magic(kPcaMagic);
  r.expect_version(kFormatVersion);
  PcaModel model;
  model.l = r.u32();
  model.b = r.u32();
  if (model.l == 0 || model.b == 0 || model.b > model.l) r.fail("invalid L/B in header");
  r.need((model.l + model.b * model.l + model.b) * 4);
  model.mean.resize(model.l);
  for (auto& v : model.mean) v = r.f32();
  model.components.resize(model.b * model.l);
  for (auto& v : model.components) v = r.f32();
  model.eigenvalues.resize(model.b);
  for (auto& v : model.eigenvalues) v = r.f32();
  r.expect_end();
  return model;
}

inline void save_pca(const PcaModel& model, const std::string& path) {
  io::write_file(path, encode_pca(model));
}

inline PcaModel load_pca(const std::string& path) { return decode_pca(io::read_file(path), path); }

}  // namespace hsicnn
