#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hsicnn/dimred.hpp"
#include "hsicnn/rng.hpp"

using namespace hsicnn;

namespace {

std::vector<double> correlated_data(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  // Correlated columns with distinct scales so the spectrum has clear gaps.
  std::vector<double> latent(rows * cols);
  for (auto& v : latent) v = rng.normal();
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.5 + latent[r * cols + c] * (1.0 + static_cast<double>(c) * 0.3);
      if (c > 0) v += 0.4 * latent[r * cols + c - 1];
      out[r * cols + c] = v;
    }
  return out;
}

PcaAccumulator fit_in_chunks(const std::vector<double>& data, std::size_t dim, std::size_t chunk) {
  PcaAccumulator acc(dim);
  const std::size_t rows = data.size() / dim;
  for (std::size_t start = 0; start < rows; start += chunk) {
    const std::size_t stop = std::min(rows, start + chunk);
    acc.fit_chunk(std::span<const double>(data.data() + start * dim, (stop - start) * dim));
  }
  return acc;
}

struct Oracle {
  Eigen::VectorXd mean;
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, descending
};

// Two-pass centered covariance and a dense self-adjoint eigensolver.
Oracle batch_pca(const std::vector<double>& data, std::size_t dim) {
  const std::size_t rows = data.size() / dim;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  Oracle o;
  o.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - o.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(rows);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  o.values = es.eigenvalues().reverse();
  o.vectors = es.eigenvectors().rowwise().reverse();
  return o;
}

}  // namespace

TEST(PcaAccumulator, ChunkingIsInvisible) {
  const auto data = correlated_data(2, 6, 1);
  PcaAccumulator one(6), two(6);
  one.fit_chunk(std::span<const double>(data));
  two.fit_chunk(std::span<const double>(data.data(), 6));
  two.fit_chunk(std::span<const double>(data.data() + 6, 6));
  EXPECT_EQ(one.count(), two.count());
  for (std::size_t i = 0; i < 36; ++i) EXPECT_NEAR(one.outer_sum()[i], two.outer_sum()[i], 1e-12);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(one.sum()[i], two.sum()[i], 1e-12);
}

TEST(PcaAccumulator, EmptyChunkIsNoOp) {
  PcaAccumulator acc(4);
  acc.fit_chunk(std::span<const double>());
  EXPECT_EQ(acc.count(), 0u);
}

TEST(PcaAccumulator, ShortSpectrumRejected) {
  PcaAccumulator acc(4);
  const std::vector<double> x(3, 1.0);
  try {
    acc.fit_spectrum(std::span<const double>(x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
  EXPECT_THROW(acc.fit_chunk(std::span<const double>(x)), Error);
}

TEST(PcaAccumulator, OuterSumStaysSymmetric) {
  const auto data = correlated_data(37, 9, 3);
  auto acc = fit_in_chunks(data, 9, 5);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(acc.outer_sum()[i * 9 + j], acc.outer_sum()[j * 9 + i]);
}

TEST(PcaAccumulator, MergeEqualsSequential) {
  const auto data = correlated_data(40, 5, 4);
  auto whole = fit_in_chunks(data, 5, 40);
  PcaAccumulator left(5), right(5);
  left.fit_chunk(std::span<const double>(data.data(), 20 * 5));
  right.fit_chunk(std::span<const double>(data.data() + 20 * 5, 20 * 5));
  left.merge(right);
  EXPECT_EQ(left.count(), whole.count());
  for (std::size_t i = 0; i < 25; ++i) EXPECT_NEAR(left.outer_sum()[i], whole.outer_sum()[i], 1e-10);
}

TEST(PcaFinalize, NeedsTwoSpectra) {
  PcaAccumulator acc(3);
  const std::vector<double> x{1, 2, 3};
  acc.fit_chunk(std::span<const double>(x));
  try {
    finalize(acc, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
}

TEST(PcaFinalize, AxisAlignedData) {
  PcaAccumulator acc(3);
  for (int t = 1; t <= 10; ++t) {
    const std::vector<double> x{static_cast<double>(t), 0.0, 0.0};
    acc.fit_chunk(std::span<const double>(x));
  }
  const auto model = finalize(acc, 1);
  EXPECT_NEAR(model.components[0], 1.0, 1e-12);  // sign-normalized
  EXPECT_NEAR(model.components[1], 0.0, 1e-12);
  EXPECT_NEAR(model.components[2], 0.0, 1e-12);
  EXPECT_NEAR(model.eigenvalues[0], 8.25, 1e-12);  // population variance of 1..10
}

TEST(PcaFinalize, FullRankProjectionIsIsometry) {
  const auto data = correlated_data(50, 5, 5);
  const auto model = finalize(fit_in_chunks(data, 5, 50), 5);
  auto project = [&](std::size_t r) {
    std::vector<double> y(5, 0.0);
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t j = 0; j < 5; ++j) y[k] += model.components[k * 5 + j] * (data[r * 5 + j] - model.mean[j]);
    return y;
  };
  for (std::size_t a = 0; a < 50; a += 7) {
    for (std::size_t b = a + 1; b < 50; b += 5) {
      double d_in = 0.0, d_out = 0.0;
      const auto ya = project(a), yb = project(b);
      for (std::size_t j = 0; j < 5; ++j) {
        d_in += std::pow(data[a * 5 + j] - data[b * 5 + j], 2);
        d_out += std::pow(ya[j] - yb[j], 2);
      }
      EXPECT_NEAR(std::sqrt(d_in), std::sqrt(d_out), 1e-9);
    }
  }
}

TEST(PcaFinalize, MatchesBatchOracleForEveryChunkSize) {
  const std::size_t rows = 500, dim = 30, b = 8;
  const auto data = correlated_data(rows, dim, 6);
  const Oracle o = batch_pca(data, dim);
  for (std::size_t chunk : {1, 7, 64}) {
    const auto model = finalize(fit_in_chunks(data, dim, chunk), b);
    double max_delta = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += model.components[k * dim + j] * o.vectors(j, k);
      const double sign = dot < 0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < dim; ++j)
        max_delta = std::max(max_delta, std::abs(model.components[k * dim + j] - sign * o.vectors(j, k)));
      max_delta = std::max(max_delta, std::abs(model.eigenvalues[k] - o.values(k)));
    }
    for (std::size_t j = 0; j < dim; ++j) max_delta = std::max(max_delta, std::abs(model.mean[j] - o.mean(j)));
    EXPECT_LT(max_delta, 1e-8) << "chunk " << chunk;
  }
}

TEST(PcaFinalizeProperty, SpectrumAndProjectionMoments) {
  const std::size_t rows = 300, dim = 12;
  const auto data = correlated_data(rows, dim, 8);
  const auto model = finalize(fit_in_chunks(data, dim, 17), dim);

  const Oracle o = batch_pca(data, dim);
  double trace = 0.0, sum = 0.0;
  for (std::size_t j = 0; j < dim; ++j) trace += o.values(j);
  for (double v : model.all_eigenvalues) sum += v;
  EXPECT_NEAR(sum, trace, 1e-8 * std::abs(trace));

  for (std::size_t i = 1; i < dim; ++i) EXPECT_GE(model.eigenvalues[i - 1], model.eigenvalues[i]);

  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t c = 0; c < dim; ++c) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += model.components[a * dim + j] * model.components[c * dim + j];
      EXPECT_NEAR(dot, a == c ? 1.0 : 0.0, 1e-6);
    }

  for (std::size_t k = 0; k < dim; ++k) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      double y = 0.0;
      for (std::size_t j = 0; j < dim; ++j) y += model.components[k * dim + j] * (data[r * dim + j] - model.mean[j]);
      m1 += y;
      m2 += y * y;
    }
    m1 /= rows;
    m2 /= rows;
    EXPECT_NEAR(m1, 0.0, 1e-8);
    EXPECT_NEAR(m2, model.eigenvalues[k], 1e-6 * model.eigenvalues[k]);
  }
}

TEST(PcaFinalize, SignConventionLargestEntryPositive) {
  const auto data = correlated_data(60, 7, 9);
  const auto model = finalize(fit_in_chunks(data, 7, 60), 7);
  for (std::size_t k = 0; k < 7; ++k) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < 7; ++j)
      if (std::abs(model.components[k * 7 + j]) > std::abs(model.components[k * 7 + arg])) arg = j;
    EXPECT_GT(model.components[k * 7 + arg], 0.0);
  }
}

TEST(PcaTransform, IdentityLikeModelSelectsBands) {
  PcaModel model;
  model.l = 3;
  model.b = 2;
  model.mean = {0, 0, 0};
  model.components = {1, 0, 0, 0, 1, 0};
  model.eigenvalues = {1, 1};
  HsiCube cube(2, 3, 3);
  for (std::size_t i = 0; i < cube.reflectance.size(); ++i) cube.reflectance[i] = static_cast<float>(i);
  const HsiCube out = transform(model, cube, 2);
  ASSERT_EQ(out.reflectance.shape(), (Shape{2, 2, 3}));
  for (std::size_t i = 0; i < out.reflectance.size(); ++i) EXPECT_EQ(out.reflectance[i], cube.reflectance[i]);
}

TEST(PcaTransform, ConstantCubeMapsToZero) {
  HsiCube cube(4, 4, 5, 0.75f);
  PcaAccumulator acc(5);
  fit_cube(acc, cube, 3);
  const auto model = finalize(acc, 2);
  const HsiCube out = transform(model, cube, 2);
  for (float v : out.reflectance.data()) EXPECT_EQ(v, 0.0f);
}

TEST(PcaTransform, KeepsSpatialShape) {
  HsiCube cube(145, 145, 200);
  Rng rng(3);
  for (auto& v : cube.reflectance.data()) v = static_cast<float>(rng.uniform());
  PcaAccumulator acc(200);
  fit_cube(acc, cube, 4096);
  const auto model = finalize(acc, 20);
  const HsiCube out = transform(model, cube, 20);
  EXPECT_EQ(out.reflectance.shape(), (Shape{20, 145, 145}));
}

TEST(PcaTransform, BandMismatch) {
  PcaAccumulator acc(3);
  const std::vector<double> x{1, 2, 3, 2, 2, 0, 4, 1, 1};
  acc.fit_chunk(std::span<const double>(x));
  const auto model = finalize(acc, 2);
  try {
    transform(model, HsiCube(2, 2, 4), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(PcaFile, RoundTripAndMagic) {
  const auto data = correlated_data(20, 4, 2);
  const auto model = finalize(fit_in_chunks(data, 4, 3), 3);
  const std::string bytes = encode_pca(model);
  EXPECT_EQ(bytes.size(), 4u + 1 + 8 + (4 + 12 + 3) * 4);
  const auto back = decode_pca(bytes);
  EXPECT_EQ(back.l, 4u);
  EXPECT_EQ(back.b, 3u);
  EXPECT_EQ(encode_pca(back), bytes);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_pca(bad), Error);
}
