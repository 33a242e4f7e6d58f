#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace hsicnn::linalg {

struct SymmetricEigen {
  std::vector<double> values;   // descending
  std::vector<double> vectors;  // row i = eigenvector for values[i], row-major n x n
  std::size_t sweeps = 0;
};

// Cyclic Jacobi eigendecomposition of a symmetric n x n row-major matrix.
// Sweeps until the off-diagonal Frobenius norm drops below rel_tol times the
// Frobenius norm of the input.
inline SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n,
                                   double rel_tol = 1e-12, std::size_t max_sweeps = 100) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double frob2 = 0.0;
  for (double x : a) frob2 += x * x;
  const double limit2 = rel_tol * rel_tol * frob2;

  auto off2 = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a[p * n + q] * a[p * n + q];
    return s;
  };

  std::size_t sweep = 0;
  while (sweep < max_sweeps && off2() > limit2) {
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        // Rotation angle chosen to annihilate a[p][q] (Golub & Van Loan 8.4).
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a[i * n + i] > a[j * n + j];
  });

  SymmetricEigen out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t col = order[r];
    out.values[r] = a[col * n + col];
    for (std::size_t k = 0; k < n; ++k) out.vectors[r * n + k] = v[k * n + col];
  }
  return out;
}

}  // namespace hsicnn::linalg
