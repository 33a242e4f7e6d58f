#pragma once

#include <cstddef>

// Small dense kernels shared by the convolution and dense layers. All loops
// run in a fixed order so results are reproducible bit for bit.
namespace hsicnn::kernels {

// c[m x n] += a[m x k] * b[k x n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t r = 0; r < k; ++r) {
      const T av = arow[r];
      if (av == T{0}) continue;
      const T* brow = b + r * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m x n] += a[k x m]^T * b[k x n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t r = 0; r < k; ++r) {
    const T* arow = a + r * m;
    const T* brow = b + r * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      if (av == T{0}) continue;
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// In-place-free transpose: dst[cols x rows] = src[rows x cols]^T
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kBlock)
    for (std::size_t j0 = 0; j0 < cols; j0 += kBlock)
      for (std::size_t i = i0; i < rows && i < i0 + kBlock; ++i)
        for (std::size_t j = j0; j < cols && j < j0 + kBlock; ++j) dst[j * rows + i] = src[i * cols + j];
}

// Dot product with four interleaved partial sums.
template <typename T>
T dot(std::size_t n, const T* a, const T* b) {
  T s0{0}, s1{0}, s2{0}, s3{0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// y += alpha * x
template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace hsicnn::kernels
