#include "mapconv/gemm.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace mapconv {

namespace {

constexpr std::size_t kColumnBlock = 256;

template <typename T>
void scale_c(std::size_t m, std::size_t n, T beta, T* c, std::size_t ldc) {
  if (beta == T(1)) return;
  for (std::size_t i = 0; i < m; ++i) {
    T* row = c + i * ldc;
    if (beta == T(0)) {
      std::fill(row, row + n, T(0));
    } else {
      for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
    }
  }
}

}  // namespace

template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;

  if (trans_b == Trans::no) {
    // Column blocks of C are independent; each block streams the matching
    // slab of B once per row of op(A).
    const auto blocks = static_cast<std::int64_t>((n + kColumnBlock - 1) / kColumnBlock);
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
      const std::size_t j0 = static_cast<std::size_t>(blk) * kColumnBlock;
      const std::size_t j1 = std::min(n, j0 + kColumnBlock);
      for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        if (beta == T(0)) {
          std::fill(crow + j0, crow + j1, T(0));
        } else if (beta != T(1)) {
          for (std::size_t j = j0; j < j1; ++j) crow[j] *= beta;
        }
        for (std::size_t p = 0; p < k; ++p) {
          const T aval = alpha * (trans_a == Trans::no ? a[i * lda + p] : a[p * lda + i]);
          if (aval == T(0)) continue;
          const T* brow = b + p * ldb;
          for (std::size_t j = j0; j < j1; ++j) crow[j] += aval * brow[j];
        }
      }
    }
    return;
  }

  // op(B) = B^T: every C entry is a dot product of two contiguous rows when A
  // is untransposed. Transposed A is copied once so the same holds.
  std::vector<T> a_rows;
  const T* arow_base = a;
  std::size_t arow_stride = lda;
  if (trans_a == Trans::yes) {
    a_rows.resize(m * k);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) a_rows[i * k + p] = a[p * lda + i];
    arow_base = a_rows.data();
    arow_stride = k;
  }
  const auto total = static_cast<std::int64_t>(m * n);
#pragma omp parallel for schedule(static)
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / n;
    const std::size_t j = static_cast<std::size_t>(idx) % n;
    const T* arow = arow_base + i * arow_stride;
    const T* brow = b + j * ldb;
    T acc = T(0);
    for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
    T& out = c[i * ldc + j];
    out = (beta == T(0) ? T(0) : beta * out) + alpha * acc;
  }
}

namespace serial {

template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  scale_c(m, n, beta, c, ldc);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) {
        const T av = trans_a == Trans::no ? a[i * lda + p] : a[p * lda + i];
        const T bv = trans_b == Trans::no ? b[p * ldb + j] : b[j * ldb + p];
        acc += av * bv;
      }
      c[i * ldc + j] += alpha * acc;
    }
  }
}

template void gemm<float>(Trans, Trans, std::size_t, std::size_t, std::size_t, float, const float*, std::size_t,
                          const float*, std::size_t, float, float*, std::size_t);
template void gemm<double>(Trans, Trans, std::size_t, std::size_t, std::size_t, double, const double*,
                           std::size_t, const double*, std::size_t, double, double*, std::size_t);

}  // namespace serial

template void gemm<float>(Trans, Trans, std::size_t, std::size_t, std::size_t, float, const float*, std::size_t,
                          const float*, std::size_t, float, float*, std::size_t);
template void gemm<double>(Trans, Trans, std::size_t, std::size_t, std::size_t, double, const double*,
                           std::size_t, const double*, std::size_t, double, double*, std::size_t);

}  // namespace mapconv
