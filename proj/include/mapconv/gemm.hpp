#pragma once

#include <cstddef>

namespace mapconv {

enum class Trans { no, yes };

// C = alpha * op(A) * op(B) + beta * C, all row-major.
// op(A) is m x k, op(B) is k x n, C is m x n. lda/ldb/ldc are row strides of
// the stored (untransposed) arrays.
template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);

namespace serial {

// Textbook triple loop. Oracle for the optimized path.
template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);

}  // namespace serial
}  // namespace mapconv
