#pragma once

#include <cstddef>
#include <vector>

namespace gfss::num::detail {

// Four output rows share each load of B; the inner loop vectorizes.
inline void axpy4(std::size_t n, const float* __restrict b, float a0, float a1, float a2, float a3,
                  float* __restrict c0, float* __restrict c1, float* __restrict c2, float* __restrict c3) {
  for (std::size_t j = 0; j < n; ++j) {
    const float bv = b[j];
    c0[j] += a0 * bv;
    c1[j] += a1 * bv;
    c2[j] += a2 * bv;
    c3[j] += a3 * bv;
  }
}

inline void axpy1(std::size_t n, const float* __restrict b, float a, float* __restrict c) {
  for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
}

// C[M,N] += A[M,K] * B[K,N]
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const float* a0 = a + i * k;
    float* c0 = c + i * n;
    for (std::size_t p = 0; p < k; ++p)
      axpy4(n, b + p * n, a0[p], a0[k + p], a0[2 * k + p], a0[3 * k + p], c0, c0 + n, c0 + 2 * n, c0 + 3 * n);
  }
  for (; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy1(n, b + p * n, a[i * k + p], c + i * n);
}

// C[M,N] += A^T * B with A stored [K,M], B stored [K,N]
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    float* c0 = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float* ap = a + p * m + i;
      axpy4(n, b + p * n, ap[0], ap[1], ap[2], ap[3], c0, c0 + n, c0 + 2 * n, c0 + 3 * n);
    }
  }
  for (; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy1(n, b + p * n, a[p * m + i], c + i * n);
}

// C[M,N] += A * B^T with A stored [M,K], B stored [N,K]
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c) {
  std::vector<float> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(m, n, k, a, bt.data(), c);
}

}  // namespace gfss::num::detail
