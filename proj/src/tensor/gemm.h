/*
 * Copyright 2026 The TAN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TAN_SRC_TENSOR_GEMM_H_
#define TAN_SRC_TENSOR_GEMM_H_

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <type_traits>

// Row-major accumulating matrix products. Every kernel keeps its innermost
// loop on contiguous memory so it vectorizes; the reduction order is fixed
// per build, which keeps results deterministic.

namespace tanet::internal {

// C[M,N] += A[M,K] * B[N,K]^T
// Four rows of A share each pass over a row of B.
template <typename S>
void GemmNT(int64_t m, int64_t n, int64_t k, const S* __restrict a,
            const S* __restrict b, S* __restrict c) {
  int64_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const S* a0 = a + i * k;
    const S* a1 = a0 + k;
    const S* a2 = a1 + k;
    const S* a3 = a2 + k;
    for (int64_t j = 0; j < n; ++j) {
      const S* b_row = b + j * k;
      S acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
#pragma omp simd reduction(+ : acc0, acc1, acc2, acc3)
      for (int64_t p = 0; p < k; ++p) {
        acc0 += a0[p] * b_row[p];
        acc1 += a1[p] * b_row[p];
        acc2 += a2[p] * b_row[p];
        acc3 += a3[p] * b_row[p];
      }
      c[i * n + j] += acc0;
      c[(i + 1) * n + j] += acc1;
      c[(i + 2) * n + j] += acc2;
      c[(i + 3) * n + j] += acc3;
    }
  }
  for (; i < m; ++i) {
    const S* a_row = a + i * k;
    S* c_row = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const S* b_row = b + j * k;
      S acc = 0;
#pragma omp simd reduction(+ : acc)
      for (int64_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
      c_row[j] += acc;
    }
  }
}

// C[M,N] += op(A) * B[K,N] where op(A)[i,p] = a[i * a_row + p * a_col].
// Tiles of 4 rows x 64 columns accumulate over all of K in a local buffer,
// so each B row segment is read once per four output rows. Every output
// element still sums its K products in increasing p.
typedef float Float16 __attribute__((vector_size(64)));

inline Float16 LoadFloat16(const float* p) {
  Float16 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

// One full 4 x 64 float tile with the accumulators held in registers.
inline void FloatTile4x64(int64_t n, int64_t k, const float* __restrict a,
                          int64_t a_row, int64_t a_col,
                          const float* __restrict b, float* __restrict c) {
  Float16 acc[4][4] = {};
  for (int64_t p = 0; p < k; ++p) {
    const float* b_row = b + p * n;
    const Float16 b0 = LoadFloat16(b_row), b1 = LoadFloat16(b_row + 16),
                  b2 = LoadFloat16(b_row + 32), b3 = LoadFloat16(b_row + 48);
    for (int r = 0; r < 4; ++r) {
      const float av = a[r * a_row + p * a_col];
      acc[r][0] += av * b0;
      acc[r][1] += av * b1;
      acc[r][2] += av * b2;
      acc[r][3] += av * b3;
    }
  }
  for (int r = 0; r < 4; ++r) {
    for (int q = 0; q < 4; ++q) {
      float* dst = c + r * n + q * 16;
      const Float16 sum = LoadFloat16(dst) + acc[r][q];
      std::memcpy(dst, &sum, sizeof(sum));
    }
  }
}

template <typename S>
void GemmXN(int64_t m, int64_t n, int64_t k, const S* __restrict a,
            int64_t a_row, int64_t a_col, const S* __restrict b,
            S* __restrict c) {
  constexpr int64_t kRows = 4, kCols = 64;
  for (int64_t j0 = 0; j0 < n; j0 += kCols) {
    const int64_t cols = std::min(kCols, n - j0);
    int64_t i0 = 0;
    if constexpr (std::is_same_v<S, float>) {
      if (cols == kCols) {
        for (; i0 + kRows <= m; i0 += kRows) {
          FloatTile4x64(n, k, a + i0 * a_row, a_row, a_col, b + j0,
                        c + i0 * n + j0);
        }
      }
    }
    for (; i0 + kRows <= m; i0 += kRows) {
      alignas(64) S acc[kRows][kCols] = {};
      for (int64_t p = 0; p < k; ++p) {
        const S* b_row = b + p * n + j0;
        const S a0 = a[i0 * a_row + p * a_col];
        const S a1 = a[(i0 + 1) * a_row + p * a_col];
        const S a2 = a[(i0 + 2) * a_row + p * a_col];
        const S a3 = a[(i0 + 3) * a_row + p * a_col];
        if (cols == kCols) {
#pragma omp simd
          for (int64_t j = 0; j < kCols; ++j) {
            acc[0][j] += a0 * b_row[j];
            acc[1][j] += a1 * b_row[j];
            acc[2][j] += a2 * b_row[j];
            acc[3][j] += a3 * b_row[j];
          }
        } else {
#pragma omp simd
          for (int64_t j = 0; j < cols; ++j) {
            acc[0][j] += a0 * b_row[j];
            acc[1][j] += a1 * b_row[j];
            acc[2][j] += a2 * b_row[j];
            acc[3][j] += a3 * b_row[j];
          }
        }
      }
      for (int64_t r = 0; r < kRows; ++r) {
        S* c_row = c + (i0 + r) * n + j0;
#pragma omp simd
        for (int64_t j = 0; j < cols; ++j) c_row[j] += acc[r][j];
      }
    }
    for (; i0 < m; ++i0) {
      alignas(64) S acc[kCols] = {};
      for (int64_t p = 0; p < k; ++p) {
        const S* b_row = b + p * n + j0;
        const S av = a[i0 * a_row + p * a_col];
#pragma omp simd
        for (int64_t j = 0; j < cols; ++j) acc[j] += av * b_row[j];
      }
      S* c_row = c + i0 * n + j0;
#pragma omp simd
      for (int64_t j = 0; j < cols; ++j) c_row[j] += acc[j];
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename S>
void GemmTN(int64_t m, int64_t n, int64_t k, const S* __restrict a,
            const S* __restrict b, S* __restrict c) {
  GemmXN(m, n, k, a, 1, m, b, c);
}

// C[M,N] += A[M,K] * B[K,N]
template <typename S>
void GemmNN(int64_t m, int64_t n, int64_t k, const S* __restrict a,
            const S* __restrict b, S* __restrict c) {
  GemmXN(m, n, k, a, k, 1, b, c);
}

}  // namespace tanet::internal

#endif  // TAN_SRC_TENSOR_GEMM_H_
