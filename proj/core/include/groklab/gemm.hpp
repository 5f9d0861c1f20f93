// SPDX-License-Identifier: Apache-2.0
#pragma once

// Thin typed wrappers over the CBLAS gemm kernels. All higher-level matmul
// semantics (shape checks, autodiff rules) live in tape.hpp; only the inner
// multiply is delegated.

#include <cblas.h>

namespace groklab::detail {

// C = alpha * A * B + beta * C, row-major, A: m x k, B: k x n.
inline void gemm_nn(int m, int n, int k, float alpha, const float* a,
                    const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, alpha, a, k,
              b, n, beta, c, n);
}
inline void gemm_nn(int m, int n, int k, double alpha, const double* a,
                    const double* b, double beta, double* c) {
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, alpha, a, k,
              b, n, beta, c, n);
}

// C = alpha * A * B^T + beta * C, A: m x k, B: n x k.
inline void gemm_nt(int m, int n, int k, float alpha, const float* a,
                    const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, n, k, alpha, a, k, b,
              k, beta, c, n);
}
inline void gemm_nt(int m, int n, int k, double alpha, const double* a,
                    const double* b, double beta, double* c) {
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, n, k, alpha, a, k, b,
              k, beta, c, n);
}

// C = alpha * A^T * B + beta * C, A: k x m, B: k x n.
inline void gemm_tn(int m, int n, int k, float alpha, const float* a,
                    const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, m, n, k, alpha, a, m, b,
              n, beta, c, n);
}
inline void gemm_tn(int m, int n, int k, double alpha, const double* a,
                    const double* b, double beta, double* c) {
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, m, n, k, alpha, a, m, b,
              n, beta, c, n);
}

}  // namespace groklab::detail
