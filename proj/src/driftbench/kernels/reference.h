#pragma once

#include <cstdint>

#include "driftbench/kernels/kernels.h"

namespace driftbench::kernels::reference {

// Plain serial implementations kept as the oracle for the OpenMP kernels.
// Accumulation order matches the parallel versions element-for-element, so
// tests can assert bit equality, not just tolerance.

void matmul(const double* x, const double* w, double* y, int m, int k, int n);
void matmul_dx(const double* dy, const double* w, double* dx, int m, int k, int n);
void matmul_dw(const double* x, const double* dy, double* dw, int m, int k, int n);
void softmax_rows(double* x, int rows, int cols);
void layernorm_fwd(const double* x, const double* gamma, const double* beta, double* y,
                   double* mean, double* rstd, int rows, int cols);
void layernorm_bwd(const double* dy, const double* x, const double* gamma, const double* mean,
                   const double* rstd, double* dx, double* dgamma, double* dbeta, int rows,
                   int cols);
void gelu_fwd(const double* x, double* y, int64_t n);
void gelu_bwd(const double* x, const double* dy, double* dx, int64_t n);
void adamw_step(double* p, const double* g, double* m, double* v, int64_t n,
                const AdamwParams& hp, int64_t step);

}  // namespace driftbench::kernels::reference
