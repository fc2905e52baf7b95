#pragma once

#include <cstdint>

namespace driftbench::kernels {

// Dense math kernels behind the desk-scale trainer. All matrices are
// row-major doubles. Every kernel is parallelized with OpenMP across
// independent output elements while each element's accumulation runs in a
// fixed serial order, so results are bit-identical for any thread count and
// match the serial reference implementations exactly.

// y[m,n] = x[m,k] @ w[k,n]
void matmul(const double* x, const double* w, double* y, int m, int k, int n);

// dx[m,k] = dy[m,n] @ w[k,n]^T
void matmul_dx(const double* dy, const double* w, double* dx, int m, int k, int n);

// dw[k,n] += x[m,k]^T @ dy[m,n]
void matmul_dw(const double* x, const double* dy, double* dw, int m, int k, int n);

// Row-wise softmax in place, max-subtracted.
void softmax_rows(double* x, int rows, int cols);

// LayerNorm over the last dimension with learned gain/bias.
void layernorm_fwd(const double* x, const double* gamma, const double* beta, double* y,
                   double* mean, double* rstd, int rows, int cols);
void layernorm_bwd(const double* dy, const double* x, const double* gamma, const double* mean,
                   const double* rstd, double* dx, double* dgamma, double* dbeta, int rows,
                   int cols);

// tanh-approximation GELU.
void gelu_fwd(const double* x, double* y, int64_t n);
void gelu_bwd(const double* x, const double* dy, double* dx, int64_t n);

void add_inplace(double* y, const double* x, int64_t n);
void scale_inplace(double* y, double a, int64_t n);
void zero(double* y, int64_t n);

double dot(const double* a, const double* b, int64_t n);
double l2_norm_sq(const double* a, int64_t n);

struct AdamwParams {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled-weight-decay Adam with bias correction; `step` is 1-based.
void adamw_step(double* p, const double* g, double* m, double* v, int64_t n,
                const AdamwParams& hp, int64_t step);

}  // namespace driftbench::kernels
