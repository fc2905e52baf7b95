#include "driftbench/kernels/reference.h"

#include <cmath>

namespace driftbench::kernels::reference {

namespace {
constexpr double kGeluC = 0.7978845608028654;
}

void matmul(const double* x, const double* w, double* y, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* yrow = y + static_cast<int64_t>(i) * n;
    const double* xrow = x + static_cast<int64_t>(i) * k;
    for (int j = 0; j < n; ++j) yrow[j] = 0.0;
    for (int a = 0; a < k; ++a) {
      const double xv = xrow[a];
      const double* wrow = w + static_cast<int64_t>(a) * n;
      for (int j = 0; j < n; ++j) yrow[j] += xv * wrow[j];
    }
  }
}

void matmul_dx(const double* dy, const double* w, double* dx, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* dyrow = dy + static_cast<int64_t>(i) * n;
    double* dxrow = dx + static_cast<int64_t>(i) * k;
    for (int a = 0; a < k; ++a) {
      const double* wrow = w + static_cast<int64_t>(a) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += dyrow[j] * wrow[j];
      dxrow[a] = acc;
    }
  }
}

void matmul_dw(const double* x, const double* dy, double* dw, int m, int k, int n) {
  for (int a = 0; a < k; ++a) {
    double* dwrow = dw + static_cast<int64_t>(a) * n;
    for (int i = 0; i < m; ++i) {
      const double xv = x[static_cast<int64_t>(i) * k + a];
      const double* dyrow = dy + static_cast<int64_t>(i) * n;
      for (int j = 0; j < n; ++j) dwrow[j] += xv * dyrow[j];
    }
  }
}

void softmax_rows(double* x, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    double* row = x + static_cast<int64_t>(i) * cols;
    double mx = row[0];
    for (int j = 1; j < cols; ++j) mx = row[j] > mx ? row[j] : mx;
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) row[j] *= inv;
  }
}

void layernorm_fwd(const double* x, const double* gamma, const double* beta, double* y,
                   double* mean, double* rstd, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    const double* xrow = x + static_cast<int64_t>(i) * cols;
    double* yrow = y + static_cast<int64_t>(i) * cols;
    double mu = 0.0;
    for (int j = 0; j < cols; ++j) mu += xrow[j];
    mu /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double d = xrow[j] - mu;
      var += d * d;
    }
    var /= cols;
    const double rs = 1.0 / std::sqrt(var + 1e-5);
    mean[i] = mu;
    rstd[i] = rs;
    for (int j = 0; j < cols; ++j) yrow[j] = (xrow[j] - mu) * rs * gamma[j] + beta[j];
  }
}

void layernorm_bwd(const double* dy, const double* x, const double* gamma, const double* mean,
                   const double* rstd, double* dx, double* dgamma, double* dbeta, int rows,
                   int cols) {
  for (int j = 0; j < cols; ++j) {
    double dg = 0.0, db = 0.0;
    for (int i = 0; i < rows; ++i) {
      const int64_t idx = static_cast<int64_t>(i) * cols + j;
      const double xhat = (x[idx] - mean[i]) * rstd[i];
      dg += dy[idx] * xhat;
      db += dy[idx];
    }
    dgamma[j] += dg;
    dbeta[j] += db;
  }
  for (int i = 0; i < rows; ++i) {
    const double* dyrow = dy + static_cast<int64_t>(i) * cols;
    const double* xrow = x + static_cast<int64_t>(i) * cols;
    double* dxrow = dx + static_cast<int64_t>(i) * cols;
    double sum1 = 0.0, sum2 = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double xhat = (xrow[j] - mean[i]) * rstd[i];
      const double g = dyrow[j] * gamma[j];
      sum1 += g;
      sum2 += g * xhat;
    }
    sum1 /= cols;
    sum2 /= cols;
    for (int j = 0; j < cols; ++j) {
      const double xhat = (xrow[j] - mean[i]) * rstd[i];
      const double g = dyrow[j] * gamma[j];
      dxrow[j] = (g - sum1 - xhat * sum2) * rstd[i];
    }
  }
}

void gelu_fwd(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    y[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + 0.044715 * v * v * v)));
  }
}

void gelu_bwd(const double* x, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    const double u = kGeluC * (v + 0.044715 * v * v * v);
    const double t = std::tanh(u);
    const double du = kGeluC * (1.0 + 3.0 * 0.044715 * v * v);
    dx[i] = dy[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
  }
}

void adamw_step(double* p, const double* g, double* m, double* v, int64_t n,
                const AdamwParams& hp, int64_t step) {
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
  for (int64_t i = 0; i < n; ++i) {
    m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
    v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= hp.lr * (mhat / (std::sqrt(vhat) + hp.eps) + hp.weight_decay * p[i]);
  }
}

}  // namespace driftbench::kernels::reference
