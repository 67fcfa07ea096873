#pragma once

#include <cstddef>

// Vector kernels behind the network/optimizer inner loops.
// Every kernel has a scalar reference implementation and an AVX2+FMA
// variant; the active backend is picked once at startup from CPU
// capabilities (override with DTSYNC_KERNELS=scalar|avx2).

namespace dtsync::kern {

struct Backend {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // y = W x + bias, W row-major [rows x cols]; bias may be null
  void (*matvec)(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* y);

  // x = W^T y, W row-major [rows x cols]; x has length cols
  void (*matvec_t)(const double* w, std::size_t rows, std::size_t cols,
                   const double* y, double* x);

  // W += y x^T (rank-1 accumulate), W row-major [rows x cols]
  void (*ger_acc)(double* w, std::size_t rows, std::size_t cols,
                  const double* y, const double* x);

  // a[i] = max(z[i], 0)
  void (*relu)(const double* z, double* a, std::size_t n);

  // gz[i] = z[i] > 0 ? ga[i] : 0  (gz may alias ga)
  void (*relu_backward)(const double* z, const double* ga, double* gz,
                        std::size_t n);

  // Bias-corrected Adam update of p with moments m, v and gradient g:
  //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
  //   p -= lr * (m*bc1_inv) / (sqrt(v*bc2_inv) + eps)
  // Returns nonzero if any updated parameter is non-finite.
  int (*adam_update)(double* p, double* m, double* v, const double* g,
                     std::size_t n, double lr, double b1, double b2,
                     double eps, double bc1_inv, double bc2_inv);
};

const Backend& scalar_backend();
const Backend& avx2_backend();  // scalar fallback when AVX2 is unavailable
bool avx2_runtime_supported();

// Runtime-selected backend (cached after first call).
const Backend& active();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void matvec(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, const double* bias, double* y) {
  active().matvec(w, rows, cols, x, bias, y);
}
inline void matvec_t(const double* w, std::size_t rows, std::size_t cols,
                     const double* y, double* x) {
  active().matvec_t(w, rows, cols, y, x);
}
inline void ger_acc(double* w, std::size_t rows, std::size_t cols,
                    const double* y, const double* x) {
  active().ger_acc(w, rows, cols, y, x);
}
inline void relu(const double* z, double* a, std::size_t n) {
  active().relu(z, a, n);
}
inline void relu_backward(const double* z, const double* ga, double* gz,
                          std::size_t n) {
  active().relu_backward(z, ga, gz, n);
}
inline int adam_update(double* p, double* m, double* v, const double* g,
                       std::size_t n, double lr, double b1, double b2,
                       double eps, double bc1_inv, double bc2_inv) {
  return active().adam_update(p, m, v, g, n, lr, b1, b2, eps, bc1_inv,
                              bc2_inv);
}

}  // namespace dtsync::kern
