#include "dtsync/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace dtsync::kern {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = bias ? bias[r] : 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* y, double* x) {
  std::memset(x, 0, cols * sizeof(double));
  for (std::size_t r = 0; r < rows; ++r) {
    const double yr = y[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) x[c] += yr * row[c];
  }
}

void ger_acc(double* w, std::size_t rows, std::size_t cols, const double* y,
             const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double yr = y[r];
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += yr * x[c];
  }
}

void relu(const double* z, double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_backward(const double* z, const double* ga, double* gz,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gz[i] = z[i] > 0.0 ? ga[i] : 0.0;
}

int adam_update(double* p, double* m, double* v, const double* g,
                std::size_t n, double lr, double b1, double b2, double eps,
                double bc1_inv, double bc2_inv) {
  int bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = b1 * m[i] + (1.0 - b1) * gi;
    v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
    p[i] -= lr * (m[i] * bc1_inv) / (std::sqrt(v[i] * bc2_inv) + eps);
    if (!std::isfinite(p[i])) bad = 1;
  }
  return bad;
}

}  // namespace scalar

const Backend& scalar_backend() {
  static const Backend b{
      "scalar",        scalar::dot,  scalar::axpy,
      scalar::matvec,  scalar::matvec_t, scalar::ger_acc,
      scalar::relu,    scalar::relu_backward, scalar::adam_update,
  };
  return b;
}

const Backend& active() {
  static const Backend* chosen = [] {
    const char* force = std::getenv("DTSYNC_KERNELS");
    if (force != nullptr) {
      if (std::strcmp(force, "scalar") == 0) return &scalar_backend();
      if (std::strcmp(force, "avx2") == 0 && avx2_runtime_supported())
        return &avx2_backend();
    }
    return avx2_runtime_supported() ? &avx2_backend() : &scalar_backend();
  }();
  return *chosen;
}

}  // namespace dtsync::kern
