#include "hdpo/kernels.hpp"

namespace hdpo::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(m + r * cols, x, cols);
}

void gemv_t_acc(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy(x[r], m + r * cols, y, cols);
}

void rank1(double* m, std::size_t rows, std::size_t cols, double alpha, const double* u,
           const double* v) {
  for (std::size_t r = 0; r < rows; ++r) axpy(alpha * u[r], v, m + r * cols, cols);
}

constexpr KernelTable kTable{Isa::scalar, dot, axpy, gemv, gemv_t_acc, rank1};

}  // namespace

const KernelTable& table() noexcept { return kTable; }

}  // namespace hdpo::kernels::scalar
