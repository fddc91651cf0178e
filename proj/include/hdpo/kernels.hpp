#pragma once

// Dense f64 kernels behind the policy's inner loops.
//
// Every kernel has a scalar reference implementation; vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64) are selected at runtime from what the
// host CPU reports. Variants agree with the reference to rounding, not
// bit-for-bit, because FMA and lane-wise reduction reassociate the sums.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hdpo/matrix.hpp"

namespace hdpo::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = M x, M is rows x cols row-major
  void (*gemv)(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += M^T x
  void (*gemv_t_acc)(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
  // M += alpha * u v^T
  void (*rank1)(double* m, std::size_t rows, std::size_t cols, double alpha, const double* u,
                const double* v);
};

namespace scalar {
const KernelTable& table() noexcept;
}
#if defined(HDPO_HAVE_AVX2)
namespace avx2 {
const KernelTable& table() noexcept;
}
#endif
#if defined(HDPO_HAVE_NEON)
namespace neon {
const KernelTable& table() noexcept;
}
#endif

// ISAs compiled in and supported by this CPU, reference first.
std::vector<Isa> available_isas();
bool isa_available(Isa isa);

// Best available variant, detected once.
Isa detected_isa();

const KernelTable& table_for(Isa isa);
const KernelTable& active();
Isa active_isa();
// Override dispatch (tests, CLI --isa). Throws ConfigError if unavailable.
void set_active_isa(Isa isa);

// Thin span wrappers over the active table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(const Matrix& m, std::span<const double> x, std::span<double> y);
void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
void rank1(Matrix& m, double alpha, std::span<const double> u, std::span<const double> v);

}  // namespace hdpo::kernels
