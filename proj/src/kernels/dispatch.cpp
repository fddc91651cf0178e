#include <atomic>
#include <cassert>

#include "hdpo/error.hpp"
#include "hdpo/kernels.hpp"

namespace hdpo::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(HDPO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(HDPO_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table_for(detected_isa())};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

bool isa_available(Isa isa) { return cpu_supports(isa); }

Isa detected_isa() {
  static const Isa best = [] {
    if (cpu_supports(Isa::avx2)) return Isa::avx2;
    if (cpu_supports(Isa::neon)) return Isa::neon;
    return Isa::scalar;
  }();
  return best;
}

const KernelTable& table_for(Isa isa) {
  if (!cpu_supports(isa)) {
    throw ConfigError("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this host");
  }
  switch (isa) {
#if defined(HDPO_HAVE_AVX2)
    case Isa::avx2: return avx2::table();
#endif
#if defined(HDPO_HAVE_NEON)
    case Isa::neon: return neon::table();
#endif
    default: return scalar::table();
  }
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

Isa active_isa() { return active().isa; }

void set_active_isa(Isa isa) { active_slot().store(&table_for(isa), std::memory_order_release); }

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(const Matrix& m, std::span<const double> x, std::span<double> y) {
  assert(x.size() == m.cols && y.size() == m.rows);
  active().gemv(m.data.data(), m.rows, m.cols, x.data(), y.data());
}

void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
  assert(x.size() == m.rows && y.size() == m.cols);
  active().gemv_t_acc(m.data.data(), m.rows, m.cols, x.data(), y.data());
}

void rank1(Matrix& m, double alpha, std::span<const double> u, std::span<const double> v) {
  assert(u.size() == m.rows && v.size() == m.cols);
  active().rank1(m.data.data(), m.rows, m.cols, alpha, u.data(), v.data());
}

}  // namespace hdpo::kernels
