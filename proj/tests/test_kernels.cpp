#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hdpo/error.hpp"
#include "hdpo/kernels.hpp"

using namespace hdpo;
using namespace hdpo::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("scalar reference is always available and listed first") {
  const auto isas = available_isas();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == Isa::scalar);
  CHECK(isa_available(Isa::scalar));
  CHECK(isa_available(detected_isa()));
}

TEST_CASE("every available variant agrees with the scalar reference") {
  const KernelTable& ref = table_for(Isa::scalar);
  std::mt19937_64 rng(7);
  for (Isa isa : available_isas()) {
    CAPTURE(isa_name(isa));
    const KernelTable& k = table_for(isa);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 16u, 33u}) {
      CAPTURE(n);
      const auto a = random_vec(rng, n);
      const auto b = random_vec(rng, n);
      CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-13));

      auto y1 = b, y2 = b;
      k.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      CHECK(max_abs_diff(y1, y2) < 1e-13);

      const std::size_t rows = n + 2;
      const auto m = random_vec(rng, rows * n);
      std::vector<double> g1(rows), g2(rows);
      k.gemv(m.data(), rows, n, a.data(), g1.data());
      ref.gemv(m.data(), rows, n, a.data(), g2.data());
      CHECK(max_abs_diff(g1, g2) < 1e-12);

      const auto xr = random_vec(rng, rows);
      auto t1 = a, t2 = a;
      k.gemv_t_acc(m.data(), rows, n, xr.data(), t1.data());
      ref.gemv_t_acc(m.data(), rows, n, xr.data(), t2.data());
      CHECK(max_abs_diff(t1, t2) < 1e-12);

      auto r1 = m, r2 = m;
      k.rank1(r1.data(), rows, n, -1.5, xr.data(), a.data());
      ref.rank1(r2.data(), rows, n, -1.5, xr.data(), a.data());
      CHECK(max_abs_diff(r1, r2) < 1e-12);
    }
  }
}

TEST_CASE("scalar kernels compute the textbook definitions") {
  const KernelTable& k = table_for(Isa::scalar);
  const std::vector<double> a{1, 2, 3}, b{4, -5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == 12.0);
  std::vector<double> m{1, 2, 3, 4, 5, 6};  // 2 x 3
  std::vector<double> y(2);
  k.gemv(m.data(), 2, 3, a.data(), y.data());
  CHECK(y == std::vector<double>{14, 32});
  std::vector<double> t{0, 0, 0};
  const std::vector<double> x{1, -1};
  k.gemv_t_acc(m.data(), 2, 3, x.data(), t.data());
  CHECK(t == std::vector<double>{-3, -3, -3});
  k.rank1(m.data(), 2, 3, 2.0, x.data(), a.data());
  CHECK(m == std::vector<double>{3, 6, 9, 2, 1, 0});
}

TEST_CASE("dispatch override round-trips and rejects unavailable variants") {
  const Isa before = active_isa();
  set_active_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  CHECK(active().isa == Isa::scalar);
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (!isa_available(isa)) CHECK_THROWS_AS(set_active_isa(isa), ConfigError);
  }
  set_active_isa(before);
  CHECK(active_isa() == before);
}
