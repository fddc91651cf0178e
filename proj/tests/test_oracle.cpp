#include <doctest.h>

#include <cmath>
#include <limits>

#include "hdpo/error.hpp"
#include "hdpo/gradcheck.hpp"
#include "hdpo/oracle.hpp"

using namespace hdpo;

TEST_CASE("finite differences of a quadratic recover 2p") {
  const std::vector<double> p{0.5, -1.25, 3.0, 0.0};
  const auto g = oracle::finite_diff_grad(
      [](std::span<const double> q) {
        double s = 0.0;
        for (double x : q) s += x * x;
        return s;
      },
      p);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(g[i] - 2.0 * p[i]) < 1e-8);
}

TEST_CASE("finite differences of a constant are zero") {
  const PolicyParams p = PolicyParams::gaussian({6, 0, 1}, 1, 3, 2);
  const PolicyGrad g = oracle::finite_diff_grad([](const PolicyParams&) { return 4.0; }, p);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.at(i) == 0.0);
}

TEST_CASE("non-finite losses abort finite differencing with the entry index") {
  const std::vector<double> p{1.0, 2.0};
  try {
    oracle::finite_diff_grad(
        [](std::span<const double> q) {
          return q[1] > 2.0 ? std::numeric_limits<double>::infinity() : q[0];
        },
        p);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("relative error uses the floor for tiny gradients") {
  PolicyGrad a = ParamBlocks::zeros(2, 1, 1), n = ParamBlocks::zeros(2, 1, 1);
  a.out(0, 0) = 1e-9;
  n.out(0, 0) = 2e-9;
  const auto cmp = oracle::compare_gradients(a, n);
  CHECK(cmp.max_rel_err[2] == doctest::Approx(1e-9 / oracle::kRelErrFloor));
  a.embed(1, 0) = 1.0;
  n.embed(1, 0) = 1.1;
  CHECK(oracle::compare_gradients(a, n).worst() == doctest::Approx(0.1 / 1.1));
}

TEST_CASE("Bradley-Terry probability is stable and symmetric") {
  CHECK(oracle::bt_probability(0.0, 0.0) == 0.5);
  CHECK(oracle::bt_probability(std::log(3.0), 0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(oracle::bt_probability(1000.0, 0.0) == 1.0);
  CHECK(oracle::bt_probability(0.0, 1000.0) == doctest::Approx(0.0));
  CHECK(oracle::bt_probability(0.3, -0.2) + oracle::bt_probability(-0.2, 0.3) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("margin reassembly by hand") {
  oracle::PairLogProbs equal{-2.0, -2.0, -2.0, -2.0};
  CHECK(oracle::reassemble_u(equal, 0.1) == 0.0);
  // 0.1 * ((-1) - (-3)) - 0.1 * ((-4) - (-2)) = 0.2 + 0.2
  oracle::PairLogProbs pair{-1.0, -3.0, -4.0, -2.0};
  CHECK(oracle::reassemble_u(pair, 0.1) == doctest::Approx(0.4).epsilon(1e-15));
  // 0.1*2 - 0.1*(0.7*(-2) + 0.3*(1)) = 0.2 + 0.11
  oracle::DualLogProbs dual{-1.0, -3.0, -4.0, -2.0, -5.0, -6.0};
  CHECK(oracle::reassemble_u(dual, 0.1, 0.7, 0.3) == doctest::Approx(0.31).epsilon(1e-14));
}

TEST_CASE("brute-force step distributions sum to one") {
  const GradInstance g = random_grad_instance(5);
  const auto& r = g.record;
  for (const auto& dist : oracle::brute_step_distributions(g.theta, r.video.chosen.features,
                                                           r.prompt, r.chosen)) {
    double s = 0.0;
    for (double p : dist) s += p;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("gradient check harness instances are seed-deterministic and valid") {
  const GradInstance a = random_grad_instance(17);
  const GradInstance b = random_grad_instance(17);
  CHECK(a.theta == b.theta);
  CHECK(a.record.chosen == b.record.chosen);
  CHECK(a.reference.frozen());
  CHECK(a.record.chosen != a.record.rejected_relevant);
  const Vocab v = a.theta.vocab();
  CHECK_NOTHROW(validate_sequence(a.record.chosen, v));
  CHECK_NOTHROW(validate_sequence(a.record.rejected_irrelevant, v));
  CHECK_NOTHROW(validate_sequence(a.record.prompt, v));
}

TEST_CASE("total-loss surrogate equals the real loss at the expansion point") {
  const GradInstance g = random_grad_instance(23);
  const double real = total_loss(g.theta, g.reference, g.record, g.weights).l_total;
  CHECK(surrogate_term_value(g, LossTerm::total, g.theta) == doctest::Approx(real).epsilon(1e-14));
  CHECK(check_term(g, LossTerm::total).worst() < 1e-5);
}
