#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hdpo/error.hpp"
#include "hdpo/kernels.hpp"
#include "hdpo/oracle.hpp"
#include "hdpo/policy.hpp"

using namespace hdpo;

namespace {

Vocab vocab_of(std::size_t n) { return Vocab{n, 0, 1}; }

std::vector<double> seeded_visual(std::uint64_t seed, std::size_t d_v) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(d_v);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("zero parameters give a uniform next-token distribution") {
  const PolicyParams p(vocab_of(4), 16, 8);
  const std::vector<double> v(8, 0.3);
  const auto x = TokenSeq::prompt({2, 3});
  const auto ctx = make_step_context(p, v, x, std::vector<TokenId>{0});
  const auto lp = step_log_probs(p, ctx);
  REQUIRE(lp.size() == 4);
  for (double l : lp) CHECK(l == doctest::Approx(-1.3862943611198906).epsilon(1e-15));

  const auto y = TokenSeq::response({2, 3, 1});
  CHECK(sequence_log_prob(p, v, x, y) == doctest::Approx(-3.0 * std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("seeded log-probs match the brute-force softmax over a parameter dump") {
  const PolicyParams p = PolicyParams::gaussian(vocab_of(8), 42, 16, 8);
  std::stringstream dump;
  write_params(dump, p);
  const PolicyParams reloaded = read_params(dump);
  REQUIRE(reloaded == p);

  const auto v = seeded_visual(42, 8);
  const auto x = TokenSeq::prompt({2, 5, 7});
  const auto y = TokenSeq::response({3, 4, 6, 1});
  const auto brute = oracle::brute_step_distributions(reloaded, v, x, y);
  REQUIRE(brute.size() == y.size());
  std::vector<TokenId> prefix;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto lp = step_log_probs(p, make_step_context(p, v, x, prefix));
    double total = 0.0;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      CHECK(lp[k] == doctest::Approx(std::log(brute[i][k])).epsilon(1e-12));
      total += std::exp(lp[k]);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    prefix.push_back(y.tokens[i]);
  }
  CHECK(std::abs(sequence_log_prob(p, v, x, y) - oracle::brute_sequence_log_prob(reloaded, v, x, y)) <
        1e-10);
}

TEST_CASE("log-probs agree across kernel variants") {
  const PolicyParams p = PolicyParams::gaussian(vocab_of(11), 5, 16, 8, 0.4);
  const auto v = seeded_visual(5, 8);
  const auto x = TokenSeq::prompt({2, 9, 10});
  const auto y = TokenSeq::response({4, 4, 8, 1});
  const kernels::Isa before = kernels::active_isa();
  kernels::set_active_isa(kernels::Isa::scalar);
  const double ref = sequence_log_prob(p, v, x, y);
  for (auto isa : kernels::available_isas()) {
    kernels::set_active_isa(isa);
    CHECK(sequence_log_prob(p, v, x, y) == doctest::Approx(ref).epsilon(1e-13));
  }
  kernels::set_active_isa(before);
}

TEST_CASE("sequence log-prob is the sum of step log-probs and never positive") {
  const PolicyParams p = PolicyParams::gaussian(vocab_of(9), 3, 16, 8, 1.0);
  const auto v = seeded_visual(3, 8);
  const auto x = TokenSeq::prompt({4});
  const auto y = TokenSeq::response({2, 7, 1});
  const auto eval = forward_sequence(p, v, x, y);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += eval.steps[i].log_probs[y.tokens[i]];
  CHECK(eval.total == doctest::Approx(sum).epsilon(1e-14));
  CHECK(sequence_log_prob(p, v, x, y) <= 0.0);
}

TEST_CASE("invalid sequences and dimension mismatches are rejected") {
  const PolicyParams p(vocab_of(6), 4, 3);
  const std::vector<double> v(3, 0.0);
  const auto x = TokenSeq::prompt({2});
  CHECK_THROWS_AS(sequence_log_prob(p, v, x, TokenSeq::response({})), InvalidInput);
  CHECK_THROWS_AS(sequence_log_prob(p, v, x, TokenSeq::response({2, 3})), InvalidInput);
  CHECK_THROWS_AS(sequence_log_prob(p, v, x, TokenSeq::response({9, 1})), InvalidInput);
  const std::vector<double> wrong(5, 0.0);
  CHECK_THROWS_AS(sequence_log_prob(p, wrong, x, TokenSeq::response({2, 1})), ConfigError);
}

TEST_CASE("prefix window holds the last k tokens of [bos] + prefix") {
  const PolicyParams p = PolicyParams::gaussian(vocab_of(8), 1, 4, 2, 1.0);
  const std::vector<double> v(2, 0.0);
  const auto x = TokenSeq::prompt({2});
  const auto y = TokenSeq::response({3, 4, 5, 1});
  const auto eval = forward_sequence(p, v, x, y);
  CHECK(eval.steps[0].window_tokens == std::vector<TokenId>{0});
  CHECK(eval.steps[1].window_tokens == std::vector<TokenId>{0, 3});
  CHECK(eval.steps[3].window_tokens == std::vector<TokenId>{4, 5});
}

TEST_CASE("out gradient at zero logits is the sum of (onehot - uniform) outer phi") {
  PolicyParams p = PolicyParams::gaussian(vocab_of(5), 9, 4, 3, 1.0);
  for (double& e : p.mutable_blocks().out.data) e = 0.0;
  const auto v = seeded_visual(9, 3);
  const auto x = TokenSeq::prompt({2, 3});
  const auto y = TokenSeq::response({4, 2, 1});
  const auto eval = forward_sequence(p, v, x, y);
  const PolicyGrad g = grad_sequence_log_prob(p, v, x, y);
  Matrix expected(5, 4);
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t k = 0; k < 5; ++k) {
      const double coef = (k == y.tokens[i] ? 1.0 : 0.0) - 0.2;
      for (std::size_t c = 0; c < 4; ++c) expected(k, c) += coef * eval.steps[i].phi[c];
    }
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(g.out.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("analytic sequence gradient matches finite differences") {
  const PolicyParams p = PolicyParams::gaussian(vocab_of(7), 11, 5, 3, 0.5);
  const auto v = seeded_visual(11, 3);
  const auto x = TokenSeq::prompt({2, 6});
  const auto y = TokenSeq::response({3, 5, 1});
  const PolicyGrad g = grad_sequence_log_prob(p, v, x, y);
  const PolicyGrad fd = oracle::finite_diff_grad(
      [&](const PolicyParams& q) { return sequence_log_prob(q, v, x, y); }, p);
  CHECK(oracle::compare_gradients(g, fd).worst() < 1e-5);
}

TEST_CASE("embedding rows of unused tokens get zero gradient") {
  const PolicyParams p = PolicyParams::gaussian(vocab_of(10), 4, 4, 2, 0.5);
  const auto v = seeded_visual(4, 2);
  const auto x = TokenSeq::prompt({2});
  const auto y = TokenSeq::response({3, 1});
  const PolicyGrad g = grad_sequence_log_prob(p, v, x, y);
  // bos, prompt token 2 and the prefix token 3 are used; eos is never in a window.
  const std::set<TokenId> used{0, 2, 3};
  for (TokenId t = 0; t < 10; ++t) {
    if (used.count(t)) continue;
    for (double e : g.embed.row(t)) CHECK(e == 0.0);
  }
}

TEST_CASE("frozen copies are independent and immutable") {
  PolicyParams p = PolicyParams::gaussian(vocab_of(6), 2, 4, 2);
  const PolicyParams ref = freeze_reference(p);
  CHECK(ref.frozen());
  CHECK(ref.blocks() == p.blocks());
  const auto v = seeded_visual(2, 2);
  const auto x = TokenSeq::prompt({2});
  const auto y = TokenSeq::response({4, 1});
  const double before = sequence_log_prob(p, v, x, y);
  CHECK(sequence_log_prob(ref, v, x, y) == before);
  p.mutable_blocks().out(4, 0) += 1.0;
  CHECK(sequence_log_prob(ref, v, x, y) == before);
  CHECK(sequence_log_prob(p, v, x, y) != before);
  PolicyParams ref_copy = ref;
  CHECK_THROWS_AS(ref_copy.mutable_blocks(), ContractViolation);
  CHECK_THROWS_AS(grad_sequence_log_prob(ref, v, x, y), ContractViolation);
}

TEST_CASE("parameter dumps round-trip bit-exactly through a file") {
  const PolicyParams p = PolicyParams::gaussian(vocab_of(13), 77, 16, 8, 0.3);
  const std::string path = "test_policy_params.txt";
  save_params(path, p);
  const PolicyParams q = load_params(path);
  CHECK(q == p);
  CHECK(q.checksum() == p.checksum());
  std::remove(path.c_str());
}

TEST_CASE("gaussian initialisation is seed-deterministic") {
  CHECK(PolicyParams::gaussian(vocab_of(8), 3) == PolicyParams::gaussian(vocab_of(8), 3));
  CHECK(PolicyParams::gaussian(vocab_of(8), 3).checksum() !=
        PolicyParams::gaussian(vocab_of(8), 4).checksum());
}

TEST_CASE("normalization check passes on real policies and flags corrupted ones") {
  const PolicyParams zero(vocab_of(6), 4, 2);
  const PolicyParams seeded = PolicyParams::gaussian(vocab_of(6), 8, 4, 2, 2.0);
  const std::vector<double> v{0.5, -0.5};
  const auto x = TokenSeq::prompt({3});
  std::vector<StepContext> ctxs;
  for (TokenId t = 0; t < 6; ++t) ctxs.push_back(make_step_context(seeded, v, x, std::vector<TokenId>{t}));
  CHECK(oracle::check_normalization(zero, ctxs).ok);
  CHECK(oracle::check_normalization(seeded, ctxs).ok);
  std::size_t calls = 0;
  const auto corrupted = oracle::check_normalization(
      [&](const StepContext& c) {
        auto lp = step_log_probs(seeded, c);
        if (calls++ == 3) lp[0] += 0.1;
        return lp;
      },
      ctxs);
  CHECK_FALSE(corrupted.ok);
  REQUIRE(corrupted.first_failure.has_value());
  CHECK(*corrupted.first_failure == 3);
}
