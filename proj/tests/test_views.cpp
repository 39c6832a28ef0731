#include <doctest.h>

#include <cmath>
#include <random>

#include "m3fend/views.hpp"

using namespace m3fend;

namespace {
std::vector<double> randn(size_t n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}
}  // namespace

TEST_CASE("linear layer forward") {
  std::mt19937_64 rng(1);
  views::Linear lin("lin", 2, 3, rng);
  lin.W.v = {1, 0, 0, 1, 2, 3};  // 3x2
  lin.b.v = {10, 20, 30};
  ad::Tape t;
  std::vector<double> xv = {5, 7};
  auto y = lin.fwd(t, t.constant(xv, 2));
  CHECK(t.val(y)[0] == 15);
  CHECK(t.val(y)[1] == 27);
  CHECK(t.val(y)[2] == 61);
}

TEST_CASE("mlp channel output is strictly positive") {
  std::mt19937_64 rng(2);
  views::MlpChannel ch("emo0", 6, 10, 5, rng);
  for (int trial = 0; trial < 100; ++trial) {
    ad::Tape t;
    auto x = t.constant(randn(6, rng, 2.0), 6);
    auto r = ch.fwd(t, x);
    REQUIRE(r.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(t.val(r)[i] > 0.0);
  }
}

TEST_CASE("zero-weight mlp channel gives softplus(0)+eps everywhere") {
  std::mt19937_64 rng(3);
  views::MlpChannel ch("x", 4, 6, 3, rng);
  ch.l1.W.fill(0.0);
  ch.l1.b.fill(0.0);
  ch.l2.W.fill(0.0);
  ch.l2.b.fill(0.0);
  ad::Tape t;
  auto r = ch.fwd(t, t.constant(std::vector<double>{1, 2, 3, 4}, 4));
  double want = std::log(2.0) + views::kPositivityEps;
  for (int i = 0; i < 3; ++i) CHECK(t.val(r)[i] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("channels with different seeds disagree on the same input") {
  std::mt19937_64 rng(4);
  views::MlpChannel a("a", 4, 6, 3, rng), b("b", 4, 6, 3, rng);
  ad::Tape t;
  std::vector<double> xv = {1, -1, 0.5, 2};
  auto ra = a.fwd(t, t.constant(xv, 4));
  auto rb = b.fwd(t, t.constant(xv, 4));
  bool all_same = true;
  for (int i = 0; i < 3; ++i) all_same &= t.val(ra)[i] == t.val(rb)[i];
  CHECK(!all_same);
}

TEST_CASE("sem channel: positivity, short sequences, empty error") {
  std::mt19937_64 rng(5);
  int O = 6, D = 5;
  views::SemChannel ch("sem0", O, D, {1, 2, 3}, 4, rng);
  for (int T : {1, 2, 3, 9}) {
    ad::Tape t;
    auto X = t.constant(randn(static_cast<size_t>(T) * O, rng), T, O);
    auto r = ch.fwd(t, X);
    REQUIRE(r.size() == D);
    for (int i = 0; i < D; ++i) {
      CHECK(t.val(r)[i] > 0.0);
      CHECK(std::isfinite(t.val(r)[i]));
    }
  }
  ad::Tape t;
  auto empty = t.alloc(0, O);
  CHECK_THROWS(ch.fwd(t, empty));
}

TEST_CASE("sem channel width-1 kernels invariant to sequence duplication") {
  std::mt19937_64 rng(6);
  int O = 4, D = 3, T = 5;
  views::SemChannel ch("sem0", O, D, {1}, 4, rng);
  auto rows = randn(static_cast<size_t>(T) * O, rng);
  auto twice = rows;
  twice.insert(twice.end(), rows.begin(), rows.end());
  ad::Tape t;
  auto r1 = ch.fwd(t, t.constant(rows, T, O));
  auto r2 = ch.fwd(t, t.constant(twice, 2 * T, O));
  for (int i = 0; i < D; ++i)
    CHECK(t.val(r1)[i] == doctest::Approx(t.val(r2)[i]).epsilon(1e-12));
}

TEST_CASE("attention pool is a masked convex combination") {
  std::mt19937_64 rng(7);
  int O = 4;
  views::AttentionPool pool("pool", O, rng);
  // single unmasked row comes back exactly
  std::vector<double> rows = {1, 2, 3, 4, 9, 9, 9, 9};
  {
    ad::Tape t;
    std::vector<char> mask = {1, 0};
    auto out = pool.fwd(t, t.constant(rows, 2, O), mask);
    for (int i = 0; i < O; ++i) CHECK(t.val(out)[i] == doctest::Approx(rows[i]));
  }
  // two identical rows come back exactly
  {
    ad::Tape t;
    std::vector<double> same = {1, 2, 3, 4, 1, 2, 3, 4};
    std::vector<char> mask = {1, 1};
    auto out = pool.fwd(t, t.constant(same, 2, O), mask);
    for (int i = 0; i < O; ++i) CHECK(t.val(out)[i] == doctest::Approx(same[i]));
  }
  // convexity: pooled coordinates bounded by per-coordinate min/max
  {
    ad::Tape t;
    auto X = randn(5 * O, rng);
    std::vector<char> mask = {1, 1, 1, 1, 1};
    auto out = pool.fwd(t, t.constant(X, 5, O), mask);
    for (int o = 0; o < O; ++o) {
      double lo = 1e300, hi = -1e300;
      for (int r = 0; r < 5; ++r) {
        lo = std::min(lo, X[r * O + o]);
        hi = std::max(hi, X[r * O + o]);
      }
      CHECK(t.val(out)[o] >= lo - 1e-12);
      CHECK(t.val(out)[o] <= hi + 1e-12);
    }
  }
  // all-masked input is an error
  {
    ad::Tape t;
    std::vector<char> mask = {0, 0};
    CHECK_THROWS(pool.fwd(t, t.constant(rows, 2, O), mask));
  }
}

TEST_CASE("zero query pools to the mean of unmasked rows") {
  std::mt19937_64 rng(8);
  views::AttentionPool pool("pool", 2, rng);
  pool.query.fill(0.0);
  ad::Tape t;
  std::vector<double> rows = {0, 0, 4, 8, 2, 4};
  std::vector<char> mask = {1, 1, 1};
  auto out = pool.fwd(t, t.constant(rows, 3, 2), mask);
  CHECK(t.val(out)[0] == doctest::Approx(2.0));
  CHECK(t.val(out)[1] == doctest::Approx(4.0));
}

TEST_CASE("news representation concatenates in order") {
  ad::Tape t;
  std::vector<double> p = {1, 2, 3, 4}, e = {5, 6, 7}, s = {8, 9};
  auto n = views::news_representation(t, t.constant(p, 4), t.constant(e, 3),
                                      t.constant(s, 2));
  CHECK(n.size() == 9);
  std::vector<double> want = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  for (int i = 0; i < 9; ++i) CHECK(t.val(n)[i] == want[i]);
}
