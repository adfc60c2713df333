#include <doctest.h>

#include <cmath>
#include <random>

#include "ddim/core.hpp"
#include "ddim/suarez.hpp"

using namespace ddim;

namespace {

Vec scalar(double x) { return Vec::Constant(1, x); }

HState random_state(const HistoryGrid& g, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Vec head(n);
  Mat seg(g.nodes(), n);
  for (int i = 0; i < n; ++i) head(i) = d(rng);
  for (int i = 0; i < g.nodes(); ++i)
    for (int j = 0; j < n; ++j) seg(i, j) = d(rng);
  return HState(head, seg, false);
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("history grid nodes and weights") {
    const HistoryGrid g(2.5, 40);
    CHECK(g.node(0) == -2.5);
    CHECK(g.node(40) == 0.0);
    CHECK(g.spacing() * g.intervals() == doctest::Approx(2.5).epsilon(1e-15));
    for (int i = 0; i < 40; ++i) CHECK(g.node(i) < g.node(i + 1));
    CHECK(g.weights().sum() == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(g.index_of(-1.25) == 20);
    CHECK_FALSE(g.index_of(-1.26).has_value());
    CHECK_THROWS_AS(HistoryGrid(1.0, 7), DomainError);
    CHECK_THROWS_AS(HistoryGrid(-1.0, 16), DomainError);
  }

  TEST_CASE("h_inner on closed-form examples") {
    const HistoryGrid g1(1.0, 64);
    const HState head_only(scalar(1.0), Mat::Zero(65, 1), false);
    CHECK(h_inner(head_only, head_only, g1) == doctest::Approx(1.0));

    const HistoryGrid g2(2.0, 64);
    const HState ones(scalar(0.0), Mat::Ones(65, 1), false);
    CHECK(h_inner(ones, ones, g2) == doctest::Approx(2.0).epsilon(1e-14));

    Mat theta(65, 1);
    for (int i = 0; i <= 64; ++i) theta(i, 0) = g1.node(i);
    const HState a(scalar(0.0), theta, false);
    const HState b(scalar(0.0), Mat::Ones(65, 1), false);
    CHECK(std::abs(h_inner(a, b, g1) + 0.5) <= 1e-6);
    CHECK(h_inner(a, b, g1) == doctest::Approx(h_inner(b, a, g1)).epsilon(1e-15));
  }

  TEST_CASE("shape mismatch is reported") {
    const HistoryGrid g(1.0, 16);
    const HState a = HState::zero(g, 1);
    const HState b = HState::zero(g, 2);
    CHECK_THROWS_AS(h_inner(a, b, g), ShapeError);
    const HistoryGrid g32(1.0, 32);
    CHECK_THROWS_AS(h_inner(a, a, g32), ShapeError);
  }

  TEST_CASE("e_norm") {
    const HistoryGrid g(1.0, 64);
    CHECK(e_norm(HState::zero(g, 1)) == 0.0);

    Mat seg = Mat::Zero(9, 1);
    seg(2, 0) = 1.0;
    seg(5, 0) = -3.0;
    seg(8, 0) = 2.0;
    CHECK(e_norm(HState::embed_samples(seg)) == 3.0);

    const HState absval = HState::embed(g, [](double th) { return scalar(std::abs(th)); });
    CHECK(e_norm(absval) == 1.0);

    const HState jump(scalar(1.0), Mat::Zero(65, 1), false);
    CHECK_THROWS_AS(e_norm(jump), DomainError);
  }

  TEST_CASE("apply_functional examples") {
    const HistoryGrid g(3.0, 30);
    const HState s = HState::embed(g, [](double th) { return scalar(th == 0.0 ? 5.0 : th); });
    const LinearFunctional at0 = LinearFunctional::delta(3.0, 0.0, Mat::Ones(1, 1));
    CHECK(apply_functional(at0, s, g)(0) == 5.0);

    const HState t = HState::embed(g, [](double th) { return scalar(th == -3.0 ? 2.0 : 0.0); });
    const LinearFunctional back = LinearFunctional::delta(3.0, -3.0, -Mat::Ones(1, 1));
    CHECK(apply_functional(back, t, g)(0) == -2.0);

    LinearFunctional::Kernel k{g, std::vector<Mat>(31, Mat::Ones(1, 1))};
    const LinearFunctional K = LinearFunctional::kernel(3.0, k);
    const double c = 0.7;
    CHECK(apply_functional(K, HState::constant(g, scalar(c)), g)(0) == doctest::Approx(3.0 * c));

    const LinearFunctional off = LinearFunctional::delta(3.0, -0.05, Mat::Ones(1, 1));
    CHECK_THROWS_AS(apply_functional(off, s, g), ConfigError);
    CHECK_THROWS_AS(LinearFunctional::delta(3.0, 0.5, Mat::Ones(1, 1)), DomainError);
  }

  TEST_CASE("apply_functional is linear") {
    const HistoryGrid g(1.0, 32);
    std::mt19937_64 rng(11);
    LinearFunctional::Kernel k{g, {}};
    for (int i = 0; i <= 32; ++i) k.samples.push_back(Mat::Constant(2, 2, std::sin(0.3 * i)));
    const LinearFunctional L = LinearFunctional::delta(1.0, -0.25, Mat::Random(2, 2)) +
                               LinearFunctional::delta(1.0, 0.0, Mat::Random(2, 2)) +
                               LinearFunctional::kernel(1.0, k);
    for (int trial = 0; trial < 20; ++trial) {
      const HState a = random_state(g, 2, rng), b = random_state(g, 2, rng);
      const double al = 1.3, be = -0.4;
      const Vec lhs = apply_functional(L, a * al + b * be, g);
      const Vec rhs = al * apply_functional(L, a, g) + be * apply_functional(L, b, g);
      CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }
  }

  TEST_CASE("h_inner is positive definite and bounded by the sup norm") {
    std::mt19937_64 rng(3);
    const HistoryGrid g(1.7, 34);
    for (int trial = 0; trial < 100; ++trial) {
      const HState a = random_state(g, 2, rng);
      CHECK(h_inner(a, a, g) > 0.0);
      const HState e = HState::embed_samples(a.seg());
      CHECK(e_norm(e) >= e.head().norm());
      CHECK(h_inner(e, e, g) <= (1.0 + g.tau()) * e_norm(e) * e_norm(e) * (1.0 + 1e-14));
    }
  }

  TEST_CASE("moment inequality with a delayed point evaluation") {
    // x == 1 on every time: |C v(t)| = 1, so the integral over [0, 2] is 2.
    const double tau = 1.0, h = 1.0 / 16;
    const HistoryGrid g(tau, 16);
    std::vector<HState> path;
    for (int k = 0; k <= 32; ++k) path.push_back(HState::constant(g, scalar(1.0)));
    const LinearFunctional C = LinearFunctional::delta(tau, -tau, Mat::Ones(1, 1));
    const MesReport r = check_mes(path, h, 1, C, g);
    CHECK(r.lhs == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.rhs == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(mes_constant(C) == doctest::Approx(1.0 + std::sqrt(tau)));
    CHECK(r.lhs <= mes_constant(C) * r.rhs);

    std::vector<HState> zero(10, HState::zero(g, 1));
    const MesReport z = check_mes(zero, h, 2, C, g);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK_THROWS_AS(check_mes(std::span<const HState>{}, h, 1, C, g), DomainError);
  }

  TEST_CASE("moment inequality rejects a path whose segments disagree with its heads") {
    const HistoryGrid g(1.0, 16);
    std::vector<HState> path;
    for (int k = 0; k <= 20; ++k) path.push_back(HState::constant(g, scalar(k == 18 ? 2.0 : 1.0)));
    const LinearFunctional C = LinearFunctional::delta(1.0, -1.0, Mat::Ones(1, 1));
    CHECK_THROWS_AS(check_mes(path, 1.0 / 16, 1, C, g), PreconditionError);
  }

  TEST_CASE("model checks on the delayed oscillator") {
    const SuarezModel s(0.5, 1.0);
    const DelayModel m = s.model();
    const ModelCheck c = check_model(m, 200, 2.0, 9);
    CHECK(c.jacobian_ok);
    CHECK(c.lipschitz_ok);
    CHECK(c.max_lipschitz_ratio <= m.Lambda);
  }
}
