#include <doctest.h>

#include <cmath>

#include "ddim/suarez.hpp"

using namespace ddim;

TEST_SUITE("suarez") {
  TEST_CASE("cutoff nonlinearity") {
    const SuarezModel s(0.5, 1.0, 1.0);
    const double c = s.core();
    CHECK(s.gamma() == doctest::Approx(std::sqrt(1.5)));
    CHECK(c == doctest::Approx(s.gamma() + 1.0));
    for (double y : {0.0, 0.3, -1.1, 2.0})
      if (std::abs(y) <= c) CHECK(s.g(y) == y * y * y);

    // Value, slope and curvature are continuous across both seams.
    for (double seam : {c, c + 1.0}) {
      const double e = 1e-9;
      CHECK(std::abs(s.g(seam + e) - s.g(seam - e)) <= 1e-6);
      CHECK(std::abs(s.dg(seam + e) - s.dg(seam - e)) <= 1e-6);
      CHECK(std::abs(s.d2g(seam + e) - s.d2g(seam - e)) <= 1e-6);
    }
    // Derivatives agree with difference quotients everywhere.
    for (double y = -5.0; y <= 5.0; y += 0.173) {
      const double e = 1e-5;
      CHECK(s.dg(y) == doctest::Approx((s.g(y + e) - s.g(y - e)) / (2 * e)).epsilon(1e-6));
      CHECK(std::abs(s.d2g(y) - (s.dg(y + e) - s.dg(y - e)) / (2 * e)) <= 1e-5 * (1.0 + std::abs(s.d2g(y))));
      CHECK(s.g(-y) == -s.g(y));
      CHECK(s.dg(y) >= 0.0);
      CHECK(s.dg(y) <= s.lipschitz_sup() * (1.0 + 1e-12));
    }
    CHECK(s.dg(c + 3.0) == doctest::Approx(3.0 * c * c));
    CHECK(s.lipschitz_sup() >= 3.0 * c * c);
    CHECK(s.lipschitz_attractor() == doctest::Approx(3.0 * s.gamma() * s.gamma()));
    CHECK(s.model().Lambda == s.lipschitz_sup());
  }

  TEST_CASE("parameter checks") {
    CHECK_THROWS_AS(SuarezModel(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(SuarezModel(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(SuarezModel(0.5, 0.0), DomainError);
    CHECK_THROWS_AS(SuarezModel(0.5, 1.0, -1.0), DomainError);
  }

  TEST_CASE("stationary states") {
    for (double a : {0.1, 0.5, 0.9, 1.0 - 1e-10}) {
      const SuarezModel s(a, 1.0);
      for (double x : stationary_states(s)) CHECK(std::abs(x - a * x - s.g(x)) <= 1e-14);
    }
    const auto near_one = stationary_states(SuarezModel(1.0 - 1e-10, 1.0));
    CHECK(near_one[2] <= 1e-4);
    CHECK(near_one[0] == -near_one[2]);

    const SuarezModel s(0.3, 2.0);
    const double x = stationary_states(s)[0];
    const HistoryGrid g(2.0, 32);
    const Trajectory tr = evolve(s.model(), [x](double) { return Vec::Constant(1, x); }, g, 0.0, 20.0, 2.0 / 32);
    for (long k = 0; k <= tr.steps(); ++k) CHECK(std::abs(tr.head_at(k)(0) - x) <= 1e-12);
  }

  TEST_CASE("bounded ball is forward invariant") {
    const SuarezModel s(0.5, 1.0);
    const InvarianceReport r = check_invariance(s, 1.0, 100, 50.0, {32, 32, 7});
    CHECK(r.trials == 100);
    CHECK(r.max_overshoot <= 1e-6);

    // From the boundary the sup norm decreases right away.
    const HistoryGrid g(1.0, 64);
    const double edge = s.core();
    const Trajectory tr = evolve(s.model(), [edge](double) { return Vec::Constant(1, edge); }, g, 0.0, 1.0, 1.0 / 64);
    for (long k = 1; k <= tr.steps(); ++k) CHECK(std::abs(tr.head_at(k)(0)) < edge);

    const Trajectory zero = evolve(s.model(), HState::zero(g, 1), g, 0.0, 5.0, 1.0 / 64);
    for (long k = 0; k <= zero.steps(); ++k) CHECK(zero.head_at(k)(0) == 0.0);
  }

  TEST_CASE("absorbing interval") {
    const SuarezModel s(0.5, 1.0);
    const AbsorbingReport far = check_absorbing(s, 4, 100.0, s.gamma() + 5.0);
    CHECK(far.trials == 4);
    CHECK(far.max_excess <= 0.05);
    const AbsorbingReport near = check_absorbing(s, 4, 100.0, 0.5, {32, 32, 3});
    CHECK(near.max_excess <= 1e-9);

    const SuarezModel slow(0.9, 2.0);
    CHECK(check_absorbing(slow, 2, 200.0, 2.0, {32, 32, 5}).max_excess <= 0.05);
    CHECK_THROWS_AS(check_absorbing(s, 1, 50.0, 1.0), PreconditionError);
  }

  TEST_CASE("trajectories are odd in the initial data") {
    const SuarezModel s(0.75, 1.5);
    const HistoryGrid g(1.5, 32);
    const auto phi = random_segment(1.5, 2.0, 19);
    const Trajectory a = evolve(s.model(), phi, g, 0.0, 15.0, 1.5 / 32);
    const Trajectory b = evolve(s.model(), [&](double th) { return Vec(-phi(th)); }, g, 0.0, 15.0, 1.5 / 32);
    for (long k = 0; k <= a.steps(); ++k) CHECK(a.head_at(k)(0) == -b.head_at(k)(0));
  }

  TEST_CASE("cutoff radius does not touch orbits inside the core") {
    const SuarezModel s1(0.5, 1.0, 1.0), s2(0.5, 1.0, 2.0);
    const HistoryGrid g(1.0, 32);
    for (unsigned long long seed : {1ull, 2ull, 3ull}) {
      const auto phi = random_segment(1.0, 1.0, seed);
      const Trajectory a = evolve(s1.model(), phi, g, 0.0, 30.0, 1.0 / 32);
      const Trajectory b = evolve(s2.model(), phi, g, 0.0, 30.0, 1.0 / 32);
      for (long k = 0; k <= a.steps(); ++k) CHECK(a.head_at(k)(0) == b.head_at(k)(0));
    }
  }

  TEST_CASE("random segments") {
    const auto phi = random_segment(2.0, 1.7, 4);
    double sup = 0.0;
    for (int i = 0; i <= 4096; ++i) sup = std::max(sup, std::abs(phi(-2.0 + 2.0 * i / 4096)(0)));
    CHECK(sup == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(random_segment(2.0, 1.7, 4)(-0.3)(0) == phi(-0.3)(0));
  }
}
