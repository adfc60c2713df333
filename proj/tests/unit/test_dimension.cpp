#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "ddim/dimension.hpp"
#include "ddim/suarez.hpp"
#include "oracles.hpp"

using namespace ddim;

namespace {

Vec scalar(double x) { return Vec::Constant(1, x); }

LinearFunctional beta_operator(double alpha, double tau) {
  const Mat one = Mat::Ones(1, 1);
  return LinearFunctional::delta(tau, 0.0, one) + LinearFunctional::delta(tau, -tau, -alpha * one);
}

double log_volume(const std::vector<HState>& v, const WeightedGram& W) {
  return std::log(volume_k(std::span<const HState>(v), W));
}

}  // namespace

TEST_SUITE("dimension") {
  TEST_CASE("weighted gram") {
    const HistoryGrid g(2.0, 20);
    const WeightedGram W(g, 2);
    CHECK(W.dim() == 44);
    CHECK(W.factorization_residual() <= 1e-12);
    CHECK(W.diagonal().head(2) == Vec::Ones(2));
    const HState a = HState::embed(g, [](double th) { return Vec::Constant(2, th); });
    CHECK(W.inner(a.coordinates(), a.coordinates()) == doctest::Approx(h_inner(a, a, g)).epsilon(1e-14));
  }

  TEST_CASE("volumes of simple frames") {
    const HistoryGrid g(1.0, 16);
    const WeightedGram W(g, 1);
    const HState e1(scalar(1.0), Mat::Zero(17, 1), false);
    const HState e2(scalar(0.0), Mat::Ones(17, 1), false);
    std::vector<HState> pair = {e1, e2};
    CHECK(volume_k(std::span<const HState>(pair), W) == doctest::Approx(1.0));
    std::vector<HState> dup = {e2, e2};
    CHECK(volume_k(std::span<const HState>(dup), W) == 0.0);
    std::vector<HState> scaled = {e1 * -3.0, e2};
    CHECK(volume_k(std::span<const HState>(scaled), W) == doctest::Approx(3.0));
    std::vector<HState> many(19, e1);
    CHECK_THROWS_AS(volume_k(std::span<const HState>(many), W), DomainError);
  }

  TEST_CASE("trace of a scalar ODE generator on the head direction") {
    const double a = -0.7;
    const DelayModel m = linear_model(LinearFunctional::delta(1.0, 0.0, a * Mat::Ones(1, 1)));
    const HistoryGrid g(1.0, 16);
    const WeightedGram W(g, 1);
    const HState e(scalar(1.0), Mat::Zero(17, 1), false);
    CHECK(trace_on_span(m, HState::zero(g, 1), std::span(&e, 1), W) == doctest::Approx(a).epsilon(1e-14));
  }

  TEST_CASE("trace does not depend on the basis of the span") {
    const SuarezModel s(0.5, 1.0);
    const DelayModel m = s.model();
    const HistoryGrid g(1.0, 32);
    const WeightedGram W(g, 1);
    const HState base = HState::embed(g, [](double th) { return scalar(0.3 + th); });
    const HState u = HState::embed(g, [](double th) { return scalar(std::cos(th)); });
    const HState v = HState::embed(g, [](double th) { return scalar(th * th); });
    const HState one = u * 2.5;
    CHECK(trace_on_span(m, base, std::span(&u, 1), W) ==
          doctest::Approx(trace_on_span(m, base, std::span(&one, 1), W)).epsilon(1e-12));
    std::vector<HState> f1 = {u, v}, f2 = {u + v, u - v * 3.0};
    CHECK(std::abs(trace_on_span(m, base, f1, W) - trace_on_span(m, base, f2, W)) <= 1e-12);
    std::vector<HState> dep = {u, one};
    CHECK_THROWS_AS(trace_on_span(m, base, dep, W), DegenerateFrameError);
  }

  TEST_CASE("trace at the zero state matches the log-volume rate") {
    const SuarezModel s(0.5, 1.0);
    const DelayModel m = s.model();
    const HistoryGrid g(1.0, 64);
    const double h = 1.0 / 64;
    const WeightedGram W(g, 1);
    auto base = std::make_shared<const Trajectory>(evolve(m, HState::zero(g, 1), g, 0.0, 3.0, h));
    std::vector<HState> xi = {HState::embed(g, [](double th) { return scalar(std::cos(th)); }),
                              HState::embed(g, [](double th) { return scalar(std::sin(2 * th)); })};
    const double t = 2.0;
    const auto before = evolve_tangent(base, xi, t - h).vectors;
    const auto at = evolve_tangent(base, xi, t).vectors;
    const auto after = evolve_tangent(base, xi, t + h).vectors;
    const double rate = (log_volume(after, W) - log_volume(before, W)) / (2 * h);
    const double tr = trace_on_span(m, base->state_at(t), at, W);
    CHECK(std::abs(rate - tr) <= 1e-3 * (1.0 + std::abs(tr)));
  }

  TEST_CASE("trace formula on exact solutions") {
    SUBCASE("growth along an eigenfunction") {
      const double a = 0.5;
      const DelayModel m = linear_model(LinearFunctional::delta(1.0, 0.0, a * Mat::Ones(1, 1)));
      const HistoryGrid g(1.0, 64);
      const HState xi = HState::embed(g, [a](double th) { return scalar(std::exp(a * th)); });
      const TraceCheck c = check_trace_formula(m, HState::zero(g, 1), std::span(&xi, 1), g, 1.0, 1.0 / 64);
      CHECK(c.max_deviation <= 1e-8);
      CHECK(c.log_volume.back() == doctest::Approx(a * 1.0).epsilon(1e-8));
    }
    SUBCASE("pure delay with the cosine frame") {
      const double tau = std::numbers::pi / 2;
      const DelayModel m = linear_model(LinearFunctional::delta(tau, -tau, -Mat::Ones(1, 1)));
      auto dev = [&](int n) {
        const HistoryGrid g(tau, n);
        const HState xi = HState::embed(g, [](double th) { return scalar(std::cos(th)); });
        return check_trace_formula(m, HState::zero(g, 1), std::span(&xi, 1), g, std::numbers::pi, tau / n)
            .max_deviation;
      };
      const double d64 = dev(64);
      CHECK(d64 <= 1e-4);
      CHECK(dev(128) < d64);
    }
  }

  TEST_CASE("trace formula reports underflow on a collapsing frame") {
    const double tau = 0.05;
    const DelayModel m = linear_model(LinearFunctional::delta(tau, 0.0, -400.0 * Mat::Ones(1, 1)));
    const HistoryGrid g(tau, 16);
    const HState xi = HState::constant(g, scalar(1.0));
    TraceCheckOptions opts;
    opts.reorthonormalize_every = 1 << 30;
    CHECK_THROWS_AS(check_trace_formula(m, HState::zero(g, 1), std::span(&xi, 1), g, 4.0, tau / 16, opts),
                    UnderflowError);
    opts.reorthonormalize_every = 50;
    CHECK_NOTHROW(check_trace_formula(m, HState::zero(g, 1), std::span(&xi, 1), g, 4.0, tau / 16, opts));
  }

  TEST_CASE("singular value function") {
    SingularSpectrum id{{1.0, 1.0, 1.0, 1.0}, 0.0};
    for (double d : {0.3, 1.0, 2.5, 4.0}) CHECK(omega_d(id, d) == 1.0);
    SingularSpectrum s{{2.0, 1.0, 0.5}, 0.0};
    CHECK(omega_d(s, 2.0) == doctest::Approx(2.0));
    CHECK(omega_d(s, 2.5) == doctest::Approx(2.0 * std::sqrt(0.5)));
    CHECK(omega_d(s, 0.5) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(omega_d(s, 0.0), DomainError);
    CHECK_THROWS_AS(omega_d(s, -1.0), DomainError);
    CHECK_THROWS_AS(omega_d(s, 3.5), DomainError);
  }

  TEST_CASE("singular values in the H metric on a diagonal example") {
    const HistoryGrid g(1.0, 8);
    const WeightedGram W(g, 1);
    const Mat M = Mat::Identity(10, 10) * 0.5;
    const SingularSpectrum s = singular_spectrum(M, W);
    for (double x : s.sigmas) CHECK(x == doctest::Approx(0.5));
  }

  TEST_CASE("singular value function properties on random operators") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    const HistoryGrid g(1.0, 8);
    const WeightedGram W(g, 1);
    auto random_matrix = [&](double scale) {
      Mat M(10, 10);
      for (long i = 0; i < M.size(); ++i) M.data()[i] = scale * nd(rng);
      return M;
    };
    for (int trial = 0; trial < 20; ++trial) {
      const Mat A = random_matrix(0.1), B = random_matrix(0.8);
      const SingularSpectrum sa = singular_spectrum(A, W);
      for (std::size_t i = 0; i + 1 < sa.sigmas.size(); ++i) CHECK(sa.sigmas[i] >= sa.sigmas[i + 1]);
      // log omega_d is linear in d between integers.
      for (int k = 0; k < 9; ++k) {
        const double lo = k == 0 ? 0.0 : std::log(omega_d(sa, k));
        const double hi = std::log(omega_d(sa, k + 1));
        CHECK(std::log(omega_d(sa, k + 0.5)) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
      }
      if (sa.sigmas.front() < 1.0)
        for (double d = 0.5; d < 9.5; d += 0.5) CHECK(omega_d(sa, d + 0.5) <= omega_d(sa, d));
      for (double d : {0.7, 1.0, 2.3, 4.0}) {
        const double lhs = omega_d(singular_spectrum(Mat(A * B), W), d);
        const double rhs = omega_d(sa, d) * omega_d(singular_spectrum(B, W), d);
        CHECK(lhs <= rhs * (1.0 + 1e-10));
      }
    }
  }

  TEST_CASE("sup of image volumes over frames equals the singular value product") {
    auto base = std::make_shared<const Trajectory>([] {
      const SuarezModel s(0.5, 1.0);
      const HistoryGrid g(1.0, 16);
      return evolve(s.model(), HState::embed(g, random_segment(1.0, 1.0, 12)), g, 0.0, 1.0, 1.0 / 16);
    }());
    const QuasiDifferential L = quasi_differential(base, 1.0);
    const WeightedGram W(L.grid, 1);
    std::mt19937_64 rng(5);
    for (int k = 1; k <= 3; ++k) {
      const double w = omega_d(L, k);
      const oracle::VolumeSup sup = oracle::sup_volume(L.matrix, W, k, 200, 4, 30, rng);
      CHECK(sup.max_seen <= w * (1.0 + 1e-10));
      CHECK(sup.max_seen >= 0.98 * w);
    }
  }

  TEST_CASE("squeezing test") {
    SUBCASE("contractive linear model") {
      const double tau = 1.0;
      const Mat one = Mat::Ones(1, 1);
      const DelayModel m = linear_model(LinearFunctional::delta(tau, 0.0, -1.0 * one) +
                                        LinearFunctional::delta(tau, -tau, 0.3 * one));
      const HistoryGrid g(tau, 16);
      std::vector<HState> samples = {HState::zero(g, 1)};
      const SqueezeReport r = squeezing_test(m, samples, g, 2.0, 1.0 / 16, 0.5);
      CHECK(r.verdict);
      CHECK(r.sup_omega < 1.0);
    }
    SUBCASE("too short a time is refused") {
      const SuarezModel s(0.5, 1.0);
      const HistoryGrid g(1.0, 16);
      std::vector<HState> samples = {HState::zero(g, 1)};
      CHECK_THROWS_AS(squeezing_test(s.model(), samples, g, 0.0, 1.0 / 16, 1.0), PreconditionError);
      CHECK_THROWS_AS(squeezing_test(s.model(), samples, g, 1.5, 1.0 / 16, 1.0), PreconditionError);
      CHECK_THROWS_AS(squeezing_test(s.model(), std::span<const HState>{}, g, 2.0, 1.0 / 16, 1.0),
                      DomainError);
    }
    SUBCASE("finite bound at the default parameters") {
      const SuarezModel s(0.5, 1.0);
      const HistoryGrid g(1.0, 16);
      const double h = 1.0 / 32;
      const Trajectory tr = evolve(s.model(), HState::embed(g, random_segment(1.0, 1.0, 8)), g, 0.0, 60.0, h);
      std::vector<HState> samples;
      for (double t = 50.0; t <= 58.0; t += 2.0) samples.push_back(tr.state_at(t));
      const SqueezeReport r = squeezing_test(s.model(), samples, g, 2.0, h, 1.0);
      REQUIRE(r.min_d.has_value());
      MESSAGE("least d at alpha = 0.5, tau = 1: " << *r.min_d);
      CHECK(std::isfinite(*r.min_d));
    }
    SUBCASE("oscillator attractor has a finite dimension bound") {
      const SuarezModel s(0.75, 2.0);
      const HistoryGrid g(2.0, 16);
      const double h = 2.0 / 32;
      const Trajectory tr = evolve(s.model(), HState::embed(g, random_segment(2.0, 1.0, 3)), g, 0.0, 120.0, h);
      std::vector<HState> samples;
      for (double t = 100.0; t <= 118.0; t += 3.0) samples.push_back(tr.state_at(t));
      const SqueezeReport r = squeezing_test(s.model(), samples, g, 4.0, h, 3.0);
      REQUIRE(r.min_d.has_value());
      MESSAGE("least d with sup omega_d < 1: " << *r.min_d);
      CHECK(*r.min_d >= 1.0);
      CHECK(*r.min_d < 3.0);
    }
  }

  TEST_CASE("ascent over frames reaches the Ky Fan sums of the discrete form") {
    const HistoryGrid g(1.0, 32);
    const LinearFunctional A = beta_operator(0.5, 1.0);
    const DomainForm f = domain_form(A, g);
    const std::vector<double> ev = oracle::pencil_eigenvalues(f.S, f.M);
    BetaOptions opts;
    opts.restarts = 6;
    const BetaReport r = beta_numbers(A, g, 3, opts);
    double partial = 0.0;
    for (int k = 0; k < 3; ++k) {
      partial += ev[k];
      CHECK(r.sups[k] == doctest::Approx(partial).epsilon(1e-7));
      CHECK(r.betas[k] == doctest::Approx(ev[k]).epsilon(1e-6));
      const auto& hist = r.best_so_far[k];
      for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] >= hist[i - 1]);
    }
    CHECK_FALSE(r.unstable);
  }

  TEST_CASE("trace numbers without delayed feedback") {
    BetaOptions opts;
    opts.restarts = 4;
    const BetaReport r = beta_numbers(beta_operator(0.0, 1.0), HistoryGrid(1.0, 64), 2, opts);
    CHECK(std::abs(r.betas[0] - 1.5) <= 0.05);
    CHECK(std::abs(r.betas[1]) <= 0.05);
  }

  TEST_CASE("beta argument checks") {
    const HistoryGrid g(1.0, 8);
    CHECK_THROWS_AS(beta_numbers(beta_operator(0.5, 1.0), g, 0), DomainError);
    CHECK_THROWS_AS(beta_numbers(beta_operator(0.5, 1.0), g, 20), DomainError);
  }
}
