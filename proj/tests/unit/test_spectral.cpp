#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ddim/spectral.hpp"
#include "oracles.hpp"

using namespace ddim;

namespace {

// Same roots, looser a-priori bound: the count must not change.
class WideBox final : public CharFunction {
 public:
  explicit WideBox(const CharFunction& inner) : inner_(inner) {}
  cplx delta(cplx p) const override { return inner_.delta(p); }
  cplx derivative(cplx p) const override { return inner_.derivative(p); }
  double root_bound(double nu) const override { return 2.0 * inner_.root_bound(nu); }

 private:
  const CharFunction& inner_;
};

double leading_complex(const SuarezChar& cf, double nu) {
  double best = -1e300;
  for (const cplx r : enumerate_roots(cf, nu))
    if (r.imag() != 0.0) best = std::max(best, r.real());
  return best;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("real roots") {
    const RealRoots r = real_roots(SuarezChar(1e-8, 1.0));
    CHECK(std::abs(r.lambda1 - 1.0) <= 1e-6);

    for (double a : {0.1, 0.5, 0.9})
      for (double t : {0.2, 1.0, 2.5}) {
        const SuarezChar cf(a, t);
        const RealRoots rr = real_roots(cf);
        CHECK(rr.lambda1 > 0.0);
        CHECK(rr.lambda2 < 0.0);
        for (double x : {rr.lambda1, rr.lambda2}) {
          CHECK(std::abs(cf.delta(x)) <= 1e-12 * (1.0 + std::abs(x)));
          const double d = 1e-6 * (1.0 + std::abs(x));
          CHECK(cf.delta(x - d).real() * cf.delta(x + d).real() < 0.0);
        }
      }
    CHECK_THROWS_AS(real_roots(SuarezChar(1.0, 1.0)), DomainError);
    CHECK_THROWS_AS(SuarezChar(0.5, 0.0), DomainError);
  }

  TEST_CASE("root counts by the argument principle") {
    CHECK(count_roots_right_of(SuarezChar(1e-8, 1.0), 0.5) == 1);

    const SuarezChar cf(0.5, 1.0);
    const RealRoots rr = real_roots(cf);
    const double mu = leading_complex(cf, -rr.lambda2 + 4.0);
    CHECK(mu < rr.lambda2);
    const double nu2 = -0.5 * (rr.lambda2 + mu);
    CHECK(count_roots_right_of(cf, nu2) == 2);
    CHECK(count_roots_right_of(cf, 0.5 * -rr.lambda2) == 1);
    CHECK(count_roots_right_of(WideBox(cf), nu2) == 2);
    CHECK(count_roots_right_of(WideBox(cf), 0.5 * -rr.lambda2) == 1);

    CHECK_THROWS_AS(count_roots_right_of(cf, -rr.lambda2), BoundaryRootError);
    CHECK_THROWS_AS(transfer_margin(cf, -rr.lambda2, 4.5), BoundaryRootError);
  }

  TEST_CASE("enumerated roots are roots and come in conjugate pairs") {
    for (double a : {0.2, 0.6, 0.95})
      for (double t : {0.3, 1.0, 3.0}) {
        const SuarezChar cf(a, t);
        const auto roots = enumerate_roots(cf, 1.0);
        REQUIRE_FALSE(roots.empty());
        for (const cplx r : roots) {
          CHECK(std::abs(cf.delta(r)) <= 1e-10);
          CHECK(r.real() > -1.0);
          const bool has_conj = std::any_of(roots.begin(), roots.end(), [&](cplx q) {
            return std::abs(q - std::conj(r)) <= 1e-9 * (1.0 + std::abs(r));
          });
          CHECK(has_conj);
        }
        for (std::size_t i = 1; i < roots.size(); ++i) CHECK(roots[i - 1].real() >= roots[i].real());
      }
  }

  TEST_CASE("enumeration agrees with the count and with a dense Newton search") {
    for (double a : {0.3, 0.7})
      for (double t : {0.5, 2.0})
        for (double nu : {0.37, 1.9}) {
          const SuarezChar cf(a, t);
          const auto roots = enumerate_roots(cf, nu);
          CHECK(static_cast<int>(roots.size()) == count_roots_right_of(cf, nu));
          const auto dense = oracle::dense_newton_roots(a, t, nu, cf.root_bound(nu));
          CHECK(dense.size() == roots.size());
          for (const cplx q : dense) {
            const bool found = std::any_of(roots.begin(), roots.end(),
                                           [&](cplx r) { return std::abs(r - q) <= 1e-8; });
            CHECK(found);
          }
        }
  }

  // Roots of modulus ~1e3 carry a residual of rounding size ~|p| * 1e-13.
  TEST_CASE("enumeration in a box with a thousand roots") {
    const SuarezChar cf(0.3, 2.0);
    const auto roots = enumerate_roots(cf, 4.3);
    CHECK(static_cast<int>(roots.size()) == count_roots_right_of(cf, 4.3));
    for (const cplx r : roots) CHECK(std::abs(cf.delta(r)) <= 1e-10 * (1.0 + std::abs(r)));
  }

  TEST_CASE("root count is non-decreasing in the shift") {
    const SuarezChar cf(0.6, 1.5);
    int prev = 0;
    for (double nu = 0.05; nu < 3.0; nu += 0.37) {
      const int j = count_roots_right_of(cf, nu);
      CHECK(j >= prev);
      prev = j;
    }
  }

  TEST_CASE("transfer margin") {
    // Without feedback |W(i omega)| = 1 / |1 - i omega| peaks at omega = 0.
    const MarginResult m0 = transfer_margin(SuarezChar(1e-12, 1.0), 0.0, 4.0);
    CHECK(m0.margin == doctest::Approx(0.25 - 1.0).epsilon(1e-9));
    CHECK(std::abs(m0.omega) <= 1e-6);

    const SuarezChar cf(0.6, 1.3);
    for (double nu : {0.2, 0.9}) {
      const double Lambda = 4.8;
      const MarginResult m = transfer_margin(cf, nu, Lambda);
      CHECK(m.max_w >= 1.0 / std::abs(cf.delta(cplx(-nu, 0.0))));
      double dense = 0.0;
      const double top = 10.0 * cf.root_bound(nu);
      const int n = 200000;
      for (int i = 0; i <= n; ++i) dense = std::max(dense, 1.0 / std::abs(cf.delta(cplx(-nu, top * i / n))));
      CHECK(std::abs(m.max_w - dense) <= 1e-6 * dense);
      CHECK(m.margin == doctest::Approx(1.0 / Lambda - m.max_w));
    }
    CHECK_THROWS_AS(transfer_margin(cf, 0.2, 0.0), DomainError);
  }

  TEST_CASE("frequency test verdicts") {
    const ImVerdict small = im_verdict(0.05, 0.05);
    CHECK(small.verdict == Verdict::J1);
    CHECK(small.margin > 0.0);
    CHECK(count_roots_right_of(SuarezChar(0.05, 0.05), small.nu) == 1);

    CHECK(im_verdict(0.99, 3.0).verdict == Verdict::None);
    CHECK(std::isnan(im_verdict(0.99, 3.0).nu));
    CHECK_THROWS_AS(im_verdict(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(im_verdict(0.5, -1.0), DomainError);
    CHECK(to_string(Verdict::J2) == "j2");
  }

  TEST_CASE("accepted cells have a negative sum of real roots") {
    const RegionGrid g = region_sweep({0.0, 1.5}, {0.0, 1.0}, 8);
    REQUIRE(g.cells.size() == 64);
    int accepted = 0;
    for (const ImVerdict& v : g.cells) {
      CHECK(v.verdict != Verdict::Error);
      if (v.verdict == Verdict::J1 || v.verdict == Verdict::J2) {
        ++accepted;
        CHECK(v.lambda_sum_sign < 0);
        CHECK(v.margin > 0.0);
      }
    }
    CHECK(accepted > 0);
  }

  TEST_CASE("region sweep layout and determinism") {
    const RegionGrid g = region_sweep({0.0, 2.0}, {0.0, 1.0}, 2, Exec::Serial);
    CHECK(g.taus == std::vector<double>{0.5, 1.5});
    CHECK(g.alphas == std::vector<double>{0.25, 0.75});
    CHECK(g.at(1, 0).lambda1 == doctest::Approx(real_roots(SuarezChar(0.75, 0.5)).lambda1));

    const RegionGrid s = region_sweep({0.2, 2.5}, {0.1, 0.9}, 5, Exec::Serial);
    const RegionGrid p = region_sweep({0.2, 2.5}, {0.1, 0.9}, 5, Exec::Parallel);
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
      CHECK(s.cells[i].verdict == p.cells[i].verdict);
      CHECK(s.cells[i].margin == p.cells[i].margin);
    }
    CHECK_THROWS_AS(region_sweep({0.0, 1.0}, {0.0, 1.0}, 1), DomainError);
    CHECK_THROWS_AS(region_sweep({1.0, 0.5}, {0.0, 1.0}, 4), DomainError);
  }
}
