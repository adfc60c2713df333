#include "ddim/suarez.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ddim {

namespace {

struct Blend {
  double s, ds, d2s;
};

// Quintic smoothstep on [0, 1]: zero first and second derivatives at both ends.
Blend smoothstep(double u) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  return {u3 * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (1.0 - 2.0 * u + u2),
          60.0 * u * (1.0 - 3.0 * u + 2.0 * u2)};
}

}  // namespace

SuarezModel::SuarezModel(double alpha, double tau, double R_cut)
    : alpha_(alpha), tau_(tau), R_cut_(R_cut), gamma_(std::sqrt(1.0 + alpha)), c_(gamma_ + R_cut) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("suarez: alpha must lie in (0, 1)");
  if (!(tau > 0.0)) throw DomainError("suarez: tau must be positive");
  if (!(R_cut > 0.0)) throw DomainError("suarez: R_cut must be positive");
  double sup = 3.0 * c_ * c_;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) sup = std::max(sup, std::abs(dg(c_ + static_cast<double>(i) / n)));
  lambda_sup_ = sup;
}

double SuarezModel::g(double y) const {
  const double a = std::abs(y);
  const double sign = y < 0.0 ? -1.0 : 1.0;
  if (a <= c_) return y * y * y;
  const double lin = c_ * c_ * c_ + 3.0 * c_ * c_ * (a - c_);
  if (a >= c_ + 1.0) return sign * lin;
  const Blend b = smoothstep(a - c_);
  return sign * ((1.0 - b.s) * a * a * a + b.s * lin);
}

double SuarezModel::dg(double y) const {
  const double a = std::abs(y);
  if (a <= c_) return 3.0 * y * y;
  const double slope = 3.0 * c_ * c_;
  if (a >= c_ + 1.0) return slope;
  const double lin = c_ * c_ * c_ + slope * (a - c_);
  const Blend b = smoothstep(a - c_);
  return b.ds * (lin - a * a * a) + (1.0 - b.s) * 3.0 * a * a + b.s * slope;
}

double SuarezModel::d2g(double y) const {
  const double a = std::abs(y);
  const double sign = y < 0.0 ? -1.0 : 1.0;
  if (a <= c_) return 6.0 * y;
  if (a >= c_ + 1.0) return 0.0;
  const double slope = 3.0 * c_ * c_;
  const double lin = c_ * c_ * c_ + slope * (a - c_);
  const Blend b = smoothstep(a - c_);
  const double v = b.d2s * (lin - a * a * a) + 2.0 * b.ds * (slope - 3.0 * a * a) +
                   (1.0 - b.s) * 6.0 * a;
  return sign * v;
}

DelayModel SuarezModel::model() const {
  const Mat one = Mat::Ones(1, 1);
  LinearFunctional A = LinearFunctional::delta(tau_, 0.0, one) +
                       LinearFunctional::delta(tau_, -tau_, -alpha_ * one);
  LinearFunctional C = LinearFunctional::delta(tau_, 0.0, one);
  const SuarezModel self = *this;
  DelayModel m{1,
               1,
               1,
               tau_,
               std::move(A),
               one,
               std::move(C),
               [self](double, const Vec& y) { return Vec::Constant(1, -self.g(y(0))); },
               [self](double, const Vec& y) { return Mat::Constant(1, 1, -self.dg(y(0))); },
               [self](double, const Vec& y, const Vec& dir) {
                 return Mat::Constant(1, 1, -self.d2g(y(0)) * dir(0));
               },
               lambda_sup_};
  return m;
}

std::array<double, 3> stationary_states(const SuarezModel& s) {
  const double x = std::sqrt(1.0 - s.alpha());
  return {-x, 0.0, x};
}

std::function<Vec(double)> random_segment(double tau, double norm, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::array<double, 4> a{}, b{};
  for (int k = 0; k < 4; ++k) {
    a[k] = g(rng) / (1.0 + k);
    b[k] = g(rng) / (1.0 + k);
  }
  const double w = std::numbers::pi / tau;
  auto raw = [a, b, w](double th) {
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += a[k] * std::cos(k * w * th) + b[k] * std::sin(k * w * th);
    return v;
  };
  double sup = 0.0;
  const int n = 4096;
  for (int i = 0; i <= n; ++i) sup = std::max(sup, std::abs(raw(-tau + tau * i / n)));
  const double scale = sup > 0.0 ? norm / sup : 0.0;
  return [raw, scale](double th) { return Vec::Constant(1, scale * raw(th)); };
}

namespace {

double sup_abs_head(const Trajectory& tr, long from) {
  double s = 0.0;
  for (long k = from; k <= tr.steps(); ++k) s = std::max(s, std::abs(tr.head_at(k)(0)));
  return s;
}

}  // namespace

InvarianceReport check_invariance(const SuarezModel& s, double R, int trials, double T,
                                  const SimulationSettings& set) {
  if (!(R > 0.0)) throw DomainError("check_invariance: R must be positive");
  const DelayModel model = s.model();
  const HistoryGrid grid(s.tau(), set.m);
  const double h = s.tau() / set.steps_per_delay;
  const double bound = s.gamma() + R;
  std::mt19937_64 rng(set.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  InvarianceReport rep;
  rep.max_overshoot = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const double norm = bound * (t == 0 ? 1.0 : u(rng));
    const auto phi = random_segment(s.tau(), norm, rng());
    const Trajectory tr = evolve(model, phi, grid, 0.0, T, h);
    rep.max_overshoot = std::max(rep.max_overshoot, sup_abs_head(tr, 1) - bound);
    ++rep.trials;
  }
  return rep;
}

AbsorbingReport check_absorbing(const SuarezModel& s, int trials, double T_long,
                                double initial_norm, const SimulationSettings& set) {
  if (T_long < 100.0 * s.tau() * (1.0 - 1e-12))
    throw PreconditionError("check_absorbing: need T_long >= 100 tau");
  const DelayModel model = s.model();
  const HistoryGrid grid(s.tau(), set.m);
  const double h = s.tau() / set.steps_per_delay;
  std::mt19937_64 rng(set.seed);
  AbsorbingReport rep;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const auto phi = random_segment(s.tau(), initial_norm, rng());
    const Trajectory tr = evolve(model, phi, grid, 0.0, T_long, h);
    rep.max_excess = std::max(rep.max_excess, sup_abs_head(tr, tr.steps() / 2) - s.gamma());
    ++rep.trials;
  }
  return rep;
}

}  // namespace ddim
