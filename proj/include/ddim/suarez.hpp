#pragma once

// x'(t) = x(t) - alpha x(t - tau) - g(x(t)) with g(y) = y^3 on the core
// |y| <= gamma + R_cut, blended to a linear tail outside.

#include <array>

#include "ddim/core.hpp"
#include "ddim/integrator.hpp"

namespace ddim {

class SuarezModel {
 public:
  SuarezModel(double alpha, double tau, double R_cut = 1.0);

  double alpha() const noexcept { return alpha_; }
  double tau() const noexcept { return tau_; }
  double R_cut() const noexcept { return R_cut_; }
  /// sqrt(1 + alpha).
  double gamma() const noexcept { return gamma_; }
  /// End of the cubic core, gamma + R_cut.
  double core() const noexcept { return c_; }

  double g(double y) const;
  double dg(double y) const;
  double d2g(double y) const;

  /// sup |g'| over R (attained on the blend band or the tail).
  double lipschitz_sup() const noexcept { return lambda_sup_; }
  /// 3 + 3 alpha, the slope of y^3 at |y| = gamma.
  double lipschitz_attractor() const noexcept { return 3.0 + 3.0 * alpha_; }

  /// A~ = delta_0 - alpha delta_{-tau}, B~ = 1, C~ = delta_0, F = -g.
  DelayModel model() const;

 private:
  double alpha_;
  double tau_;
  double R_cut_;
  double gamma_;
  double c_;
  double lambda_sup_;
};

/// {-sqrt(1 - alpha), 0, sqrt(1 - alpha)}.
std::array<double, 3> stationary_states(const SuarezModel& s);

struct SimulationSettings {
  int m = 64;
  int steps_per_delay = 64;
  unsigned long long seed = 1;
};

struct InvarianceReport {
  double max_overshoot = 0.0;  ///< max over trials and t of sup|x(t)| - (gamma + R)
  int trials = 0;
};

/// Random smooth initial segments with sup norm <= gamma + R.
InvarianceReport check_invariance(const SuarezModel& s, double R, int trials, double T,
                                  const SimulationSettings& set = {});

struct AbsorbingReport {
  double max_excess = 0.0;  ///< max over trials of sup_{t >= T/2} |x(t)| - gamma
  int trials = 0;
};

/// Random smooth initial segments of sup norm `initial_norm`, integrated to
/// T_long >= 100 tau.
AbsorbingReport check_absorbing(const SuarezModel& s, int trials, double T_long,
                                double initial_norm, const SimulationSettings& set = {});

/// Random smooth segment with sup norm exactly `norm` (deterministic in rng).
std::function<Vec(double)> random_segment(double tau, double norm, unsigned long long seed);

}  // namespace ddim
