#pragma once

// Method of steps for x'(t) = A~ x_t + B~ F(t, C~ x_t) with a classical
// four-stage Runge-Kutta scheme on a uniform step h that divides tau.

#include <functional>
#include <memory>
#include <vector>

#include "ddim/core.hpp"

namespace ddim {

namespace detail {
class NodeHistory;
}

/// A computed solution on the node times t0 + k*h, k = -N..K.
///
/// Nodes k <= 0 hold the initial segment (sampled or interpolated at the
/// step resolution); node 0 is the head x(t0). Also keeps the stage values
/// of C~ x used by the scheme so that the linearized flow can reuse them.
class Trajectory {
 public:
  Trajectory(std::shared_ptr<const DelayModel> model, HistoryGrid grid, double t0, double h,
             std::shared_ptr<const detail::NodeHistory> nodes, Mat stage_outputs, HState initial);

  const DelayModel& model() const noexcept { return *model_; }
  std::shared_ptr<const DelayModel> model_ptr() const noexcept { return model_; }
  const HistoryGrid& grid() const noexcept { return grid_; }
  double t0() const noexcept { return t0_; }
  double step() const noexcept { return h_; }
  /// Number of completed steps K.
  long steps() const noexcept;
  /// N = tau / h.
  int delay_steps() const noexcept;
  /// Steps per history-grid interval (tau/m = q*h).
  int stride() const noexcept { return q_; }
  double end_time() const noexcept { return t0_ + h_ * static_cast<double>(steps()); }
  double time_of(long k) const noexcept { return t0_ + h_ * static_cast<double>(k); }
  /// Node index of time t, DomainError when t is not a node in [t0, end].
  long index_of(double t) const;

  /// x(t0 + k*h) for k in [-N, K].
  Vec head_at(long k) const;
  /// C~ x at stage s (0..3) of step k (0..K-1).
  Eigen::Ref<const Vec> stage_output(long k, int s) const;

  HState state_at(double t) const;
  HState state_at_index(long k) const;
  const HState& initial() const noexcept { return initial_; }

  const detail::NodeHistory& nodes() const noexcept { return *nodes_; }

 private:
  std::shared_ptr<const DelayModel> model_;
  HistoryGrid grid_;
  double t0_;
  double h_;
  int q_;
  std::shared_ptr<const detail::NodeHistory> nodes_;
  Mat stage_out_;  // r x 4K
  HState initial_;
};

struct EvolveOptions {
  double divergence_guard = 1e8;
};

/// Integrates from an H state; generalized data (head != seg(0)) is taken
/// as a jump at t0.
Trajectory evolve(const DelayModel& model, const HState& v0, const HistoryGrid& grid, double t0,
                  double T, double h, const EvolveOptions& opts = {});

/// Integrates from a continuous initial function sampled exactly at every
/// step node of [-tau, 0].
Trajectory evolve(const DelayModel& model, const std::function<Vec(double)>& history,
                  const HistoryGrid& grid, double t0, double T, double h,
                  const EvolveOptions& opts = {});

/// Node states every `every` steps, starting at t0.
std::vector<HState> sample_states(const Trajectory& traj, long every = 1);

struct UlipReport {
  std::vector<double> times;
  std::vector<double> ratios;       ///< |U v1 - U v2|_H / |v1 - v2|_H
  std::vector<double> head_ratios;  ///< same for the R^n component
  double sup_ratio = 0.0;
  double rate = 0.0;  ///< least-squares slope of log ratio over t >= t0 + tau
  double M1 = 0.0;    ///< M_A (1 + M_C Lambda |B|)
  double kappa = 0.0; ///< (M_A M_C Lambda |B| + 1) exp(kappa0 T)
  double kappa0 = 0.0;
  bool bound_holds = false;
};

/// Lipschitz growth of the semi-flow along two solutions.
UlipReport check_ulip(const DelayModel& model, const HState& v1, const HState& v2,
                      const HistoryGrid& grid, double T, double h);

/// Growth exponent of the linear semigroup from the energy identity
/// d/dt |v|^2 = 2 x.A~x_t + |x(t)|^2 - |x(t - tau)|^2 (M_A = 1). Only
/// lags 0 and -tau are supported; other lags raise ConfigError.
double linear_growth_exponent(const LinearFunctional& A_tilde);

}  // namespace ddim
