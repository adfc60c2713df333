#pragma once

// Volumes, traces and singular value functions in the metric of H, and the
// trace numbers beta_k of delay generators.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddim/core.hpp"
#include "ddim/integrator.hpp"
#include "ddim/parallel.hpp"
#include "ddim/variational.hpp"

namespace ddim {

/// Diagonal Gram matrix of the H inner product on grid coordinates:
/// identity on the head block, trapezoid weights on the segment rows.
class WeightedGram {
 public:
  WeightedGram(const HistoryGrid& grid, int n);

  const HistoryGrid& grid() const noexcept { return grid_; }
  int n() const noexcept { return n_; }
  long dim() const noexcept { return w_.size(); }
  const Vec& diagonal() const noexcept { return w_; }
  /// R with W = R^T R (diagonal, so R = sqrt(W)).
  const Vec& factor() const noexcept { return r_; }
  /// max |R^T R - W| / max W; zero up to rounding.
  double factorization_residual() const;

  double inner(const Vec& a, const Vec& b) const;
  /// Gram matrix X^T W X of the columns of X.
  Mat gram(const Mat& X) const;

 private:
  HistoryGrid grid_;
  int n_;
  Vec w_;
  Vec r_;
};

struct SingularSpectrum {
  std::vector<double> sigmas;  ///< non-increasing
  double t = 0.0;
};

/// sqrt(det Gram) of the vectors; 0 for a dependent frame.
double volume_k(std::span<const HState> frame, const WeightedGram& W);
double volume_k(const TangentFrame& frame, const WeightedGram& W);

enum class Derivative {
  /// Fourth-order differences; seg row m repeats the head row, since
  /// seg(m) and the head are the same point on the domain.
  FourthOrder,
  /// Second-order summation-by-parts operator with <D u, u> equal to the
  /// boundary term (u_m^2 - u_0^2) / 2 in the trapezoid norm.
  SummationByParts,
};

/// Discrete generator of the linearized equation at a state whose C~ value
/// is y: head row A~phi + B~ F'(t, y) C~ phi with lag 0 read from the head,
/// segment rows d/dtheta. Acts on full coordinates and is meaningful on
/// vectors with seg(m) == head.
Mat generator_matrix(const DelayModel& model, const HistoryGrid& grid, double t, const Vec& y,
                     Derivative scheme = Derivative::FourthOrder);

/// Sum of <G e_i, e_i>_H over a W-orthonormal basis of span(frame).
double trace_on_span(const DelayModel& model, const HState& base_state,
                     std::span<const HState> frame, const WeightedGram& W, double t = 0.0);

struct TraceCheckOptions {
  int reorthonormalize_every = 50;
  /// Base and frame are first evolved for this long; the comparison starts
  /// afterwards, so both are smooth solutions rather than raw initial data.
  double warmup = 0.0;
};

struct TraceCheck {
  std::vector<double> times;
  std::vector<double> log_volume;      ///< log vol_k(t) - log vol_k(0)
  std::vector<double> trace_integral;  ///< int_0^t trace ds
  double max_deviation = 0.0;          ///< max |diff| / (1 + |log vol|)
};

/// Evolves the frame xi0 along the orbit of v0 and compares the log-volume
/// growth over [warmup, warmup + T] with the time integral of the trace.
TraceCheck check_trace_formula(const DelayModel& model, const HState& v0,
                               std::span<const HState> xi0, const HistoryGrid& grid, double T,
                               double h, const TraceCheckOptions& opts = {});

struct RefinementRow {
  int m = 0;
  double h = 0.0;
  double deviation = 0.0;
  double order = 0.0;  ///< log2 of the deviation ratio to the previous row
};

struct TraceProblem {
  std::function<HState(const HistoryGrid&)> state;
  std::function<std::vector<HState>(const HistoryGrid&)> frame;
};

/// Runs check_trace_formula at m in `levels` with h = tau/m and reports the
/// deviations with observed orders.
std::vector<RefinementRow> trace_refinement(const DelayModel& model, const TraceProblem& problem,
                                            std::span<const int> levels, double T,
                                            const TraceCheckOptions& opts = {});

SingularSpectrum singular_spectrum(const QuasiDifferential& L);
SingularSpectrum singular_spectrum(const Mat& M, const WeightedGram& W);

/// alpha_1 ... alpha_k alpha_{k+1}^s for d = k + s, s in (0, 1].
double omega_d(const SingularSpectrum& s, double d);
double omega_d(const QuasiDifferential& L, double d);

struct SqueezeSample {
  double sup_omega = 0.0;
  std::vector<double> sigmas;
};

struct SqueezeReport {
  double d = 0.0;
  double sup_omega = 0.0;
  bool verdict = false;           ///< sup_omega < 1
  std::optional<double> min_d;    ///< least d on the scan grid with sup < 1
  std::vector<SqueezeSample> samples;
};

/// omega_d(L(t; v)) over the samples, with the base orbit of each sample
/// integrated at step h. Requires t >= 2 tau.
SqueezeReport squeezing_test(const DelayModel& model, std::span<const HState> samples,
                             const HistoryGrid& grid, double t, double h, double d,
                             double d_step = 0.05, Exec exec = Exec::Parallel);

struct BetaOptions {
  int restarts = 32;
  int max_iterations = 4000;
  double tolerance = 1e-10;
  unsigned long long seed = 1;
};

struct BetaReport {
  std::vector<double> betas;      ///< beta_1 .. beta_kmax
  std::vector<double> sups;       ///< best trace over k-dim subspaces
  std::vector<double> spreads;    ///< max - min of the restart results per k
  std::vector<std::vector<double>> best_so_far;  ///< per k, after each restart
  bool unstable = false;
  std::string warning;
};

/// Quadratic form <A v, v>_H on the discrete domain (seg(m) = head) in the
/// segment coordinates, with the matching mass matrix.
struct DomainForm {
  Mat S;
  Mat M;
};
DomainForm domain_form(const LinearFunctional& A_tilde, const HistoryGrid& grid);

/// beta_k of the linear generator x' = A~ x_t by projected-gradient ascent
/// over M-orthonormal k-frames with random restarts.
BetaReport beta_numbers(const LinearFunctional& A_tilde, const HistoryGrid& grid, int k_max,
                        const BetaOptions& opts = {});

}  // namespace ddim
