#pragma once

// State space R^n x L2(-tau,0;R^n) on a uniform history grid, delay
// functionals and the integral inequalities that control them.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ddim/errors.hpp"

namespace ddim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Uniform grid theta_i = -tau + i*tau/m, i = 0..m, on [-tau, 0].
class HistoryGrid {
 public:
  static constexpr int kMinIntervals = 8;

  HistoryGrid(double tau, int m);

  double tau() const noexcept { return tau_; }
  int intervals() const noexcept { return m_; }
  int nodes() const noexcept { return m_ + 1; }
  double spacing() const noexcept { return tau_ / m_; }
  /// theta_i; node(0) == -tau and node(m) == 0 exactly.
  double node(int i) const;
  /// Composite trapezoid weights, m+1 entries.
  const Vec& weights() const noexcept { return weights_; }
  /// Index i with node(i) == theta, or nullopt when theta is off-grid
  /// (relative tolerance 1e-12 on theta/spacing).
  std::optional<int> index_of(double theta) const;

  bool operator==(const HistoryGrid& o) const noexcept {
    return tau_ == o.tau_ && m_ == o.m_;
  }

 private:
  double tau_;
  int m_;
  Vec weights_;
};

/// A point (x, phi) of H with phi sampled on a HistoryGrid. Immutable.
///
/// When `embedded()` the state came from a continuous segment and
/// seg.row(m) == head bitwise; otherwise head and seg are independent
/// (generalized data with a jump at theta = 0).
class HState {
 public:
  HState(Vec head, Mat seg, bool embedded);

  /// Embedding phi -> (phi(0), phi) of a continuous segment.
  static HState embed(const HistoryGrid& grid,
                      const std::function<Vec(double)>& phi);
  static HState embed_samples(Mat seg);
  static HState constant(const HistoryGrid& grid, const Vec& value);
  static HState zero(const HistoryGrid& grid, int n);

  int dim() const noexcept { return static_cast<int>(head_.size()); }
  int rows() const noexcept { return static_cast<int>(seg_.rows()); }
  const Vec& head() const noexcept { return head_; }
  const Mat& seg() const noexcept { return seg_; }
  bool embedded() const noexcept { return embedded_; }

  /// Coordinates [head; seg row 0; ...; seg row m], length n*(m+2).
  Vec coordinates() const;
  static HState from_coordinates(const Vec& c, int n, bool embedded);

  HState operator+(const HState& o) const;
  HState operator-(const HState& o) const;
  HState operator*(double s) const;

 private:
  Vec head_;
  Mat seg_;
  bool embedded_;
};

/// Diagonal of the Gram matrix of the H inner product in coordinates.
Vec h_weights(const HistoryGrid& grid, int n);

/// Sum_k M_k phi(theta_k) + int K(theta) phi(theta) d theta.
class LinearFunctional {
 public:
  struct PointMass {
    double lag;  ///< theta_k in [-tau, 0]
    Mat weight;  ///< out x n
  };
  struct Kernel {
    HistoryGrid grid;
    std::vector<Mat> samples;  ///< m+1 matrices, out x n
  };

  LinearFunctional(double tau, int n, int out, std::vector<PointMass> masses,
                   std::optional<Kernel> kernel = std::nullopt);

  /// M * phi(lag).
  static LinearFunctional delta(double tau, double lag, Mat weight);
  static LinearFunctional kernel(double tau, Kernel k);

  LinearFunctional operator+(const LinearFunctional& o) const;

  double tau() const noexcept { return tau_; }
  int in_dim() const noexcept { return n_; }
  int out_dim() const noexcept { return out_; }
  const std::vector<PointMass>& masses() const noexcept { return masses_; }
  const std::optional<Kernel>& kernel_part() const noexcept { return kernel_; }

  /// Matrix acting on H coordinates (head columns are zero: the functional
  /// reads the segment only). Lags must be nodes of `grid`.
  Mat matrix(const HistoryGrid& grid) const;

 private:
  double tau_;
  int n_;
  int out_;
  std::vector<PointMass> masses_;
  std::optional<Kernel> kernel_;
};

/// x'(t) = A~ x_t + B~ F(t, C~ x_t).
struct DelayModel {
  using Nonlinearity = std::function<Vec(double, const Vec&)>;
  using Jacobian = std::function<Mat(double, const Vec&)>;
  /// Second derivative contracted with a direction: d/ds dF(t, y + s*dir).
  using Hessian = std::function<Mat(double, const Vec&, const Vec&)>;

  int n = 1;
  int m_in = 1;
  int r = 1;
  double tau = 1.0;
  LinearFunctional A_tilde;
  Mat B_tilde;
  LinearFunctional C_tilde;
  Nonlinearity F;
  Jacobian dF;
  std::optional<Hessian> d2F;
  double Lambda = 0.0;

  /// Shape consistency of all parts; throws ShapeError.
  void validate() const;
};

/// Linear model x' = A~ x_t (F == 0, r = m_in = 1).
DelayModel linear_model(LinearFunctional A_tilde);

struct ModelCheck {
  double max_jacobian_rel_error = 0.0;
  double max_lipschitz_ratio = 0.0;  ///< |F(y1)-F(y2)| / |y1-y2|
  bool jacobian_ok = false;
  bool lipschitz_ok = false;
};

/// Finite-difference check of dF against F and a Lipschitz spot check,
/// both on `samples` random points drawn uniformly in [-radius, radius]^r.
ModelCheck check_model(const DelayModel& model, int samples, double radius,
                       unsigned long long seed);

double h_inner(const HState& a, const HState& b, const HistoryGrid& grid);
double h_norm(const HState& a, const HistoryGrid& grid);

/// Sup norm of the continuous segment; requires an embedded state.
double e_norm(const HState& a);

Vec apply_functional(const LinearFunctional& L, const HState& a,
                     const HistoryGrid& grid);

struct MesReport {
  double lhs = 0.0;    ///< int_0^T |C v(t)|^p dt
  double rhs = 0.0;    ///< |v(0)|^p + int_0^T |v(t)|^p dt
  double ratio = 0.0;  ///< lhs / rhs, 0 when rhs == 0
};

/// Both sides of the moment inequality |C v|_{L_p} <= M (|v(0)| + |v|_{L_p})
/// for p = 1 or p = 2 along a history-compatible path sampled every `h`.
MesReport check_mes(std::span<const HState> trajectory, double h, int p,
                    const LinearFunctional& C, const HistoryGrid& grid);

/// Explicit constant for point-mass functionals: |M| for lag 0 and
/// |M|(1 + sqrt(tau)) for a genuine delay, plus the L2 norm of the kernel.
double mes_constant(const LinearFunctional& C);

}  // namespace ddim
