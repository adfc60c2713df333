#pragma once

// Characteristic roots of scalar delay linear parts, the transfer function
// W(p) = 1 / Delta(p), and the frequency-domain test for invariant manifolds
// over a (tau, alpha) parameter grid.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ddim/parallel.hpp"

namespace ddim {

using cplx = std::complex<double>;

/// Characteristic function of a scalar delay linear part.
class CharFunction {
 public:
  virtual ~CharFunction() = default;
  virtual cplx delta(cplx p) const = 0;
  virtual cplx derivative(cplx p) const = 0;
  /// Every root with Re p >= -nu satisfies |p| <= root_bound(nu).
  virtual double root_bound(double nu) const = 0;
  /// Starting points for Newton in the upper half of the root box.
  virtual std::vector<cplx> seeds(double nu) const;
};

/// Delta(p) = 1 - alpha e^{-tau p} - p.
class SuarezChar final : public CharFunction {
 public:
  SuarezChar(double alpha, double tau);

  double alpha() const noexcept { return alpha_; }
  double tau() const noexcept { return tau_; }

  cplx delta(cplx p) const override;
  cplx derivative(cplx p) const override;
  /// From p = 1 - alpha e^{-tau p}: |p| <= 1 + alpha e^{tau nu} when Re p >= -nu.
  double root_bound(double nu) const override;
  std::vector<cplx> seeds(double nu) const override;

 private:
  double alpha_;
  double tau_;
};

struct RealRoots {
  double lambda1 = 0.0;  ///< the positive root
  double lambda2 = 0.0;  ///< the negative root
};

/// Requires alpha in (0, 1) and tau > 0.
RealRoots real_roots(const SuarezChar& cf);

/// Number of roots with Re p > -nu (with multiplicity), by the argument
/// principle on the boundary of the a-priori root box.
int count_roots_right_of(const CharFunction& cf, double nu);

/// Roots with Re p > -nu found by Newton polishing, conjugate pairs included,
/// sorted by decreasing real part.
std::vector<cplx> enumerate_roots(const CharFunction& cf, double nu);

struct MarginResult {
  double margin = 0.0;  ///< min over omega of 1/Lambda - |W(i omega - nu)|
  double omega = 0.0;   ///< where the minimum is attained (or the tail bound)
  double max_w = 0.0;   ///< sup |W(i omega - nu)|
};

MarginResult transfer_margin(const CharFunction& cf, double nu, double Lambda);

struct SpectralScan {
  double nu = 0.0;
  std::vector<cplx> roots;
  int j = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double freq_margin = 0.0;
};

SpectralScan spectral_scan(double alpha, double tau, double nu, double Lambda);

enum class Verdict { J1, J2, None, Error };
std::string to_string(Verdict v);

struct ImVerdict {
  Verdict verdict = Verdict::None;
  double nu = 0.0;      ///< accepted shift (NaN when none)
  double margin = 0.0;  ///< best margin seen at the accepted or best shift
  int lambda_sum_sign = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::string error;
};

/// Frequency test with Lambda = 3 + 3 alpha, searching nu in the spectral
/// gaps that leave one or two roots on the right.
ImVerdict im_verdict(double alpha, double tau);

struct Range {
  double lo;
  double hi;
};

struct RegionGrid {
  Range tau;
  Range alpha;
  int resolution = 0;
  std::vector<double> taus;    ///< cell centers
  std::vector<double> alphas;  ///< cell centers
  /// Row-major: cells[i * resolution + j] is (alphas[i], taus[j]).
  std::vector<ImVerdict> cells;

  const ImVerdict& at(int i_alpha, int j_tau) const {
    return cells[static_cast<std::size_t>(i_alpha) * resolution + j_tau];
  }
};

/// Cell-centered sweep; failed cells are kept with Verdict::Error.
RegionGrid region_sweep(Range tau, Range alpha, int resolution, Exec exec = Exec::Parallel);

struct MonotoneReport {
  int counterexamples = 0;
  std::vector<std::string> notes;
};

/// Along each alpha row, records where a None cell is followed by a J1 cell
/// at larger tau. Observations only.
MonotoneReport monotone_observations(const RegionGrid& g);

}  // namespace ddim
