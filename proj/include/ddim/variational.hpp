#pragma once

// Linearized flow V' = [A + B F'(C phi^t(v0)) C] V along a stored orbit and
// its matrix on grid coordinates (the quasi-differential L(t; v0)).

#include <memory>
#include <span>
#include <vector>

#include "ddim/core.hpp"
#include "ddim/integrator.hpp"
#include "ddim/parallel.hpp"

namespace ddim {

namespace detail {
class NodeHistory;
struct FlowKernels;
}

/// Steps k tangent vectors in lockstep with the base orbit, reusing the
/// base scheme's stage values of C~x so that one tangent step is the exact
/// derivative of one base step.
class TangentFlow {
 public:
  /// Starts at the base node time `t_start` (absolute time).
  TangentFlow(std::shared_ptr<const Trajectory> base, std::span<const HState> xi0,
              double t_start);
  /// Columns of `coords` are H coordinates. With `jump` false the head
  /// column alone carries the value at theta = 0, as for continuous data.
  TangentFlow(std::shared_ptr<const Trajectory> base, const Mat& coords, bool jump,
              double t_start);
  ~TangentFlow();
  TangentFlow(TangentFlow&&) noexcept;
  TangentFlow& operator=(TangentFlow&&) noexcept;

  int width() const noexcept { return width_; }
  /// Absolute time of the current node.
  double time() const;
  /// Base node index of the current node.
  long base_index() const noexcept { return start_ + k_; }
  bool can_step() const;
  void step();
  void advance_to(double t);

  /// Current vectors V_i(t) as H states.
  std::vector<HState> vectors() const;
  /// Current vectors as columns of H coordinates, n(m+2) x width.
  Mat coordinates() const;
  /// Replaces the frame V by V * R (R is width x width). The flow is linear,
  /// so the result is the tangent flow started from xi0 * R.
  void transform(const Mat& R);

  const Trajectory& base() const noexcept { return *base_; }

 private:
  std::shared_ptr<const Trajectory> base_;
  std::unique_ptr<detail::NodeHistory> hist_;
  std::unique_ptr<detail::FlowKernels> kern_;
  long start_ = 0;
  long k_ = 0;
  int width_ = 0;
  Mat initial_coords_;
};

struct TangentFrame {
  std::shared_ptr<const Trajectory> base;
  std::vector<HState> vectors;
  double t = 0.0;  ///< absolute time of the frame
};

/// Evolves xi0 from `t_start` to `t_start + t` along the base orbit.
TangentFrame evolve_tangent(std::shared_ptr<const Trajectory> base, std::span<const HState> xi0,
                            double t, double t_start = 0.0);

/// Matrix of L(t; v) on H coordinates [head; seg rows], size n(m+2) squared.
struct QuasiDifferential {
  Mat matrix;
  HistoryGrid grid;
  int n = 1;
  double t_start = 0.0;
  double t_end = 0.0;

  Vec apply(const Vec& coords) const { return matrix * coords; }
  HState apply(const HState& xi) const;
};

/// Assembles L(t; phi^{t_start}(v0)) column by column from the coordinate
/// basis. Exec::Parallel splits the columns across workers.
QuasiDifferential quasi_differential(std::shared_ptr<const Trajectory> base, double t,
                                     double t_start = 0.0, Exec exec = Exec::Parallel);

/// Index i0 after which all H-metric singular values are below rel * sigma_1.
int compactness_index(const QuasiDifferential& L, double rel = 1e-3);

}  // namespace ddim
