#pragma once

// Internal method-of-steps engine shared by the nonlinear flow and the
// linearized flow. Node values live on t0 + j*h for j >= -N (N = tau/h);
// a node value is an n x c block (c = 1 for the nonlinear flow, c = frame
// width for the tangent flow). Delayed stage values at half steps come
// from 4-point Lagrange interpolation of node values inside the current
// window [k - N, k], so one step depends on the window alone.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ddim/core.hpp"

namespace ddim::detail {

/// Lags expressed as whole steps of the integrator.
struct DiscreteFunctional {
  struct Term {
    int lag_steps;  ///< L >= 0, reads x(t - L*h)
    Mat weight;     ///< out x n, quadrature weight folded in
  };
  int out = 0;
  int n = 0;
  std::vector<Term> terms;
};

inline int steps_in(double span, double h, const char* what) {
  const double u = span / h;
  const double r = std::round(u);
  if (std::abs(u - r) > 1e-9 * std::max(1.0, u))
    throw ConfigError(std::string("step does not divide ") + what);
  return static_cast<int>(r);
}

inline DiscreteFunctional discretize(const LinearFunctional& L, double h) {
  DiscreteFunctional d;
  d.out = L.out_dim();
  d.n = L.in_dim();
  for (const auto& pm : L.masses())
    d.terms.push_back({steps_in(-pm.lag, h, "a discrete delay"), pm.weight});
  if (const auto& k = L.kernel_part()) {
    const int q = steps_in(k->grid.spacing(), h, "the kernel grid spacing");
    const int m = k->grid.intervals();
    for (int i = 0; i <= m; ++i)
      d.terms.push_back({(m - i) * q, k->grid.weights()(i) * k->samples[i]});
  }
  return d;
}

/// Node storage with window-clamped interpolation.
class NodeHistory {
 public:
  NodeHistory(int n, int cols, int N, int reserve_steps)
      : n_(n), c_(cols), N_(N), block_(n * cols) {
    data_.reserve(static_cast<std::size_t>(block_) * (N + 1 + reserve_steps));
    data_.resize(static_cast<std::size_t>(block_) * (N + 1));
    left_.resize(block_);
  }

  int rows() const noexcept { return n_; }
  int cols() const noexcept { return c_; }
  int delay_steps() const noexcept { return N_; }
  /// Largest stored node index.
  long last() const noexcept { return static_cast<long>(data_.size() / block_) - 1 - N_; }

  Eigen::Map<Mat> node(long j) {
    return Eigen::Map<Mat>(data_.data() + (j + N_) * block_, n_, c_);
  }
  Eigen::Map<const Mat> node(long j) const {
    return Eigen::Map<const Mat>(data_.data() + (j + N_) * block_, n_, c_);
  }
  Eigen::Map<Mat> left_limit() { return Eigen::Map<Mat>(left_.data(), n_, c_); }
  Eigen::Map<const Mat> left_limit() const { return Eigen::Map<const Mat>(left_.data(), n_, c_); }

  void set_jump(bool jump) noexcept { jump_ = jump; }
  bool jump() const noexcept { return jump_; }

  Eigen::Map<Mat> push() {
    data_.resize(data_.size() + block_);
    return node(last());
  }

  /// Value at half-integer position pos2/2 seen from step k.
  template <class Out>
  void at(long pos2, long k, Out&& out) const {
    if (pos2 % 2 == 0) {
      out = node(pos2 / 2);
      return;
    }
    const long j = (pos2 - 1) / 2;  // p = j + 1/2
    long lo = k - N_;
    long hi = k;
    if (jump_) {
      if (j >= 0) lo = std::max(lo, 0L);
      else hi = std::min(hi, 0L);
    }
    long s = j - 1;
    long e = j + 2;
    if (s < lo) { e += lo - s; s = lo; }
    if (e > hi) { s -= e - hi; e = hi; }
    s = std::max(s, lo);
    const double p = static_cast<double>(j) + 0.5;
    out.setZero();
    for (long a = s; a <= e; ++a) {
      double w = 1.0;
      for (long b = s; b <= e; ++b)
        if (b != a) w *= (p - static_cast<double>(b)) / static_cast<double>(a - b);
      if (a == 0 && jump_ && p < 0.0) out.noalias() += w * left_limit();
      else out.noalias() += w * node(a);
    }
  }

  const std::vector<double>& raw() const noexcept { return data_; }

 private:
  int n_;
  int c_;
  int N_;
  int block_;
  bool jump_ = false;
  std::vector<double> data_;
  std::vector<double> left_;
};

/// Evaluates sum_terms W * x(pos) for stage (k, c2/2) with the current stage
/// value standing in for lag zero.
template <class Stage, class Out>
void apply_discrete(const DiscreteFunctional& f, const NodeHistory& hist, long k, int c2,
                    const Stage& X, Out& out, Mat& scratch) {
  out.setZero();
  for (const auto& term : f.terms) {
    if (term.lag_steps == 0) {
      out.noalias() += term.weight * X;
    } else {
      hist.at(2 * k + c2 - 2 * term.lag_steps, k, scratch);
      out.noalias() += term.weight * scratch;
    }
  }
}

/// Fill prefix nodes -N..0 from grid samples (rows of `seg`, one per q steps)
/// with the clamped cubic interpolation used everywhere else.
inline void fill_prefix_from_samples(NodeHistory& hist, const std::vector<Mat>& rows, int q,
                                     const Mat& head) {
  const int N = hist.delay_steps();
  const int m = static_cast<int>(rows.size()) - 1;
  for (int j = -N; j <= 0; ++j) {
    const int off = j + N;
    if (off % q == 0) {
      hist.node(j) = rows[off / q];
      continue;
    }
    const double u = static_cast<double>(off) / q;  // fractional row index
    int s = static_cast<int>(std::floor(u)) - 1;
    s = std::clamp(s, 0, m - 3);
    Mat acc = Mat::Zero(hist.rows(), hist.cols());
    for (int a = s; a <= s + 3; ++a) {
      double w = 1.0;
      for (int b = s; b <= s + 3; ++b)
        if (b != a) w *= (u - b) / static_cast<double>(a - b);
      acc += w * rows[a];
    }
    hist.node(j) = acc;
  }
  hist.left_limit() = rows[m];
  hist.node(0) = head;
}

}  // namespace ddim::detail
