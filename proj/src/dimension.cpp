#include "ddim/dimension.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace ddim {

WeightedGram::WeightedGram(const HistoryGrid& grid, int n)
    : grid_(grid), n_(n), w_(h_weights(grid, n)), r_(w_.cwiseSqrt()) {
  if (n <= 0) throw ShapeError("weighted gram: n must be positive");
}

double WeightedGram::factorization_residual() const {
  return (r_.cwiseProduct(r_) - w_).cwiseAbs().maxCoeff() / w_.maxCoeff();
}

double WeightedGram::inner(const Vec& a, const Vec& b) const {
  if (a.size() != dim() || b.size() != dim()) throw ShapeError("weighted gram: length mismatch");
  return a.cwiseProduct(w_).dot(b);
}

Mat WeightedGram::gram(const Mat& X) const {
  if (X.rows() != dim()) throw ShapeError("weighted gram: row count mismatch");
  const Mat Y = r_.asDiagonal() * X;
  return Y.transpose() * Y;
}

namespace {

Mat frame_coords(std::span<const HState> frame, const WeightedGram& W) {
  Mat X(W.dim(), static_cast<long>(frame.size()));
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame[i].dim() != W.n() || frame[i].rows() != W.grid().nodes())
      throw ShapeError("frame vector does not conform to the metric");
    X.col(static_cast<long>(i)) = frame[i].coordinates();
  }
  return X;
}

// Second-order SBP first derivative on a uniform grid with trapezoid norm.
void add_sbp_rows(Mat& G, int n, int m, double dx) {
  auto col = [n](int i, int c) { return static_cast<long>(n) * (i + 1) + c; };
  for (int c = 0; c < n; ++c) {
    G(col(0, c), col(0, c)) -= 1.0 / dx;
    G(col(0, c), col(1, c)) += 1.0 / dx;
    for (int i = 1; i < m; ++i) {
      G(col(i, c), col(i - 1, c)) -= 0.5 / dx;
      G(col(i, c), col(i + 1, c)) += 0.5 / dx;
    }
    G(col(m, c), col(m - 1, c)) -= 1.0 / dx;
    G(col(m, c), col(m, c)) += 1.0 / dx;
  }
}

// Five-point fourth-order first derivative on rows 0..m-1; row m is set by
// the caller.
void add_fourth_order_rows(Mat& G, int n, int m, double dx) {
  static const double fwd[2][5] = {{-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25},
                                   {-0.25, -5.0 / 6, 1.5, -0.5, 1.0 / 12}};
  static const double mid[5] = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
  static const double bwd[5] = {-1.0 / 12, 0.5, -1.5, 5.0 / 6, 0.25};
  auto col = [n](int i, int c) { return static_cast<long>(n) * (i + 1) + c; };
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < m; ++i) {
      const double* w;
      int s;
      if (i < 2) {
        w = fwd[i];
        s = 0;
      } else if (i <= m - 2) {
        w = mid;
        s = i - 2;
      } else {
        w = bwd;
        s = m - 4;
      }
      for (int a = 0; a < 5; ++a) G(col(i, c), col(s + a, c)) += w[a] / dx;
    }
  }
}

// Log of the determinant of the Gram matrix, -inf when not positive definite.
double log_gram_det(const Mat& G) {
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Mat L = llt.matrixL();
  double s = 0.0;
  for (long i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) return -std::numeric_limits<double>::infinity();
    s += 2.0 * std::log(L(i, i));
  }
  return s;
}

double trace_of(const Mat& Gen, const Mat& X, const WeightedGram& W) {
  const Mat G = W.gram(X);
  Eigen::LDLT<Mat> ldlt(G);
  const Eigen::VectorXd d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-13 * d.cwiseAbs().maxCoeff())
    throw DegenerateFrameError("trace_on_span: frame is rank deficient");
  const Mat P = X.transpose() * W.diagonal().asDiagonal() * (Gen * X);
  return ldlt.solve(P).trace();
}

// Composite Simpson on nodes 0..k, with a 3/8 panel when k is odd.
double simpson_prefix(const std::vector<double>& f, std::size_t k, double h) {
  if (k == 0) return 0.0;
  if (k == 1) return 0.5 * h * (f[0] + f[1]);
  double s = 0.0;
  std::size_t end = k;
  if (k % 2 == 1) {
    end = k - 3;
    s += 3.0 * h / 8.0 * (f[end] + 3.0 * f[end + 1] + 3.0 * f[end + 2] + f[end + 3]);
  }
  for (std::size_t i = 0; i + 2 <= end; i += 2) s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  return s;
}

}  // namespace

double volume_k(std::span<const HState> frame, const WeightedGram& W) {
  if (frame.empty()) throw DomainError("volume_k: empty frame");
  if (static_cast<long>(frame.size()) > W.dim())
    throw DomainError("volume_k: more vectors than the ambient dimension");
  const Mat Y = W.factor().asDiagonal() * frame_coords(frame, W);
  Eigen::ColPivHouseholderQR<Mat> qr(Y);
  qr.setThreshold(1e-12);
  if (qr.rank() < Y.cols()) return 0.0;
  return std::abs(qr.matrixR().diagonal().prod());
}

double volume_k(const TangentFrame& frame, const WeightedGram& W) {
  return volume_k(std::span<const HState>(frame.vectors), W);
}

Mat generator_matrix(const DelayModel& model, const HistoryGrid& grid, double t, const Vec& y,
                     Derivative scheme) {
  model.validate();
  if (grid.tau() != model.tau) throw ConfigError("generator: grid and model use different tau");
  const int n = model.n;
  const int m = grid.intervals();
  const long D = static_cast<long>(n) * (m + 2);
  Mat G = Mat::Zero(D, D);
  Mat head = model.A_tilde.matrix(grid);
  if (model.r > 0) {
    if (y.size() != model.r) throw ShapeError("generator: C~ value has wrong length");
    head.noalias() += model.B_tilde * model.dF(t, y) * model.C_tilde.matrix(grid);
  }
  // Lag zero reads the head; on the domain seg(m) is the same value.
  const long last = static_cast<long>(n) * (m + 1);
  head.leftCols(n) += head.middleCols(last, n);
  head.middleCols(last, n).setZero();
  G.topRows(n) = head;
  if (scheme == Derivative::SummationByParts) {
    add_sbp_rows(G, n, m, grid.spacing());
  } else {
    add_fourth_order_rows(G, n, m, grid.spacing());
    G.middleRows(last, n) = head;
  }
  return G;
}

double trace_on_span(const DelayModel& model, const HState& base_state,
                     std::span<const HState> frame, const WeightedGram& W, double t) {
  if (frame.empty()) throw DegenerateFrameError("trace_on_span: empty frame");
  const Vec y = apply_functional(model.C_tilde, base_state, W.grid());
  const Mat Gen = generator_matrix(model, W.grid(), t, y);
  return trace_of(Gen, frame_coords(frame, W), W);
}

TraceCheck check_trace_formula(const DelayModel& model, const HState& v0,
                               std::span<const HState> xi0, const HistoryGrid& grid, double T,
                               double h, const TraceCheckOptions& opts) {
  if (!(opts.warmup >= 0.0)) throw DomainError("check_trace_formula: negative warmup");
  const long k0 = static_cast<long>(std::llround(opts.warmup / h));
  if (std::abs(k0 * h - opts.warmup) > 1e-9 * std::max(1.0, opts.warmup))
    throw ConfigError("check_trace_formula: warmup must be a whole number of steps");
  auto base =
      std::make_shared<const Trajectory>(evolve(model, v0, grid, 0.0, opts.warmup + T, h));
  const WeightedGram W(grid, model.n);
  TangentFlow flow(base, xi0, 0.0);
  const long K = base->steps();
  const int every = std::max(1, opts.reorthonormalize_every);

  auto orthonormalize = [&](const Mat& X, double& acc) {
    Eigen::LLT<Mat> llt(W.gram(X));
    if (llt.info() != Eigen::Success)
      throw DegenerateFrameError("check_trace_formula: frame lost rank");
    const Mat L = llt.matrixL();
    for (long i = 0; i < L.rows(); ++i) acc += std::log(L(i, i));
    flow.transform(
        L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(L.rows(), L.cols())));
  };

  double acc = 0.0;
  for (long k = 0; k < k0; ++k) {
    if (k > 0 && k % every == 0) orthonormalize(flow.coordinates(), acc);
    flow.step();
  }
  if (k0 > 0) orthonormalize(flow.coordinates(), acc);

  TraceCheck out;
  std::vector<double> tr;
  tr.reserve(K - k0 + 1);
  acc = 0.0;
  double log0 = 0.0;
  for (long k = k0; k <= K; ++k) {
    const Mat X = flow.coordinates();
    const double ld = log_gram_det(W.gram(X));
    if (!std::isfinite(ld) || 0.5 * ld < std::log(1e-300))
      throw UnderflowError("check_trace_formula: frame volume underflow at t = " +
                           std::to_string(base->time_of(k)) +
                           "; use a shorter horizon or reorthonormalize more often");
    const double lv = acc + 0.5 * ld;
    if (k == k0) log0 = lv;
    const HState s = base->state_at_index(k);
    const Vec y = apply_functional(model.C_tilde, s, grid);
    tr.push_back(trace_of(generator_matrix(model, grid, base->time_of(k), y), X, W));

    out.times.push_back(base->time_of(k));
    out.log_volume.push_back(lv - log0);
    out.trace_integral.push_back(simpson_prefix(tr, static_cast<std::size_t>(k - k0), h));
    const double dev = std::abs(out.log_volume.back() - out.trace_integral.back()) /
                       (1.0 + std::abs(out.log_volume.back()));
    out.max_deviation = std::max(out.max_deviation, dev);

    if (k == K) break;
    if (k > k0 && (k - k0) % every == 0) orthonormalize(X, acc);
    flow.step();
  }
  return out;
}

std::vector<RefinementRow> trace_refinement(const DelayModel& model, const TraceProblem& problem,
                                            std::span<const int> levels, double T,
                                            const TraceCheckOptions& opts) {
  std::vector<RefinementRow> rows;
  for (const int m : levels) {
    const HistoryGrid grid(model.tau, m);
    const double h = grid.spacing();
    const HState v0 = problem.state(grid);
    const std::vector<HState> xi = problem.frame(grid);
    RefinementRow r;
    r.m = m;
    r.h = h;
    r.deviation = check_trace_formula(model, v0, xi, grid, T, h, opts).max_deviation;
    if (!rows.empty() && r.deviation > 0.0 && rows.back().deviation > 0.0)
      r.order = std::log(rows.back().deviation / r.deviation) /
                std::log(static_cast<double>(m) / rows.back().m);
    rows.push_back(r);
  }
  return rows;
}

SingularSpectrum singular_spectrum(const Mat& M, const WeightedGram& W) {
  if (M.rows() != W.dim() || M.cols() != W.dim()) throw ShapeError("singular_spectrum: shape");
  const Vec& r = W.factor();
  const Mat S = r.asDiagonal() * M * r.cwiseInverse().asDiagonal();
  const Vec s = Eigen::JacobiSVD<Mat>(S).singularValues();
  SingularSpectrum out;
  out.sigmas.assign(s.data(), s.data() + s.size());
  return out;
}

SingularSpectrum singular_spectrum(const QuasiDifferential& L) {
  SingularSpectrum s = singular_spectrum(L.matrix, WeightedGram(L.grid, L.n));
  s.t = L.t_end - L.t_start;
  return s;
}

double omega_d(const SingularSpectrum& s, double d) {
  if (!(d > 0.0)) throw DomainError("omega_d: d must be positive");
  const double dim = static_cast<double>(s.sigmas.size());
  if (d > dim * (1.0 + 1e-12)) throw DomainError("omega_d: d exceeds the dimension");
  int k = static_cast<int>(std::ceil(d)) - 1;
  double frac = d - k;
  if (frac > 1.0) {  // rounding at integer d
    ++k;
    frac -= 1.0;
  }
  k = std::min<int>(k, static_cast<int>(s.sigmas.size()) - 1);
  double w = 1.0;
  for (int i = 0; i < k; ++i) w *= s.sigmas[i];
  const double last = s.sigmas[k];
  return w * (last == 0.0 ? 0.0 : std::pow(last, frac));
}

double omega_d(const QuasiDifferential& L, double d) { return omega_d(singular_spectrum(L), d); }

SqueezeReport squeezing_test(const DelayModel& model, std::span<const HState> samples,
                             const HistoryGrid& grid, double t, double h, double d,
                             double d_step, Exec exec) {
  if (samples.empty()) throw DomainError("squeezing_test: empty orbit sample");
  if (t < 2.0 * model.tau * (1.0 - 1e-12))
    throw PreconditionError("squeezing_test: need t >= 2 tau for a compact quasi-differential");
  if (!(d_step > 0.0)) throw DomainError("squeezing_test: d_step must be positive");

  const long S = static_cast<long>(samples.size());
  SqueezeReport rep;
  rep.d = d;
  rep.samples.resize(S);
  std::exception_ptr err;
  auto one = [&](long i) {
    auto base = std::make_shared<const Trajectory>(evolve(model, samples[i], grid, 0.0, t, h));
    const QuasiDifferential L = quasi_differential(base, t, 0.0, Exec::Serial);
    rep.samples[i].sigmas = singular_spectrum(L).sigmas;
  };
  if (exec == Exec::Serial) {
    for (long i = 0; i < S; ++i) one(i);
  } else {
#ifdef DDIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, worker_count()))
#endif
    for (long i = 0; i < S; ++i) {
      try {
        one(i);
      } catch (...) {
#ifdef DDIM_HAVE_OPENMP
#pragma omp critical(ddim_squeeze_error)
#endif
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  }

  auto sup_at = [&](double dd) {
    double sup = 0.0;
    for (const auto& s : rep.samples) sup = std::max(sup, omega_d(SingularSpectrum{s.sigmas, t}, dd));
    return sup;
  };
  for (auto& s : rep.samples) s.sup_omega = omega_d(SingularSpectrum{s.sigmas, t}, d);
  rep.sup_omega = sup_at(d);
  rep.verdict = rep.sup_omega < 1.0;
  const double dim = static_cast<double>(rep.samples.front().sigmas.size());
  for (long j = 1; j * d_step <= dim + 1e-12; ++j) {
    const double dd = std::min(dim, j * d_step);
    if (sup_at(dd) < 1.0) {
      rep.min_d = dd;
      break;
    }
  }
  return rep;
}

}  // namespace ddim
