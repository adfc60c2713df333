#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <string>

#include "ddim/dimension.hpp"

namespace ddim {

DomainForm domain_form(const LinearFunctional& A_tilde, const HistoryGrid& grid) {
  const int n = A_tilde.in_dim();
  if (A_tilde.out_dim() != n) throw ShapeError("domain_form: A~ must map R^n to R^n");
  const DelayModel model = linear_model(A_tilde);
  const int m = grid.intervals();
  const long D = static_cast<long>(n) * (m + 2);
  const long d = static_cast<long>(n) * (m + 1);
  // P sends segment samples to full coordinates with head = seg(m).
  Mat P = Mat::Zero(D, d);
  for (int c = 0; c < n; ++c) P(c, static_cast<long>(n) * m + c) = 1.0;
  P.bottomRows(d).setIdentity();
  const Mat G =
      generator_matrix(model, grid, 0.0, Vec::Zero(model.r), Derivative::SummationByParts);
  const Vec w = h_weights(grid, n);
  const Mat WG = w.asDiagonal() * G;
  DomainForm f;
  const Mat Q = P.transpose() * WG * P;
  f.S = 0.5 * (Q + Q.transpose());
  f.M = P.transpose() * w.asDiagonal() * P;
  return f;
}

namespace {

Mat orthonormal(const Mat& Z) {
  Eigen::HouseholderQR<Mat> qr(Z);
  Mat Q = qr.householderQ() * Mat::Identity(Z.rows(), Z.cols());
  // Fix signs so that the factorization is unique.
  const Mat R = qr.matrixQR().topRows(Z.cols()).triangularView<Eigen::Upper>();
  for (long j = 0; j < Z.cols(); ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

struct AscentResult {
  double value;
  bool converged;
};

// Maximizes tr(Z^T K Z) over Z^T Z = I by projected gradient ascent with
// backtracking. The best value seen is returned.
AscentResult ascend(const Mat& K, Mat Z, const BetaOptions& opts) {
  Z = orthonormal(Z);
  Mat KZ = K * Z;
  double f = (Z.transpose() * KZ).trace();
  double best = f;
  double eta = 1.0 / std::max(1.0, K.cwiseAbs().rowwise().sum().maxCoeff());
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Mat grad = 2.0 * (KZ - Z * (Z.transpose() * KZ));
    const double g2 = grad.squaredNorm();
    if (g2 < opts.tolerance * opts.tolerance) return {best, true};
    eta *= 2.0;
    for (int bt = 0; bt < 60; ++bt) {
      const Mat Zn = orthonormal(Z + eta * grad);
      const Mat KZn = K * Zn;
      const double fn = (Zn.transpose() * KZn).trace();
      if (fn >= f + 1e-4 * eta * g2) {
        Z = Zn;
        KZ = KZn;
        f = fn;
        break;
      }
      eta *= 0.5;
      if (bt == 59) return {best, true};
    }
    best = std::max(best, f);
  }
  return {best, false};
}

}  // namespace

BetaReport beta_numbers(const LinearFunctional& A_tilde, const HistoryGrid& grid, int k_max,
                        const BetaOptions& opts) {
  if (k_max < 1) throw DomainError("beta_numbers: k_max must be positive");
  if (opts.restarts < 1) throw DomainError("beta_numbers: need at least one restart");
  const DomainForm form = domain_form(A_tilde, grid);
  const long d = form.S.rows();
  if (k_max > d) throw DomainError("beta_numbers: k_max exceeds the discrete dimension");
  // M is diagonal; K = M^{-1/2} S M^{-1/2} turns M-orthonormal frames into
  // Euclidean ones.
  const Vec mi = form.M.diagonal().cwiseSqrt().cwiseInverse();
  const Mat K = mi.asDiagonal() * form.S * mi.asDiagonal();

  BetaReport rep;
  rep.sups.resize(k_max);
  rep.spreads.resize(k_max);
  rep.best_so_far.resize(k_max);
  std::vector<std::vector<double>> results(k_max, std::vector<double>(opts.restarts));
  std::vector<std::vector<char>> converged(k_max, std::vector<char>(opts.restarts));
  const long jobs = static_cast<long>(k_max) * opts.restarts;
  std::exception_ptr err;
#ifdef DDIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, worker_count()))
#endif
  for (long job = 0; job < jobs; ++job) {
    try {
      const int k = static_cast<int>(job / opts.restarts) + 1;
      const int r = static_cast<int>(job % opts.restarts);
      std::mt19937_64 rng(opts.seed * 1000003ULL + static_cast<unsigned long long>(k) * 7919ULL +
                          static_cast<unsigned long long>(r));
      std::normal_distribution<double> g;
      Mat Z(d, k);
      for (long i = 0; i < Z.size(); ++i) Z.data()[i] = g(rng);
      const AscentResult a = ascend(K, Z, opts);
      results[k - 1][r] = a.value;
      converged[k - 1][r] = a.converged;
    } catch (...) {
#ifdef DDIM_HAVE_OPENMP
#pragma omp critical(ddim_beta_error)
#endif
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  for (int k = 0; k < k_max; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : results[k]) {
      best = std::max(best, v);
      rep.best_so_far[k].push_back(best);
    }
    const auto [lo, hi] = std::minmax_element(results[k].begin(), results[k].end());
    rep.sups[k] = best;
    rep.spreads[k] = *hi - *lo;
    if (rep.spreads[k] > 1e-2) {
      rep.unstable = true;
      rep.warning += "beta_" + std::to_string(k + 1) + ": restart spread " +
                     std::to_string(rep.spreads[k]) + " exceeds 1e-2; ";
    }
    if (std::count(converged[k].begin(), converged[k].end(), 0) == opts.restarts) {
      rep.warning += "beta_" + std::to_string(k + 1) + ": no restart converged; ";
    }
  }
  for (int k = 0; k < k_max; ++k)
    rep.betas.push_back(k == 0 ? rep.sups[0] : rep.sups[k] - rep.sups[k - 1]);
  return rep;
}

}  // namespace ddim
