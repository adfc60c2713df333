#include "ddim/integrator.hpp"

#include <cmath>
#include <string>

#include "delay_stepper.hpp"

namespace ddim {

using detail::DiscreteFunctional;
using detail::NodeHistory;

Trajectory::Trajectory(std::shared_ptr<const DelayModel> model, HistoryGrid grid, double t0,
                       double h, std::shared_ptr<const NodeHistory> nodes, Mat stage_outputs,
                       HState initial)
    : model_(std::move(model)),
      grid_(grid),
      t0_(t0),
      h_(h),
      q_(nodes->delay_steps() / grid.intervals()),
      nodes_(std::move(nodes)),
      stage_out_(std::move(stage_outputs)),
      initial_(std::move(initial)) {}

long Trajectory::steps() const noexcept { return nodes_->last(); }
int Trajectory::delay_steps() const noexcept { return nodes_->delay_steps(); }

long Trajectory::index_of(double t) const {
  const double u = (t - t0_) / h_;
  const double r = std::round(u);
  if (std::abs(u - r) > 1e-9 * std::max(1.0, std::abs(u)))
    throw DomainError("trajectory: t = " + std::to_string(t) + " is not a node time");
  const long k = static_cast<long>(r);
  if (k < 0 || k > steps()) throw DomainError("trajectory: t outside the computed interval");
  return k;
}

Vec Trajectory::head_at(long k) const {
  if (k < -delay_steps() || k > steps()) throw DomainError("trajectory: node index out of range");
  return nodes_->node(k).col(0);
}

Eigen::Ref<const Vec> Trajectory::stage_output(long k, int s) const {
  return stage_out_.col(4 * k + s);
}

HState Trajectory::state_at_index(long k) const {
  if (k < 0 || k > steps()) throw DomainError("trajectory: node index out of range");
  if (k == 0) return initial_;
  const int m = grid_.intervals();
  const int N = delay_steps();
  Mat seg(m + 1, model_->n);
  for (int i = 0; i <= m; ++i) seg.row(i) = nodes_->node(k - N + i * q_).col(0).transpose();
  return HState::embed_samples(std::move(seg));
}

HState Trajectory::state_at(double t) const { return state_at_index(index_of(t)); }

namespace {

struct Setup {
  int N;
  int q;
  long K;
  DiscreteFunctional A;
  DiscreteFunctional C;
};

Setup prepare(const DelayModel& model, const HistoryGrid& grid, double T, double h) {
  model.validate();
  if (!(h > 0.0)) throw DomainError("evolve: step must be positive");
  if (!(T > 0.0)) throw DomainError("evolve: horizon must be positive");
  if (grid.tau() != model.tau) throw ConfigError("evolve: grid and model use different tau");
  Setup s;
  s.N = detail::steps_in(model.tau, h, "tau");
  s.q = detail::steps_in(grid.spacing(), h, "the history grid spacing");
  if (s.N < 4) throw ConfigError("evolve: need at least 4 steps per delay");
  s.K = static_cast<long>(std::ceil(T / h - 1e-9));
  s.A = detail::discretize(model.A_tilde, h);
  s.C = detail::discretize(model.C_tilde, h);
  return s;
}

Trajectory run(const DelayModel& model, const HistoryGrid& grid, double t0, double h,
               const Setup& S, std::shared_ptr<NodeHistory> hist, HState initial,
               const EvolveOptions& opts) {
  const int n = model.n;
  const int r = model.r;
  Mat stage_out(r, 4 * S.K);
  Vec X(n), a(n), y(r), k1(n), k2(n), k3(n), k4(n), x0(n);
  Mat scratch(n, 1);

  auto rhs = [&](long k, int c2, const Vec& stage, long col, Vec& out) {
    detail::apply_discrete(S.A, *hist, k, c2, stage, a, scratch);
    detail::apply_discrete(S.C, *hist, k, c2, stage, y, scratch);
    stage_out.col(col) = y;
    const double t = t0 + h * (static_cast<double>(k) + 0.5 * c2);
    out = a;
    out.noalias() += model.B_tilde * model.F(t, y);
  };

  for (long k = 0; k < S.K; ++k) {
    x0 = hist->node(k).col(0);
    rhs(k, 0, x0, 4 * k, k1);
    X = x0 + 0.5 * h * k1;
    rhs(k, 1, X, 4 * k + 1, k2);
    X = x0 + 0.5 * h * k2;
    rhs(k, 1, X, 4 * k + 2, k3);
    X = x0 + h * k3;
    rhs(k, 2, X, 4 * k + 3, k4);
    X = x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!X.allFinite() || X.lpNorm<Eigen::Infinity>() > opts.divergence_guard) {
      const double t = t0 + h * static_cast<double>(k + 1);
      throw DivergenceError("evolve: solution diverged at t = " + std::to_string(t), t);
    }
    hist->push().col(0) = X;
  }
  auto model_ptr = std::make_shared<const DelayModel>(model);
  return Trajectory(std::move(model_ptr), grid, t0, h, std::move(hist), std::move(stage_out),
                    std::move(initial));
}

}  // namespace

Trajectory evolve(const DelayModel& model, const HState& v0, const HistoryGrid& grid, double t0,
                  double T, double h, const EvolveOptions& opts) {
  const Setup S = prepare(model, grid, T, h);
  if (v0.dim() != model.n || v0.rows() != grid.nodes())
    throw ShapeError("evolve: initial state does not conform to model/grid");
  auto hist = std::make_shared<NodeHistory>(model.n, 1, S.N, static_cast<int>(S.K));
  std::vector<Mat> rows;
  rows.reserve(grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) rows.emplace_back(v0.seg().row(i).transpose());
  detail::fill_prefix_from_samples(*hist, rows, S.q, v0.head());
  hist->set_jump(!v0.embedded());
  return run(model, grid, t0, h, S, std::move(hist), v0, opts);
}

Trajectory evolve(const DelayModel& model, const std::function<Vec(double)>& history,
                  const HistoryGrid& grid, double t0, double T, double h,
                  const EvolveOptions& opts) {
  const Setup S = prepare(model, grid, T, h);
  auto hist = std::make_shared<NodeHistory>(model.n, 1, S.N, static_cast<int>(S.K));
  for (int j = -S.N; j < 0; ++j) {
    const Vec v = history(h * static_cast<double>(j));
    if (v.size() != model.n) throw ShapeError("evolve: history has wrong dimension");
    hist->node(j).col(0) = v;
  }
  hist->node(0).col(0) = history(0.0);
  hist->left_limit() = hist->node(0);
  HState initial = HState::embed(grid, history);
  return run(model, grid, t0, h, S, std::move(hist), std::move(initial), opts);
}

std::vector<HState> sample_states(const Trajectory& traj, long every) {
  if (every < 1) throw DomainError("sample_states: stride must be positive");
  std::vector<HState> out;
  for (long k = 0; k <= traj.steps(); k += every) out.push_back(traj.state_at_index(k));
  return out;
}

double linear_growth_exponent(const LinearFunctional& A_tilde) {
  if (A_tilde.kernel_part()) throw ConfigError("growth exponent: kernels are not supported");
  const int n = A_tilde.in_dim();
  Mat a0 = Mat::Zero(n, n);
  Mat b = Mat::Zero(n, n);
  for (const auto& pm : A_tilde.masses()) {
    if (pm.lag == 0.0) a0 += pm.weight;
    else if (pm.lag == -A_tilde.tau()) b += pm.weight;
    else throw ConfigError("growth exponent: only lags 0 and -tau are supported");
  }
  const Mat sym = 0.5 * (a0 + a0.transpose());
  const double lam = Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues().maxCoeff();
  const double bn = b.norm() > 0.0 ? Eigen::JacobiSVD<Mat>(b).singularValues()(0) : 0.0;
  return 0.5 * std::max(0.0, 2.0 * lam + bn * bn + 1.0);
}

UlipReport check_ulip(const DelayModel& model, const HState& v1, const HState& v2,
                      const HistoryGrid& grid, double T, double h) {
  const HState d0 = v1 - v2;
  const double n0 = h_norm(d0, grid);
  if (n0 == 0.0) throw DegeneratePairError("check_ulip: identical initial states");
  const double head0 = d0.head().norm();

  const Trajectory a = evolve(model, v1, grid, 0.0, T, h);
  const Trajectory b = evolve(model, v2, grid, 0.0, T, h);

  UlipReport rep;
  const double tau = model.tau;
  std::vector<double> ft, fl;
  for (long k = 0; k <= a.steps(); ++k) {
    const HState d = a.state_at_index(k) - b.state_at_index(k);
    const double t = a.time_of(k);
    const double ratio = h_norm(d, grid) / n0;
    rep.times.push_back(t);
    rep.ratios.push_back(ratio);
    rep.head_ratios.push_back(head0 > 0.0 ? d.head().norm() / head0 : 0.0);
    rep.sup_ratio = std::max(rep.sup_ratio, ratio);
    if (t >= tau - 1e-12 && ratio > 0.0) {
      ft.push_back(t);
      fl.push_back(std::log(ratio));
    }
  }
  if (ft.size() < 2) {
    ft.clear();
    fl.clear();
    for (std::size_t i = 0; i < rep.times.size(); ++i)
      if (rep.ratios[i] > 0.0) {
        ft.push_back(rep.times[i]);
        fl.push_back(std::log(rep.ratios[i]));
      }
  }
  if (ft.size() >= 2) {
    double mt = 0, ml = 0;
    for (std::size_t i = 0; i < ft.size(); ++i) {
      mt += ft[i];
      ml += fl[i];
    }
    mt /= ft.size();
    ml /= ft.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < ft.size(); ++i) {
      num += (ft[i] - mt) * (fl[i] - ml);
      den += (ft[i] - mt) * (ft[i] - mt);
    }
    rep.rate = den > 0.0 ? num / den : 0.0;
  }

  const double MA = 1.0;
  rep.kappa0 = linear_growth_exponent(model.A_tilde);
  const double MC = mes_constant(model.C_tilde);
  const double Bn = model.B_tilde.norm() > 0.0
                        ? Eigen::JacobiSVD<Mat>(model.B_tilde).singularValues()(0)
                        : 0.0;
  const double c = MA * MC * model.Lambda * Bn;
  rep.M1 = MA + c;
  rep.kappa = (c + 1.0) * std::exp(rep.kappa0 * T);
  rep.bound_holds = true;
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    const double bound = rep.M1 * std::exp(rep.kappa * rep.times[i]);
    if (!(rep.ratios[i] <= bound)) rep.bound_holds = false;
  }
  return rep;
}

}  // namespace ddim
