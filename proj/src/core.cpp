#include "ddim/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ddim {

HistoryGrid::HistoryGrid(double tau, int m) : tau_(tau), m_(m) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw DomainError("history grid: tau must be positive and finite");
  if (m < kMinIntervals)
    throw DomainError("history grid: need at least " +
                      std::to_string(kMinIntervals) + " intervals, got " +
                      std::to_string(m));
  const double h = spacing();
  weights_ = Vec::Constant(m + 1, h);
  weights_(0) = 0.5 * h;
  weights_(m) = 0.5 * h;
}

double HistoryGrid::node(int i) const {
  if (i < 0 || i > m_) throw DomainError("history grid: node index out of range");
  if (i == m_) return 0.0;
  if (i == 0) return -tau_;
  return -tau_ + i * spacing();
}

std::optional<int> HistoryGrid::index_of(double theta) const {
  if (theta > 0.0 || theta < -tau_ * (1.0 + 1e-12)) return std::nullopt;
  const double u = (theta + tau_) / spacing();
  const double r = std::round(u);
  if (std::abs(u - r) > 1e-12 * std::max(1.0, std::abs(u))) return std::nullopt;
  return static_cast<int>(r);
}

HState::HState(Vec head, Mat seg, bool embedded)
    : head_(std::move(head)), seg_(std::move(seg)), embedded_(embedded) {
  if (seg_.cols() != head_.size())
    throw ShapeError("state: segment width differs from head dimension");
  if (seg_.rows() < HistoryGrid::kMinIntervals + 1)
    throw ShapeError("state: segment has too few samples");
  if (!head_.allFinite() || !seg_.allFinite())
    throw DomainError("state: non-finite entries");
  if (embedded_ && !(seg_.row(seg_.rows() - 1).transpose().array() == head_.array()).all())
    throw DomainError("state: embedded state needs seg(m) == head");
}

HState HState::embed(const HistoryGrid& grid,
                     const std::function<Vec(double)>& phi) {
  const Vec first = phi(grid.node(0));
  Mat seg(grid.nodes(), first.size());
  seg.row(0) = first.transpose();
  for (int i = 1; i < grid.nodes(); ++i) seg.row(i) = phi(grid.node(i)).transpose();
  Vec head = seg.row(grid.intervals()).transpose();
  return HState(std::move(head), std::move(seg), true);
}

HState HState::embed_samples(Mat seg) {
  Vec head = seg.row(seg.rows() - 1).transpose();
  return HState(std::move(head), std::move(seg), true);
}

HState HState::constant(const HistoryGrid& grid, const Vec& value) {
  Mat seg = value.transpose().replicate(grid.nodes(), 1);
  return HState(value, std::move(seg), true);
}

HState HState::zero(const HistoryGrid& grid, int n) {
  return constant(grid, Vec::Zero(n));
}

Vec HState::coordinates() const {
  const int n = dim();
  Vec c(n * (rows() + 1));
  c.head(n) = head_;
  for (int i = 0; i < rows(); ++i) c.segment(n * (i + 1), n) = seg_.row(i).transpose();
  return c;
}

HState HState::from_coordinates(const Vec& c, int n, bool embedded) {
  if (n <= 0 || c.size() % n != 0) throw ShapeError("coordinates: length not a multiple of n");
  const int rows = static_cast<int>(c.size() / n) - 1;
  Mat seg(rows, n);
  for (int i = 0; i < rows; ++i) seg.row(i) = c.segment(n * (i + 1), n).transpose();
  if (embedded) return embed_samples(std::move(seg));
  return HState(c.head(n), std::move(seg), false);
}

namespace {
void require_same_shape(const HState& a, const HState& b) {
  if (a.dim() != b.dim() || a.rows() != b.rows())
    throw ShapeError("state shapes differ");
}
}  // namespace

HState HState::operator+(const HState& o) const {
  require_same_shape(*this, o);
  return HState(head_ + o.head_, seg_ + o.seg_, embedded_ && o.embedded_);
}

HState HState::operator-(const HState& o) const {
  require_same_shape(*this, o);
  return HState(head_ - o.head_, seg_ - o.seg_, embedded_ && o.embedded_);
}

HState HState::operator*(double s) const { return HState(head_ * s, seg_ * s, embedded_); }

Vec h_weights(const HistoryGrid& grid, int n) {
  Vec w(n * (grid.nodes() + 1));
  w.head(n).setOnes();
  for (int i = 0; i < grid.nodes(); ++i) w.segment(n * (i + 1), n).setConstant(grid.weights()(i));
  return w;
}

LinearFunctional::LinearFunctional(double tau, int n, int out,
                                   std::vector<PointMass> masses,
                                   std::optional<Kernel> kernel)
    : tau_(tau), n_(n), out_(out), masses_(std::move(masses)), kernel_(std::move(kernel)) {
  if (!(tau > 0.0)) throw DomainError("functional: tau must be positive");
  if (n <= 0 || out <= 0) throw ShapeError("functional: dimensions must be positive");
  for (const auto& pm : masses_) {
    if (pm.lag > 0.0 || pm.lag < -tau * (1.0 + 1e-12))
      throw DomainError("functional: lag outside [-tau, 0]");
    if (pm.weight.rows() != out || pm.weight.cols() != n)
      throw ShapeError("functional: point-mass weight has wrong shape");
  }
  if (kernel_) {
    if (kernel_->grid.tau() != tau) throw ConfigError("functional: kernel grid has another tau");
    if (static_cast<int>(kernel_->samples.size()) != kernel_->grid.nodes())
      throw ShapeError("functional: kernel needs one sample per grid node");
    for (const auto& k : kernel_->samples)
      if (k.rows() != out || k.cols() != n) throw ShapeError("functional: kernel sample shape");
  }
}

LinearFunctional LinearFunctional::delta(double tau, double lag, Mat weight) {
  const int out = static_cast<int>(weight.rows());
  const int n = static_cast<int>(weight.cols());
  return LinearFunctional(tau, n, out, {PointMass{lag, std::move(weight)}});
}

LinearFunctional LinearFunctional::kernel(double tau, Kernel k) {
  const int out = static_cast<int>(k.samples.at(0).rows());
  const int n = static_cast<int>(k.samples.at(0).cols());
  return LinearFunctional(tau, n, out, {}, std::move(k));
}

LinearFunctional LinearFunctional::operator+(const LinearFunctional& o) const {
  if (o.tau_ != tau_ || o.n_ != n_ || o.out_ != out_)
    throw ShapeError("functional sum: incompatible operands");
  std::vector<PointMass> masses = masses_;
  masses.insert(masses.end(), o.masses_.begin(), o.masses_.end());
  std::optional<Kernel> k = kernel_;
  if (o.kernel_) {
    if (!k) {
      k = o.kernel_;
    } else {
      if (!(k->grid == o.kernel_->grid)) throw ConfigError("functional sum: kernel grids differ");
      for (std::size_t i = 0; i < k->samples.size(); ++i) k->samples[i] += o.kernel_->samples[i];
    }
  }
  return LinearFunctional(tau_, n_, out_, std::move(masses), std::move(k));
}

Mat LinearFunctional::matrix(const HistoryGrid& grid) const {
  if (grid.tau() != tau_) throw ConfigError("functional: grid has another tau");
  Mat A = Mat::Zero(out_, n_ * (grid.nodes() + 1));
  for (const auto& pm : masses_) {
    const auto idx = grid.index_of(pm.lag);
    if (!idx) throw ConfigError("functional: lag " + std::to_string(pm.lag) + " is not a grid node");
    A.middleCols(n_ * (*idx + 1), n_) += pm.weight;
  }
  if (kernel_) {
    if (!(kernel_->grid == grid)) throw ConfigError("functional: kernel sampled on another grid");
    for (int i = 0; i < grid.nodes(); ++i)
      A.middleCols(n_ * (i + 1), n_) += grid.weights()(i) * kernel_->samples[i];
  }
  return A;
}

void DelayModel::validate() const {
  if (A_tilde.in_dim() != n || A_tilde.out_dim() != n)
    throw ShapeError("model: A~ must map R^n segments to R^n");
  if (C_tilde.in_dim() != n || C_tilde.out_dim() != r)
    throw ShapeError("model: C~ must map R^n segments to R^r");
  if (B_tilde.rows() != n || B_tilde.cols() != m_in) throw ShapeError("model: B~ must be n x m");
  if (A_tilde.tau() != tau || C_tilde.tau() != tau) throw ConfigError("model: functionals use another tau");
  if (!F || !dF) throw ConfigError("model: nonlinearity and its Jacobian are required");
}

DelayModel linear_model(LinearFunctional A_tilde) {
  const int n = A_tilde.in_dim();
  const double tau = A_tilde.tau();
  DelayModel m{
      .n = n,
      .m_in = 1,
      .r = 1,
      .tau = tau,
      .A_tilde = A_tilde,
      .B_tilde = Mat::Zero(n, 1),
      .C_tilde = LinearFunctional::delta(tau, 0.0, Mat::Zero(1, n)),
      .F = [](double, const Vec&) { return Vec::Zero(1); },
      .dF = [](double, const Vec&) { return Mat::Zero(1, 1); },
      .d2F = [](double, const Vec&, const Vec&) { return Mat::Zero(1, 1); },
      .Lambda = 0.0,
  };
  return m;
}

ModelCheck check_model(const DelayModel& model, int samples, double radius,
                       unsigned long long seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-radius, radius);
  auto draw = [&] {
    Vec y(model.r);
    for (int i = 0; i < model.r; ++i) y(i) = u(rng);
    return y;
  };
  ModelCheck out;
  for (int s = 0; s < samples; ++s) {
    const Vec y = draw();
    const Mat J = model.dF(0.0, y);
    Mat Jfd(model.m_in, model.r);
    for (int j = 0; j < model.r; ++j) {
      const double eps = 1e-6 * std::max(1.0, std::abs(y(j)));
      Vec yp = y, ym = y;
      yp(j) += eps;
      ym(j) -= eps;
      Jfd.col(j) = (model.F(0.0, yp) - model.F(0.0, ym)) / (2 * eps);
    }
    const double scale = std::max(1.0, J.norm());
    out.max_jacobian_rel_error = std::max(out.max_jacobian_rel_error, (J - Jfd).norm() / scale);

    const Vec y2 = draw();
    const double dy = (y - y2).norm();
    if (dy > 0.0)
      out.max_lipschitz_ratio = std::max(
          out.max_lipschitz_ratio, (model.F(0.0, y) - model.F(0.0, y2)).norm() / dy);
  }
  out.jacobian_ok = out.max_jacobian_rel_error <= 1e-5;
  out.lipschitz_ok = out.max_lipschitz_ratio <= model.Lambda * (1.0 + 1e-12);
  return out;
}

double h_inner(const HState& a, const HState& b, const HistoryGrid& grid) {
  require_same_shape(a, b);
  if (a.rows() != grid.nodes()) throw ShapeError("h_inner: state does not conform to grid");
  const Vec& w = grid.weights();
  double s = a.head().dot(b.head());
  for (int i = 0; i < grid.nodes(); ++i) s += w(i) * a.seg().row(i).dot(b.seg().row(i));
  return s;
}

double h_norm(const HState& a, const HistoryGrid& grid) {
  return std::sqrt(h_inner(a, a, grid));
}

double e_norm(const HState& a) {
  if (!a.embedded()) throw DomainError("e_norm: state is not embedded from C([-tau,0])");
  return a.seg().rowwise().norm().maxCoeff();
}

Vec apply_functional(const LinearFunctional& L, const HState& a,
                     const HistoryGrid& grid) {
  if (a.dim() != L.in_dim()) throw ShapeError("apply_functional: state width mismatch");
  if (a.rows() != grid.nodes()) throw ShapeError("apply_functional: state does not conform to grid");
  if (grid.tau() != L.tau()) throw ConfigError("apply_functional: grid has another tau");
  Vec out = Vec::Zero(L.out_dim());
  for (const auto& pm : L.masses()) {
    const auto idx = grid.index_of(pm.lag);
    if (!idx) throw ConfigError("apply_functional: lag " + std::to_string(pm.lag) + " is not a grid node");
    out.noalias() += pm.weight * a.seg().row(*idx).transpose();
  }
  if (const auto& k = L.kernel_part()) {
    if (!(k->grid == grid)) throw ConfigError("apply_functional: kernel sampled on another grid");
    for (int i = 0; i < grid.nodes(); ++i)
      out.noalias() += grid.weights()(i) * (k->samples[i] * a.seg().row(i).transpose());
  }
  return out;
}

namespace {

// True when every seg row of `later` that reaches back into already visited
// times equals the head recorded at that time.
void require_history_compatible(std::span<const HState> traj, double h,
                                const HistoryGrid& grid) {
  const double q_real = grid.spacing() / h;
  const long q = std::lround(q_real);
  if (q < 1 || std::abs(q_real - q) > 1e-9 * q_real) return;  // not checkable on this sampling
  const int m = grid.intervals();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj[k];
    if (!s.embedded()) throw PreconditionError("check_mes: trajectory states must be embedded");
    for (int i = 0; i <= m; ++i) {
      const long back = static_cast<long>(k) - static_cast<long>(m - i) * q;
      if (back < 0) continue;
      const double diff = (s.seg().row(i).transpose() - traj[back].head()).norm();
      const double scale = 1.0 + traj[back].head().norm();
      if (diff > 1e-12 * scale)
        throw PreconditionError("check_mes: segment does not match lagged heads");
    }
  }
}

double trapezoid(const std::vector<double>& f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

}  // namespace

MesReport check_mes(std::span<const HState> trajectory, double h, int p,
                    const LinearFunctional& C, const HistoryGrid& grid) {
  if (trajectory.empty()) throw DomainError("check_mes: empty trajectory");
  if (p != 1 && p != 2) throw DomainError("check_mes: p must be 1 or 2");
  if (!(h > 0.0)) throw DomainError("check_mes: step must be positive");
  require_history_compatible(trajectory, h, grid);

  std::vector<double> c_vals, v_vals;
  c_vals.reserve(trajectory.size());
  v_vals.reserve(trajectory.size());
  for (const auto& s : trajectory) {
    c_vals.push_back(std::pow(apply_functional(C, s, grid).norm(), p));
    v_vals.push_back(std::pow(h_norm(s, grid), p));
  }
  MesReport r;
  r.lhs = trapezoid(c_vals, h);
  r.rhs = v_vals.front() + trapezoid(v_vals, h);
  r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  return r;
}

double mes_constant(const LinearFunctional& C) {
  double M = 0.0;
  const double tau = C.tau();
  for (const auto& pm : C.masses()) {
    const double w = pm.weight.norm() > 0.0 ? Eigen::JacobiSVD<Mat>(pm.weight).singularValues()(0) : 0.0;
    M += pm.lag == 0.0 ? w : w * (1.0 + std::sqrt(tau));
  }
  if (const auto& k = C.kernel_part()) {
    double s = 0.0;
    for (int i = 0; i < k->grid.nodes(); ++i) {
      const double op = Eigen::JacobiSVD<Mat>(k->samples[i]).singularValues()(0);
      s += k->grid.weights()(i) * op * op;
    }
    M += std::sqrt(s);
  }
  return M;
}

}  // namespace ddim
