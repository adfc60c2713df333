#include "ddim/variational.hpp"

#include <algorithm>
#include <exception>
#include <string>

#include "delay_stepper.hpp"

namespace ddim {

using detail::DiscreteFunctional;
using detail::NodeHistory;

namespace {

Mat coords_of(std::span<const HState> xi) {
  if (xi.empty()) throw ShapeError("tangent: empty frame");
  const long D = xi[0].coordinates().size();
  Mat out(D, static_cast<long>(xi.size()));
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (xi[i].dim() != xi[0].dim() || xi[i].rows() != xi[0].rows())
      throw ShapeError("tangent: frame vectors differ in shape");
    out.col(static_cast<long>(i)) = xi[i].coordinates();
  }
  return out;
}

bool any_jump(std::span<const HState> xi) {
  return std::any_of(xi.begin(), xi.end(), [](const HState& s) { return !s.embedded(); });
}

}  // namespace

namespace detail {
struct FlowKernels {
  DiscreteFunctional A;
  DiscreteFunctional C;
};
}  // namespace detail

TangentFlow::TangentFlow(std::shared_ptr<const Trajectory> base, std::span<const HState> xi0,
                         double t_start)
    : TangentFlow(base, coords_of(xi0),
                  any_jump(xi0) || (base->index_of(t_start) == 0 && base->nodes().jump()),
                  t_start) {}

TangentFlow::TangentFlow(std::shared_ptr<const Trajectory> base, const Mat& coords, bool jump,
                         double t_start)
    : base_(std::move(base)) {
  const Trajectory& b = *base_;
  const int n = b.model().n;
  const int m = b.grid().intervals();
  if (coords.rows() != static_cast<long>(n) * (m + 2))
    throw ShapeError("tangent: coordinates do not match the base grid");
  if (coords.cols() < 1) throw ShapeError("tangent: empty frame");
  start_ = b.index_of(t_start);
  width_ = static_cast<int>(coords.cols());
  initial_coords_ = coords;
  const int N = b.delay_steps();
  hist_ = std::make_unique<NodeHistory>(n, width_, N, static_cast<int>(b.steps() - start_));
  std::vector<Mat> rows;
  rows.reserve(m + 1);
  for (int i = 0; i <= m; ++i) rows.emplace_back(coords.middleRows(static_cast<long>(n) * (i + 1), n));
  detail::fill_prefix_from_samples(*hist_, rows, b.stride(), coords.topRows(n));
  hist_->set_jump(jump);
  kern_ = std::make_unique<detail::FlowKernels>(
      detail::FlowKernels{detail::discretize(b.model().A_tilde, b.step()),
                          detail::discretize(b.model().C_tilde, b.step())});
}

TangentFlow::~TangentFlow() = default;
TangentFlow::TangentFlow(TangentFlow&&) noexcept = default;
TangentFlow& TangentFlow::operator=(TangentFlow&&) noexcept = default;

double TangentFlow::time() const { return base_->time_of(start_ + k_); }

bool TangentFlow::can_step() const { return start_ + k_ < base_->steps(); }

void TangentFlow::step() {
  if (!can_step()) throw DomainError("tangent: base trajectory exhausted");
  const Trajectory& b = *base_;
  const DelayModel& model = b.model();
  const double h = b.step();
  const int n = model.n;
  const int c = width_;
  const DiscreteFunctional& A = kern_->A;
  const DiscreteFunctional& C = kern_->C;

  const long kb = start_ + k_;
  const long k = k_;
  Mat V0 = hist_->node(k);
  Mat Z(n, c), a(n, c), y(model.r, c), scratch(n, c);
  Mat K1(n, c), K2(n, c), K3(n, c), K4(n, c);

  auto rhs = [&](int s, int c2, const Mat& stage, Mat& out) {
    detail::apply_discrete(A, *hist_, k, c2, stage, a, scratch);
    detail::apply_discrete(C, *hist_, k, c2, stage, y, scratch);
    const double t = b.time_of(kb) + 0.5 * h * c2;
    const Mat G = model.B_tilde * model.dF(t, b.stage_output(kb, s));
    out = a;
    out.noalias() += G * y;
  };

  rhs(0, 0, V0, K1);
  Z = V0 + 0.5 * h * K1;
  rhs(1, 1, Z, K2);
  Z = V0 + 0.5 * h * K2;
  rhs(2, 1, Z, K3);
  Z = V0 + h * K3;
  rhs(3, 2, Z, K4);
  Z = V0 + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
  hist_->push() = Z;
  ++k_;
}

void TangentFlow::advance_to(double t) {
  const long target = base_->index_of(t);
  if (target < start_ + k_) throw DomainError("tangent: cannot step backwards");
  while (start_ + k_ < target) step();
}

Mat TangentFlow::coordinates() const {
  if (k_ == 0) return initial_coords_;
  const Trajectory& b = *base_;
  const int n = b.model().n;
  const int m = b.grid().intervals();
  const int N = b.delay_steps();
  const int q = b.stride();
  Mat out(static_cast<long>(n) * (m + 2), width_);
  out.topRows(n) = hist_->node(k_);
  for (int i = 0; i <= m; ++i)
    out.middleRows(static_cast<long>(n) * (i + 1), n) = hist_->node(k_ - N + i * q);
  return out;
}

std::vector<HState> TangentFlow::vectors() const {
  const Mat C = coordinates();
  const int n = base_->model().n;
  const bool emb = k_ > 0;
  std::vector<HState> out;
  out.reserve(width_);
  for (int i = 0; i < width_; ++i) {
    if (!emb) {
      out.push_back(HState::from_coordinates(C.col(i), n, false));
      continue;
    }
    // Node rows are shared with the head after the first step.
    const int m = base_->grid().intervals();
    Mat seg(m + 1, n);
    for (int r = 0; r <= m; ++r) seg.row(r) = C.col(i).segment(static_cast<long>(n) * (r + 1), n).transpose();
    out.push_back(HState::embed_samples(std::move(seg)));
  }
  return out;
}

void TangentFlow::transform(const Mat& R) {
  if (R.rows() != width_ || R.cols() != width_) throw ShapeError("tangent: transform is not square");
  const int N = base_->delay_steps();
  for (long j = k_ - N; j <= k_; ++j) hist_->node(j) = hist_->node(j) * R;
  hist_->left_limit() = hist_->left_limit() * R;
  initial_coords_ = initial_coords_ * R;
}

TangentFrame evolve_tangent(std::shared_ptr<const Trajectory> base, std::span<const HState> xi0,
                            double t, double t_start) {
  if (t < 0.0) throw DomainError("evolve_tangent: negative time");
  TangentFlow flow(base, xi0, t_start);
  flow.advance_to(t_start + t);
  return TangentFrame{std::move(base), flow.vectors(), flow.time()};
}

HState QuasiDifferential::apply(const HState& xi) const {
  if (xi.dim() != n || xi.rows() != grid.nodes()) throw ShapeError("quasi-differential: shape");
  const Vec out = matrix * xi.coordinates();
  return HState::from_coordinates(out, n, t_end > t_start);
}

QuasiDifferential quasi_differential(std::shared_ptr<const Trajectory> base, double t,
                                     double t_start, Exec exec) {
  if (t < 0.0) throw DomainError("quasi_differential: negative time");
  const Trajectory& b = *base;
  const int n = b.model().n;
  const HistoryGrid grid = b.grid();
  const long D = static_cast<long>(n) * (grid.intervals() + 2);
  const bool jump = b.index_of(t_start) == 0 && b.nodes().jump();
  const double t_end = t_start + t;
  b.index_of(t_end);

  QuasiDifferential out{Mat(D, D), grid, n, t_start, t_end};
  auto run_cols = [&](long c0, long c1) {
    if (c1 <= c0) return;
    Mat E = Mat::Zero(D, c1 - c0);
    for (long j = c0; j < c1; ++j) E(j, j - c0) = 1.0;
    TangentFlow flow(base, E, jump, t_start);
    flow.advance_to(t_end);
    out.matrix.middleCols(c0, c1 - c0) = flow.coordinates();
  };

  if (exec == Exec::Serial) {
    run_cols(0, D);
    return out;
  }
  const int workers = std::max(1, worker_count());
  const long chunks = std::min<long>(D, workers);
  std::exception_ptr err;
#ifdef DDIM_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(workers)
#endif
  for (long ci = 0; ci < chunks; ++ci) {
    try {
      run_cols(ci * D / chunks, (ci + 1) * D / chunks);
    } catch (...) {
#ifdef DDIM_HAVE_OPENMP
#pragma omp critical(ddim_qd_error)
#endif
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

int compactness_index(const QuasiDifferential& L, double rel) {
  const Vec w = h_weights(L.grid, L.n).cwiseSqrt();
  const Mat M = w.asDiagonal() * L.matrix * w.cwiseInverse().asDiagonal();
  const Vec s = Eigen::JacobiSVD<Mat>(M).singularValues();
  if (s(0) == 0.0) return 0;
  int i0 = 0;
  while (i0 < s.size() && s(i0) >= rel * s(0)) ++i0;
  return i0;
}

}  // namespace ddim
