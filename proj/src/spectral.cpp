#include "ddim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ddim/errors.hpp"

namespace ddim {

namespace {

constexpr double kPi = std::numbers::pi;

cplx newton(const CharFunction& cf, cplx p, double cap) {
  for (int it = 0; it < 80; ++it) {
    const cplx d = cf.delta(p);
    const cplx dd = cf.derivative(p);
    if (dd == cplx(0.0)) break;
    cplx step = d / dd;
    if (std::abs(step) > cap) step *= cap / std::abs(step);
    p -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(p))) break;
  }
  return p;
}

// Adaptive Simpson for a complex integrand on [a, b].
template <class F>
cplx simpson_rec(const F& f, double a, double b, cplx fa, cplx fm, cplx fb, cplx whole, double tol,
                 int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const cplx flm = f(lm);
  const cplx frm = f(rm);
  const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const cplx delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
cplx adaptive_simpson(const F& f, double a, double b, double tol, int pieces) {
  cplx total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + (b - a) * i / pieces;
    const double hi = a + (b - a) * (i + 1) / pieces;
    const cplx fa = f(lo);
    const cplx fb = f(hi);
    const cplx fm = f(0.5 * (lo + hi));
    const cplx whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_rec(f, lo, hi, fa, fm, fb, whole, tol / pieces, 40);
  }
  return total;
}

double frequency_step(const CharFunction& cf) {
  if (const auto* s = dynamic_cast<const SuarezChar*>(&cf))
    return std::min(0.05, 2.0 * kPi / (64.0 * s->tau()));
  return 0.05;
}

struct LineMin {
  double value;
  double omega;
};

// Minimum of |Delta(-nu + i omega)| over omega in [0, omega_max]: uniform
// sweep, then golden-section refinement around the best local minima.
LineMin min_on_line(const CharFunction& cf, double nu, double omega_max, double step) {
  const long n = std::max<long>(2, static_cast<long>(std::ceil(omega_max / step)));
  const double dw = omega_max / n;
  std::vector<double> v(n + 1);
  for (long i = 0; i <= n; ++i) v[i] = std::abs(cf.delta(cplx(-nu, i * dw)));
  std::vector<long> mins;
  for (long i = 0; i <= n; ++i) {
    const bool l = i == 0 || v[i] <= v[i - 1];
    const bool r = i == n || v[i] <= v[i + 1];
    if (l && r) mins.push_back(i);
  }
  std::sort(mins.begin(), mins.end(), [&](long a, long b) { return v[a] < v[b]; });
  if (mins.size() > 4) mins.resize(4);
  LineMin best{std::numeric_limits<double>::infinity(), 0.0};
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (long i : mins) {
    double a = std::max(0.0, (i - 1) * dw);
    double b = std::min(omega_max, (i + 1) * dw);
    auto f = [&](double w) { return std::abs(cf.delta(cplx(-nu, w))); };
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80 && b - a > 1e-14 * (1.0 + b); ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = f(d);
      }
    }
    const double w = 0.5 * (a + b);
    double val = f(w);
    double at = w;
    if (v[i] < val) {
      val = v[i];
      at = i * dw;
    }
    if (val < best.value) best = {val, at};
  }
  return best;
}

void require_clear_line(const CharFunction& cf, double nu, double omega_max) {
  const LineMin lm = min_on_line(cf, nu, omega_max, frequency_step(cf));
  if (lm.value < 1e-8)
    throw BoundaryRootError("root on the line Re p = -" + std::to_string(nu) + " near omega = " +
                            std::to_string(lm.omega));
}

double winding(const CharFunction& cf, double nu, double tol) {
  const double B = cf.root_bound(nu) + 1.0;
  const cplx corners[4] = {cplx(-nu, -B), cplx(B, -B), cplx(B, B), cplx(-nu, B)};
  cplx total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const cplx a = corners[e];
    const cplx b = corners[(e + 1) % 4];
    const cplx dir = b - a;
    auto f = [&](double s) {
      const cplx p = a + s * dir;
      return cf.derivative(p) / cf.delta(p) * dir;
    };
    const int pieces = std::max(8, static_cast<int>(std::ceil(std::abs(dir) / frequency_step(cf) / 16.0)));
    total += adaptive_simpson(f, 0.0, 1.0, tol, pieces);
  }
  return total.imag() / (2.0 * kPi);
}

}  // namespace

std::vector<cplx> CharFunction::seeds(double nu) const {
  const double B = root_bound(nu);
  std::vector<cplx> out;
  const int n = 40;
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= n; ++k)
      out.emplace_back(-nu + (B + nu) * i / n, B * k / n);
  return out;
}

SuarezChar::SuarezChar(double alpha, double tau) : alpha_(alpha), tau_(tau) {
  if (!(tau > 0.0)) throw DomainError("characteristic function: tau must be positive");
  if (!(alpha >= 0.0)) throw DomainError("characteristic function: alpha must be nonnegative");
}

cplx SuarezChar::delta(cplx p) const { return 1.0 - alpha_ * std::exp(-tau_ * p) - p; }

cplx SuarezChar::derivative(cplx p) const { return alpha_ * tau_ * std::exp(-tau_ * p) - 1.0; }

double SuarezChar::root_bound(double nu) const { return 1.0 + alpha_ * std::exp(tau_ * nu); }

std::vector<cplx> SuarezChar::seeds(double nu) const {
  const double B = root_bound(nu);
  std::vector<cplx> out;
  // Near the origin the asymptotics below are poor; cover it with a grid.
  const double x0 = std::max(-nu, -4.0);
  for (double x = x0; x <= 4.0 + 1e-12; x += 0.25)
    for (double y = 0.0; y <= std::min(B, 4.0) + 1e-12; y += 0.25) out.emplace_back(x, y);
  // Large roots satisfy (1 - p) e^{tau p} = alpha: tau Im p + arg(1 - p) is a
  // multiple of 2 pi and |1 - p| = alpha e^{-tau Re p}.
  const double two_pi = 2.0 * kPi;
  for (long k = 1;; ++k) {
    bool any = false;
    for (double phase : {0.25 * kPi, 0.5 * kPi, 0.75 * kPi}) {
      const double y = (two_pi * k + phase) / tau_;
      if (y > B + two_pi / tau_) continue;
      any = true;
      double x = 0.0;
      for (int it = 0; it < 6; ++it) {
        const double r = std::hypot(1.0 - x, y);
        x = alpha_ > 0.0 ? -std::log(r / alpha_) / tau_ : -nu;
      }
      out.emplace_back(x, y);
    }
    if (!any) break;
  }
  return out;
}

RealRoots real_roots(const SuarezChar& cf) {
  const double a = cf.alpha();
  if (!(a > 0.0 && a < 1.0)) throw DomainError("real_roots: alpha must lie in (0, 1)");
  auto D = [&](double x) { return cf.delta(cplx(x, 0.0)).real(); };
  auto bisect = [&](double lo, double hi) {
    // D(lo) and D(hi) have opposite signs.
    const bool lo_pos = D(lo) > 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if ((D(mid) > 0.0) == lo_pos) lo = mid;
      else hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
      const double d = cf.derivative(cplx(x, 0.0)).real();
      if (d == 0.0) break;
      const double xn = x - D(x) / d;
      if (!(xn > lo && xn < hi)) break;
      x = xn;
    }
    return x;
  };
  // Delta is concave on the reals with Delta(0) = 1 - alpha > 0 and
  // Delta(1) = -alpha e^{-tau} < 0.
  RealRoots r;
  r.lambda1 = bisect(0.0, 1.0);
  double L = 1.0;
  for (int it = 0; D(-L) >= 0.0; ++it) {
    if (it > 200) throw InternalError("real_roots: no bracket for the negative root");
    L *= 2.0;
  }
  r.lambda2 = bisect(-L, 0.0);
  const double scale = 1.0 + std::abs(r.lambda2);
  if (std::abs(D(r.lambda1)) > 1e-12 || std::abs(D(r.lambda2)) > 1e-12 * scale)
    throw InternalError("real_roots: residual above tolerance");
  return r;
}

int count_roots_right_of(const CharFunction& cf, double nu) {
  const double B = cf.root_bound(nu) + 1.0;
  require_clear_line(cf, nu, B);
  double raw = winding(cf, nu, 1e-4);
  if (std::abs(raw - std::round(raw)) >= 0.1) raw = winding(cf, nu, 1e-8);
  if (std::abs(raw - std::round(raw)) >= 0.1)
    throw ContourResolutionError("count_roots_right_of: winding number " + std::to_string(raw) +
                                 " is not near an integer");
  return static_cast<int>(std::lround(raw));
}

std::vector<cplx> enumerate_roots(const CharFunction& cf, double nu) {
  const double B = cf.root_bound(nu);
  std::vector<cplx> found;
  auto known = [&](cplx r) {
    return std::any_of(found.begin(), found.end(), [&](cplx q) {
      return std::abs(q - r) <= 1e-7 * (1.0 + std::abs(r));
    });
  };
  for (const cplx s : cf.seeds(nu)) {
    cplx r = newton(cf, s, 0.25 * B + 1.0);
    if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) continue;
    // Delta carries terms of size |p|, so the residual floor grows with it.
    const double floor = 1e-10 * (1.0 + std::abs(r));
    if (std::abs(cf.delta(r)) > floor) continue;
    if (!(r.real() > -nu) || std::abs(r) > B * (1.0 + 1e-9)) continue;
    if (std::abs(r.imag()) <= 1e-9 * (1.0 + std::abs(r.real()))) {
      const cplx rr = newton(cf, cplx(r.real(), 0.0), 1.0);
      r = cplx(rr.real(), 0.0);
      if (std::abs(cf.delta(r)) > floor) continue;
    }
    if (r.imag() < 0.0) r = std::conj(r);
    if (!known(r)) found.push_back(r);
  }
  std::vector<cplx> out;
  for (const cplx r : found) {
    out.push_back(r);
    if (r.imag() != 0.0) out.push_back(std::conj(r));
  }
  std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

MarginResult transfer_margin(const CharFunction& cf, double nu, double Lambda) {
  if (!(Lambda > 0.0)) throw DomainError("transfer_margin: Lambda must be positive");
  const double c = cf.root_bound(nu);
  const double omega_max = 10.0 * c;
  const LineMin lm = min_on_line(cf, nu, omega_max, frequency_step(cf));
  if (lm.value < 1e-8)
    throw BoundaryRootError("transfer_margin: root on the line Re p = -" + std::to_string(nu));
  // Beyond omega_max, |Delta| >= |omega| - c, so |W| <= 1 / (9 c).
  const double tail = 1.0 / (omega_max - c);
  MarginResult r;
  r.max_w = 1.0 / lm.value;
  r.omega = lm.omega;
  if (tail > r.max_w) {
    r.max_w = tail;
    r.omega = omega_max;
  }
  r.margin = 1.0 / Lambda - r.max_w;
  return r;
}

SpectralScan spectral_scan(double alpha, double tau, double nu, double Lambda) {
  const SuarezChar cf(alpha, tau);
  SpectralScan s;
  s.nu = nu;
  const RealRoots rr = real_roots(cf);
  s.lambda1 = rr.lambda1;
  s.lambda2 = rr.lambda2;
  s.roots = enumerate_roots(cf, nu);
  s.j = count_roots_right_of(cf, nu);
  s.freq_margin = transfer_margin(cf, nu, Lambda).margin;
  return s;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::J1: return "j1";
    case Verdict::J2: return "j2";
    case Verdict::None: return "none";
    case Verdict::Error: return "error";
  }
  return "error";
}

namespace {

// Real part of the rightmost non-real root.
double leading_complex_real_part(const SuarezChar& cf, double start_nu) {
  double nu = start_nu;
  for (int it = 0; it < 12; ++it) {
    double best = -std::numeric_limits<double>::infinity();
    for (const cplx r : enumerate_roots(cf, nu))
      if (r.imag() != 0.0) best = std::max(best, r.real());
    if (std::isfinite(best)) return best;
    nu *= 2.0;
  }
  throw InternalError("im_verdict: no complex root found");
}

// Tries the midpoint of (lo, hi), then a uniform scan; returns the first
// shift with positive margin, or the best one seen.
struct GapResult {
  bool accepted = false;
  double nu = 0.0;
  double margin = -std::numeric_limits<double>::infinity();
};

GapResult search_gap(const SuarezChar& cf, double lo, double hi, double Lambda) {
  GapResult g;
  auto try_nu = [&](double nu) {
    try {
      const double m = transfer_margin(cf, nu, Lambda).margin;
      if (m > g.margin) {
        g.margin = m;
        g.nu = nu;
      }
      if (m > 0.0) {
        g.accepted = true;
        g.nu = nu;
        g.margin = m;
        return true;
      }
    } catch (const BoundaryRootError&) {
    }
    return false;
  };
  if (try_nu(0.5 * (lo + hi))) return g;
  const int n = 64;
  for (int i = 1; i < n; ++i)
    if (try_nu(lo + (hi - lo) * i / n)) return g;
  return g;
}

}  // namespace

ImVerdict im_verdict(double alpha, double tau) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("im_verdict: alpha must lie in (0, 1)");
  if (!(tau > 0.0)) throw DomainError("im_verdict: tau must be positive");
  const SuarezChar cf(alpha, tau);
  const double Lambda = 3.0 + 3.0 * alpha;
  ImVerdict v;
  const RealRoots rr = real_roots(cf);
  v.lambda1 = rr.lambda1;
  v.lambda2 = rr.lambda2;
  const double sum = rr.lambda1 + rr.lambda2;
  v.lambda_sum_sign = (sum > 0.0) - (sum < 0.0);
  v.nu = std::numeric_limits<double>::quiet_NaN();

  const GapResult g1 = search_gap(cf, 0.0, -rr.lambda2, Lambda);
  if (g1.accepted) {
    if (count_roots_right_of(cf, g1.nu) != 1)
      throw InternalError("im_verdict: root count disagrees with the j = 1 gap");
    v.verdict = Verdict::J1;
    v.nu = g1.nu;
    v.margin = g1.margin;
    return v;
  }
  const double mu = leading_complex_real_part(cf, -rr.lambda2 + 1.0);
  const GapResult g2 = search_gap(cf, -rr.lambda2, -mu, Lambda);
  if (g2.accepted) {
    if (count_roots_right_of(cf, g2.nu) != 2)
      throw InternalError("im_verdict: root count disagrees with the j = 2 gap");
    v.verdict = Verdict::J2;
    v.nu = g2.nu;
    v.margin = g2.margin;
    return v;
  }
  v.verdict = Verdict::None;
  v.margin = std::max(g1.margin, g2.margin);
  return v;
}

}  // namespace ddim
