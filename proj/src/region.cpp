#include <algorithm>
#include <exception>
#include <limits>
#include <string>

#include "ddim/errors.hpp"
#include "ddim/spectral.hpp"

namespace ddim {

namespace {

ImVerdict safe_verdict(double alpha, double tau) {
  try {
    return im_verdict(alpha, tau);
  } catch (const std::exception& e) {
    ImVerdict v;
    v.verdict = Verdict::Error;
    v.error = e.what();
    v.nu = std::numeric_limits<double>::quiet_NaN();
    v.margin = std::numeric_limits<double>::quiet_NaN();
    return v;
  }
}

}  // namespace

RegionGrid region_sweep(Range tau, Range alpha, int resolution, Exec exec) {
  if (resolution < 2) throw DomainError("region_sweep: resolution must be at least 2");
  if (!(tau.hi > tau.lo) || tau.lo < 0.0) throw DomainError("region_sweep: bad tau range");
  if (!(alpha.hi > alpha.lo) || alpha.lo < 0.0 || alpha.hi > 1.0)
    throw DomainError("region_sweep: alpha range must lie in [0, 1]");
  RegionGrid g;
  g.tau = tau;
  g.alpha = alpha;
  g.resolution = resolution;
  for (int i = 0; i < resolution; ++i) {
    g.taus.push_back(tau.lo + (i + 0.5) * (tau.hi - tau.lo) / resolution);
    g.alphas.push_back(alpha.lo + (i + 0.5) * (alpha.hi - alpha.lo) / resolution);
  }
  const long cells = static_cast<long>(resolution) * resolution;
  g.cells.resize(cells);
  if (exec == Exec::Serial) {
    for (long c = 0; c < cells; ++c)
      g.cells[c] = safe_verdict(g.alphas[c / resolution], g.taus[c % resolution]);
    return g;
  }
#ifdef DDIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, worker_count()))
#endif
  for (long c = 0; c < cells; ++c)
    g.cells[c] = safe_verdict(g.alphas[c / resolution], g.taus[c % resolution]);
  return g;
}

MonotoneReport monotone_observations(const RegionGrid& g) {
  MonotoneReport r;
  for (int i = 0; i < g.resolution; ++i) {
    bool seen_none = false;
    for (int j = 0; j < g.resolution; ++j) {
      const Verdict v = g.at(i, j).verdict;
      if (v == Verdict::None) seen_none = true;
      else if (v == Verdict::J1 && seen_none) {
        ++r.counterexamples;
        r.notes.push_back("alpha=" + std::to_string(g.alphas[i]) + ": j1 at tau=" +
                          std::to_string(g.taus[j]) + " after a none cell");
      }
    }
  }
  return r;
}

}  // namespace ddim
