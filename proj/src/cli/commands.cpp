#include "cli/commands.hpp"

#include <cmath>
#include <memory>

#include "ddim/dimension.hpp"
#include "ddim/parallel.hpp"
#include "ddim/spectral.hpp"
#include "ddim/suarez.hpp"

namespace ddim::cli {

using nlohmann::json;

namespace {

// NaN and infinities have no JSON literal; they become null.
json real(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json complex_list(const std::vector<cplx>& zs) {
  json a = json::array();
  for (const auto& z : zs) a.push_back({real(z.real()), real(z.imag())});
  return a;
}

double step_for(double tau, long steps_per_delay, long m) {
  if (steps_per_delay % m != 0)
    throw UsageError("steps_per_delay must be a multiple of m");
  return tau / static_cast<double>(steps_per_delay);
}

std::function<Vec(double)> initial_segment(const RunConfig& cfg, const SuarezModel& s) {
  const std::string kind = cfg.str("initial");
  if (kind == "random")
    return random_segment(s.tau(), cfg.num("norm"), static_cast<unsigned long long>(cfg.integer("seed")));
  const double level = kind == "stationary" ? stationary_states(s)[2] : cfg.num("value");
  return [level](double) { return Vec::Constant(1, level); };
}

}  // namespace

Outcome cmd_simulate(const RunConfig& cfg, Emitter& out) {
  const SuarezModel s(cfg.num("alpha"), cfg.num("tau"), cfg.num("R_cut"));
  const long m = cfg.integer("m");
  const double h = step_for(s.tau(), cfg.integer("steps_per_delay"), m);
  const HistoryGrid grid(s.tau(), static_cast<int>(m));
  const Trajectory tr = evolve(s.model(), initial_segment(cfg, s), grid, 0.0, cfg.num("T"), h);
  const long every = cfg.integer("every");
  std::vector<std::vector<std::string>> rows;
  double sup = 0.0;
  for (long k = 0; k <= tr.steps(); ++k) {
    const double x = tr.head_at(k)(0);
    sup = std::max(sup, std::abs(x));
    if (k % every == 0 || k == tr.steps()) rows.push_back({num17(tr.time_of(k)), num17(x)});
  }
  out.csv("simulate.csv", {"t", "x"}, rows);
  return {0, {{"command", "simulate"}, {"steps", tr.steps()}, {"sup_abs_x", sup}, {"gamma", s.gamma()}}};
}

Outcome cmd_roots(const RunConfig& cfg, Emitter& out) {
  const double alpha = cfg.num("alpha"), tau = cfg.num("tau"), nu = cfg.num("nu");
  const double Lambda = cfg.num("Lambda") > 0.0 ? cfg.num("Lambda") : 3.0 + 3.0 * alpha;
  const SpectralScan scan = spectral_scan(alpha, tau, nu, Lambda);
  const MarginResult mr = transfer_margin(SuarezChar(alpha, tau), nu, Lambda);
  json doc = {{"alpha", alpha},
              {"tau", tau},
              {"nu", nu},
              {"Lambda", Lambda},
              {"j", scan.j},
              {"roots", complex_list(scan.roots)},
              {"lambda1", scan.lambda1},
              {"lambda2", scan.lambda2},
              {"lambda_sum", scan.lambda1 + scan.lambda2},
              {"freq_margin", real(scan.freq_margin)},
              {"margin_omega", real(mr.omega)},
              {"sup_abs_W", real(mr.max_w)}};
  out.json("roots.json", doc);
  return {0, {{"command", "roots"}, {"j", scan.j}, {"freq_margin", real(scan.freq_margin)}}};
}

Outcome cmd_region(const RunConfig& cfg, Emitter& out) {
  const Range tau{cfg.num("tau_min"), cfg.num("tau_max")};
  const Range alpha{cfg.num("alpha_min"), cfg.num("alpha_max")};
  const RegionGrid g = region_sweep(tau, alpha, static_cast<int>(cfg.integer("resolution")));
  out.csv("region.csv", region_header(), region_rows(g));
  out.text("region.svg", region_svg(g, cfg.timestamp));

  int j1 = 0, j2 = 0, none = 0, errors = 0, outside = 0;
  for (const auto& c : g.cells) {
    switch (c.verdict) {
      case Verdict::J1: ++j1; break;
      case Verdict::J2: ++j2; break;
      case Verdict::None: ++none; break;
      case Verdict::Error: ++errors; break;
    }
    if ((c.verdict == Verdict::J1 || c.verdict == Verdict::J2) && c.lambda_sum_sign >= 0) ++outside;
  }
  const MonotoneReport mono = monotone_observations(g);
  json summary = {{"command", "region"},     {"cells", g.cells.size()}, {"j1", j1},
                  {"j2", j2},                {"none", none},            {"error", errors},
                  {"outside_lambda_sum", outside}, {"monotone_counterexamples", mono.counterexamples}};
  return {outside == 0 && errors == 0 ? 0 : 2, summary};
}

Outcome cmd_dimension(const RunConfig& cfg, Emitter& out) {
  const SuarezModel s(cfg.num("alpha"), cfg.num("tau"), cfg.num("R_cut"));
  const DelayModel model = s.model();
  const long m = cfg.integer("m");
  const double h = step_for(s.tau(), cfg.integer("steps_per_delay"), m);
  const HistoryGrid grid(s.tau(), static_cast<int>(m));
  const long n_samples = cfg.integer("samples");
  const double transient = cfg.num("transient"), spacing = cfg.num("spacing");
  const auto phi = random_segment(s.tau(), cfg.num("norm"), static_cast<unsigned long long>(cfg.integer("seed")));
  const Trajectory tr =
      evolve(model, phi, grid, 0.0, transient + spacing * static_cast<double>(n_samples - 1) + h, h);

  std::vector<HState> samples;
  std::vector<double> times;
  for (long i = 0; i < n_samples; ++i) {
    const long k = std::lround((transient + spacing * static_cast<double>(i)) / h);
    samples.push_back(tr.state_at_index(k));
    times.push_back(tr.time_of(k));
  }
  const double d = cfg.num("d");
  const SqueezeReport rep = squeezing_test(model, samples, grid, cfg.num("t"), h, d, cfg.num("d_step"));

  json rows = json::array();
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    const auto& sm = rep.samples[i];
    std::vector<double> lead(sm.sigmas.begin(),
                             sm.sigmas.begin() + std::min<std::size_t>(8, sm.sigmas.size()));
    rows.push_back({{"time", times[i]}, {"head", samples[i].head()(0)},
                    {"omega_d", sm.sup_omega}, {"leading_sigmas", lead}});
  }
  json doc = {{"alpha", s.alpha()},
              {"tau", s.tau()},
              {"m", m},
              {"h", h},
              {"t", cfg.num("t")},
              {"d", d},
              {"sup_omega_d", rep.sup_omega},
              {"squeezes", rep.verdict},
              {"min_d", rep.min_d ? json(*rep.min_d) : json(nullptr)},
              {"samples", rows}};
  out.json("dimension.json", doc);
  return {0, {{"command", "dimension"}, {"sup_omega_d", rep.sup_omega},
              {"min_d", rep.min_d ? json(*rep.min_d) : json(nullptr)}}};
}

Outcome cmd_beta(const RunConfig& cfg, Emitter& out) {
  const double alpha = cfg.num("alpha"), tau = cfg.num("tau");
  const LinearFunctional A = LinearFunctional::delta(tau, 0.0, Mat::Ones(1, 1)) +
                             LinearFunctional::delta(tau, -tau, -alpha * Mat::Ones(1, 1));
  BetaOptions opts;
  opts.restarts = static_cast<int>(cfg.integer("restarts"));
  opts.max_iterations = static_cast<int>(cfg.integer("max_iterations"));
  opts.seed = static_cast<unsigned long long>(cfg.integer("seed"));
  const HistoryGrid grid(tau, static_cast<int>(cfg.integer("m")));
  const BetaReport rep = beta_numbers(A, grid, static_cast<int>(cfg.integer("k_max")), opts);

  const double analytic = (3.0 + alpha * alpha) / 2.0;
  const double tol = cfg.num("tolerance");
  json deviation = json::array();
  bool ok = true;
  for (std::size_t k = 0; k < rep.betas.size(); ++k) {
    const double dev = rep.betas[k] - (k == 0 ? analytic : 0.0);
    deviation.push_back(dev);
    ok = ok && std::abs(dev) <= tol;
  }
  json doc = {{"alpha", alpha},          {"tau", tau},
              {"m", grid.intervals()},   {"restarts", opts.restarts},
              {"betas", rep.betas},      {"sups", rep.sups},
              {"spreads", rep.spreads},  {"analytic", analytic},
              {"deviation", deviation},  {"tolerance", tol},
              {"within_tolerance", ok},  {"unstable", rep.unstable},
              {"warning", rep.warning}};
  out.json("beta.json", doc);
  return {ok ? 0 : 2, {{"command", "beta"}, {"betas", rep.betas}, {"analytic", analytic}}};
}

Outcome cmd_trace_check(const RunConfig& cfg, Emitter& out) {
  const SuarezModel s(cfg.num("alpha"), cfg.num("tau"), cfg.num("R_cut"));
  const double tau = s.tau();
  const int k = static_cast<int>(cfg.integer("k"));
  TraceProblem problem;
  problem.state = [tau](const HistoryGrid& g) {
    return HState::embed(g, [tau](double th) { return Vec::Constant(1, 0.8 * std::cos(2.0 * th / tau) + 0.3); });
  };
  problem.frame = [tau, k](const HistoryGrid& g) {
    std::vector<HState> v;
    for (int j = 0; j < k; ++j)
      v.push_back(HState::embed(g, [tau, j](double th) {
        return Vec::Constant(1, std::cos((j + 1) * th / tau + 0.3 * j));
      }));
    return v;
  };
  TraceCheckOptions opts;
  opts.warmup = cfg.num("warmup");
  opts.reorthonormalize_every = static_cast<int>(cfg.integer("reorthonormalize_every"));
  const std::vector<int> levels = cfg.ints("levels");
  const auto rows = trace_refinement(s.model(), problem, levels, cfg.num("T"), opts);

  const double tol = cfg.num("tolerance");
  bool ok = rows.front().deviation <= tol;
  json table = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    json r = {{"m", rows[i].m}, {"h", rows[i].h}, {"deviation", rows[i].deviation}};
    if (i > 0) {
      r["order"] = real(rows[i].order);
      ok = ok && rows[i].order >= 2.0;
    }
    table.push_back(r);
  }
  json doc = {{"alpha", s.alpha()},
              {"tau", tau},
              {"k", k},
              {"T", cfg.num("T")},
              {"warmup", opts.warmup},
              {"max_relative_deviation", rows.front().deviation},
              {"tolerance", tol},
              {"passes", ok},
              {"refinement", table}};
  out.json("trace_check.json", doc);
  return {ok ? 0 : 2, {{"command", "trace-check"}, {"deviation", rows.front().deviation}, {"passes", ok}}};
}

Outcome run(const RunConfig& cfg, Emitter& out) {
  if (cfg.threads > 0) set_worker_count(cfg.threads);
  if (cfg.command == "simulate") return cmd_simulate(cfg, out);
  if (cfg.command == "roots") return cmd_roots(cfg, out);
  if (cfg.command == "region") return cmd_region(cfg, out);
  if (cfg.command == "dimension") return cmd_dimension(cfg, out);
  if (cfg.command == "beta") return cmd_beta(cfg, out);
  if (cfg.command == "trace-check") return cmd_trace_check(cfg, out);
  throw UsageError("unknown command '" + cfg.command + "'");
}

}  // namespace ddim::cli
