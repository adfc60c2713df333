#include "cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

namespace ddim::cli {

namespace {

Field number(std::string key, double def, std::string help, std::optional<double> lo = {},
             std::optional<double> hi = {}) {
  return {std::move(key), Kind::Number, def, std::move(help), lo, hi, {}};
}

Field integer(std::string key, long def, std::string help, std::optional<double> lo = {},
              std::optional<double> hi = {}) {
  return {std::move(key), Kind::Integer, def, std::move(help), lo, hi, {}};
}

Field choice(std::string key, std::string def, std::string help, std::vector<std::string> c) {
  return {std::move(key), Kind::String, def, std::move(help), {}, {}, std::move(c)};
}

Field seed_field() { return integer("seed", 1, "seed for every random draw", 0); }

std::vector<CommandSpec> build_specs() {
  const Field alpha = number("alpha", 0.5, "delayed feedback strength, in (0, 1)", 0.0, 1.0);
  const Field tau = number("tau", 1.0, "delay", 0.0);
  const Field R_cut = number("R_cut", 1.0, "width of the cubic core beyond gamma", 0.0);
  std::vector<CommandSpec> s;
  s.push_back({"simulate",
               "time series x(t) of the delayed oscillator",
               {alpha, tau, R_cut, integer("m", 64, "history grid intervals", 8),
                integer("steps_per_delay", 64, "integrator steps per delay", 8),
                number("T", 20.0, "horizon", 0.0),
                choice("initial", "stationary", "initial segment",
                       {"stationary", "constant", "random"}),
                number("value", 0.0, "level of a constant segment"),
                number("norm", 1.0, "sup norm of a random segment", 0.0),
                integer("every", 1, "output every this many steps", 1), seed_field()}});
  s.push_back({"roots",
               "characteristic roots right of -nu and the transfer function margin",
               {alpha, tau, number("nu", 0.5, "shift of the vertical line", 0.0),
                number("Lambda", 0.0, "Lipschitz constant; 0 selects 3 + 3 alpha", 0.0)}});
  s.push_back({"region",
               "invariant manifold verdicts over a (tau, alpha) grid",
               {number("tau_min", 0.0, "lower tau edge", 0.0), number("tau_max", 3.0, "upper tau edge", 0.0),
                number("alpha_min", 0.0, "lower alpha edge", 0.0, 1.0),
                number("alpha_max", 1.0, "upper alpha edge", 0.0, 1.0),
                integer("resolution", 60, "cells per axis", 2)}});
  s.push_back({"dimension",
               "singular value functions of the linearized flow along an orbit",
               {alpha, tau, R_cut, integer("m", 32, "history grid intervals", 8),
                integer("steps_per_delay", 32, "integrator steps per delay", 8),
                number("t", 2.0, "flow time of L(t; v), at least 2 tau", 0.0),
                number("d", 1.0, "dimension tested", 0.0), number("d_step", 0.05, "scan step for the least d", 0.0),
                integer("samples", 8, "orbit points", 1),
                number("transient", 50.0, "time discarded before sampling", 0.0),
                number("spacing", 1.25, "time between samples", 0.0),
                number("norm", 1.0, "sup norm of the random initial segment", 0.0), seed_field()}});
  s.push_back({"beta",
               "trace numbers of the linear generator",
               {alpha, tau, integer("m", 128, "history grid intervals", 8),
                integer("k_max", 2, "number of trace numbers", 1, 8),
                integer("restarts", 32, "ascent restarts", 1),
                integer("max_iterations", 4000, "iterations per restart", 1),
                number("tolerance", 0.05, "allowed |beta_1 - (3 + alpha^2)/2|", 0.0), seed_field()}});
  s.push_back({"trace-check",
               "log-volume growth against the integrated trace, with grid refinement",
               {alpha, tau, R_cut, integer("k", 3, "frame width", 1, 6),
                number("T", 2.0, "comparison horizon", 0.0),
                {"levels", Kind::IntegerList, json::array({64, 128, 256}),
                 "grid intervals, with h = tau / m", 8.0, {}, {}},
                number("warmup", 2.0, "time both orbit and frame run before comparing", 0.0),
                integer("reorthonormalize_every", 50, "steps between QR passes", 1),
                number("tolerance", 1e-3, "allowed deviation at the first level", 0.0)}});
  return s;
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Number: return "number";
    case Kind::Integer: return "integer";
    case Kind::Boolean: return "boolean";
    case Kind::String: return "string";
    case Kind::IntegerList: return "array";
  }
  return "?";
}

bool matches(Kind k, const json& v) {
  switch (k) {
    case Kind::Number: return v.is_number();
    case Kind::Integer: return v.is_number_integer();
    case Kind::Boolean: return v.is_boolean();
    case Kind::String: return v.is_string();
    case Kind::IntegerList:
      return v.is_array() && !v.empty() &&
             std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
  }
  return false;
}

void check_range(const Field& f, double x, const std::string& where) {
  if (f.min && x < *f.min)
    throw UsageError(fmt::format("{}: {} must be >= {}", where, f.key, *f.min));
  if (f.max && x > *f.max)
    throw UsageError(fmt::format("{}: {} must be <= {}", where, f.key, *f.max));
}

}  // namespace

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = build_specs();
  return specs;
}

const CommandSpec* find_command(std::string_view name) {
  for (const auto& c : command_specs())
    if (c.name == name) return &c;
  return nullptr;
}

json config_schema() {
  json defs = json::object();
  json any = json::array();
  for (const auto& c : command_specs()) {
    json props = json::object();
    for (const auto& f : c.fields) {
      json p = {{"type", kind_name(f.kind)}, {"default", f.fallback}, {"description", f.help}};
      json& bounds = f.kind == Kind::IntegerList ? (p["items"] = {{"type", "integer"}}) : p;
      if (f.min) bounds["minimum"] = *f.min;
      if (f.max) bounds["maximum"] = *f.max;
      if (!f.choices.empty()) p["enum"] = f.choices;
      props[f.key] = p;
    }
    defs[c.name] = {{"type", "object"},
                    {"description", c.summary},
                    {"properties", props},
                    {"additionalProperties", false}};
    any.push_back({{"$ref", "#/$defs/" + c.name}});
  }
  return {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
          {"title", "ddim run configuration"},
          {"description", "One object per command; keys not listed are rejected."},
          {"$defs", defs},
          {"anyOf", any}};
}

std::pair<std::string, json> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("--set expects key=value, got '" + text + "'");
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

json validate(const CommandSpec& spec, const json& raw) {
  if (!raw.is_object()) throw UsageError(spec.name + ": config must be a JSON object");
  for (const auto& [key, _] : raw.items()) {
    const bool known = std::any_of(spec.fields.begin(), spec.fields.end(),
                                   [&](const Field& f) { return f.key == key; });
    if (!known) throw UsageError(fmt::format("{}: unknown key '{}'", spec.name, key));
  }
  json out = json::object();
  for (const auto& f : spec.fields) {
    json v = raw.contains(f.key) ? raw.at(f.key) : f.fallback;
    if (!matches(f.kind, v))
      throw UsageError(fmt::format("{}: {} must be {}", spec.name, f.key, kind_name(f.kind)));
    if (f.kind == Kind::Number || f.kind == Kind::Integer) {
      if (!std::isfinite(v.get<double>()))
        throw UsageError(fmt::format("{}: {} must be finite", spec.name, f.key));
      check_range(f, v.get<double>(), spec.name);
    }
    if (f.kind == Kind::IntegerList)
      for (const auto& e : v) check_range(f, e.get<double>(), spec.name);
    if (!f.choices.empty() &&
        std::find(f.choices.begin(), f.choices.end(), v.get<std::string>()) == f.choices.end())
      throw UsageError(fmt::format("{}: {} must be one of {}", spec.name, f.key,
                                   fmt::join(f.choices, ", ")));
    // Integral numbers given for a real field are kept as reals.
    if (f.kind == Kind::Number) v = v.get<double>();
    out[f.key] = v;
  }
  return out;
}

RunConfig load(const Invocation& inv) {
  const CommandSpec* spec = find_command(inv.command);
  if (!spec) throw UsageError("unknown command '" + inv.command + "'");
  if (inv.config.empty()) throw UsageError(inv.command + ": --config is required");
  std::ifstream in(inv.config);
  if (!in) throw UsageError("cannot read config " + inv.config.string());
  json raw = json::parse(in, nullptr, false);
  if (raw.is_discarded()) throw UsageError(inv.config.string() + " is not valid JSON");
  if (!raw.is_object()) throw UsageError(inv.config.string() + ": expected a JSON object");
  for (const auto& s : inv.sets) {
    auto [key, value] = parse_override(s);
    raw[key] = value;
  }
  if (inv.seed) {
    const bool has_seed = std::any_of(spec->fields.begin(), spec->fields.end(),
                                      [](const Field& f) { return f.key == "seed"; });
    if (!has_seed) throw UsageError(inv.command + " takes no seed");
    raw["seed"] = *inv.seed;
  }

  RunConfig cfg;
  cfg.command = inv.command;
  cfg.params = validate(*spec, raw);
  cfg.out = inv.out;
  cfg.timestamp = inv.timestamp;
  if (inv.threads) {
    cfg.threads = *inv.threads;
  } else if (const char* env = std::getenv("DDIM_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 0) throw UsageError("DDIM_THREADS must be a non-negative integer");
    cfg.threads = static_cast<int>(n);
  }
  if (cfg.threads < 0) throw UsageError("--threads must be non-negative");
  return cfg;
}

}  // namespace ddim::cli
