#pragma once

#include <json.hpp>

#include "cli/config.hpp"
#include "cli/emit.hpp"

namespace ddim::cli {

struct Outcome {
  int status = 0;  // 0 ok, 2 when a checked contract fails
  nlohmann::json summary;
};

Outcome cmd_simulate(const RunConfig& cfg, Emitter& out);
Outcome cmd_roots(const RunConfig& cfg, Emitter& out);
Outcome cmd_region(const RunConfig& cfg, Emitter& out);
Outcome cmd_dimension(const RunConfig& cfg, Emitter& out);
Outcome cmd_beta(const RunConfig& cfg, Emitter& out);
Outcome cmd_trace_check(const RunConfig& cfg, Emitter& out);

/// Applies the worker count and dispatches on cfg.command.
Outcome run(const RunConfig& cfg, Emitter& out);

}  // namespace ddim::cli
