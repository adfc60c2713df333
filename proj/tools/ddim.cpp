#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/emit.hpp"
#include "ddim/errors.hpp"

namespace {

void print_schema(std::ostream& os) { os << ddim::cli::config_schema().dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  using namespace ddim::cli;

  CLI::App app{"Delay equation dimension and inertial manifold toolkit"};
  app.require_subcommand(0, 1);
  bool schema = false;
  app.add_flag("--schema", schema, "Print the config JSON schema and exit");

  Invocation inv;
  unsigned long long seed = 0;
  int threads = 0;
  bool no_timestamp = false;
  std::vector<CLI::App*> subs;
  for (const auto& spec : command_specs()) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.summary);
    sub->add_option("--config", inv.config, "JSON config file");
    sub->add_option("--set", inv.sets, "Override a config key, key=value")->take_all();
    sub->add_option("--out", inv.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Seed, overrides the config");
    sub->add_option("--threads", threads, "Worker count (falls back to DDIM_THREADS)");
    sub->add_flag("--no-timestamp", no_timestamp, "Omit the timestamp comment in SVG output");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (schema) {
    print_schema(std::cout);
    return 0;
  }
  for (CLI::App* sub : subs) {
    if (!sub->parsed()) continue;
    inv.command = sub->get_name();
    if (sub->count("--seed")) inv.seed = seed;
    if (sub->count("--threads")) inv.threads = threads;
  }
  if (inv.command.empty()) {
    std::cerr << app.help();
    return 1;
  }
  inv.timestamp = !no_timestamp;

  RunConfig cfg;
  try {
    cfg = load(inv);
  } catch (const UsageError& e) {
    std::cerr << "ddim: " << e.what() << "\n\nconfig schema:\n";
    print_schema(std::cerr);
    return 1;
  }

  try {
    Emitter out(cfg.out);
    const Outcome r = run(cfg, out);
    for (const auto& p : out.written()) std::cerr << "wrote " << p.string() << "\n";
    std::cout << r.summary.dump() << "\n";
    return r.status;
  } catch (const UsageError& e) {
    std::cerr << "ddim: " << e.what() << "\n";
    return 1;
  } catch (const ddim::Error& e) {
    std::cerr << "ddim " << cfg.command << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ddim " << cfg.command << ": " << e.what() << "\n";
    return 2;
  }
}
