// Command-line front end: explore, localize, compare, eval.
#include "ergsense/runner.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

using namespace ergsense;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> snapshot_interval;
  std::string run_dir;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "run configuration (JSON)");
  if (config_required) c->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "random seed (overrides the config)");
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--snapshot-interval", o.snapshot_interval, "seconds between snapshots");
  cmd->add_flag("--quiet", o.quiet, "only log errors");
}

RunConfig build_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.snapshot_interval) c.snapshot_interval = *o.snapshot_interval;
  return c;
}

int exit_code(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 1;
  const std::string kind = err->kind();
  if (kind == "invalid_config") return 2;
  if (kind == "domain_violation") return 3;
  if (kind == "numeric_blowup") return 4;
  if (kind == "degenerate_input") return 5;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ergodic active sensing simulator"};
  app.set_version_flag("--version", ERGSENSE_VERSION);
  app.require_subcommand(1);
  Options o;

  auto* explore = app.add_subcommand("explore", "build a measurement likelihood by ergodic exploration");
  auto* localize = app.add_subcommand("localize", "localize the scene transform with a particle filter");
  auto* compare = app.add_subcommand("compare", "ergodic vs expected-entropy-reduction runs on one seed");
  auto* eval = app.add_subcommand("eval", "re-read a run directory and recompute its metrics");
  bool eer = false;
  for (auto* cmd : {explore, localize}) {
    add_common(cmd, o, false);
    cmd->add_flag("--eer", eer, "use the entropy-reduction baseline policy");
  }
  add_common(compare, o, false);
  add_common(eval, o, false);
  eval->add_option("--run", o.run_dir, "run directory (defaults to --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc != 0) {
      std::cerr << json{{"status", "error"}, {"kind", "invalid_arguments"}, {"message", e.what()}}.dump() << '\n';
    }
    return rc;
  }
  if (o.quiet) spdlog::set_level(spdlog::level::err);

  try {
    if (eval->parsed()) {
      const fs::path dir = !o.run_dir.empty() ? o.run_dir : !o.out.empty() ? o.out : build_config(o).out_dir;
      const json res = evaluate_run(dir);
      std::cout << res.dump(2) << '\n';
      return res.at("checksum_ok").get<bool>() && res.at("consistent").get<bool>() ? 0 : 6;
    }
    RunConfig c = build_config(o);
    if (compare->parsed()) {
      std::cout << run_comparison(c).dump(2) << '\n';
      return 0;
    }
    if (explore->parsed()) c.stage = eer ? Stage::eer_explore : Stage::explore;
    if (localize->parsed()) c.stage = eer ? Stage::eer_localize : Stage::localize;
    const auto res = run(c);
    std::cout << res.metrics.dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << error_record(e).dump() << '\n';
    return exit_code(e);
  }
}
