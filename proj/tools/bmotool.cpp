// bmotool verify|surface|oracle|counterexample --config <path> [--out <dir>] [--seed N] [--jobs N]
//
// Exit status: 0 when every check passes, 1 when a check fails (its name goes
// to stderr), 2 on configuration or library errors.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale verification of BMO and Bellman function inequalities"};
  app.require_subcommand(1, 1);
  std::string config, out;
  long long seed = -1;
  unsigned jobs = 0;
  for (const char* kind : {"verify", "surface", "oracle", "counterexample"}) {
    auto* sub = app.add_subcommand(kind, std::string("run a ") + kind + " scenario");
    sub->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides [scenario] out)");
    sub->add_option("--seed", seed, "seed (overrides [scenario] seed)")->check(CLI::NonNegativeNumber);
    sub->add_option("--jobs", jobs, "worker threads (overrides [scenario] jobs)")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string kind = app.get_subcommands().front()->get_name();

  try {
    bmo::cli::ScenarioConfig cfg = bmo::cli::load_scenario(config);
    if (cfg.kind != kind)
      bmo::fail(bmo::ErrorKind::Config, config + ": [scenario] kind is '" + cfg.kind + "' but the command is '" + kind + "'");
    if (!out.empty()) cfg.out = out;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (jobs > 0) cfg.jobs = jobs;
    const bmo::cli::Report report = bmo::cli::run_scenario(cfg);
    std::size_t passed = 0;
    for (const auto& c : report.checks) passed += c.pass() ? 1 : 0;
    std::cout << kind << ": " << passed << " / " << report.checks.size() << " checks passed in " << report.wall_seconds
              << " s; output in " << cfg.out << '\n';
    for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
    if (const auto* bad = report.first_failure()) {
      std::cerr << bad->name << '\n';
      return 1;
    }
    return 0;
  } catch (const bmo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
