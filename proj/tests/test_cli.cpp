#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "suites.hpp"

using namespace bmo;
using namespace bmo::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bmo_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  try {
    run_scenario(parse_scenario(text, "cfg"));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  FAIL("no error raised");
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("config errors carry the line", "[cli]") {
  CHECK(contains(config_error("[scenario]\nkind = verify\nbogus = 1\n"), "cfg:3: unknown key 'bogus'"));
  CHECK(contains(config_error("# c\n[nowhere]\n"), "cfg:2: unknown section [nowhere]"));
  CHECK(contains(config_error("kind = verify\n"), "cfg:1: key outside any section"));
  CHECK(contains(config_error("[scenario]\nkind = verify\nkind = oracle\n"), "cfg:3: duplicate key"));
  CHECK(contains(config_error("[scenario]\nkind = verify\nn = two\n"), "cfg:3: key 'n' needs a number"));
  CHECK(contains(config_error("[scenario]\nkind = verify\nn = 4\n"), "cfg:3: n must be 1, 2 or 3"));
  CHECK(contains(config_error("[scenario]\nkind = plot\n"), "cfg:2:"));
  CHECK(contains(config_error("[scenario\n"), "cfg:1: unterminated section header"));
}

TEST_CASE("verify needs suites and a seed", "[cli]") {
  const auto out = scratch("suites");
  CHECK(contains(config_error("[scenario]\nkind = verify\nseed = 1\nout = " + out.string() + "\n"), "no suites selected"));
  CHECK(contains(config_error("[scenario]\nkind = verify\nseed = 1\nsuites = magic\nout = " + out.string() + "\n"),
                 "cfg:4: unknown suite 'magic'"));
  CHECK(contains(config_error("[scenario]\nkind = verify\nsuites = theorem-chain\nout = " + out.string() + "\n"),
                 "needs a seed"));
}

TEST_CASE("theorem chain scenario passes", "[cli]") {
  const auto out = scratch("chain");
  const auto cfg = parse_scenario("[scenario]\nkind = verify\ngauge = power:p=0.5\nn = 1\nseed = 7\n"
                                  "suites = theorem-chain\nout = " + out.string() +
                                  "\n[theorem-chain]\ntrials = 60\nmax_depth_1 = 6\n");
  const Report r = run_scenario(cfg);
  CHECK(r.passed());
  CHECK(r.checks.size() == 5);
  CHECK(r.find("sharp-bound[power:p=0.5;n=1]") != nullptr);
  CHECK(fs::exists(out / "margins.csv"));
  CHECK(fs::exists(out / "report.txt"));
  const std::string csv = slurp(out / "margins.csv");
  CHECK(csv.rfind("suite,check,margin,tolerance,pass\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(contains(slurp(out / "report.txt"), "checks: 5 / 5 passed"));
}

TEST_CASE("failing checks are reported, NaN fails", "[cli]") {
  Report r;
  r.add("s", "a", 0.0, 0.0);
  r.add("s", "b", -1e-10, 1e-9);
  CHECK(r.passed());
  r.add("s", "c", std::nan(""), 1.0);
  CHECK_FALSE(r.passed());
  REQUIRE(r.first_failure() != nullptr);
  CHECK(r.first_failure()->name == "c");
  r.warn("x");
  r.warn("x");
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("surface writes a grid, an image and a report", "[cli]") {
  const auto out = scratch("surface");
  const auto cfg = parse_scenario("[scenario]\nkind = surface\ngauge = power:p=0.5\nout = " + out.string() +
                                  "\n[surface]\nt = 1\nresolution = 10\n");
  const Report r = run_scenario(cfg);
  CHECK(r.passed());
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(out)) files += e.is_regular_file() ? 1 : 0;
  CHECK(files == 3);
  CHECK(contains(slurp(out / "surface.svg"), "<svg"));
  const std::string csv = slurp(out / "surface.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 11 * 11);
  // The cell at (0, t^2) holds h(2t) / 4.
  std::istringstream lines(csv);
  std::string line;
  bool seen = false;
  while (std::getline(lines, line)) {
    if (line.rfind("0,1,1,", 0) != 0) continue;
    const double g = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(std::fabs(g - std::sqrt(2.0) / 4.0) <= 1e-15);
    seen = true;
  }
  CHECK(seen);
  CHECK(contains(config_error("[scenario]\nkind = surface\nout = " + out.string() + "\n[surface]\nresolution = 0\n"),
                 "cfg:5: resolution must be >= 1"));
}

TEST_CASE("oracle writes witnesses that round-trip", "[cli]") {
  const auto out = scratch("oracle");
  const auto cfg = parse_scenario("[scenario]\nkind = oracle\ngauge = power:p=0.5\nseed = 3\nout = " + out.string() +
                                  "\n[oracle]\npoints = 0 1 1; 0.5 0.5 1\ndepth = 3\nbudget = 20000\n");
  const Report r = run_scenario(cfg);
  CHECK(r.passed());
  CHECK(r.checks.size() == 3);
  for (int i = 1; i <= 2; ++i) {
    const auto w = parse_dsf(slurp(out / ("witness_" + std::to_string(i) + ".dsf")));
    CHECK(w.depth() == 3);
    CHECK(bmo_dyadic(w).value <= 1.0 + 1e-9);
  }
  const auto w1 = parse_dsf(slurp(out / "witness_1.dsf"));
  CHECK(std::fabs(average(w1, DyadicCube::unit(1))) <= 1e-9);
  const std::string csv = slurp(out / "oracle.csv");
  CHECK(csv.rfind("x1,x2,t,lower_bound,oracle_value,closed_form_upper\n", 0) == 0);

  try {
    run_scenario(parse_scenario("[scenario]\nkind = oracle\nseed = 3\nout = " + out.string() +
                                "\n[oracle]\npoints = 0 1 1; 3 1 1\nbudget = 100\n"));
    FAIL("no error raised");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
    CHECK(contains(e.what(), "oracle point 2 (x1 = 3"));
  }
  CHECK(contains(config_error("[scenario]\nkind = oracle\nseed = 1\nout = " + out.string() +
                              "\n[oracle]\npoints = 0 1\n"),
                 "cfg:6: points must be"));
}

TEST_CASE("gauges without derivatives raise the fd warning", "[cli]") {
  const auto out = scratch("fd");
  const fs::path table = out / "sqrt_table.txt";
  {
    std::ofstream os(table);
    for (int i = 0; i <= 400; ++i) os << i * 0.25 << ' ' << std::sqrt(i * 0.25) << '\n';
  }
  const auto cfg = parse_scenario("[scenario]\nkind = verify\nseed = 2\nsuites = bellman-geometry\nout = " +
                                  (out / "run").string() + "\n[bellman-geometry]\ngauges = table:" + table.string() +
                                  "\ndims = 1\nt = 1\nconvexity_trials = 200\ndomain_trials = 200\n"
                                  "induction_trials = 5\nboundary_points = 100\n");
  const Report r = run_scenario(cfg);
  CHECK(std::any_of(r.warnings.begin(), r.warnings.end(), [](const std::string& w) { return contains(w, "fd-warning"); }));
  for (const auto& c : r.checks) CHECK_FALSE(contains(c.name, "ode-residual"));
}

TEST_CASE("margins do not depend on the worker count", "[cli]") {
  const auto base = scratch("jobs");
  auto run = [&](unsigned jobs) {
    ScenarioConfig cfg = load_scenario(BMO_SOURCE_DIR "/configs/verify_quick.cfg");
    cfg.jobs = jobs;
    cfg.out = (base / std::to_string(jobs)).string();
    cfg.file.set("counterexamples", "annealing_steps", "100");
    cfg.file.set("regularizer", "scan_points", "2000");
    run_scenario(cfg);
    return slurp(fs::path(cfg.out) / "margins.csv");
  };
  const std::string one = run(1), eight = run(8);
  CHECK(one.size() > 100);
  CHECK(one == eight);
}

TEST_CASE("command line exit codes", "[cli]") {
  const auto out = scratch("exit");
  const std::string tool = BMOTOOL_PATH;
  const fs::path good = out / "good.cfg", bad = out / "bad.cfg";
  std::ofstream(good) << "[scenario]\nkind = surface\nout = " << (out / "s").string() << "\n[surface]\nresolution = 4\n";
  std::ofstream(bad) << "[scenario]\nkind = surface\n[surface]\nresolution = -1\n";
  const auto status = [](const std::string& cmd) { return WEXITSTATUS(std::system((cmd + " >/dev/null 2>&1").c_str())); };
  CHECK(status(tool + " surface --config " + good.string()) == 0);
  CHECK(status(tool + " surface --config " + bad.string()) == 2);
  CHECK(status(tool + " verify --config " + good.string()) == 2);
  CHECK(status(tool + " surface --config " + (out / "missing.cfg").string()) != 0);
}
