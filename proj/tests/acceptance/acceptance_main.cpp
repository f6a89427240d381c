// Runs the acceptance criteria and prints one line per criterion.
#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "elman/verify/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"elman acceptance criteria"};
  std::string suite = "all";
  std::uint64_t seed = 1;
  int threads = 0;
  bool no_budget = false;
  std::string json_path;
  app.add_option("--suite", suite, "suite name or comma-separated criterion ids");
  app.add_option("--seed", seed, "instance seed");
  app.add_option("--threads", threads, "worker threads (0: ELMAN_THREADS or hardware)");
  app.add_flag("--no-budget", no_budget, "do not fail criteria that exceed their runtime budget");
  app.add_option("--json", json_path, "write results as JSON");
  CLI11_PARSE(app, argc, argv);

  elman::verify::VerifyOptions opt;
  opt.seed = seed;
  opt.threads = threads;
  opt.enforce_budget = !no_budget;

  std::vector<std::string> ids;
  try {
    ids = elman::verify::select(suite);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }

  int failed = 0;
  nlohmann::json out = nlohmann::json::array();
  elman::verify::run(ids, opt, [&](const elman::verify::CriterionResult& r) {
    std::printf("%s\n", elman::verify::format_line(r).c_str());
    std::fflush(stdout);
    failed += r.passed ? 0 : 1;
    out.push_back({{"id", r.id}, {"passed", r.passed}, {"measured", r.measured}, {"tolerance", r.tolerance},
                   {"cases", r.cases}, {"failures", r.failures}, {"seconds", r.seconds}, {"detail", r.detail}});
  });
  if (!json_path.empty()) std::ofstream(json_path) << out.dump(2) << '\n';
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? 0 : 3;
}
