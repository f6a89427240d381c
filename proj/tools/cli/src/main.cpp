// elman command-line entry point. Exit codes: 0 ok, 1 input error, 2 numeric failure, 3 check failed.
#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "elman/cli/commands.hpp"

namespace {

using elman::cli::GlobalOptions;

CLI::App* leaf(CLI::App& parent, const std::string& name, const std::string& help, std::string& config) {
  CLI::App* cmd = parent.add_subcommand(name, help);
  cmd->add_option("config", config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  return cmd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational functionals of elastic manifolds and inhomogeneous spherical spin glasses"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  double tol = 0.0;
  app.add_option("--seed", g.seed, "seed of every random stream")->capture_default_str();
  CLI::Option* tol_opt = app.add_option("--tol", tol, "tolerance override; meaning depends on the command");
  app.add_option("--out", g.out, "directory for JSON and CSV artifacts (nothing is written without it)");
  app.add_option("--threads", g.threads, "worker threads (default ELMAN_THREADS, else hardware)")
      ->envname("ELMAN_THREADS");

  std::string config, functional = "B", route, to = "continuum", suite = "all";
  bool no_budget = false;
  std::function<int()> action;

  CLI::App* kd = app.add_subcommand("kd", "dual map K^D")->require_subcommand(1);
  leaf(*kd, "solve", "solve diag((D + K)^-1) = u; --tol is the residual target", config)->callback([&] {
    action = [&] { return elman::cli::kd_solve(g, config); };
  });

  CLI::App* profile = app.add_subcommand("profile", "profile conversions")->require_subcommand(1);
  CLI::App* convert = leaf(*profile, "convert", "convert a profile to continuum form", config);
  convert->add_option("--to", to, "continuum or unit")->check(CLI::IsMember({"continuum", "unit"}));
  convert->callback([&] { action = [&] { return elman::cli::profile_convert(g, config, to); }; });

  CLI::App* fn = app.add_subcommand("functional", "functional evaluation")->require_subcommand(1);
  CLI::App* eval = leaf(*fn, "eval", "evaluate one functional; --tol is the route agreement tolerance", config);
  eval->add_option("--functional", functional, "B, A, P, Y, W or Gamma2")
      ->check(CLI::IsMember({"B", "A", "P", "Y", "W", "Gamma2"}));
  eval->add_option("--route", route, "direct, mapped, discrete, continuum, closed, recursion or both");
  eval->callback([&] { action = [&] { return elman::cli::functional_eval(g, config, functional, route); }; });

  leaf(app, "minimize", "inf over profiles; --tol is the projected-gradient level", config)->callback([&] {
    action = [&] { return elman::cli::minimize(g, config); };
  });

  CLI::App* euc = app.add_subcommand("euclidean", "Euclidean model")->require_subcommand(1);
  leaf(*euc, "free-energy", "sup over q of the inner infimum", config)->callback([&] {
    action = [&] { return elman::cli::euclidean_free_energy(g, config); };
  });

  CLI::App* rpc = app.add_subcommand("rpc", "cascade recursion checks")->require_subcommand(1);
  leaf(*rpc, "verify-yb", "closed form against recursion; --tol is the relative error bound", config)->callback([&] {
    action = [&] { return elman::cli::rpc_verify_yb(g, config); };
  });
  leaf(*rpc, "a-m", "Gamma_1 - Gamma_2 for small M; --tol is the torus refinement level", config)->callback([&] {
    action = [&] { return elman::cli::rpc_a_m(g, config); };
  });

  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo checks")->require_subcommand(1);
  leaf(*mc, "covariance", "empirical covariance; --tol is the |z| band", config)->callback([&] {
    action = [&] { return elman::cli::mc_covariance(g, config); };
  });
  leaf(*mc, "h-shift", "field-shift identity on one realization", config)->callback([&] {
    action = [&] { return elman::cli::mc_h_shift(g, config); };
  });
  leaf(*mc, "free-energy-demo", "finite-N quadrature free energy (demo)", config)->callback([&] {
    action = [&] { return elman::cli::mc_free_energy_demo(g, config); };
  });

  CLI::App* ver = app.add_subcommand("verify", "acceptance criteria; --tol replaces every tolerance");
  ver->add_option("--suite", suite, "suite name or comma-separated criterion ids")->capture_default_str();
  ver->add_flag("--no-budget", no_budget, "do not fail criteria that exceed their runtime budget");
  ver->callback([&] { action = [&] { return elman::cli::verify(g, suite, !no_budget); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : elman::cli::kInputError;
  }
  if (*tol_opt) {
    if (!(tol >= 0.0)) {
      std::cerr << "error: --tol must be nonnegative\n";
      return elman::cli::kInputError;
    }
    g.tol = tol;
  }
  try {
    return action();
  } catch (const std::exception& e) {
    return elman::cli::report_failure(e);
  }
}
