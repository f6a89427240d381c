#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "elman/cli/io.hpp"

namespace elman::cli {

/// Exit codes shared by every command.
enum Exit : int {
  kOk = 0,
  kInputError = 1,   ///< schema, usage, InvalidInput, DomainViolation, NotPositiveDefinite
  kNumericError = 2, ///< NoConvergence, BudgetExceeded, TruncationInsufficient
  kCheckFailed = 3,  ///< a verification or built-in cross-check failed
};

/// Flags accepted by every command.
struct GlobalOptions {
  std::uint64_t seed = 1;
  std::optional<double> tol;  ///< per-command meaning, see the command help
  std::string out;            ///< artifact directory; empty writes nothing to disk
  int threads = 0;            ///< 0 reads ELMAN_THREADS, else hardware concurrency
};

/// Collects a command's JSON result and CSV tables; JSON goes to stdout, files only under `out`.
class Sink {
 public:
  explicit Sink(const GlobalOptions& g) : g_(g) {}
  void json(const std::string& name, const io::json& j);
  void csv(const std::string& name, const io::Csv& table);

 private:
  std::string path(const std::string& file) const;
  const GlobalOptions& g_;
};

int kd_solve(const GlobalOptions& g, const std::string& config);
/// `to`: continuum (optionally scaled by config caps) or unit (caps normalized to one).
int profile_convert(const GlobalOptions& g, const std::string& config, const std::string& to);
/// `functional`: B, A, P, Y, W or Gamma2. `route`: direct, mapped, discrete, continuum, closed,
/// recursion or both; empty picks the functional's default.
int functional_eval(const GlobalOptions& g, const std::string& config, const std::string& functional,
                    const std::string& route);
int minimize(const GlobalOptions& g, const std::string& config);
int euclidean_free_energy(const GlobalOptions& g, const std::string& config);
int rpc_verify_yb(const GlobalOptions& g, const std::string& config);
int rpc_a_m(const GlobalOptions& g, const std::string& config);
int mc_covariance(const GlobalOptions& g, const std::string& config);
int mc_h_shift(const GlobalOptions& g, const std::string& config);
int mc_free_energy_demo(const GlobalOptions& g, const std::string& config);
int verify(const GlobalOptions& g, const std::string& suite, bool enforce_budget);

/// Maps an exception to an exit code and prints the diagnostic on stderr.
int report_failure(const std::exception& e);

}  // namespace elman::cli
