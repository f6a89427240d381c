#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elman::verify {

/// How the measured quantity is compared with the tolerance.
enum class Comparison {
  Below,  ///< pass iff measured < tolerance
  Above,  ///< pass iff measured > tolerance
};

struct Criterion {
  std::string id;
  std::string title;
  std::string metric;  ///< what `measured` is
  double tolerance = 0.0;
  Comparison comparison = Comparison::Below;
  double budget_seconds = 0.0;
  std::string suite;
};

struct CriterionResult {
  std::string id;
  bool passed = false;
  bool within_budget = true;
  double measured = 0.0;  ///< worst case over all instances
  double tolerance = 0.0;
  Comparison comparison = Comparison::Below;
  long cases = 0;
  long failures = 0;      ///< instances that failed the tolerance or raised an error
  double seconds = 0.0;   ///< wall time of the run that produced this result
  double budget_seconds = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int threads = 0;
  std::optional<double> tolerance;  ///< replaces every selected criterion's tolerance
  bool enforce_budget = true;       ///< a run slower than its budget fails
};

/// Every criterion in id order.
const std::vector<Criterion>& criteria();

/// Suite names: all, duality, functionals, euclidean, optimize, rpc, montecarlo, boundary.
std::vector<std::string> suite_names();

/// Ids selected by a suite name or a comma-separated id list. Throws InvalidInput on unknown names.
std::vector<std::string> select(std::string_view suite);

/// Runs the selected criteria; criteria that share a computation run it once.
/// `on_result` is called as each result becomes available.
std::vector<CriterionResult> run(const std::vector<std::string>& ids, const VerifyOptions& opt = {},
                                 const std::function<void(const CriterionResult&)>& on_result = {});

/// One line: "AC-1   PASS  measured 3.1e-12 < 1e-10  (200 cases, 0.4 s)".
std::string format_line(const CriterionResult& r);

}  // namespace elman::verify
