#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "elman/random.hpp"
#include "elman/verify/acceptance.hpp"

namespace elman::verify::detail {

/// Worst-case accumulator for one criterion.
class Tally {
 public:
  Tally(std::string id, double tolerance, Comparison comparison);

  /// Records one instance metric.
  void add(double value, const std::string& label);
  /// Records an instance that raised instead of producing a metric.
  void error(const std::string& label, const std::string& what);
  void note(const std::string& text);

  CriterionResult result() const;

 private:
  std::string id_;
  double tolerance_;
  Comparison comparison_;
  double worst_;
  long cases_ = 0;
  long failures_ = 0;
  std::string worst_label_;
  std::vector<std::string> notes_;
};

struct Context {
  VerifyOptions options;
  std::function<double(const std::string&)> tolerance;
  std::function<Comparison(const std::string&)> comparison;

  Tally tally(const std::string& id) const { return Tally(id, tolerance(id), comparison(id)); }
  /// Engine for instance `index` of criterion `slot`; independent across criteria.
  std::mt19937_64 rng(int slot, std::uint64_t index) const {
    return make_rng(options.seed, RngTag::Instance, static_cast<std::uint64_t>(slot) * 100000u + index);
  }
};

using CheckFn = std::vector<CriterionResult> (*)(const Context&);

std::vector<CriterionResult> check_duality_residual(const Context& ctx);    // AC-1
std::vector<CriterionResult> check_gradient_identity(const Context& ctx);   // AC-2
std::vector<CriterionResult> check_jacobian_identity(const Context& ctx);   // AC-3
std::vector<CriterionResult> check_closed_forms(const Context& ctx);        // AC-4
std::vector<CriterionResult> check_boundary_epsilon(const Context& ctx);    // AC-16

std::vector<CriterionResult> check_discrete_continuum(const Context& ctx);  // AC-5a
std::vector<CriterionResult> check_q_star(const Context& ctx);              // AC-7
std::vector<CriterionResult> check_support(const Context& ctx);             // AC-8
std::vector<CriterionResult> check_continuity(const Context& ctx);          // AC-9

std::vector<CriterionResult> check_minimizers(const Context& ctx);          // AC-5b, AC-6
std::vector<CriterionResult> check_parameterizations(const Context& ctx);   // AC-17

std::vector<CriterionResult> check_beta(const Context& ctx);                // AC-12
std::vector<CriterionResult> check_mapping(const Context& ctx);             // AC-13
std::vector<CriterionResult> check_annealed(const Context& ctx);            // AC-18

std::vector<CriterionResult> check_y_b(const Context& ctx);                 // AC-10
std::vector<CriterionResult> check_gamma2(const Context& ctx);              // AC-11

std::vector<CriterionResult> check_covariance(const Context& ctx);          // AC-14
std::vector<CriterionResult> check_h_shift(const Context& ctx);             // AC-15

/// max |a - b| / max(|b|, floor).
double relative_error(double a, double b, double floor = 1e-300);

}  // namespace elman::verify::detail
