#pragma once

#include <initializer_list>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "elman/functionals.hpp"
#include "elman/kdual.hpp"
#include "elman/montecarlo.hpp"
#include "elman/optimize.hpp"
#include "elman/profiles.hpp"
#include "elman/rpc.hpp"

namespace elman::io {

using json = nlohmann::json;

/// Malformed document or schema violation. `field` is a path like "spec.D[1][0]" or "line 3, column 7".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Parses JSON text; syntax errors become SchemaError with a line and column.
json parse_document(const std::string& text);
json read_file(const std::string& path);

// ---- strict field access ---------------------------------------------------------------

/// Throws unless j is an object whose keys all appear in `allowed`.
void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed);
const json& require(const json& obj, const char* key, const std::string& path);
bool has(const json& obj, const char* key);
std::string join(const std::string& path, const char* key);

double number(const json& j, const std::string& path);
int integer(const json& j, const std::string& path);
bool boolean(const json& j, const std::string& path);
std::string text(const json& j, const std::string& path);
Vector vector(const json& j, const std::string& path);
/// Array of rows; `cols` fixes the row length when nonnegative (empty rows allowed for zero columns).
Matrix matrix(const json& j, const std::string& path, long cols = -1);

// ---- model types -----------------------------------------------------------------------

MixingFunction parse_mixing(const json& j, const std::string& path);
CorrelationFunction parse_correlation(const json& j, const std::string& path);
LatticeSpec parse_lattice(const json& j, const std::string& path);
SphericalModelSpec parse_spherical(const json& j, const std::string& path);
EuclideanModelSpec parse_euclidean(const json& j, const std::string& path);

TalagrandProfile parse_talagrand(const json& j, const std::string& path);
PanchenkoProfile parse_panchenko(const json& j, const std::string& path);
ContinuumProfile parse_continuum(const json& j, const std::string& path);
using Profile = std::variant<TalagrandProfile, PanchenkoProfile, ContinuumProfile>;
/// Dispatches on the "form" key: talagrand, panchenko or continuum.
Profile parse_profile(const json& j, const std::string& path);

json to_json(const Vector& v);
json to_json(const Matrix& m);
json to_json(const MixingFunction& xi);
json to_json(const CorrelationFunction& b);
json to_json(const LatticeSpec& lat);
json to_json(const SphericalModelSpec& spec);
json to_json(const EuclideanModelSpec& spec);
json to_json(const TalagrandProfile& p);
json to_json(const PanchenkoProfile& p);
json to_json(const ContinuumProfile& c);
json to_json(const Profile& p);

// ---- results ---------------------------------------------------------------------------

json to_json(const DualPoint& p);
json to_json(const EvaluationReport& r);
json to_json(const Certificate& c);
json to_json(const ProfileSolution& s);
json to_json(const RecursionResult& r);
json to_json(const CovarianceEstimate& c);
json to_json(const HShiftReport& r);

// ---- CSV -------------------------------------------------------------------------------

/// Comma-separated table with a header line; numbers printed with 17 significant digits.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  /// Row with a leading text cell.
  void row(const std::string& label, const std::vector<double>& values);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

std::string format_number(double v);

}  // namespace elman::io
