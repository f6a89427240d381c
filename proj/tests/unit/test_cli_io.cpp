#include <string>

#include "elman/cli/io.hpp"
#include "support.hpp"

using namespace elman;
using elman::io::json;

namespace {

std::string field_of(const std::string& text, const std::function<void(const json&)>& parse) {
  try {
    parse(io::parse_document(text));
  } catch (const io::SchemaError& e) {
    return e.field();
  }
  return "(accepted)";
}

}  // namespace

TEST_SUITE("cli-io") {
  TEST_CASE("syntax errors carry line and column") {
    CHECK(field_of("{\n  \"D\": [[0]],\n  \"u\": [0.5,, ]\n}", [](const json&) {}) == "line 3, column 13");
  }

  TEST_CASE("unknown and missing keys name the field") {
    const auto spherical = [](const json& j) { io::parse_spherical(j, "model"); };
    CHECK(field_of(R"({"D": [[1]], "xi": {"coeffs": [0, 1]}, "extra": 1})", spherical) == "model.extra");
    CHECK(field_of(R"({"D": [[1]]})", spherical) == "model.xi");
    CHECK(field_of(R"({"D": [[1, 2]], "xi": {"coeffs": [0, 1]}})", spherical) == "model.D");
    CHECK(field_of(R"({"D": [[1]], "xi": {"coeffs": [0, "a"]}})", spherical) == "model.xi.coeffs[1]");
    CHECK(field_of(R"({"D": [[1]], "xi": {"coeffs": [0, -1]}})", spherical) == "model.xi.coeffs[1]");
    const auto profile = [](const json& j) { io::parse_profile(j, "profile"); };
    CHECK(field_of(R"({"form": "parisi"})", profile) == "profile.form");
    CHECK(field_of(R"({"form": "talagrand", "m": [0, 0.5, 1], "s": [[0.2]]})", profile) == "profile.s[0]");
    CHECK(field_of(R"({"form": "talagrand", "m": [0, 1], "s": [[0.2]]})", profile) == "(accepted)");
  }

  TEST_CASE("invalid profiles report their violation") {
    const auto profile = [](const json& j) { io::parse_profile(j, "profile"); };
    CHECK(field_of(R"({"form": "talagrand", "m": [0, 0.5, 0.5, 1], "s": [[0.1, 0.2, 0.3]]})", profile) == "profile");
  }

  TEST_CASE("profiles round trip") {
    const char* docs[] = {
        R"({"form": "talagrand", "m": [0, 0.3, 1], "s": [[0.1, 0.6], [0.2, 0.7]], "extended": false})",
        R"({"form": "panchenko", "t": [0.2, 0.6, 1], "q": [[0.5], [0.25]]})",
        R"({"form": "panchenko", "t": [0.4, 1], "q": [[], []], "sites": 2})",
    };
    for (const char* d : docs) {
      const io::Profile p = io::parse_profile(io::parse_document(d), "profile");
      const json once = io::to_json(p);
      const json twice = io::to_json(io::parse_profile(io::parse_document(once.dump()), "profile"));
      CHECK(once == twice);
      io::Profile c;
      if (const auto* t = std::get_if<TalagrandProfile>(&p)) c = talagrand_to_continuum(*t);
      else c = panchenko_to_continuum(std::get<PanchenkoProfile>(p));
      const json cj = io::to_json(c);
      CHECK(cj == io::to_json(io::parse_profile(io::parse_document(cj.dump()), "profile")));
    }
  }

  TEST_CASE("models round trip") {
    const char* sph = R"({"D": [[1, -0.5], [-0.5, 1]], "xi": [{"coeffs": [0, 0.1]}, {"coeffs": [0, 0, 0.3]}], "h": [0.1, 0.2]})";
    const json a = io::to_json(io::parse_spherical(io::parse_document(sph), "model"));
    CHECK(a == io::to_json(io::parse_spherical(io::parse_document(a.dump()), "model")));
    const char* euc = R"({"lattice": {"L": 3, "mu": 1.1, "t": 0.3}, "B": {"c0": 0.1, "atoms": [[0.5, 1]]}, "beta": 0.7})";
    const json b = io::to_json(io::parse_euclidean(io::parse_document(euc), "model"));
    CHECK(b == io::to_json(io::parse_euclidean(io::parse_document(b.dump()), "model")));
    CHECK(b["lattice"]["d"] == 1);
  }

  TEST_CASE("numbers survive text") {
    const double x = 0.1 + 0.2;
    CHECK(io::parse_document(json(x).dump()).get<double>() == x);
    CHECK(std::stod(io::format_number(x)) == x);
    io::Csv table({"a", "b"});
    table.row({1.0 / 3.0, 2.0});
    table.row("r", {x});
    CHECK(table.str() == "a,b\n0.33333333333333331,2\nr,0.30000000000000004\n");
  }
}
