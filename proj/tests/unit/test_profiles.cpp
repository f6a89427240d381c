#include <cmath>

#include "elman/profiles.hpp"
#include "support.hpp"

using namespace elman;

namespace {

TalagrandProfile talagrand(std::vector<double> m, Matrix s) {
  TalagrandProfile p;
  p.m = std::move(m);
  p.s = std::move(s);
  return p;
}

PanchenkoProfile panchenko(std::vector<double> t, Matrix q) {
  PanchenkoProfile p;
  p.t = std::move(t);
  p.q = std::move(q);
  return p;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

void check_atoms(const ContinuumProfile& c, std::vector<std::pair<double, double>> want) {
  REQUIRE(c.atoms.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK_NEAR(c.atoms[i].first, want[i].first, 1e-15);
    CHECK_NEAR(c.atoms[i].second, want[i].second, 1e-15);
  }
}

const std::vector<MixingFunction> kSquare{MixingFunction{{0, 0, 1}}};

}  // namespace

TEST_SUITE("profiles") {
  TEST_CASE("talagrand to continuum") {
    const ContinuumProfile one = talagrand_to_continuum(talagrand({0, 1}, rows({{0.6}})));
    check_atoms(one, {{0.6, 1.0}});
    for (std::size_t k = 0; k < one.nodes.size(); ++k) CHECK_NEAR(one.phi(0, k), one.nodes[k], 1e-15);

    check_atoms(talagrand_to_continuum(talagrand({0, 0.3, 1}, rows({{0.2, 0.7}}))), {{0.2, 0.3}, {0.7, 0.7}});

    const ContinuumProfile two = talagrand_to_continuum(talagrand({0, 1}, rows({{0.2}, {0.4}})));
    check_atoms(two, {{0.3, 1.0}});
    const Vector at = two.phi_at(0.3);
    CHECK_NEAR(at(0), 0.2, 1e-15);
    CHECK_NEAR(at(1), 0.4, 1e-15);
    CHECK(averaging_residual(two) < 1e-15);
  }

  TEST_CASE("panchenko to continuum") {
    PanchenkoProfile p = panchenko({0.4, 1}, Matrix(1, 0));
    check_atoms(panchenko_to_continuum(p), {{0.0, 0.4}, {1.0, 0.6}});
    const ContinuumProfile c = panchenko_to_continuum(panchenko({0.2, 0.6, 1}, rows({{0.5}})));
    check_atoms(c, {{0.0, 0.2}, {0.5, 0.4}, {1.0, 0.4}});
    CHECK(averaging_residual(c) < 1e-15);
    CHECK(averaging_residual(panchenko_to_continuum(panchenko({0.2, 0.6, 1}, rows({{0.1}, {0.7}, {0.4}})))) < 1e-12);
  }

  TEST_CASE("delta sequence") {
    CHECK_NEAR(delta_sequence(talagrand({0, 1}, rows({{0.6}}))).level(1)(0), 0.4, 1e-15);
    const TalagrandProfile p = talagrand({0, 0.3, 1}, rows({{0.2, 0.7}}));
    const LevelSequence d = delta_sequence(p);
    CHECK_NEAR(d.level(2)(0), 0.3, 1e-15);
    CHECK_NEAR(d.level(1)(0), 0.45, 1e-15);
    CHECK_NEAR(delta_of(talagrand_to_continuum(p), 0.0)(0), 0.45, 1e-12);
  }

  TEST_CASE("d sequence") {
    CHECK_NEAR(d_sequence(talagrand({0, 1}, rows({{0.6}})), kSquare).level(1)(0), 0.8, 1e-15);
    const LevelSequence d = d_sequence(panchenko({0.5, 1}, Matrix(1, 0)), kSquare);
    CHECK_NEAR(d.level(0)(0), 1.0, 1e-15);
    CHECK_NEAR(d.level(1)(0), 0.0, 1e-15);

    const std::vector<MixingFunction> xi{MixingFunction{{0, 0.2, 0.5, 0.3}}, MixingFunction{{0, 0.1, 0.2, 0.6}}};
    const TalagrandProfile p = talagrand({0, 0.3, 0.8, 1}, rows({{0.1, 0.4, 0.7}, {0.2, 0.5, 0.9}}));
    const Vector cont = d_of(talagrand_to_continuum(p), xi, 0.0);
    const Vector disc = d_sequence(p, xi).level(1);
    CHECK((cont - disc).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("delta_of above q_star and at the top") {
    const ContinuumProfile c =
        scale_to_caps(talagrand_to_continuum(talagrand({0, 0.4, 1}, rows({{0.2, 0.5}, {0.3, 0.6}}))),
                      Vector::LinSpaced(2, 0.8, 1.4));
    for (double s : {c.q_star, 0.5 * (c.q_star + c.q_total()), c.q_total()}) {
      const Vector d = delta_of(c, s);
      const Vector phi = c.phi_at(s);
      for (int x = 0; x < 2; ++x) CHECK_NEAR(d(x), c.caps(x) - phi(x), 1e-13);
    }
    CHECK(delta_of(c, c.q_total()).cwiseAbs().maxCoeff() < 1e-15);
    Vector last = delta_of(c, 0.0);
    for (int k = 1; k <= 50; ++k) {
      const Vector d = delta_of(c, c.q_total() * k / 50.0);
      CHECK((d.array() <= last.array() + 1e-15).all());
      last = d;
    }
  }

  TEST_CASE("caps round trip") {
    const ContinuumProfile unit = talagrand_to_continuum(talagrand({0, 0.4, 1}, rows({{0.2, 0.5}, {0.3, 0.6}})));
    const ContinuumProfile back = normalize_caps(scale_to_caps(unit, Vector::LinSpaced(2, 0.5, 2.0)));
    REQUIRE(back.nodes.size() == unit.nodes.size());
    CHECK((back.phi - unit.phi).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(averaging_residual(scale_to_caps(unit, Vector::LinSpaced(2, 0.5, 2.0))) < 1e-12);
  }

  TEST_CASE("validation") {
    CHECK(validate(talagrand({0, 0.3, 1}, rows({{0.2, 0.7}}))).empty());
    CHECK(!validate(talagrand({0, 0.3, 0.3, 1}, rows({{0.2, 0.5, 0.7}}))).empty());
    TalagrandProfile top = talagrand({0, 1}, rows({{1.0}}));
    CHECK(!validate(top).empty());
    top.extended = true;
    CHECK(validate(top).empty());
    CHECK(!validate(talagrand({0, 1}, rows({{0.7}, {-0.1}}))).empty());
    CHECK(!validate(panchenko({0.6, 0.2, 1}, rows({{0.5}}))).empty());
  }
}
