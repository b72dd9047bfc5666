#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "dcm/error.hpp"
#include "dcm/postest.hpp"
#include "dcm/rng.hpp"
#include "dcm/rrm.hpp"
#include "dcm/rum.hpp"
#include "dcm/stats.hpp"
#include "test_helpers.hpp"

using namespace dcm;
using testkit::continuous_schema;
using testkit::plain_spec;
using testkit::situation;

TEST_CASE("wtp ratio") {
  CHECK(wtp(0.4, 0.4) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(wtp(-0.3, 0.1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(wtp(1.0, 0.0), Error);

  SUBCASE("joint scale invariance") {
    Rng rng(5, "wtp-scale");
    for (int i = 0; i < 120; ++i) {
      const double num = rng.uniform(-3, 3);
      const double den = rng.uniform(0.1, 3) * (rng.below(2) ? 1 : -1);
      const double lam = rng.uniform(0.01, 7.3);
      CHECK(std::abs(wtp(lam * num, lam * den) - wtp(num, den)) < 1e-12);
    }
  }
}

TEST_CASE("model ratio reproduces printed WTP table rows") {
  // Ratio = RRM / RUM; inputs are the printed 3-decimal values.
  CHECK(model_ratio(3.065, 2.097) == doctest::Approx(1.462).epsilon(0.001));
  CHECK(std::abs(model_ratio(0.594, 0.097) - 6.124) < 0.01);  // printed 6.129
  CHECK(model_ratio(0.7, 0.7) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(model_ratio(1.0, 0.0), Error);
}

TEST_CASE("percent difference reproduces printed elasticity rows") {
  // (RRM - RUM) / RRM * 100 against printed table entries.
  CHECK(std::abs(percent_difference(0.362, -0.632) - 274.703) < 0.5);
  CHECK(std::abs(percent_difference(-1.713, -0.506) - 70.494) < 0.1);
  CHECK(percent_difference(0.9, 0.9) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(percent_difference(0.0, 1.0), Error);
}

TEST_CASE("wtp density") {
  SUBCASE("degenerate sd is a point mass") {
    const auto h = wtp_density(1.0, -0.5, 0.0, 5000, 1);
    REQUIRE(h.masses.size() == 1);
    CHECK(h.masses[0] == doctest::Approx(1.0));
    CHECK(h.edges[0] == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("mass sums to one") {
    const auto h = wtp_density(1.0, -0.5, 0.2, 50000, 2);
    double sum = 0.0;
    for (double m : h.masses) sum += m;
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(h.truncated_fraction >= 0.0);
    CHECK(h.masses.size() == 100);
  }

  SUBCASE("median matches the independent Monte Carlo oracle") {
    const auto h = wtp_density(1.0, -0.5, 0.1, 1000000, 3);
    // oracle: direct simulation with a different generator stream
    Rng rng(909090, "density-oracle");
    std::vector<double> vals;
    vals.reserve(200000);
    for (int i = 0; i < 200000; ++i) {
      const double d = rng.normal(-0.5, 0.1);
      if (std::abs(d) >= 1e-8) vals.push_back(std::abs(1.0 / d));
    }
    std::sort(vals.begin(), vals.end());
    const double oracle_median = vals[vals.size() / 2];

    // median of the histogram: walk cumulative mass to 0.5
    double cum = 0.0;
    double median = 0.0;
    for (size_t b = 0; b < h.masses.size(); ++b) {
      cum += h.masses[b];
      if (cum >= 0.5) {
        median = 0.5 * (h.edges[b] + h.edges[b + 1]);
        break;
      }
    }
    CHECK(std::abs(median - oracle_median) < 1e-2);
    CHECK(std::abs(oracle_median - 2.0) < 0.05);  // sanity: 1/|mu| = 2
  }

  SUBCASE("small sd concentrates near the deterministic ratio") {
    const double mu = -0.5, sd = 0.004, num = 1.0;
    const auto h = wtp_density(num, mu, sd, 200000, 4);
    const double center = num / std::abs(mu);
    const double radius = 3.0 * (num * sd / (mu * mu));
    double inside = 0.0;
    for (size_t b = 0; b < h.masses.size(); ++b) {
      const double mid = 0.5 * (h.edges[b] + h.edges[b + 1]);
      if (std::abs(mid - center) <= radius) inside += h.masses[b];
    }
    CHECK(inside >= 0.95);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(wtp_density(1.0, -0.5, -0.1, 5000, 5), Error);
    CHECK_THROWS_AS(wtp_density(1.0, -0.5, 0.1, 10, 5), Error);
  }
}

TEST_CASE("direct elasticity") {
  const auto schema = continuous_schema(1);
  const auto spec = plain_spec(schema);

  SUBCASE("flat model has zero elasticity") {
    ChoiceDataset ds;
    ds.schema = schema;
    ds.situations = {situation({{2.0}, {3.0}})};
    const auto fn = make_probability_fn(spec, testkit::params_from(spec, {0.0}),
                                        schema, ModelKind::RUM);
    const auto e = direct_elasticity(fn, ds, "x1", 0);
    CHECK(e.value == doctest::Approx(0.0).epsilon(1e-10));
  }

  SUBCASE("binary MNL closed form") {
    ChoiceDataset ds;
    ds.schema = schema;
    ds.situations = {situation({{14.0}, {26.0}})};
    const auto params = testkit::params_from(spec, {-0.1});
    const auto fn = make_probability_fn(spec, params, schema, ModelKind::RUM);
    const auto e = direct_elasticity(fn, ds, "x1", 0);
    const double p1 = logistic(-0.1 * (14.0 - 26.0));
    const double analytic = -0.1 * 14.0 * (1.0 - p1);
    CHECK(analytic == doctest::Approx(-0.32407).epsilon(1e-4));
    CHECK(std::abs(e.value - analytic) / std::abs(analytic) < 1e-4);
  }

  SUBCASE("numerical matches analytic at 50 random points") {
    Rng rng(606, "elast");
    for (int trial = 0; trial < 50; ++trial) {
      const double beta = rng.uniform(-0.5, 0.5);
      const double x0 = rng.uniform(0.5, 20);
      const double x1 = rng.uniform(0.5, 20);
      ChoiceDataset ds;
      ds.schema = schema;
      ds.situations = {situation({{x0}, {x1}})};
      const auto params = testkit::params_from(spec, {beta});
      const auto fn = make_probability_fn(spec, params, schema, ModelKind::RUM);
      const auto e = direct_elasticity(fn, ds, "x1", 0);
      const auto p = mnl_probability(spec, params, schema, ds.situations[0]);
      const double analytic = beta * x0 * (1.0 - p[0]);
      if (std::abs(analytic) > 1e-10)
        CHECK(std::abs(e.value - analytic) / std::abs(analytic) < 1e-4);
    }
  }

  SUBCASE("RRM equals MNL for binary choice") {
    ChoiceDataset ds;
    ds.schema = schema;
    ds.situations = {situation({{5.0}, {9.0}}), situation({{2.0}, {4.0}})};
    const auto params = testkit::params_from(spec, {-0.25});
    const auto rum_fn = make_probability_fn(spec, params, schema, ModelKind::RUM);
    const auto rrm_fn = make_probability_fn(spec, params, schema, ModelKind::RRM);
    const auto e_rum = direct_elasticity(rum_fn, ds, "x1", 1);
    const auto e_rrm = direct_elasticity(rrm_fn, ds, "x1", 1);
    CHECK(std::abs(e_rum.value - e_rrm.value) < 1e-6);
  }

  SUBCASE("zero attribute everywhere is an error; partial zeros are flagged") {
    ChoiceDataset ds;
    ds.schema = schema;
    ds.situations = {situation({{0.0}, {3.0}})};
    const auto fn = make_probability_fn(spec, testkit::params_from(spec, {0.2}),
                                        schema, ModelKind::RUM);
    CHECK_THROWS_WITH_AS(direct_elasticity(fn, ds, "x1", 0),
                         doctest::Contains("elasticity undefined"), Error);

    ds.situations.push_back(situation({{2.0}, {3.0}}));
    const auto e = direct_elasticity(fn, ds, "x1", 0);
    CHECK(e.n_zero == 1);
    CHECK(e.n_used == 1);
  }

  SUBCASE("unknown attribute") {
    ChoiceDataset ds;
    ds.schema = schema;
    ds.situations = {situation({{1.0}, {2.0}})};
    const auto fn = make_probability_fn(spec, testkit::params_from(spec, {0.2}),
                                        schema, ModelKind::RUM);
    CHECK_THROWS_AS(direct_elasticity(fn, ds, "weight", 0), SchemaError);
  }
}

TEST_CASE("mixed-logit probability function uses the situation's draw block") {
  const auto schema = continuous_schema(1);
  auto spec = plain_spec(schema);
  spec.random_coefficients = {{"b1"}};
  auto ds = testkit::random_dataset(4, 2, 1, 61);
  const auto dm = DrawMatrix::halton(ds, 30, 1);
  auto params = ParameterVector::zeros(spec);
  params.set("b1", -0.2);
  params.set("sd_b1", 0.1);

  const auto fn = make_probability_fn(spec, params, schema, ModelKind::RUM, &dm);
  for (int i = 0; i < 4; ++i) {
    const auto direct = mixed_logit_probability(
        spec, params, schema, ds.situations[i], dm.block_for_situation(i), dm.R,
        dm.D);
    const auto via_fn = fn(i, ds.situations[i]);
    for (size_t j = 0; j < direct.size(); ++j)
      CHECK(via_fn[j] == doctest::Approx(direct[j]).epsilon(1e-15));
  }
}
