#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dcm/error.hpp"
#include "dcm/postest.hpp"
#include "dcm/synth.hpp"
#include "dcm/validate.hpp"
#include "test_helpers.hpp"

using namespace dcm;

namespace {

ModelSpec courier_spec() {
  ModelSpec spec;
  spec.terms = {{"b_cost", "shipping_cost", ""},
                {"b_time", "delivery_time", ""},
                {"b_track", "tracking", ""}};
  spec.constant_alts = {2, 3};
  return spec;
}

ParameterVector courier_truth(const ModelSpec& spec) {
  auto truth = ParameterVector::zeros(spec);
  truth.set("b_cost", -0.15);
  truth.set("b_time", -0.03);
  truth.set("b_track", 0.5);
  truth.set("asc_2", 0.3);
  truth.set("asc_3", -0.2);
  return truth;
}

}  // namespace

TEST_CASE("mape unit cases") {
  SUBCASE("identity is zero") {
    const std::vector<double> a = {0.4, 0.6};
    CHECK(mape(a, a) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("single-term hand oracle") {
    // |0.1 / 0.5| * 100 = 20
    CHECK(mape(std::vector<double>{0.5}, std::vector<double>{0.4}) ==
          doctest::Approx(20.0).epsilon(1e-12));
  }
  SUBCASE("four-term hand oracle") {
    // (0.2 + 0.2 + 0 + 0) / 4 * 100 = 10
    const std::vector<double> actual = {0.25, 0.25, 0.25, 0.25};
    const std::vector<double> predicted = {0.30, 0.20, 0.25, 0.25};
    CHECK(mape(actual, predicted) == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("zero actual is an error") {
    CHECK_THROWS_AS(mape(std::vector<double>{0.0, 1.0}, std::vector<double>{0.1, 1.0}),
                    Error);
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(mape(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                    Error);
  }
}

TEST_CASE("self-consistency: shares predicted by the generating truth") {
  // Score the true model's predicted shares against observed shares on a
  // large simulated dataset without any estimation: only sampling noise.
  const auto spec = courier_spec();
  const auto truth = courier_truth(spec);
  const auto design = generate_design(DesignGrid::courier_grid(), 50000, 4, 3, 2);
  const auto ds = simulate_choices(design, spec, truth, ModelKind::RUM, 3);

  const auto fn = make_probability_fn(spec, truth, ds.schema, ModelKind::RUM);
  std::vector<double> observed(4, 0.0), predicted(4, 0.0);
  for (int i = 0; i < ds.n_situations(); ++i) {
    observed[ds.situations[i].chosen] += 1.0;
    const auto p = fn(i, ds.situations[i]);
    for (int j = 0; j < 4; ++j) predicted[j] += p[j];
  }
  for (auto& v : observed) v /= ds.n_situations();
  for (auto& v : predicted) v /= ds.n_situations();

  CHECK(mape(observed, predicted) < 2.0);
}

TEST_CASE("cross_validate on synthetic courier data") {
  const auto spec = courier_spec();
  const auto truth = courier_truth(spec);
  const auto design = generate_design(DesignGrid::courier_grid(), 2500, 4, 7, 2);
  const auto ds = simulate_choices(design, spec, truth, ModelKind::RUM, 7);

  const auto summary = cross_validate(ds, spec, ModelKind::RUM, 5, 99);
  REQUIRE(summary.fold_results.size() == 5);
  CHECK(summary.failed_folds == 0);

  SUBCASE("shares are simplexes and predictions sit in the probability hull") {
    for (const auto& fr : summary.fold_results) {
      double so = 0.0, sp = 0.0;
      for (double v : fr.observed_shares) so += v;
      for (double v : fr.predicted_shares) sp += v;
      CHECK(std::abs(so - 1.0) < 1e-9);
      CHECK(std::abs(sp - 1.0) < 1e-9);
      for (double v : fr.predicted_shares) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }

  SUBCASE("average is the mean of fold mapes") {
    double m = 0.0;
    for (const auto& fr : summary.fold_results) m += fr.fold_mape;
    CHECK(summary.average_mape == doctest::Approx(m / 5).epsilon(1e-12));
  }

  SUBCASE("deterministic under the same seed") {
    const auto again = cross_validate(ds, spec, ModelKind::RUM, 5, 99);
    for (int f = 0; f < 5; ++f) {
      CHECK(again.fold_results[f].fold_mape == summary.fold_results[f].fold_mape);
      CHECK(again.fold_results[f].train_loglik ==
            summary.fold_results[f].train_loglik);
    }
    CHECK(again.average_mape == summary.average_mape);
  }

  SUBCASE("csv output shape") {
    const auto csv = summary.to_csv();
    CHECK(csv.find("fold,failed,train_loglik,obs_c1") != std::string::npos);
    // header + 5 fold rows
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(summary.summary_line().find("model=rum folds=5") != std::string::npos);
  }
}

TEST_CASE("per-fold estimation failures are marked, not fatal") {
  auto ds = testkit::random_dataset(40, 3, 2, 47);
  auto spec = testkit::plain_spec(ds.schema);
  spec.random_coefficients = {{"b1"}};
  EstimateOptions opt;
  opt.draws = 0;  // every fold's estimation throws
  const auto summary = cross_validate(ds, spec, ModelKind::RUM, 4, 2, opt);
  CHECK(summary.failed_folds == 4);
  for (const auto& fr : summary.fold_results) {
    CHECK(fr.failed);
    CHECK_FALSE(fr.error.empty());
  }
  const auto csv = summary.to_csv();
  CHECK(csv.find(",1,") != std::string::npos);  // failed flag column
}

TEST_CASE("never-chosen alternative surfaces the fold index") {
  // Alternative 4 never chosen: its observed share is zero in every fold.
  auto ds = testkit::random_dataset(40, 4, 2, 55);
  for (auto& s : ds.situations)
    if (s.chosen == 3) s.chosen = 0;
  const auto spec = testkit::plain_spec(ds.schema);
  try {
    cross_validate(ds, spec, ModelKind::RUM, 5, 1);
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("fold") != std::string::npos);
  }
}

TEST_CASE("RUM and RRM mapes are close on family-matched data") {
  const auto spec = courier_spec();
  const auto truth = courier_truth(spec);
  const auto design = generate_design(DesignGrid::courier_grid(), 3000, 4, 13, 2);

  const auto ds_rum = simulate_choices(design, spec, truth, ModelKind::RUM, 13);
  const auto ds_rrm = simulate_choices(design, spec, truth, ModelKind::RRM, 14);

  const auto cv_rum = cross_validate(ds_rum, spec, ModelKind::RUM, 5, 3);
  const auto cv_rrm = cross_validate(ds_rrm, spec, ModelKind::RRM, 5, 3);
  CHECK(std::abs(cv_rum.average_mape - cv_rrm.average_mape) < 10.0);
}
