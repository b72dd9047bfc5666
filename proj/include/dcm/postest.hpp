#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dcm/dataset.hpp"
#include "dcm/draws.hpp"
#include "dcm/model.hpp"
#include "dcm/parallel.hpp"

namespace dcm {

// |numerator / denominator|. Throws on a zero denominator.
double wtp(double numerator_coef, double denominator_coef);

// RRM / RUM, the Ratio column convention. Throws on a zero RUM value.
double model_ratio(double rrm_value, double rum_value);

// (a_rrm - a_rum) / a_rrm * 100, signed. Throws on a_rrm = 0.
double percent_difference(double a_rrm, double a_rum);

struct Histogram {
  std::vector<double> edges;   // n_bins + 1 ascending edges
  std::vector<double> masses;  // n_bins masses summing to 1
  double truncated_fraction = 0.0;  // draws dropped for |denominator| < 1e-8

  std::vector<double> midpoints() const;
  // Two-column CSV body: bin_midpoint,mass.
  std::string to_csv() const;
};

// Empirical distribution of |numerator / d| over d ~ Normal(mean, sd):
// 100 equal-width bins spanning the 0.5-99.5 percentile range of the draws
// (values outside are dropped and the masses renormalized). Draws with
// |d| < 1e-8 are discarded and counted in truncated_fraction; sd = 0
// degenerates to a single point-mass bin.
Histogram wtp_density(double numerator, double denominator_mean,
                      double denominator_sd, int n_draws, std::uint64_t seed);

// Choice probabilities for one (possibly perturbed) situation; the index
// selects the situation's draw block when coefficients are random.
using SituationProbFn =
    std::function<std::vector<double>(int situation_index, const ChoiceSituation&)>;

// Compiles the model once and closes over it. `draws` is required iff the
// spec has random coefficients and must outlive the returned function.
SituationProbFn make_probability_fn(const ModelSpec& spec,
                                    const ParameterVector& params,
                                    const AttributeSchema& schema, ModelKind kind,
                                    const DrawMatrix* draws = nullptr);

struct ElasticityResult {
  double value = 0.0;  // probability-weighted sample elasticity
  long n_used = 0;     // situations entering the average
  long n_zero = 0;     // situations skipped for x_ik = 0 (flagged, not zeroed)
};

// Direct point elasticity of alternative `alt_pos` w.r.t. its own attribute:
// probability-weighted average over situations of (x/P) dP/dx, the derivative
// taken by central difference at relative step 1e-4. Throws when every
// evaluation point has x = 0.
ElasticityResult direct_elasticity(const SituationProbFn& prob_fn,
                                   const ChoiceDataset& ds,
                                   const std::string& attribute, int alt_pos,
                                   Exec exec = Exec::Parallel);

}  // namespace dcm
