#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dcm/dataset.hpp"
#include "dcm/draws.hpp"
#include "dcm/model.hpp"
#include "dcm/parallel.hpp"

namespace dcm {

struct MaximizeSettings {
  double grad_tol = 1e-5;      // infinity norm of the gradient
  double rel_obj_tol = 1e-9;   // relative objective change
  int max_iterations = 500;
};

// Maps parameter values (in the start vector's name order) to the objective
// value and its gradient.
using Objective =
    std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>;

struct MaximizeResult {
  ParameterVector params;
  double value = 0.0;
  std::vector<double> gradient;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;  // gradient | objective-change | max-iterations | line-search
};

// Quasi-Newton (BFGS) ascent with backtracking line search; accepted steps
// never decrease the objective. Converges on gradient norm or relative
// objective change; a line-search failure returns the best point with
// converged = false.
MaximizeResult maximize(const Objective& objective, const ParameterVector& start,
                        const MaximizeSettings& settings = {});

struct SquareMatrix {
  int n = 0;
  std::vector<double> a;  // row-major

  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
};

// Negative inverse of the numerical Hessian (central differences of the
// analytic gradient, step 1e-4 * max(1, |theta|), symmetrized before
// inversion). Throws EstimationError naming the most collinear parameter
// pair when the Hessian is not invertible.
SquareMatrix covariance(const Objective& objective, const ParameterVector& at);

// Equal-shares baseline: sum over situations of -ln(available alternatives).
double null_loglik(const ChoiceDataset& ds);

struct EstimationResult {
  ModelKind kind = ModelKind::RUM;
  ParameterVector params;
  std::vector<double> std_errors;
  std::vector<double> t_stats;
  std::vector<std::string> significance;  // "**" 5%, "*" 10%, "" otherwise
  double loglik_final = 0.0;
  double loglik_null = 0.0;
  double rho_squared = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  long underflow_clamps = 0;

  // Reproducibility metadata.
  int draws_used = 0;
  std::uint64_t seed = 0;
  std::uint64_t spec_hash_value = 0;
  MaximizeSettings settings;
  ModelSpec spec;
  AttributeSchema schema;

  // Key-value text report with the coefficient table.
  std::string to_report() const;
  // Structured JSON; `extra` lands in the "run" object (config hash etc.).
  std::string to_json_text(
      const std::map<std::string, std::string>& extra = {}) const;
  static EstimationResult from_json_text(const std::string& text);
};

struct EstimateOptions {
  int draws = 500;
  std::uint64_t seed = 0;
  MaximizeSettings settings;
  Exec exec = Exec::Parallel;
  bool compute_covariance = true;  // fold fits skip it
};

// Full estimation: start values (zeros; mixed logit warm-starts from the
// converged fixed-coefficient fit with sds at 0.1), maximization, covariance,
// fit statistics. Random-coefficient sds are reported as absolute values.
EstimationResult estimate(const ChoiceDataset& ds, const ModelSpec& spec,
                          ModelKind kind, const EstimateOptions& opt = {});

}  // namespace dcm
