#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcm/dataset.hpp"
#include "dcm/engine.hpp"
#include "dcm/model.hpp"

namespace dcm {

// Mean absolute percentage error, 100/N * sum |(Y - Yhat)/Y|. Throws when any
// actual value is zero.
double mape(std::span<const double> actual, std::span<const double> predicted);

struct FoldResult {
  int fold_index = 0;
  bool failed = false;
  std::string error;
  double train_loglik = 0.0;
  std::vector<double> observed_shares;   // test choice frequencies by position
  std::vector<double> predicted_shares;  // mean predicted probability vectors
  double fold_mape = 0.0;                // percent
};

struct ValidationSummary {
  ModelKind kind = ModelKind::RUM;
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> fold_results;
  double average_mape = 0.0;  // over succeeded folds
  int failed_folds = 0;

  // Rows fold,failed,train_loglik,obs_*,pred_*,mape_pct.
  std::string to_csv() const;
  std::string summary_line() const;
};

// The estimate-then-predict protocol: per fold, fit on the training split,
// freeze the parameters, score per-alternative market shares on the test
// split with Eq-8-style MAPE, and average across folds. A fold whose
// estimation throws is marked failed and excluded from the average.
ValidationSummary cross_validate(const ChoiceDataset& ds, const ModelSpec& spec,
                                 ModelKind kind, int folds, std::uint64_t seed,
                                 const EstimateOptions& opt = {});

}  // namespace dcm
