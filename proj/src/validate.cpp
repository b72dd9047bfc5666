#include "dcm/validate.hpp"

#include <algorithm>
#include <cmath>

#include "dcm/error.hpp"
#include "dcm/io.hpp"
#include "dcm/postest.hpp"

namespace dcm {

double mape(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size())
    throw Error("mape: vectors differ in length");
  if (actual.empty()) throw Error("mape: empty vectors");
  double sum = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0)
      throw Error("mape: actual value at position " + std::to_string(i) +
                  " is zero");
    sum += std::abs((actual[i] - predicted[i]) / actual[i]);
  }
  return 100.0 * sum / static_cast<double>(actual.size());
}

namespace {

int max_alternatives(const ChoiceDataset& ds) {
  int j = 0;
  for (const auto& s : ds.situations) j = std::max(j, s.n_alternatives());
  return j;
}

}  // namespace

ValidationSummary cross_validate(const ChoiceDataset& ds, const ModelSpec& spec,
                                 ModelKind kind, int folds, std::uint64_t seed,
                                 const EstimateOptions& opt) {
  {
    const auto report = validate_dataset(ds);
    for (const auto& f : report.findings)
      if (f.severity == Severity::Error) throw IntegrityError(f.message);
  }
  const auto splits = split_kfold(ds, folds, seed);

  ValidationSummary summary;
  summary.kind = kind;
  summary.folds = folds;
  summary.seed = seed;

  EstimateOptions fold_opt = opt;
  fold_opt.compute_covariance = false;  // fold fits only need point estimates

  double mape_sum = 0.0;
  int succeeded = 0;
  for (int f = 0; f < folds; ++f) {
    const auto& train = splits[f].train;
    const auto& test = splits[f].test;
    FoldResult fr;
    fr.fold_index = f;

    EstimationResult est;
    try {
      est = estimate(train, spec, kind, fold_opt);
    } catch (const Error& e) {
      fr.failed = true;
      fr.error = e.what();
      summary.fold_results.push_back(std::move(fr));
      ++summary.failed_folds;
      continue;
    }
    fr.train_loglik = est.loglik_final;

    DrawMatrix dm;
    const DrawMatrix* draws = nullptr;
    if (spec.has_random()) {
      dm = DrawMatrix::halton(test, opt.draws, spec.n_random());
      draws = &dm;
    }
    const auto prob_fn = make_probability_fn(spec, est.params, ds.schema, kind, draws);

    const int J = max_alternatives(test);
    std::vector<double> observed(J, 0.0), predicted(J, 0.0);
    for (int i = 0; i < test.n_situations(); ++i) {
      const auto& s = test.situations[i];
      observed[s.chosen] += 1.0;
      const auto p = prob_fn(i, s);
      for (size_t j = 0; j < p.size(); ++j) predicted[j] += p[j];
    }
    const double inv_n = 1.0 / test.n_situations();
    for (double& v : observed) v *= inv_n;
    for (double& v : predicted) v *= inv_n;
    fr.observed_shares = observed;
    fr.predicted_shares = predicted;

    try {
      fr.fold_mape = mape(observed, predicted);
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }

    mape_sum += fr.fold_mape;
    ++succeeded;
    summary.fold_results.push_back(std::move(fr));
  }

  summary.average_mape = succeeded > 0 ? mape_sum / succeeded : 0.0;
  return summary;
}

std::string ValidationSummary::to_csv() const {
  size_t J = 0;
  for (const auto& fr : fold_results) J = std::max(J, fr.observed_shares.size());
  std::string out = "fold,failed,train_loglik";
  for (size_t j = 1; j <= J; ++j) out += ",obs_c" + std::to_string(j);
  for (size_t j = 1; j <= J; ++j) out += ",pred_c" + std::to_string(j);
  out += ",mape_pct\n";
  for (const auto& fr : fold_results) {
    out += std::to_string(fr.fold_index);
    out += fr.failed ? ",1," : ",0,";
    out += fr.failed ? "" : format_double(fr.train_loglik);
    for (size_t j = 0; j < J; ++j)
      out += "," + (j < fr.observed_shares.size() && !fr.failed
                        ? format_double(fr.observed_shares[j])
                        : "");
    for (size_t j = 0; j < J; ++j)
      out += "," + (j < fr.predicted_shares.size() && !fr.failed
                        ? format_double(fr.predicted_shares[j])
                        : "");
    out += "," + (fr.failed ? "" : format_double(fr.fold_mape));
    out += "\n";
  }
  return out;
}

std::string ValidationSummary::summary_line() const {
  return "model=" + to_string(kind) + " folds=" + std::to_string(folds) +
         " failed=" + std::to_string(failed_folds) +
         " average_mape_pct=" + format_double(average_mape);
}

}  // namespace dcm
