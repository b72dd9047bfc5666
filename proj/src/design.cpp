#include "dcm/design.hpp"

#include <cmath>

#include "dcm/error.hpp"

namespace dcm {

CompiledSpec CompiledSpec::build(const ModelSpec& spec,
                                 const AttributeSchema& schema) {
  spec.validate(schema);
  CompiledSpec cs;
  cs.param_names = spec.parameter_names();
  const int T = static_cast<int>(spec.terms.size());

  for (int t = 0; t < T; ++t) {
    const Term& term = spec.terms[t];
    TermSlot slot;
    slot.param = t;
    slot.attr = schema.attribute_index(term.attribute);
    slot.cov = term.covariate.empty() ? -1 : schema.covariate_index(term.covariate);
    slot.sd_param = -1;
    slot.draw_dim = -1;
    cs.terms.push_back(slot);
  }
  for (size_t r = 0; r < spec.random_coefficients.size(); ++r) {
    const auto& rc = spec.random_coefficients[r];
    for (int t = 0; t < T; ++t) {
      if (spec.terms[t].coef == rc.coef) {
        cs.terms[t].sd_param = T + static_cast<int>(r);
        cs.terms[t].draw_dim = static_cast<int>(r);
      }
    }
  }
  cs.n_random = spec.n_random();
  const int asc_base = T + cs.n_random;
  for (size_t a = 0; a < spec.constant_alts.size(); ++a)
    cs.ascs.push_back({asc_base + static_cast<int>(a), spec.constant_alts[a] - 1});
  return cs;
}

CompiledSituation compile_situation(const CompiledSpec& cs,
                                    const ChoiceSituation& s) {
  const int J = s.n_alternatives();
  const int T = cs.n_terms();
  CompiledSituation row;
  row.n_alts = J;
  row.chosen = s.chosen;
  row.avail.resize(J);
  row.x.resize(static_cast<size_t>(J) * T);
  for (int j = 0; j < J; ++j) {
    row.avail[j] = s.alternatives[j].available ? 1 : 0;
    for (int t = 0; t < T; ++t) {
      const auto& slot = cs.terms[t];
      double v = s.alternatives[j].attributes.at(slot.attr);
      if (slot.cov >= 0) v *= s.covariates.at(slot.cov);
      if (!std::isfinite(v))
        throw NumericError("non-finite design value in situation '" +
                           s.situation_id + "'");
      row.x[static_cast<size_t>(j) * T + t] = v;
    }
  }
  return row;
}

CompiledData compile(const ModelSpec& spec, const ChoiceDataset& ds) {
  CompiledData data;
  data.cs = CompiledSpec::build(spec, ds.schema);
  data.rows.reserve(ds.situations.size());
  for (const auto& s : ds.situations)
    data.rows.push_back(compile_situation(data.cs, s));
  return data;
}

}  // namespace dcm
