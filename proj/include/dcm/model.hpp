#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcm/dataset.hpp"

namespace dcm {

enum class ModelKind { RUM, RRM };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// One linear term of the utility / regret index: a coefficient on an
// attribute, optionally interacted with a case-level covariate.
struct Term {
  std::string coef;
  std::string attribute;
  std::string covariate;  // empty = plain attribute term
};

// Normal(mean, sd) random coefficient on an existing term. The mean shares
// the term's coefficient name; the spread is named "sd_<coef>".
struct RandomCoef {
  std::string coef;
  std::string sd_name() const { return "sd_" + coef; }
};

struct ModelSpec {
  std::vector<Term> terms;
  // 1-based alternative positions carrying a constant; the reference
  // position is normalized to zero and must not appear here.
  std::vector<int> constant_alts;
  int reference_alternative = 1;  // 1-based position
  std::vector<RandomCoef> random_coefficients;

  bool has_random() const { return !random_coefficients.empty(); }
  int n_random() const { return static_cast<int>(random_coefficients.size()); }

  // Canonical parameter ordering: term coefficients, then sd parameters,
  // then constants.
  std::vector<std::string> parameter_names() const;

  void validate(const AttributeSchema& schema) const;  // throws SchemaError
};

// Named coefficient vector in the model spec's canonical order.
struct ParameterVector {
  std::vector<std::string> names;
  std::vector<double> values;

  static ParameterVector zeros(const ModelSpec& spec);

  int size() const { return static_cast<int>(values.size()); }
  int index_of(const std::string& name) const;  // -1 if absent
  double get(const std::string& name) const;    // throws if absent
  void set(const std::string& name, double v);  // throws if absent
};

// Stable 64-bit hash of the model declaration + schema, embedded in result
// files so runs can be matched to their configuration.
std::uint64_t spec_hash(const ModelSpec& spec, const AttributeSchema& schema);

}  // namespace dcm
