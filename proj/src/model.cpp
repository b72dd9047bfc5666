#include "dcm/model.hpp"

#include <algorithm>
#include <set>

#include "dcm/error.hpp"
#include "dcm/io.hpp"
#include "dcm/rng.hpp"

namespace dcm {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::RUM ? "rum" : "rrm";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "rum" || s == "RUM" || s == "mnl") return ModelKind::RUM;
  if (s == "rrm" || s == "RRM") return ModelKind::RRM;
  throw ConfigError("unknown model kind '" + s + "' (expected rum or rrm)");
}

std::vector<std::string> ModelSpec::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& t : terms) names.push_back(t.coef);
  for (const auto& r : random_coefficients) names.push_back(r.sd_name());
  for (int alt : constant_alts) names.push_back("asc_" + std::to_string(alt));
  return names;
}

void ModelSpec::validate(const AttributeSchema& schema) const {
  if (terms.empty() && constant_alts.empty())
    throw SchemaError("model has no terms and no constants");
  std::set<std::string> coef_names;
  for (const auto& t : terms) {
    if (t.coef.empty()) throw SchemaError("term with empty coefficient name");
    if (!coef_names.insert(t.coef).second)
      throw SchemaError("duplicate coefficient '" + t.coef + "'");
    if (schema.attribute_index(t.attribute) < 0)
      throw SchemaError("unknown attribute '" + t.attribute + "' in term '" +
                        t.coef + "'");
    if (!t.covariate.empty() && schema.covariate_index(t.covariate) < 0)
      throw SchemaError("unknown covariate '" + t.covariate + "' in term '" +
                        t.coef + "'");
  }
  for (const auto& r : random_coefficients) {
    const bool found = std::any_of(terms.begin(), terms.end(),
                                   [&](const Term& t) { return t.coef == r.coef; });
    if (!found)
      throw SchemaError("random coefficient '" + r.coef +
                        "' does not match any term");
    if (!coef_names.insert(r.sd_name()).second)
      throw SchemaError("duplicate coefficient '" + r.sd_name() + "'");
  }
  std::set<int> asc_seen;
  for (int alt : constant_alts) {
    if (alt < 1) throw SchemaError("constant position must be >= 1");
    if (alt == reference_alternative)
      throw SchemaError("constant on the reference alternative (position " +
                        std::to_string(alt) + ")");
    if (!asc_seen.insert(alt).second)
      throw SchemaError("duplicate constant position " + std::to_string(alt));
  }
  if (reference_alternative < 1)
    throw SchemaError("reference alternative position must be >= 1");
}

ParameterVector ParameterVector::zeros(const ModelSpec& spec) {
  ParameterVector pv;
  pv.names = spec.parameter_names();
  pv.values.assign(pv.names.size(), 0.0);
  return pv;
}

int ParameterVector::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

double ParameterVector::get(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw Error("unknown parameter '" + name + "'");
  return values[i];
}

void ParameterVector::set(const std::string& name, double v) {
  const int i = index_of(name);
  if (i < 0) throw Error("unknown parameter '" + name + "'");
  values[i] = v;
}

std::uint64_t spec_hash(const ModelSpec& spec, const AttributeSchema& schema) {
  std::string s;
  for (const auto& t : spec.terms)
    s += t.coef + ":" + t.attribute + "*" + t.covariate + ";";
  s += "|asc:";
  for (int a : spec.constant_alts) s += std::to_string(a) + ",";
  s += "|ref:" + std::to_string(spec.reference_alternative);
  s += "|rand:";
  for (const auto& r : spec.random_coefficients) s += r.coef + ",";
  s += "|attrs:";
  for (const auto& a : schema.attributes) {
    s += a.name + "/" + std::to_string(static_cast<int>(a.kind));
    for (double l : a.levels) s += ":" + format_double(l);
    s += ";";
  }
  s += "|covs:";
  for (const auto& c : schema.covariates) s += c + ",";
  return fnv1a64(s);
}

}  // namespace dcm
