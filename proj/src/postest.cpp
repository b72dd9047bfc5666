#include "dcm/postest.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dcm/design.hpp"
#include "dcm/error.hpp"
#include "dcm/io.hpp"
#include "dcm/rng.hpp"
#include "dcm/rrm.hpp"
#include "dcm/rum.hpp"

namespace dcm {

double wtp(double numerator_coef, double denominator_coef) {
  if (denominator_coef == 0.0) throw Error("wtp: zero denominator coefficient");
  return std::abs(numerator_coef / denominator_coef);
}

double model_ratio(double rrm_value, double rum_value) {
  if (rum_value == 0.0) throw Error("model_ratio: zero RUM value");
  return rrm_value / rum_value;
}

double percent_difference(double a_rrm, double a_rum) {
  if (a_rrm == 0.0) throw Error("percent_difference: zero RRM value");
  return (a_rrm - a_rum) / a_rrm * 100.0;
}

std::vector<double> Histogram::midpoints() const {
  std::vector<double> out(masses.size());
  for (size_t i = 0; i < masses.size(); ++i)
    out[i] = 0.5 * (edges[i] + edges[i + 1]);
  return out;
}

std::string Histogram::to_csv() const {
  std::string out = "bin_midpoint,mass\n";
  const auto mids = midpoints();
  for (size_t i = 0; i < masses.size(); ++i)
    out += format_double(mids[i]) + "," + format_double(masses[i]) + "\n";
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

Histogram point_mass(double value) {
  Histogram h;
  h.edges = {value, value};
  h.masses = {1.0};
  return h;
}

}  // namespace

Histogram wtp_density(double numerator, double denominator_mean,
                      double denominator_sd, int n_draws, std::uint64_t seed) {
  if (denominator_sd < 0.0) throw Error("wtp_density: negative sd");
  if (n_draws < 1000) throw Error("wtp_density: n_draws must be >= 1000");
  if (denominator_sd == 0.0) {
    if (std::abs(denominator_mean) < 1e-8)
      throw Error("wtp_density: zero denominator");
    return point_mass(std::abs(numerator / denominator_mean));
  }

  Rng rng(seed, "wtp");
  std::vector<double> values;
  values.reserve(n_draws);
  long truncated = 0;
  for (int i = 0; i < n_draws; ++i) {
    const double d = rng.normal(denominator_mean, denominator_sd);
    if (std::abs(d) < 1e-8) {
      ++truncated;
      continue;
    }
    values.push_back(std::abs(numerator / d));
  }
  if (values.empty()) throw Error("wtp_density: every draw was truncated");

  std::sort(values.begin(), values.end());
  const double lo = quantile_sorted(values, 0.005);
  const double hi = quantile_sorted(values, 0.995);
  Histogram h;
  h.truncated_fraction = static_cast<double>(truncated) / n_draws;
  if (!(hi > lo)) {
    const double v = values[values.size() / 2];
    h.edges = {v, v};
    h.masses = {1.0};
    return h;
  }

  constexpr int kBins = 100;
  h.edges.resize(kBins + 1);
  for (int b = 0; b <= kBins; ++b)
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / kBins;
  h.masses.assign(kBins, 0.0);
  long kept = 0;
  for (double v : values) {
    if (v < lo || v > hi) continue;
    int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
    b = std::clamp(b, 0, kBins - 1);
    h.masses[b] += 1.0;
    ++kept;
  }
  for (double& m : h.masses) m /= static_cast<double>(kept);
  return h;
}

SituationProbFn make_probability_fn(const ModelSpec& spec,
                                    const ParameterVector& params,
                                    const AttributeSchema& schema, ModelKind kind,
                                    const DrawMatrix* draws) {
  auto cs = std::make_shared<CompiledSpec>(CompiledSpec::build(spec, schema));
  auto theta = std::make_shared<std::vector<double>>(cs->n_params());
  for (int i = 0; i < cs->n_params(); ++i)
    (*theta)[i] = params.get(cs->param_names[i]);
  const bool mixed = spec.has_random();
  if (mixed && !draws)
    throw Error("random coefficients require a draw matrix");

  return [cs, theta, kind, mixed, draws](int index, const ChoiceSituation& s) {
    const auto row = compile_situation(*cs, s);
    std::vector<double> p(row.n_alts);
    if (kind == ModelKind::RUM) {
      if (mixed)
        kernel::mixed_probability(*cs, *theta, row,
                                  draws->block_for_situation(index), draws->R, p);
      else
        kernel::mnl_probability(*cs, *theta, row, p);
    } else {
      if (mixed)
        kernel::rrm_mixed_probability(*cs, *theta, row,
                                      draws->block_for_situation(index),
                                      draws->R, p);
      else
        kernel::rrm_probability(*cs, *theta, row, p);
    }
    return p;
  };
}

ElasticityResult direct_elasticity(const SituationProbFn& prob_fn,
                                   const ChoiceDataset& ds,
                                   const std::string& attribute, int alt_pos,
                                   Exec exec) {
  const int k = ds.schema.attribute_index(attribute);
  if (k < 0) throw SchemaError("unknown attribute '" + attribute + "'");
  if (alt_pos < 0) throw Error("alternative position must be >= 0");

  const std::size_t n = ds.situations.size();
  // Row: [sum x dP/dx, sum P, zero count, used count]
  auto fill = [&](std::size_t i, double* out) {
    const auto& s = ds.situations[i];
    if (alt_pos >= s.n_alternatives() || !s.alternatives[alt_pos].available)
      return;
    const double x = s.alternatives[alt_pos].attributes[k];
    if (x == 0.0) {
      out[2] = 1.0;
      return;
    }
    const double h = 1e-4 * std::abs(x);
    ChoiceSituation bumped = s;
    bumped.alternatives[alt_pos].attributes[k] = x + h;
    const double p_plus = prob_fn(static_cast<int>(i), bumped)[alt_pos];
    bumped.alternatives[alt_pos].attributes[k] = x - h;
    const double p_minus = prob_fn(static_cast<int>(i), bumped)[alt_pos];
    const double p0 = prob_fn(static_cast<int>(i), s)[alt_pos];
    const double dp = (p_plus - p_minus) / (2.0 * h);
    // Probability-weighted elasticity: weight P cancels the 1/P inside,
    // leaving x dP/dx in the numerator and P in the denominator.
    out[0] = x * dp;
    out[1] = p0;
    out[3] = 1.0;
  };

  const auto acc = map_reduce_rows(n, 4, exec, fill);
  ElasticityResult res;
  res.n_zero = static_cast<long>(acc[2]);
  res.n_used = static_cast<long>(acc[3]);
  if (res.n_used == 0)
    throw Error("elasticity undefined at zero attribute ('" + attribute + "')");
  res.value = acc[0] / acc[1];
  return res;
}

}  // namespace dcm
