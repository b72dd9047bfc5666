#include "dcm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "dcm/design.hpp"
#include "dcm/error.hpp"
#include "dcm/rng.hpp"
#include "dcm/rrm.hpp"
#include "dcm/rum.hpp"
#include "dcm/version.hpp"
#include "json.hpp"

namespace dcm {

AttributeSchema DesignGrid::schema() const {
  AttributeSchema schema;
  for (const auto& a : attributes) {
    if (a.coding == GridCoding::Linear) {
      AttributeSpec spec;
      spec.name = a.name;
      spec.kind = a.kind;
      if (a.kind == AttrKind::Categorical) spec.levels = a.levels;
      schema.attributes.push_back(std::move(spec));
    } else {
      if (a.level_names.size() != a.levels.size())
        throw SchemaError("indicator attribute '" + a.name +
                          "' needs one name per level");
      for (size_t l = 1; l < a.levels.size(); ++l) {
        AttributeSpec spec;
        spec.name = a.name + "_" + a.level_names[l];
        spec.kind = AttrKind::Binary;
        schema.attributes.push_back(std::move(spec));
      }
    }
  }
  schema.validate();
  return schema;
}

DesignGrid DesignGrid::courier_grid() {
  DesignGrid grid;
  grid.attributes = {
      {"shipping_cost", {14, 18, 22, 26}, AttrKind::Categorical, GridCoding::Linear, {}},
      {"delivery_time", {1.5, 3, 5, 24, 72}, AttrKind::Categorical, GridCoding::Linear, {}},
      {"reputation", {0, 1, 2}, AttrKind::Categorical, GridCoding::Linear, {}},
      {"tracking", {0, 1}, AttrKind::Binary, GridCoding::Linear, {}},
      {"e_notification", {0, 1}, AttrKind::Binary, GridCoding::Linear, {}},
      {"p_time_window", {0, 1}, AttrKind::Binary, GridCoding::Linear, {}},
      {"p_location", {0, 1, 2}, AttrKind::Categorical, GridCoding::Indicators,
       {"home", "other", "pickup"}},
      {"payment_cash", {0, 1}, AttrKind::Binary, GridCoding::Linear, {}},
      {"tip", {0, 1, 2, 3}, AttrKind::Categorical, GridCoding::Linear, {}},
  };
  static constexpr int expected_levels[] = {4, 5, 3, 2, 2, 2, 3, 2, 4};
  for (size_t i = 0; i < grid.attributes.size(); ++i)
    if (static_cast<int>(grid.attributes[i].levels.size()) != expected_levels[i])
      throw SchemaError("courier grid level counts are off");
  return grid;
}

namespace {

void encode(const DesignGrid& grid, const std::vector<double>& logical,
            std::vector<double>* out) {
  out->clear();
  for (size_t a = 0; a < grid.attributes.size(); ++a) {
    const auto& attr = grid.attributes[a];
    if (attr.coding == GridCoding::Linear) {
      out->push_back(logical[a]);
    } else {
      for (size_t l = 1; l < attr.levels.size(); ++l)
        out->push_back(logical[a] == attr.levels[l] ? 1.0 : 0.0);
    }
  }
}

std::vector<double> restricted(const std::vector<double>& levels, double bound,
                               bool at_most) {
  std::vector<double> out;
  for (double l : levels)
    if (at_most ? l <= bound : l >= bound) out.push_back(l);
  return out;
}

}  // namespace

ChoiceDataset generate_design(const DesignGrid& grid, int n_situations,
                              int n_alternatives, std::uint64_t seed,
                              int situations_per_respondent) {
  if (n_situations < 1) throw Error("n_situations must be >= 1");
  if (n_alternatives < 2) throw Error("n_alternatives must be >= 2");
  if (situations_per_respondent < 1)
    throw Error("situations_per_respondent must be >= 1");

  int cost_idx = -1, time_idx = -1;
  for (int a = 0; a < grid.n_attributes(); ++a) {
    if (grid.attributes[a].name == "shipping_cost") cost_idx = a;
    if (grid.attributes[a].name == "delivery_time") time_idx = a;
  }
  const bool courier_constraint =
      n_alternatives == 4 && cost_idx >= 0 && time_idx >= 0;

  ChoiceDataset ds;
  ds.schema = grid.schema();
  ds.situations.reserve(n_situations);

  const int A = grid.n_attributes();
  std::vector<std::vector<double>> logical(n_alternatives,
                                           std::vector<double>(A));
  for (int i = 0; i < n_situations; ++i) {
    Rng rng(seed, "design", static_cast<std::uint64_t>(i));
    for (int j = 0; j < n_alternatives; ++j)
      for (int a = 0; a < A; ++a) {
        const auto& levels = grid.attributes[a].levels;
        logical[j][a] = levels[rng.below(levels.size())];
      }
    if (courier_constraint) {
      double min_cost = logical[0][cost_idx], max_time = logical[0][time_idx];
      for (int j = 1; j < 3; ++j) {
        min_cost = std::min(min_cost, logical[j][cost_idx]);
        max_time = std::max(max_time, logical[j][time_idx]);
      }
      const auto costs = restricted(grid.attributes[cost_idx].levels, min_cost, true);
      const auto times = restricted(grid.attributes[time_idx].levels, max_time, false);
      logical[3][cost_idx] = costs[rng.below(costs.size())];
      logical[3][time_idx] = times[rng.below(times.size())];
    }

    ChoiceSituation s;
    s.situation_id = "s" + std::to_string(i);
    s.respondent_id = "r" + std::to_string(i / situations_per_respondent);
    for (int j = 0; j < n_alternatives; ++j) {
      AlternativeRecord alt;
      alt.alt_id = "c" + std::to_string(j + 1);
      encode(grid, logical[j], &alt.attributes);
      s.alternatives.push_back(std::move(alt));
    }
    ds.situations.push_back(std::move(s));
  }
  return ds;
}

ChoiceDataset simulate_choices(const ChoiceDataset& design, const ModelSpec& spec,
                               const ParameterVector& truth, ModelKind kind,
                               std::uint64_t seed) {
  if (kind == ModelKind::RRM && spec.has_random())
    throw Error("random-coefficient RRM simulation is unsupported");

  const CompiledData data = compile(spec, design);
  std::vector<double> theta(data.cs.n_params());
  for (int i = 0; i < data.cs.n_params(); ++i)
    theta[i] = truth.get(data.cs.param_names[i]);

  // One coefficient realization per respondent (order of first appearance).
  std::unordered_map<std::string, int> respondent_index;
  respondent_index.reserve(design.situations.size());

  ChoiceDataset out = design;
  std::vector<double> theta_eff = theta;
  std::vector<double> p;
  for (int i = 0; i < design.n_situations(); ++i) {
    const auto& row = data.rows[i];
    theta_eff = theta;
    if (spec.has_random()) {
      const auto& rid = design.situations[i].respondent_id;
      const int r = rid.empty()
                        ? i
                        : respondent_index.try_emplace(rid, static_cast<int>(respondent_index.size()))
                              .first->second;
      Rng coef_rng(seed, "coef", static_cast<std::uint64_t>(r));
      for (const auto& slot : data.cs.terms) {
        if (slot.sd_param < 0) continue;
        const double z = coef_rng.normal();
        theta_eff[slot.param] = theta[slot.param] + std::abs(theta[slot.sd_param]) * z;
        theta_eff[slot.sd_param] = 0.0;
      }
    }

    p.assign(row.n_alts, 0.0);
    if (kind == ModelKind::RUM)
      kernel::mnl_probability(data.cs, theta_eff, row, p);
    else
      kernel::rrm_probability(data.cs, theta_eff, row, p);

    const double u = Rng(seed, "choice", static_cast<std::uint64_t>(i)).uniform();
    double cum = 0.0;
    int chosen = -1;
    for (int j = 0; j < row.n_alts; ++j) {
      cum += p[j];
      if (u <= cum) {
        chosen = j;
        break;
      }
    }
    if (chosen < 0) {  // u landed in the last sliver of rounding
      for (int j = row.n_alts - 1; j >= 0; --j)
        if (row.avail[j]) {
          chosen = j;
          break;
        }
    }
    out.situations[i].chosen = chosen;
  }
  return out;
}

void write_truth_sidecar(const std::string& path, const ParameterVector& truth,
                         ModelKind kind, std::uint64_t seed, int n_situations,
                         int n_alternatives) {
  nlohmann::ordered_json j;
  j["tool"] = {{"name", "dcmkit"}, {"version", kVersion}};
  j["model"] = to_string(kind);
  j["seed"] = seed;
  j["n_situations"] = n_situations;
  j["n_alternatives"] = n_alternatives;
  nlohmann::ordered_json t;
  for (size_t i = 0; i < truth.names.size(); ++i) t[truth.names[i]] = truth.values[i];
  j["truth"] = t;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace dcm
