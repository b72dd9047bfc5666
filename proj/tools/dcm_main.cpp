// dcm: command-line front end for the discrete-choice estimation toolkit.
// Subcommands: simulate | estimate | validate | analyze.
// Exit codes: 0 success, 1 input/config error, 2 non-convergence.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcm/dataset.hpp"
#include "dcm/draws.hpp"
#include "dcm/engine.hpp"
#include "dcm/error.hpp"
#include "dcm/io.hpp"
#include "dcm/model.hpp"
#include "dcm/parallel.hpp"
#include "dcm/postest.hpp"
#include "dcm/rng.hpp"
#include "dcm/synth.hpp"
#include "dcm/validate.hpp"
#include "dcm/version.hpp"

namespace fs = std::filesystem;
using dcm::ConfigError;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse number '" + s + "' in " + what);
  }
}

// "b_cost:shipping_cost,b_inc:shipping_cost*income"
std::vector<dcm::Term> parse_terms(const std::string& text) {
  std::vector<dcm::Term> terms;
  for (const auto& piece : split(text, ',')) {
    const auto p = trim(piece);
    if (p.empty()) continue;
    const auto parts = split(p, ':');
    if (parts.size() != 2)
      throw ConfigError("term '" + p + "' is not coef:attribute");
    dcm::Term t;
    t.coef = trim(parts[0]);
    const auto attr = split(parts[1], '*');
    t.attribute = trim(attr[0]);
    if (attr.size() == 2) t.covariate = trim(attr[1]);
    if (attr.size() > 2) throw ConfigError("term '" + p + "' has too many '*'");
    terms.push_back(std::move(t));
  }
  return terms;
}

// "shipping_cost:categorical=14|18|22|26,tracking:binary,income"
dcm::AttributeSchema parse_schema(const std::string& attrs,
                                  const std::string& covs) {
  dcm::AttributeSchema schema;
  for (const auto& piece : split(attrs, ',')) {
    const auto p = trim(piece);
    if (p.empty()) continue;
    const auto parts = split(p, ':');
    dcm::AttributeSpec spec;
    spec.name = trim(parts[0]);
    if (parts.size() == 1) {
      spec.kind = dcm::AttrKind::Continuous;
    } else if (parts.size() == 2) {
      const auto kind = split(parts[1], '=');
      const auto k = trim(kind[0]);
      if (k == "continuous") {
        spec.kind = dcm::AttrKind::Continuous;
      } else if (k == "binary") {
        spec.kind = dcm::AttrKind::Binary;
      } else if (k == "categorical") {
        spec.kind = dcm::AttrKind::Categorical;
        if (kind.size() != 2)
          throw ConfigError("categorical attribute '" + spec.name +
                            "' needs levels: categorical=a|b|c");
        for (const auto& l : split(kind[1], '|'))
          spec.levels.push_back(parse_number(trim(l), "levels of " + spec.name));
      } else {
        throw ConfigError("unknown attribute kind '" + k + "'");
      }
    } else {
      throw ConfigError("cannot parse attribute '" + p + "'");
    }
    schema.attributes.push_back(std::move(spec));
  }
  for (const auto& c : split(covs, ','))
    if (!trim(c).empty()) schema.covariates.push_back(trim(c));
  schema.validate();
  return schema;
}

std::vector<int> parse_constants(const std::string& text, int n_alts,
                                 int reference) {
  std::vector<int> out;
  const auto t = trim(text);
  if (t.empty() || t == "none") return out;
  if (t == "all") {
    for (int j = 1; j <= n_alts; ++j)
      if (j != reference) out.push_back(j);
    return out;
  }
  for (const auto& piece : split(t, ','))
    if (!trim(piece).empty())
      out.push_back(static_cast<int>(parse_number(trim(piece), "constants")));
  return out;
}

std::map<std::string, double> parse_assignments(const std::string& text,
                                                const std::string& what) {
  std::map<std::string, double> out;
  for (const auto& piece : split(text, ',')) {
    const auto p = trim(piece);
    if (p.empty()) continue;
    const auto kv = split(p, '=');
    if (kv.size() != 2) throw ConfigError(what + " entry '" + p + "' is not name=value");
    out[trim(kv[0])] = parse_number(trim(kv[1]), what);
  }
  return out;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

// key=value lines become "--key value" pairs, inserted before the explicit
// flags so that flags win under the take-last policy.
std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line '" + t + "' is not key=value");
    const auto key = trim(t.substr(0, eq));
    if (key == "config") throw ConfigError("config files cannot nest");
    out.push_back("--" + key);
    out.push_back(strip_quotes(trim(t.substr(eq + 1))));
  }
  return out;
}

struct OutputContext {
  fs::path dir;
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string header() const {
    return "dcmkit " + std::string(dcm::kVersion) + " config=" + config_hash +
           " seed=" + std::to_string(seed);
  }
  std::string header_line() const { return "# " + header() + "\n"; }

  void write_text(const std::string& name, const std::string& body) const {
    fs::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw dcm::Error("cannot write '" + (dir / name).string() + "'");
    out << header_line() << body;
    if (!out) throw dcm::Error("write to '" + (dir / name).string() + "' failed");
  }
};

fs::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("DCM_OUT_DIR"); env && *env) return env;
  return ".";
}

// Model declaration shared by simulate / estimate / validate.
struct ModelOptions {
  std::string terms = "b_cost:shipping_cost,b_time:delivery_time";
  std::string random;
  std::string constants = "none";
  int reference = 1;
  std::string model = "rum";

  void attach(CLI::App* cmd) {
    cmd->add_option("--terms", terms, "coef:attribute[*covariate] list");
    cmd->add_option("--random", random, "coefficients with Normal spreads");
    cmd->add_option("--constants", constants,
                    "alternative positions with constants (list | all | none)");
    cmd->add_option("--reference", reference, "reference alternative position");
    cmd->add_option("--model", model, "rum | rrm");
  }

  dcm::ModelSpec spec(int n_alts) const {
    dcm::ModelSpec s;
    s.terms = parse_terms(terms);
    s.reference_alternative = reference;
    s.constant_alts = parse_constants(constants, n_alts, reference);
    for (const auto& r : split(random, ','))
      if (!trim(r).empty()) s.random_coefficients.push_back({trim(r)});
    return s;
  }

  std::string canonical() const {
    return "terms=" + terms + ";random=" + random + ";constants=" + constants +
           ";reference=" + std::to_string(reference) + ";model=" + model;
  }
};

struct SchemaOptions {
  std::string attributes;
  std::string covariates;

  void attach(CLI::App* cmd) {
    cmd->add_option("--attributes", attributes,
                    "name[:kind[=levels]] list; empty = courier grid schema");
    cmd->add_option("--covariates", covariates, "case-level column names");
  }

  dcm::AttributeSchema schema() const {
    if (trim(attributes).empty() && trim(covariates).empty())
      return dcm::DesignGrid::courier_grid().schema();
    return parse_schema(attributes, covariates);
  }

  std::string canonical() const {
    return "attributes=" + attributes + ";covariates=" + covariates;
  }
};

int max_alts(const dcm::ChoiceDataset& ds) {
  int j = 0;
  for (const auto& s : ds.situations) j = std::max(j, s.n_alternatives());
  return j;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& out_flag, std::uint64_t seed, int n,
                 int alts, int per_respondent, const ModelOptions& model,
                 const std::string& truth_text, const std::string& name) {
  const auto spec = model.spec(alts);
  const auto kind = dcm::model_kind_from_string(model.model);

  dcm::ParameterVector truth = dcm::ParameterVector::zeros(spec);
  const auto assignments = parse_assignments(truth_text, "truth");
  std::set<std::string> given;
  for (const auto& [k, v] : assignments) {
    truth.set(k, v);  // throws on unknown names
    given.insert(k);
  }
  for (const auto& nm : truth.names)
    if (!given.count(nm))
      throw ConfigError("truth is missing a value for '" + nm + "'");

  const auto design = dcm::generate_design(dcm::DesignGrid::courier_grid(), n,
                                           alts, seed, per_respondent);
  const auto ds = dcm::simulate_choices(design, spec, truth, kind, seed);

  OutputContext ctx;
  ctx.dir = resolve_out_dir(out_flag);
  ctx.seed = seed;
  ctx.config_hash = hash_hex(dcm::fnv1a64(
      "simulate;n=" + std::to_string(n) + ";alts=" + std::to_string(alts) +
      ";per_respondent=" + std::to_string(per_respondent) + ";" +
      model.canonical() + ";truth=" + truth_text + ";seed=" + std::to_string(seed)));

  fs::create_directories(ctx.dir);
  dcm::write_csv(ds, (ctx.dir / (name + ".csv")).string(), ctx.header());
  dcm::write_truth_sidecar((ctx.dir / (name + "_truth.json")).string(), truth,
                           kind, seed, n, alts);
  std::cout << "wrote " << (ctx.dir / (name + ".csv")).string() << " ("
            << ds.n_situations() << " situations)\n";
  return 0;
}

// ---------------------------------------------------------------- estimate

int cmd_estimate(const std::string& out_flag, std::uint64_t seed,
                 const std::string& dataset, const SchemaOptions& schema_opt,
                 const ModelOptions& model, int draws, int max_iters,
                 const std::string& name_flag, bool dump_draws) {
  const auto schema = schema_opt.schema();
  const auto ds = dcm::load_csv(dataset, schema);
  const auto spec = model.spec(max_alts(ds));
  const auto kind = dcm::model_kind_from_string(model.model);

  dcm::EstimateOptions opt;
  opt.draws = draws;
  opt.seed = seed;
  opt.settings.max_iterations = max_iters;
  const auto result = dcm::estimate(ds, spec, kind, opt);

  OutputContext ctx;
  ctx.dir = resolve_out_dir(out_flag);
  ctx.seed = seed;
  ctx.config_hash = hash_hex(dcm::fnv1a64(
      "estimate;dataset=" + dataset + ";" + schema_opt.canonical() + ";" +
      model.canonical() + ";draws=" + std::to_string(draws) +
      ";max_iters=" + std::to_string(max_iters) + ";seed=" + std::to_string(seed)));

  const std::string name =
      name_flag.empty() ? model.model + "_estimate" : name_flag;
  ctx.write_text(name + ".txt", result.to_report());
  fs::create_directories(ctx.dir);
  {
    std::ofstream out(ctx.dir / (name + ".json"));
    out << result.to_json_text({{"config_hash", ctx.config_hash}});
  }
  if (dump_draws && spec.has_random()) {
    const auto dm = dcm::DrawMatrix::halton(ds, draws, spec.n_random());
    dm.write_binary((ctx.dir / (name + "_draws.bin")).string());
  }

  std::cout << (result.converged ? "converged" : "did not converge")
            << ": loglik " << dcm::format_double(result.loglik_final)
            << ", rho^2 " << dcm::format_double(result.rho_squared) << "\n";
  return result.converged ? 0 : 2;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& out_flag, std::uint64_t seed,
                 const std::string& dataset, const SchemaOptions& schema_opt,
                 const ModelOptions& model, int draws, int folds,
                 bool by_respondent, int max_iters) {
  const auto schema = schema_opt.schema();
  const auto ds = dcm::load_csv(dataset, schema);
  const auto spec = model.spec(max_alts(ds));
  if (by_respondent) {
    // The protocol splits situations; respondent-level splitting is the
    // optional variant, exercised through split_kfold directly.
    dcm::split_kfold(ds, folds, seed, true);
  }

  std::vector<dcm::ModelKind> kinds;
  if (model.model == "both") {
    kinds = {dcm::ModelKind::RUM, dcm::ModelKind::RRM};
  } else {
    kinds = {dcm::model_kind_from_string(model.model)};
  }

  OutputContext ctx;
  ctx.dir = resolve_out_dir(out_flag);
  ctx.seed = seed;
  ctx.config_hash = hash_hex(dcm::fnv1a64(
      "validate;dataset=" + dataset + ";" + schema_opt.canonical() + ";" +
      model.canonical() + ";draws=" + std::to_string(draws) +
      ";folds=" + std::to_string(folds) + ";seed=" + std::to_string(seed)));

  dcm::EstimateOptions opt;
  opt.draws = draws;
  opt.seed = seed;
  opt.settings.max_iterations = max_iters;

  for (const auto kind : kinds) {
    const auto summary = dcm::cross_validate(ds, spec, kind, folds, seed, opt);
    const std::string base = "validation_" + to_string(kind);
    ctx.write_text(base + ".csv", summary.to_csv());
    ctx.write_text(base + "_summary.txt", summary.summary_line() + "\n");
    std::cout << summary.summary_line() << "\n";
    if (summary.failed_folds > 0)
      std::cerr << "warning: " << summary.failed_folds << " fold(s) failed\n";
  }
  return 0;
}

// ----------------------------------------------------------------- analyze

struct WtpRow {
  std::string coef;
  double value = 0.0;
  bool has_density = false;
};

std::vector<WtpRow> wtp_rows(const dcm::EstimationResult& res,
                             const std::string& convention,
                             const std::string& time_coef,
                             const std::string& cost_coef) {
  const bool time_over_attr = convention == "time-over-attribute";
  const std::string& numerator = time_over_attr ? time_coef : std::string();
  std::vector<WtpRow> rows;
  std::set<std::string> random_names;
  for (const auto& r : res.spec.random_coefficients) random_names.insert(r.coef);

  for (const auto& term : res.spec.terms) {
    const std::string& denom_name = time_over_attr ? term.coef : cost_coef;
    const std::string& numer_name = time_over_attr ? numerator : term.coef;
    if (time_over_attr && term.coef == time_coef) continue;
    if (!time_over_attr && term.coef == cost_coef) continue;
    WtpRow row;
    row.coef = term.coef;
    row.value = dcm::wtp(res.params.get(numer_name), res.params.get(denom_name));
    row.has_density = random_names.count(denom_name) > 0;
    rows.push_back(row);
  }
  return rows;
}

int cmd_analyze(const std::string& out_flag, std::uint64_t seed,
                const std::string& rum_path, const std::string& rrm_path,
                const std::string& dataset, const std::string& convention,
                const std::string& time_coef, const std::string& cost_coef,
                int density_draws) {
  if (rum_path.empty() && rrm_path.empty())
    throw ConfigError("analyze needs --rum-result and/or --rrm-result");
  if (convention != "time-over-attribute" && convention != "attribute-over-cost")
    throw ConfigError("unknown wtp convention '" + convention + "'");

  auto load = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dcm::Error("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return dcm::EstimationResult::from_json_text(text);
  };

  std::optional<dcm::EstimationResult> rum_res, rrm_res;
  if (!rum_path.empty()) rum_res = load(rum_path);
  if (!rrm_path.empty()) rrm_res = load(rrm_path);
  if (rum_res && rum_res->kind != dcm::ModelKind::RUM)
    throw ConfigError("--rum-result file holds a " + to_string(rum_res->kind) + " fit");
  if (rrm_res && rrm_res->kind != dcm::ModelKind::RRM)
    throw ConfigError("--rrm-result file holds a " + to_string(rrm_res->kind) + " fit");

  const bool both = rum_res && rrm_res;
  if (both) {
    for (const auto& name : rum_res->params.names)
      if (rrm_res->params.index_of(name) < 0)
        throw ConfigError("coefficient-name mismatch between models: '" + name +
                          "' missing from the RRM result");
    for (const auto& name : rrm_res->params.names)
      if (rum_res->params.index_of(name) < 0)
        throw ConfigError("coefficient-name mismatch between models: '" + name +
                          "' missing from the RUM result");
  }

  OutputContext ctx;
  ctx.dir = resolve_out_dir(out_flag);
  ctx.seed = seed;
  ctx.config_hash = hash_hex(dcm::fnv1a64(
      "analyze;rum=" + rum_path + ";rrm=" + rrm_path + ";dataset=" + dataset +
      ";convention=" + convention + ";time=" + time_coef + ";cost=" + cost_coef +
      ";density_draws=" + std::to_string(density_draws) +
      ";seed=" + std::to_string(seed)));

  // WTP table (Table-5 shape when both models are present).
  const auto& any = rum_res ? *rum_res : *rrm_res;
  {
    std::string body = "convention: " + convention + "\n";
    if (both) {
      const auto rum_rows = wtp_rows(*rum_res, convention, time_coef, cost_coef);
      const auto rrm_rows = wtp_rows(*rrm_res, convention, time_coef, cost_coef);
      body += "attribute,rum,rrm,ratio\n";
      for (size_t i = 0; i < rum_rows.size(); ++i)
        body += rum_rows[i].coef + "," + dcm::format_double(rum_rows[i].value) +
                "," + dcm::format_double(rrm_rows[i].value) + "," +
                dcm::format_double(dcm::model_ratio(rrm_rows[i].value,
                                                    rum_rows[i].value)) +
                "\n";
    } else {
      body += "attribute," + to_string(any.kind) + "\n";
      for (const auto& row : wtp_rows(any, convention, time_coef, cost_coef))
        body += row.coef + "," + dcm::format_double(row.value) + "\n";
    }
    ctx.write_text("wtp.csv", body);
  }

  // WTP densities where the denominator coefficient is random.
  for (const auto* res : {rum_res ? &*rum_res : nullptr, rrm_res ? &*rrm_res : nullptr}) {
    if (!res) continue;
    for (const auto& row : wtp_rows(*res, convention, time_coef, cost_coef)) {
      if (!row.has_density) continue;
      const bool time_over_attr = convention == "time-over-attribute";
      const std::string denom = time_over_attr ? row.coef : cost_coef;
      const std::string numer = time_over_attr ? time_coef : row.coef;
      const auto hist = dcm::wtp_density(
          res->params.get(numer), res->params.get(denom),
          res->params.get("sd_" + denom), density_draws, seed);
      std::string body =
          "truncated_fraction: " + dcm::format_double(hist.truncated_fraction) + "\n";
      body += hist.to_csv();
      ctx.write_text("wtp_density_" + to_string(res->kind) + "_" + row.coef + ".csv",
                     body);
    }
  }

  // Elasticities need the dataset the models describe.
  if (dataset.empty()) {
    std::cout << "no --dataset given; elasticity tables skipped\n";
    return 0;
  }
  const auto ds = dcm::load_csv(dataset, any.schema);
  const int J = max_alts(ds);

  struct ElastTable {
    dcm::ModelKind kind;
    // attribute -> per-alternative elasticity (NaN = undefined)
    std::vector<std::vector<double>> values;
    std::vector<std::vector<long>> zero_points;  // skipped x = 0 situations
  };
  std::vector<std::string> attr_names;
  for (const auto& a : any.schema.attributes) attr_names.push_back(a.name);

  auto compute_table = [&](const dcm::EstimationResult& res) {
    ElastTable table;
    table.kind = res.kind;
    dcm::DrawMatrix dm;
    const dcm::DrawMatrix* draws = nullptr;
    if (res.spec.has_random()) {
      dm = dcm::DrawMatrix::halton(ds, std::max(res.draws_used, 1),
                                   res.spec.n_random());
      draws = &dm;
    }
    const auto fn =
        dcm::make_probability_fn(res.spec, res.params, any.schema, res.kind, draws);
    for (const auto& attr : attr_names) {
      std::vector<double> per_alt;
      std::vector<long> zeros;
      for (int j = 0; j < J; ++j) {
        try {
          const auto e = dcm::direct_elasticity(fn, ds, attr, j);
          per_alt.push_back(e.value);
          zeros.push_back(e.n_zero);
        } catch (const dcm::Error&) {
          per_alt.push_back(std::numeric_limits<double>::quiet_NaN());
          zeros.push_back(0);
        }
      }
      table.values.push_back(std::move(per_alt));
      table.zero_points.push_back(std::move(zeros));
    }
    return table;
  };

  std::optional<ElastTable> rum_table, rrm_table;
  if (rum_res) rum_table = compute_table(*rum_res);
  if (rrm_res) rrm_table = compute_table(*rrm_res);

  auto write_table = [&](const ElastTable& t) {
    std::string body = "attribute";
    for (int j = 1; j <= J; ++j) body += ",c" + std::to_string(j);
    body += "\n";
    for (size_t a = 0; a < attr_names.size(); ++a) {
      body += attr_names[a];
      for (int j = 0; j < J; ++j) {
        const double v = t.values[a][j];
        body += "," + (std::isnan(v) ? std::string() : dcm::format_double(v));
      }
      body += "\n";
    }
    // situations skipped for a zero attribute value are flagged, not zeroed
    for (size_t a = 0; a < attr_names.size(); ++a)
      for (int j = 0; j < J; ++j)
        if (t.zero_points[a][j] > 0)
          body += "# zero-attribute points skipped: " + attr_names[a] + ",c" +
                  std::to_string(j + 1) + "," +
                  std::to_string(t.zero_points[a][j]) + "\n";
    ctx.write_text("elasticity_" + to_string(t.kind) + ".csv", body);
  };
  if (rum_table) write_table(*rum_table);
  if (rrm_table) write_table(*rrm_table);

  if (both) {
    std::string body = "attribute";
    for (int j = 1; j <= J; ++j) {
      const std::string c = "c" + std::to_string(j);
      body += "," + c + "_rum," + c + "_rrm," + c + "_pct_diff";
    }
    body += "\n";
    for (size_t a = 0; a < attr_names.size(); ++a) {
      body += attr_names[a];
      for (int j = 0; j < J; ++j) {
        const double rum_v = rum_table->values[a][j];
        const double rrm_v = rrm_table->values[a][j];
        body += "," + (std::isnan(rum_v) ? std::string() : dcm::format_double(rum_v));
        body += "," + (std::isnan(rrm_v) ? std::string() : dcm::format_double(rrm_v));
        if (std::isnan(rum_v) || std::isnan(rrm_v) || rrm_v == 0.0)
          body += ",";
        else
          body += "," + dcm::format_double(dcm::percent_difference(rrm_v, rum_v));
      }
      body += "\n";
    }
    ctx.write_text("elasticity_comparison.csv", body);
  } else {
    std::cout << "single model given; comparison tables skipped\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dcmkit: discrete-choice estimation toolkit"};
  app.set_version_flag("--version", std::string("dcm ") + dcm::kVersion);
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (0 = hardware)");

  std::string config_path;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--threads", threads, "cap worker threads (0 = hardware)");
  };

  // simulate ----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim);
  std::string sim_out, sim_truth, sim_name = "sim";
  std::uint64_t sim_seed = 0;
  int sim_n = 0, sim_alts = 4, sim_pr = 2;
  ModelOptions sim_model;
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--seed", sim_seed, "run seed")->required();
  sim->add_option("--n", sim_n, "number of choice situations")->required();
  sim->add_option("--alts", sim_alts, "alternatives per situation");
  sim->add_option("--per-respondent", sim_pr, "situations per respondent");
  sim->add_option("--truth", sim_truth, "name=value truth coefficients")->required();
  sim->add_option("--name", sim_name, "output file stem");
  sim_model.attach(sim);

  // estimate ----------------------------------------------------------------
  auto* est = app.add_subcommand("estimate", "fit a model to a dataset");
  add_common(est);
  std::string est_out, est_dataset, est_name;
  std::uint64_t est_seed = 0;
  int est_draws = 500, est_max_iters = 500;
  bool est_dump_draws = false;
  SchemaOptions est_schema;
  ModelOptions est_model;
  est->add_option("--out", est_out, "output directory");
  est->add_option("--seed", est_seed, "run seed (recorded in outputs)");
  est->add_option("--dataset", est_dataset, "input CSV")->required();
  est->add_option("--draws", est_draws, "Halton draws for random coefficients");
  est->add_option("--max-iters", est_max_iters, "optimizer iteration cap");
  est->add_option("--name", est_name, "output file stem");
  est->add_flag("--dump-draws", est_dump_draws, "write the draw matrix sidecar");
  est_schema.attach(est);
  est_model.attach(est);

  // validate ----------------------------------------------------------------
  auto* val = app.add_subcommand("validate", "k-fold estimate-then-predict MAPE");
  add_common(val);
  std::string val_out, val_dataset;
  std::uint64_t val_seed = 0;
  int val_draws = 500, val_folds = 5, val_max_iters = 500;
  bool val_by_respondent = false;
  SchemaOptions val_schema;
  ModelOptions val_model;
  val_model.model = "both";
  val->add_option("--out", val_out, "output directory");
  val->add_option("--seed", val_seed, "run seed")->required();
  val->add_option("--dataset", val_dataset, "input CSV")->required();
  val->add_option("--draws", val_draws, "Halton draws for random coefficients");
  val->add_option("--folds", val_folds, "number of folds");
  val->add_option("--max-iters", val_max_iters, "optimizer iteration cap");
  val->add_flag("--by-respondent", val_by_respondent,
                "check respondent-level splitting too");
  val_schema.attach(val);
  val_model.attach(val);

  // analyze -----------------------------------------------------------------
  auto* ana = app.add_subcommand("analyze", "WTP, densities, elasticities");
  add_common(ana);
  std::string ana_out, ana_rum, ana_rrm, ana_dataset;
  std::string ana_convention = "time-over-attribute";
  std::string ana_time = "b_time", ana_cost = "b_cost";
  std::uint64_t ana_seed = 0;
  int ana_density_draws = 100000;
  ana->add_option("--out", ana_out, "output directory");
  ana->add_option("--seed", ana_seed, "run seed")->required();
  ana->add_option("--rum-result", ana_rum, "estimate JSON for the RUM fit");
  ana->add_option("--rrm-result", ana_rrm, "estimate JSON for the RRM fit");
  ana->add_option("--dataset", ana_dataset, "dataset for elasticities");
  ana->add_option("--wtp-convention", ana_convention,
                  "time-over-attribute | attribute-over-cost");
  ana->add_option("--time-coef", ana_time, "delivery-time coefficient name");
  ana->add_option("--cost-coef", ana_cost, "shipping-cost coefficient name");
  ana->add_option("--density-draws", ana_density_draws, "draws per WTP density");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // Expand --config key=value files into leading flags so explicit flags
    // win under the take-last policy.
    const std::vector<std::string> subcommands = {"simulate", "estimate",
                                                  "validate", "analyze"};
    size_t sub_at = args.size();
    for (size_t i = 0; i < args.size(); ++i)
      if (std::find(subcommands.begin(), subcommands.end(), args[i]) !=
          subcommands.end()) {
        sub_at = i;
        break;
      }
    std::string cfg;
    for (size_t i = sub_at; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) cfg = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) cfg = args[i].substr(9);
    }
    if (!cfg.empty()) {
      const auto extra = config_file_args(cfg);
      args.insert(args.begin() + sub_at + 1, extra.begin(), extra.end());
    }
  } catch (const dcm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  dcm::set_thread_cap(threads);
  try {
    if (sim->parsed())
      return cmd_simulate(sim_out, sim_seed, sim_n, sim_alts, sim_pr, sim_model,
                          sim_truth, sim_name);
    if (est->parsed())
      return cmd_estimate(est_out, est_seed, est_dataset, est_schema, est_model,
                          est_draws, est_max_iters, est_name, est_dump_draws);
    if (val->parsed())
      return cmd_validate(val_out, val_seed, val_dataset, val_schema, val_model,
                          val_draws, val_folds, val_by_respondent, val_max_iters);
    if (ana->parsed())
      return cmd_analyze(ana_out, ana_seed, ana_rum, ana_rrm, ana_dataset,
                         ana_convention, ana_time, ana_cost, ana_density_draws);
  } catch (const dcm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
