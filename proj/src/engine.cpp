#include "dcm/engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dcm/design.hpp"
#include "dcm/error.hpp"
#include "dcm/io.hpp"
#include "dcm/rrm.hpp"
#include "dcm/rum.hpp"
#include "dcm/version.hpp"
#include "json.hpp"

namespace dcm {

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

MaximizeResult maximize(const Objective& objective, const ParameterVector& start,
                        const MaximizeSettings& st) {
  const int n = start.size();
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(start.values.data(), n);

  auto eval = [&](const Eigen::VectorXd& v, double* f, Eigen::VectorXd* g) {
    std::vector<double> vv(v.data(), v.data() + n);
    auto [fv, gv] = objective(vv);
    *f = fv;
    *g = Eigen::Map<const Eigen::VectorXd>(gv.data(), n);
  };

  double f;
  Eigen::VectorXd g(n);
  eval(x, &f, &g);
  if (!std::isfinite(f))
    throw EstimationError("objective is not finite at the start point");

  // H approximates the inverse Hessian of the negated objective (SPD), so
  // H * g is an ascent direction.
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool first_update = true;

  MaximizeResult res;
  res.params = start;
  std::string reason;
  bool converged = false;
  int it = 0;

  while (true) {
    if (g.lpNorm<Eigen::Infinity>() < st.grad_tol) {
      converged = true;
      reason = "gradient";
      break;
    }
    if (it >= st.max_iterations) {
      reason = "max-iterations";
      break;
    }

    Eigen::VectorXd d = H * g;
    double slope = d.dot(g);
    if (!(slope > 0.0)) {  // lost positive definiteness; restart from steepest
      H.setIdentity();
      d = g;
      slope = d.dot(g);
    }

    double step = 1.0;
    double f_new = f;
    Eigen::VectorXd x_new(n), g_new(n);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      eval(x_new, &f_new, &g_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++it;
    if (!accepted) {
      reason = "line-search";
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g - g_new;  // gradient change of the negated objective
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (first_update) {
        H = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
        first_update = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H -= rho * (s * Hy.transpose() + Hy * s.transpose());
      H += rho * rho * (y.dot(Hy) + sy) * (s * s.transpose());
    }

    const bool small_change = std::abs(f_new - f) <= st.rel_obj_tol * std::max(1.0, std::abs(f_new));
    x = x_new;
    f = f_new;
    g = g_new;
    if (small_change) {
      converged = true;
      reason = "objective-change";
      break;
    }
  }

  res.params.values.assign(x.data(), x.data() + n);
  res.value = f;
  res.gradient.assign(g.data(), g.data() + n);
  res.gradient_norm = inf_norm(res.gradient);
  res.iterations = it;
  res.converged = converged;
  res.stop_reason = reason;
  return res;
}

SquareMatrix covariance(const Objective& objective, const ParameterVector& at) {
  const int n = at.size();
  Eigen::MatrixXd Hess(n, n);
  std::vector<double> theta = at.values;
  for (int i = 0; i < n; ++i) {
    const double h = 1e-4 * std::max(1.0, std::abs(theta[i]));
    const double orig = theta[i];
    theta[i] = orig + h;
    const auto g_plus = objective(theta).second;
    theta[i] = orig - h;
    const auto g_minus = objective(theta).second;
    theta[i] = orig;
    for (int j = 0; j < n; ++j) Hess(j, i) = (g_plus[j] - g_minus[j]) / (2.0 * h);
  }
  Hess = 0.5 * (Hess + Hess.transpose()).eval();

  const Eigen::MatrixXd neg_hess = -Hess;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_hess);
  const auto& lambda = es.eigenvalues();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  const double cutoff = 1e-10 * std::max(lmax, 1e-300);

  if (lambda.minCoeff() <= cutoff) {
    // Name the most collinear pair via correlations of the pseudo-inverse.
    Eigen::VectorXd inv_lambda(n);
    for (int i = 0; i < n; ++i)
      inv_lambda(i) = lambda(i) > cutoff ? 1.0 / lambda(i) : 0.0;
    const Eigen::MatrixXd P =
        es.eigenvectors() * inv_lambda.asDiagonal() * es.eigenvectors().transpose();
    int bi = 0, bj = 1;
    double best = -1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double denom = std::sqrt(std::max(P(i, i) * P(j, j), 0.0));
        const double corr = denom > 0.0 ? std::abs(P(i, j)) / denom : 0.0;
        if (corr > best) {
          best = corr;
          bi = i;
          bj = j;
        }
      }
    throw EstimationError("Hessian is not invertible; most collinear pair: '" +
                          at.names[bi] + "' and '" + at.names[bj] + "'");
  }

  const Eigen::MatrixXd cov = es.eigenvectors() *
                              lambda.cwiseInverse().asDiagonal() *
                              es.eigenvectors().transpose();
  SquareMatrix out;
  out.n = n;
  out.a.resize(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = cov(i, j);
  return out;
}

double null_loglik(const ChoiceDataset& ds) {
  double ll = 0.0;
  for (const auto& s : ds.situations) ll -= std::log(static_cast<double>(s.n_available()));
  return ll;
}

namespace {

std::string significance_mark(double t) {
  const double at = std::abs(t);
  if (at >= 1.960) return "**";
  if (at >= 1.645) return "*";
  return "";
}

Objective make_objective(const CompiledData& data, ModelKind kind,
                         const DrawMatrix* draws, Exec exec, long* clamped) {
  return [&data, kind, draws, exec, clamped](const std::vector<double>& theta) {
    const LoglikResult r = kind == ModelKind::RUM
                               ? kernel::rum_log_likelihood(data, theta, draws, exec)
                               : kernel::rrm_log_likelihood(data, theta, draws, exec);
    if (clamped) *clamped = r.clamped;
    return std::make_pair(r.loglik, r.gradient);
  };
}

}  // namespace

EstimationResult estimate(const ChoiceDataset& ds, const ModelSpec& spec,
                          ModelKind kind, const EstimateOptions& opt) {
  const auto report = validate_dataset(ds);
  for (const auto& f : report.findings)
    if (f.severity == Severity::Error) throw IntegrityError(f.message);

  const CompiledData data = compile(spec, ds);

  DrawMatrix dm;
  const DrawMatrix* draws = nullptr;
  if (spec.has_random()) {
    if (opt.draws < 1) throw Error("draw count R must be >= 1");
    dm = DrawMatrix::halton(ds, opt.draws, spec.n_random());
    draws = &dm;
  }

  long clamped = 0;
  const Objective objective = make_objective(data, kind, draws, opt.exec, &clamped);

  ParameterVector start = ParameterVector::zeros(spec);
  if (spec.has_random()) {
    // Two-stage warm start: fixed-coefficient fit for the means, 0.1 spreads.
    ModelSpec fixed_spec = spec;
    fixed_spec.random_coefficients.clear();
    const CompiledData fixed_data = compile(fixed_spec, ds);
    const Objective fixed_obj = make_objective(fixed_data, kind, nullptr, opt.exec, nullptr);
    const auto warm = maximize(fixed_obj, ParameterVector::zeros(fixed_spec), opt.settings);
    for (size_t i = 0; i < warm.params.names.size(); ++i)
      start.set(warm.params.names[i], warm.params.values[i]);
    for (const auto& rc : spec.random_coefficients) start.set(rc.sd_name(), 0.1);
  }

  auto max_res = maximize(objective, start, opt.settings);

  // The likelihood is evaluated at |sd|; report the spread as its magnitude.
  for (const auto& rc : spec.random_coefficients) {
    const int i = max_res.params.index_of(rc.sd_name());
    max_res.params.values[i] = std::abs(max_res.params.values[i]);
  }

  EstimationResult out;
  out.kind = kind;
  out.params = max_res.params;
  out.loglik_final = max_res.value;
  out.iterations = max_res.iterations;
  out.converged = max_res.converged;
  out.gradient_norm = max_res.gradient_norm;
  out.underflow_clamps = clamped;
  out.draws_used = spec.has_random() ? opt.draws : 0;
  out.seed = opt.seed;
  out.spec_hash_value = spec_hash(spec, ds.schema);
  out.settings = opt.settings;
  out.spec = spec;
  out.schema = ds.schema;

  if (opt.compute_covariance) {
    const auto cov = covariance(objective, max_res.params);
    const int n = max_res.params.size();
    out.std_errors.resize(n);
    out.t_stats.resize(n);
    out.significance.resize(n);
    for (int i = 0; i < n; ++i) {
      const double var = cov(i, i);
      if (var <= 0.0)
        throw EstimationError("non-positive variance for parameter '" +
                              max_res.params.names[i] + "'");
      out.std_errors[i] = std::sqrt(var);
      out.t_stats[i] = max_res.params.values[i] / out.std_errors[i];
      out.significance[i] = significance_mark(out.t_stats[i]);
    }
  }

  out.loglik_null = null_loglik(ds);
  out.rho_squared = 1.0 - out.loglik_final / out.loglik_null;
  return out;
}

std::string EstimationResult::to_report() const {
  std::ostringstream os;
  os << "model: " << to_string(kind) << '\n';
  os << "converged: " << (converged ? "true" : "false") << '\n';
  os << "iterations: " << iterations << '\n';
  os << "gradient_norm: " << format_double(gradient_norm) << '\n';
  os << "loglik_final: " << format_double(loglik_final) << '\n';
  os << "loglik_null: " << format_double(loglik_null) << '\n';
  os << "rho_squared: " << format_double(rho_squared) << '\n';
  os << "rho_squared_formula: 1 - loglik_final / loglik_null (equal shares)\n";
  os << "draws: " << draws_used << '\n';
  os << "seed: " << seed << '\n';
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(spec_hash_value));
  os << "spec_hash: " << hash_hex << '\n';
  os << "grad_tol: " << format_double(settings.grad_tol) << '\n';
  os << "rel_obj_tol: " << format_double(settings.rel_obj_tol) << '\n';
  os << "max_iterations: " << settings.max_iterations << '\n';
  os << "underflow_clamps: " << underflow_clamps << '\n';
  os << "significance_levels: ** |t|>=1.960 (5%), * |t|>=1.645 (10%)\n";
  os << '\n';
  const bool have_se = std_errors.size() == params.names.size();
  os << "coefficient\testimate\tstd_error\tt_stat\tsig\n";
  for (int i = 0; i < params.size(); ++i) {
    os << params.names[i] << '\t' << format_double(params.values[i]);
    if (have_se)
      os << '\t' << format_double(std_errors[i]) << '\t'
         << format_double(t_stats[i]) << '\t' << significance[i];
    os << '\n';
  }
  return os.str();
}

namespace {

nlohmann::ordered_json schema_to_json(const AttributeSchema& schema) {
  nlohmann::ordered_json attrs = nlohmann::ordered_json::array();
  for (const auto& a : schema.attributes) {
    nlohmann::ordered_json o;
    o["name"] = a.name;
    o["kind"] = a.kind == AttrKind::Continuous  ? "continuous"
                : a.kind == AttrKind::Binary    ? "binary"
                                                : "categorical";
    if (!a.levels.empty()) o["levels"] = a.levels;
    attrs.push_back(o);
  }
  nlohmann::ordered_json out;
  out["attributes"] = attrs;
  out["covariates"] = schema.covariates;
  return out;
}

AttributeSchema schema_from_json(const nlohmann::json& j) {
  AttributeSchema schema;
  for (const auto& a : j.at("attributes")) {
    AttributeSpec spec;
    spec.name = a.at("name").get<std::string>();
    const auto kind = a.at("kind").get<std::string>();
    spec.kind = kind == "continuous" ? AttrKind::Continuous
                : kind == "binary"   ? AttrKind::Binary
                                     : AttrKind::Categorical;
    if (a.contains("levels")) spec.levels = a.at("levels").get<std::vector<double>>();
    schema.attributes.push_back(std::move(spec));
  }
  schema.covariates = j.at("covariates").get<std::vector<std::string>>();
  return schema;
}

}  // namespace

std::string EstimationResult::to_json_text(
    const std::map<std::string, std::string>& extra) const {
  nlohmann::ordered_json j;
  j["tool"] = {{"name", "dcmkit"}, {"version", kVersion}};
  nlohmann::ordered_json run;
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(spec_hash_value));
  run["spec_hash"] = hash_hex;
  run["seed"] = seed;
  run["draws"] = draws_used;
  run["grad_tol"] = settings.grad_tol;
  run["rel_obj_tol"] = settings.rel_obj_tol;
  run["max_iterations"] = settings.max_iterations;
  for (const auto& [k, v] : extra) run[k] = v;
  j["run"] = run;
  j["model"] = to_string(kind);
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["gradient_norm"] = gradient_norm;
  j["loglik_final"] = loglik_final;
  j["loglik_null"] = loglik_null;
  j["rho_squared"] = rho_squared;
  j["underflow_clamps"] = underflow_clamps;

  const bool have_se = std_errors.size() == params.names.size();
  nlohmann::ordered_json params_json, se_json, t_json, sig_json;
  for (int i = 0; i < params.size(); ++i) {
    params_json[params.names[i]] = params.values[i];
    if (have_se) {
      se_json[params.names[i]] = std_errors[i];
      t_json[params.names[i]] = t_stats[i];
      sig_json[params.names[i]] = significance[i];
    }
  }
  j["params"] = params_json;
  j["std_errors"] = se_json;
  j["t_stats"] = t_json;
  j["significance"] = sig_json;

  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (const auto& t : spec.terms) {
    nlohmann::ordered_json o;
    o["coef"] = t.coef;
    o["attribute"] = t.attribute;
    if (!t.covariate.empty()) o["covariate"] = t.covariate;
    terms.push_back(o);
  }
  nlohmann::ordered_json decl;
  decl["terms"] = terms;
  decl["constants"] = spec.constant_alts;
  decl["reference"] = spec.reference_alternative;
  nlohmann::ordered_json random = nlohmann::ordered_json::array();
  for (const auto& r : spec.random_coefficients) random.push_back(r.coef);
  decl["random"] = random;
  j["declaration"] = decl;
  j["schema"] = schema_to_json(schema);
  return j.dump(2) + "\n";
}

EstimationResult EstimationResult::from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EstimationResult out;
  out.kind = model_kind_from_string(j.at("model").get<std::string>());
  out.converged = j.at("converged").get<bool>();
  out.iterations = j.at("iterations").get<int>();
  out.gradient_norm = j.at("gradient_norm").get<double>();
  out.loglik_final = j.at("loglik_final").get<double>();
  out.loglik_null = j.at("loglik_null").get<double>();
  out.rho_squared = j.at("rho_squared").get<double>();
  out.underflow_clamps = j.at("underflow_clamps").get<long>();
  out.seed = j.at("run").at("seed").get<std::uint64_t>();
  out.draws_used = j.at("run").at("draws").get<int>();
  out.spec_hash_value =
      std::stoull(j.at("run").at("spec_hash").get<std::string>(), nullptr, 16);
  out.settings.grad_tol = j.at("run").at("grad_tol").get<double>();
  out.settings.rel_obj_tol = j.at("run").at("rel_obj_tol").get<double>();
  out.settings.max_iterations = j.at("run").at("max_iterations").get<int>();

  out.schema = schema_from_json(j.at("schema"));
  const auto& decl = j.at("declaration");
  for (const auto& t : decl.at("terms")) {
    Term term;
    term.coef = t.at("coef").get<std::string>();
    term.attribute = t.at("attribute").get<std::string>();
    if (t.contains("covariate")) term.covariate = t.at("covariate").get<std::string>();
    out.spec.terms.push_back(std::move(term));
  }
  out.spec.constant_alts = decl.at("constants").get<std::vector<int>>();
  out.spec.reference_alternative = decl.at("reference").get<int>();
  for (const auto& r : decl.at("random"))
    out.spec.random_coefficients.push_back({r.get<std::string>()});

  out.params.names = out.spec.parameter_names();
  for (const auto& name : out.params.names) {
    out.params.values.push_back(j.at("params").at(name).get<double>());
    out.std_errors.push_back(j.at("std_errors").at(name).get<double>());
    out.t_stats.push_back(j.at("t_stats").at(name).get<double>());
    out.significance.push_back(j.at("significance").at(name).get<std::string>());
  }
  return out;
}

}  // namespace dcm
