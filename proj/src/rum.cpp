#include "dcm/rum.hpp"

#include <algorithm>
#include <cmath>

#include "dcm/error.hpp"
#include "kernel_common.hpp"

namespace dcm {

namespace kernel {

namespace {

// Utilities for one situation at fixed effective betas.
inline void utilities(const CompiledSpec& cs, std::span<const double> theta,
                      const double* beta, const CompiledSituation& row,
                      double* v) {
  const int T = cs.n_terms();
  const double* x = row.x.data();
  for (int j = 0; j < row.n_alts; ++j) {
    double u = 0.0;
    for (int t = 0; t < T; ++t) u += beta[t] * x[j * T + t];
    v[j] = u;
  }
  add_constants(cs, theta, row.n_alts, v);
}

// log P(chosen) and its gradient for one situation, fixed coefficients.
inline double mnl_situation(const CompiledSpec& cs, std::span<const double> theta,
                            const CompiledSituation& row, Scratch& sc,
                            double* grad, bool* clamped) {
  const int T = cs.n_terms();
  const int J = row.n_alts;
  effective_betas(cs, theta, nullptr, sc.beta.data(), nullptr);
  utilities(cs, theta, sc.beta.data(), row, sc.v.data());
  softmax_available(sc.v.data(), row.avail.data(), J, sc.p.data());

  const double* x = row.x.data();
  const int c = row.chosen;
  if (grad) {
    for (int t = 0; t < T; ++t) {
      double xbar = 0.0;
      for (int j = 0; j < J; ++j) xbar += sc.p[j] * x[j * T + t];
      grad[cs.terms[t].param] += x[c * T + t] - xbar;
    }
    for (const auto& asc : cs.ascs)
      if (asc.alt < J)
        grad[asc.param] += (c == asc.alt ? 1.0 : 0.0) - sc.p[asc.alt];
  }
  if (sc.p[c] < kProbFloor) *clamped = true;
  return std::log(std::max(sc.p[c], kProbFloor));
}

// Simulated log-probability and gradient for one situation: average of the
// logit kernel over the draw block, gradient differentiated through the
// average.
inline double mixed_situation(const CompiledSpec& cs, std::span<const double> theta,
                              const CompiledSituation& row,
                              std::span<const double> draws, int R, int D,
                              Scratch& sc, double* grad, bool* clamped) {
  const int T = cs.n_terms();
  const int J = row.n_alts;
  const int c = row.chosen;
  const double* x = row.x.data();

  double psum = 0.0;
  std::fill(sc.acc.begin(), sc.acc.end(), 0.0);
  for (int r = 0; r < R; ++r) {
    const double* z = draws.data() + static_cast<std::size_t>(r) * D;
    effective_betas(cs, theta, z, sc.beta.data(), sc.sd_mult.data());
    utilities(cs, theta, sc.beta.data(), row, sc.v.data());
    softmax_available(sc.v.data(), row.avail.data(), J, sc.p.data());
    const double pc = sc.p[c];
    psum += pc;
    if (grad) {
      for (int t = 0; t < T; ++t) {
        double xbar = 0.0;
        for (int j = 0; j < J; ++j) xbar += sc.p[j] * x[j * T + t];
        const double d = x[c * T + t] - xbar;
        const auto& slot = cs.terms[t];
        sc.acc[slot.param] += pc * d;
        if (slot.sd_param >= 0) sc.acc[slot.sd_param] += pc * d * sc.sd_mult[t];
      }
      for (const auto& asc : cs.ascs)
        if (asc.alt < J)
          sc.acc[asc.param] += pc * ((c == asc.alt ? 1.0 : 0.0) - sc.p[asc.alt]);
    }
  }

  const double pbar = psum / R;
  if (pbar < kProbFloor) *clamped = true;
  if (grad && psum > 0.0) {
    const double inv = 1.0 / psum;
    for (std::size_t k = 0; k < sc.acc.size(); ++k) grad[k] += sc.acc[k] * inv;
  }
  return std::log(std::max(pbar, kProbFloor));
}

}  // namespace

void mnl_probability(const CompiledSpec& cs, std::span<const double> theta,
                     const CompiledSituation& row, std::span<double> out) {
  Scratch sc;
  sc.reserve(cs.n_terms(), row.n_alts, cs.n_params());
  effective_betas(cs, theta, nullptr, sc.beta.data(), nullptr);
  utilities(cs, theta, sc.beta.data(), row, sc.v.data());
  for (int j = 0; j < row.n_alts; ++j)
    if (row.avail[j] && !std::isfinite(sc.v[j]))
      throw NumericError("non-finite utility");
  softmax_available(sc.v.data(), row.avail.data(), row.n_alts, out.data());
}

void mixed_probability(const CompiledSpec& cs, std::span<const double> theta,
                       const CompiledSituation& row,
                       std::span<const double> draws, int R,
                       std::span<double> out) {
  if (R < 1) throw Error("draw count R must be >= 1");
  const int D = static_cast<int>(draws.size()) / std::max(R, 1);
  Scratch sc;
  sc.reserve(cs.n_terms(), row.n_alts, cs.n_params());
  std::fill(out.begin(), out.end(), 0.0);
  for (int r = 0; r < R; ++r) {
    const double* z = draws.data() + static_cast<std::size_t>(r) * D;
    effective_betas(cs, theta, z, sc.beta.data(), sc.sd_mult.data());
    utilities(cs, theta, sc.beta.data(), row, sc.v.data());
    for (int j = 0; j < row.n_alts; ++j)
      if (row.avail[j] && !std::isfinite(sc.v[j]))
        throw NumericError("non-finite utility");
    softmax_available(sc.v.data(), row.avail.data(), row.n_alts, sc.p.data());
    for (int j = 0; j < row.n_alts; ++j) out[j] += sc.p[j];
  }
  const double inv = 1.0 / R;
  for (int j = 0; j < row.n_alts; ++j) out[j] *= inv;
}

LoglikResult rum_log_likelihood(const CompiledData& data,
                                std::span<const double> theta,
                                const DrawMatrix* draws, Exec exec) {
  check_chosen(data);
  const bool mixed = data.cs.n_random > 0;
  if (mixed) {
    if (!draws) throw Error("random coefficients require a draw matrix");
    if (draws->R < 1) throw Error("draw count R must be >= 1");
    if (draws->D < data.cs.n_random)
      throw Error("draw matrix has fewer dimensions than random coefficients");
  }

  const int P = data.cs.n_params();
  const std::size_t w = 2 + static_cast<std::size_t>(P);  // [ll, clamp, grad...]
  const auto& cs = data.cs;

  auto fill = [&](std::size_t i, double* out) {
    static thread_local Scratch sc;
    const auto& row = data.rows[i];
    sc.reserve(cs.n_terms(), row.n_alts, P);
    bool clamped = false;
    double ll;
    if (mixed)
      ll = mixed_situation(cs, theta, row, draws->block_for_situation(static_cast<int>(i)),
                           draws->R, draws->D, sc, out + 2, &clamped);
    else
      ll = mnl_situation(cs, theta, row, sc, out + 2, &clamped);
    out[0] = ll;
    out[1] = clamped ? 1.0 : 0.0;
  };

  const auto acc = map_reduce_rows(data.rows.size(), w, exec, fill);
  LoglikResult res;
  res.loglik = acc[0];
  res.clamped = static_cast<long>(acc[1]);
  res.gradient.assign(acc.begin() + 2, acc.end());
  if (!std::isfinite(res.loglik))
    throw NumericError("non-finite log-likelihood (check parameters and attributes)");
  return res;
}

}  // namespace kernel

namespace {

std::vector<double> theta_for(const CompiledSpec& cs, const ParameterVector& params) {
  std::vector<double> theta(cs.n_params());
  for (int i = 0; i < cs.n_params(); ++i) theta[i] = params.get(cs.param_names[i]);
  return theta;
}

}  // namespace

std::vector<double> mnl_probability(const ModelSpec& spec,
                                    const ParameterVector& params,
                                    const AttributeSchema& schema,
                                    const ChoiceSituation& situation) {
  if (spec.has_random())
    throw Error("mnl_probability requires a spec without random coefficients");
  const auto cs = CompiledSpec::build(spec, schema);
  const auto row = compile_situation(cs, situation);
  std::vector<double> out(row.n_alts);
  kernel::mnl_probability(cs, theta_for(cs, params), row, out);
  return out;
}

std::vector<double> mixed_logit_probability(const ModelSpec& spec,
                                            const ParameterVector& params,
                                            const AttributeSchema& schema,
                                            const ChoiceSituation& situation,
                                            std::span<const double> draws,
                                            int R, int D) {
  if (R < 1) throw Error("draw count R must be >= 1");
  if (D < spec.n_random())
    throw Error("draw matrix has fewer dimensions than random coefficients");
  if (draws.size() < static_cast<std::size_t>(R) * D)
    throw Error("draw block shorter than R x D");
  const auto cs = CompiledSpec::build(spec, schema);
  const auto row = compile_situation(cs, situation);
  std::vector<double> out(row.n_alts);
  kernel::mixed_probability(cs, theta_for(cs, params), row,
                            draws.first(static_cast<std::size_t>(R) * D), R, out);
  return out;
}

LoglikResult rum_log_likelihood(const ModelSpec& spec,
                                const ParameterVector& params,
                                const ChoiceDataset& ds, const DrawMatrix* draws,
                                Exec exec) {
  const auto data = compile(spec, ds);
  return kernel::rum_log_likelihood(data, theta_for(data.cs, params),
                                    spec.has_random() ? draws : nullptr, exec);
}

}  // namespace dcm
