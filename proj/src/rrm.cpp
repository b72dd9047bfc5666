#include "dcm/rrm.hpp"

#include <algorithm>
#include <cmath>

#include "dcm/error.hpp"
#include "dcm/stats.hpp"
#include "kernel_common.hpp"

namespace dcm {

double pairwise_regret(double beta_k, double x_jk, double x_ik) {
  return softplus(beta_k * (x_jk - x_ik));
}

namespace kernel {

namespace {

struct RrmScratch {
  std::vector<double> beta, sd_mult, regret, p, dreg, acc;

  void reserve(int T, int n_asc, int J, int P) {
    beta.resize(T);
    sd_mult.resize(T);
    regret.resize(J);
    p.resize(J);
    dreg.resize(static_cast<std::size_t>(J) * (T + n_asc));
    acc.resize(P);
  }
};

// Regrets of every available alternative, and optionally their derivatives
// w.r.t. the term betas and constants (dreg is J x (T + n_asc), row-major).
// Each unordered pair is visited once: softplus(-z) = softplus(z) - z and
// sigma(-z) * (-d) = sigma(z) * d - d reuse the forward evaluation.
void regrets(const CompiledSpec& cs, std::span<const double> theta,
             const double* beta, const CompiledSituation& row, double* regret,
             double* dreg) {
  const int T = cs.n_terms();
  const int A = static_cast<int>(cs.ascs.size());
  const int W = T + A;
  const int J = row.n_alts;
  const double* x = row.x.data();

  for (int j = 0; j < J; ++j) regret[j] = 0.0;
  if (dreg) std::fill(dreg, dreg + static_cast<std::size_t>(J) * W, 0.0);

  for (int i = 0; i < J; ++i) {
    if (!row.avail[i]) continue;
    for (int j = i + 1; j < J; ++j) {
      if (!row.avail[j]) continue;
      for (int t = 0; t < T; ++t) {
        const double d = x[j * T + t] - x[i * T + t];
        const double z = beta[t] * d;
        const double sp = softplus(z);
        regret[i] += sp;
        regret[j] += sp - z;
        if (dreg) {
          const double g = logistic(z) * d;
          dreg[i * W + t] += g;
          dreg[j * W + t] += g - d;
        }
      }
      for (int a = 0; a < A; ++a) {
        const auto& asc = cs.ascs[a];
        const double d = (j == asc.alt ? 1.0 : 0.0) - (i == asc.alt ? 1.0 : 0.0);
        const double z = theta[asc.param] * d;
        const double sp = softplus(z);
        regret[i] += sp;
        regret[j] += sp - z;
        if (dreg) {
          const double g = logistic(z) * d;
          dreg[i * W + T + a] += g;
          dreg[j * W + T + a] += g - d;
        }
      }
    }
  }
}

// log P(chosen) and gradient for one situation at fixed betas; shared by the
// fixed path and each draw of the mixed path. When `acc` is given the
// contribution is weighted by p_chosen and added there (mixed accumulation);
// otherwise it lands in `grad` directly.
double rrm_situation_at(const CompiledSpec& cs, std::span<const double> theta,
                        const double* beta, const double* sd_mult,
                        const CompiledSituation& row, RrmScratch& sc,
                        bool want_grad, double* grad, double* p_chosen_out) {
  const int T = cs.n_terms();
  const int A = static_cast<int>(cs.ascs.size());
  const int W = T + A;
  const int J = row.n_alts;
  const int c = row.chosen;

  regrets(cs, theta, beta, row, sc.regret.data(), want_grad ? sc.dreg.data() : nullptr);

  // softmax of negated regrets over available alternatives
  for (int j = 0; j < J; ++j) sc.regret[j] = -sc.regret[j];
  softmax_available(sc.regret.data(), row.avail.data(), J, sc.p.data());
  const double pc = sc.p[c];
  if (p_chosen_out) *p_chosen_out = pc;

  if (want_grad) {
    const double* dreg = sc.dreg.data();
    for (int col = 0; col < W; ++col) {
      double dbar = 0.0;
      for (int j = 0; j < J; ++j)
        if (row.avail[j]) dbar += sc.p[j] * dreg[j * W + col];
      const double dln = -dreg[c * W + col] + dbar;
      if (col < T) {
        const auto& slot = cs.terms[col];
        const double weight = p_chosen_out ? pc : 1.0;
        grad[slot.param] += weight * dln;
        if (slot.sd_param >= 0) grad[slot.sd_param] += weight * dln * sd_mult[col];
      } else {
        grad[cs.ascs[col - T].param] += (p_chosen_out ? pc : 1.0) * dln;
      }
    }
  }
  return pc;
}

double rrm_fixed_situation(const CompiledSpec& cs, std::span<const double> theta,
                           const CompiledSituation& row, RrmScratch& sc,
                           double* grad, bool* clamped) {
  effective_betas(cs, theta, nullptr, sc.beta.data(), nullptr);
  const double pc = rrm_situation_at(cs, theta, sc.beta.data(), nullptr, row, sc,
                                     grad != nullptr, grad, nullptr);
  if (pc < kProbFloor) *clamped = true;
  return std::log(std::max(pc, kProbFloor));
}

double rrm_mixed_situation(const CompiledSpec& cs, std::span<const double> theta,
                           const CompiledSituation& row,
                           std::span<const double> draws, int R, int D,
                           RrmScratch& sc, double* grad, bool* clamped) {
  double psum = 0.0;
  std::fill(sc.acc.begin(), sc.acc.end(), 0.0);
  for (int r = 0; r < R; ++r) {
    const double* z = draws.data() + static_cast<std::size_t>(r) * D;
    effective_betas(cs, theta, z, sc.beta.data(), sc.sd_mult.data());
    double pc = 0.0;
    rrm_situation_at(cs, theta, sc.beta.data(), sc.sd_mult.data(), row, sc,
                     grad != nullptr, sc.acc.data(), &pc);
    psum += pc;
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

void rrm_probability(const CompiledSpec& cs, std::span<const double> theta,
                     const CompiledSituation& row, std::span<double> out) {
  RrmScratch sc;
  sc.reserve(cs.n_terms(), static_cast<int>(cs.ascs.size()), row.n_alts,
             cs.n_params());
  effective_betas(cs, theta, nullptr, sc.beta.data(), nullptr);
  regrets(cs, theta, sc.beta.data(), row, sc.regret.data(), nullptr);
  for (int j = 0; j < row.n_alts; ++j) {
    if (row.avail[j] && !std::isfinite(sc.regret[j]))
      throw NumericError("non-finite regret");
    sc.regret[j] = -sc.regret[j];
  }
  softmax_available(sc.regret.data(), row.avail.data(), row.n_alts, out.data());
}

void rrm_mixed_probability(const CompiledSpec& cs, std::span<const double> theta,
                           const CompiledSituation& row,
                           std::span<const double> draws, int R,
                           std::span<double> out) {
  if (R < 1) throw Error("draw count R must be >= 1");
  const int D = static_cast<int>(draws.size()) / std::max(R, 1);
  RrmScratch sc;
  sc.reserve(cs.n_terms(), static_cast<int>(cs.ascs.size()), row.n_alts,
             cs.n_params());
  std::fill(out.begin(), out.end(), 0.0);
  for (int r = 0; r < R; ++r) {
    const double* z = draws.data() + static_cast<std::size_t>(r) * D;
    effective_betas(cs, theta, z, sc.beta.data(), sc.sd_mult.data());
    regrets(cs, theta, sc.beta.data(), row, sc.regret.data(), nullptr);
    for (int j = 0; j < row.n_alts; ++j) sc.regret[j] = -sc.regret[j];
    softmax_available(sc.regret.data(), row.avail.data(), row.n_alts, sc.p.data());
    for (int j = 0; j < row.n_alts; ++j) out[j] += sc.p[j];
  }
  const double inv = 1.0 / R;
  for (int j = 0; j < row.n_alts; ++j) out[j] *= inv;
}

LoglikResult rrm_log_likelihood(const CompiledData& data,
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
  const std::size_t w = 2 + static_cast<std::size_t>(P);
  const auto& cs = data.cs;

  auto fill = [&](std::size_t i, double* out) {
    static thread_local RrmScratch sc;
    const auto& row = data.rows[i];
    sc.reserve(cs.n_terms(), static_cast<int>(cs.ascs.size()), row.n_alts, P);
    bool clamped = false;
    double ll;
    if (mixed)
      ll = rrm_mixed_situation(cs, theta, row,
                               draws->block_for_situation(static_cast<int>(i)),
                               draws->R, draws->D, sc, out + 2, &clamped);
    else
      ll = rrm_fixed_situation(cs, theta, row, sc, out + 2, &clamped);
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

double total_regret(const ModelSpec& spec, const ParameterVector& params,
                    const AttributeSchema& schema,
                    const ChoiceSituation& situation, int alt) {
  if (alt < 0 || alt >= situation.n_alternatives())
    throw Error("alternative index out of range");
  if (!situation.alternatives[alt].available)
    throw Error("total_regret of an unavailable alternative");
  if (spec.has_random())
    throw Error("total_regret requires a spec without random coefficients");
  const auto cs = CompiledSpec::build(spec, schema);
  const auto row = compile_situation(cs, situation);
  const auto theta = theta_for(cs, params);
  std::vector<double> beta(cs.n_terms());
  kernel::effective_betas(cs, theta, nullptr, beta.data(), nullptr);

  // Same pair loop as the kernel, reported for one alternative.
  const int T = cs.n_terms();
  double total = 0.0;
  for (int j = 0; j < row.n_alts; ++j) {
    if (j == alt || !row.avail[j]) continue;
    for (int t = 0; t < T; ++t)
      total += pairwise_regret(beta[t], row.x[j * T + t], row.x[alt * T + t]);
    for (const auto& asc : cs.ascs) {
      const double xj = (j == asc.alt) ? 1.0 : 0.0;
      const double xi = (alt == asc.alt) ? 1.0 : 0.0;
      total += pairwise_regret(theta[asc.param], xj, xi);
    }
  }
  return total;
}

std::vector<double> rrm_probability(const ModelSpec& spec,
                                    const ParameterVector& params,
                                    const AttributeSchema& schema,
                                    const ChoiceSituation& situation) {
  if (situation.n_available() < 2)
    throw Error("rrm_probability requires >= 2 available alternatives");
  if (spec.has_random())
    throw Error("rrm_probability requires a spec without random coefficients");
  const auto cs = CompiledSpec::build(spec, schema);
  const auto row = compile_situation(cs, situation);
  std::vector<double> out(row.n_alts);
  kernel::rrm_probability(cs, theta_for(cs, params), row, out);
  return out;
}

LoglikResult rrm_log_likelihood(const ModelSpec& spec,
                                const ParameterVector& params,
                                const ChoiceDataset& ds, const DrawMatrix* draws,
                                Exec exec) {
  const auto data = compile(spec, ds);
  return kernel::rrm_log_likelihood(data, theta_for(data.cs, params),
                                    spec.has_random() ? draws : nullptr, exec);
}

}  // namespace dcm
