#pragma once

#include <span>

#include "dcm/dataset.hpp"
#include "dcm/design.hpp"
#include "dcm/draws.hpp"
#include "dcm/loglik.hpp"
#include "dcm/model.hpp"
#include "dcm/parallel.hpp"

namespace dcm {

// ln(1 + exp(beta_k * (x_jk - x_ik))): the regret of holding i against rival
// j on one attribute. Always >= 0.
double pairwise_regret(double beta_k, double x_jk, double x_ik);

// Total regret of alternative `alt`: the pairwise kernel summed over every
// available rival and every model term. Alternative-specific constants enter
// as indicator attributes. Throws if `alt` is unavailable.
double total_regret(const ModelSpec& spec, const ParameterVector& params,
                    const AttributeSchema& schema,
                    const ChoiceSituation& situation, int alt);

// Regret choice probabilities: softmax of negated regrets over available
// alternatives. Requires >= 2 available alternatives and a spec without
// random coefficients.
std::vector<double> rrm_probability(const ModelSpec& spec,
                                    const ParameterVector& params,
                                    const AttributeSchema& schema,
                                    const ChoiceSituation& situation);

// Log-likelihood with exact gradient. With random coefficients the choice
// probability is the draw average of the regret probability, mirroring the
// mixed logit construction; `draws` is then required.
LoglikResult rrm_log_likelihood(const ModelSpec& spec,
                                const ParameterVector& params,
                                const ChoiceDataset& ds,
                                const DrawMatrix* draws = nullptr,
                                Exec exec = Exec::Parallel);

namespace kernel {

void rrm_probability(const CompiledSpec& cs, std::span<const double> theta,
                     const CompiledSituation& row, std::span<double> out);

void rrm_mixed_probability(const CompiledSpec& cs, std::span<const double> theta,
                           const CompiledSituation& row,
                           std::span<const double> draws, int R,
                           std::span<double> out);

LoglikResult rrm_log_likelihood(const CompiledData& data,
                                std::span<const double> theta,
                                const DrawMatrix* draws, Exec exec);

}  // namespace kernel

}  // namespace dcm
