#pragma once

#include <span>

#include "dcm/dataset.hpp"
#include "dcm/design.hpp"
#include "dcm/draws.hpp"
#include "dcm/loglik.hpp"
#include "dcm/model.hpp"
#include "dcm/parallel.hpp"

namespace dcm {

// Multinomial logit choice probabilities. Unavailable alternatives get
// probability 0 and are excluded from the denominator; utilities are
// max-subtracted before exponentiation. Requires a spec without random
// coefficients.
std::vector<double> mnl_probability(const ModelSpec& spec,
                                    const ParameterVector& params,
                                    const AttributeSchema& schema,
                                    const ChoiceSituation& situation);

// Mixed logit probability: the average of the logit kernel over R coefficient
// realizations beta_r = mean + |sd| * draw_r. Reduces exactly to
// mnl_probability when all sds are zero. `draws` is one R x D block.
std::vector<double> mixed_logit_probability(const ModelSpec& spec,
                                            const ParameterVector& params,
                                            const AttributeSchema& schema,
                                            const ChoiceSituation& situation,
                                            std::span<const double> draws,
                                            int R, int D);

// Simulated log-likelihood sum over situations with its exact gradient
// (differentiated through the draw average). `draws` is required iff the
// model has random coefficients.
LoglikResult rum_log_likelihood(const ModelSpec& spec,
                                const ParameterVector& params,
                                const ChoiceDataset& ds,
                                const DrawMatrix* draws = nullptr,
                                Exec exec = Exec::Parallel);

// Compiled-path variants used by the engine and post-estimation loops.
namespace kernel {

void mnl_probability(const CompiledSpec& cs, std::span<const double> theta,
                     const CompiledSituation& row, std::span<double> out);

void mixed_probability(const CompiledSpec& cs, std::span<const double> theta,
                       const CompiledSituation& row,
                       std::span<const double> draws, int R,
                       std::span<double> out);

LoglikResult rum_log_likelihood(const CompiledData& data,
                                std::span<const double> theta,
                                const DrawMatrix* draws, Exec exec);

}  // namespace kernel

}  // namespace dcm
