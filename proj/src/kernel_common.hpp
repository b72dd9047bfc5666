#pragma once

// Private helpers shared by the rum/rrm likelihood kernels.

#include <cmath>
#include <span>
#include <vector>

#include "dcm/design.hpp"
#include "dcm/error.hpp"

namespace dcm::kernel {

// Effective per-term coefficients at one draw point: theta[t] for fixed
// terms, mean + |sd| * z for random ones. sd_mult[t] holds sign(sd) * z, the
// inner derivative of |sd| * z needed for the spread gradient. A null z
// evaluates at the means (spreads ignored).
inline void effective_betas(const CompiledSpec& cs, std::span<const double> theta,
                            const double* z, double* beta, double* sd_mult) {
  for (int t = 0; t < cs.n_terms(); ++t) {
    const auto& slot = cs.terms[t];
    if (slot.sd_param < 0 || z == nullptr) {
      beta[t] = theta[slot.param];
      if (sd_mult) sd_mult[t] = 0.0;
    } else {
      const double s = theta[slot.sd_param];
      const double zt = z[slot.draw_dim];
      beta[t] = theta[slot.param] + std::abs(s) * zt;
      if (sd_mult) sd_mult[t] = (s < 0.0 ? -zt : zt);
    }
  }
}

inline void add_constants(const CompiledSpec& cs, std::span<const double> theta,
                          int n_alts, double* v) {
  for (const auto& asc : cs.ascs)
    if (asc.alt < n_alts) v[asc.alt] += theta[asc.param];
}

// Softmax over available alternatives with max subtraction; unavailable
// entries come out exactly zero.
inline void softmax_available(const double* v, const unsigned char* avail, int n,
                              double* p) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j)
    if (avail[j] && v[j] > vmax) vmax = v[j];
  double denom = 0.0;
  for (int j = 0; j < n; ++j) {
    p[j] = avail[j] ? std::exp(v[j] - vmax) : 0.0;
    denom += p[j];
  }
  const double inv = 1.0 / denom;
  for (int j = 0; j < n; ++j) p[j] *= inv;
}

inline void check_chosen(const CompiledData& data) {
  for (const auto& row : data.rows) {
    if (row.chosen < 0 || row.chosen >= row.n_alts)
      throw IntegrityError("situation without a chosen alternative");
    if (!row.avail[row.chosen])
      throw IntegrityError("chosen alternative is unavailable");
  }
}

// Reusable per-thread scratch for the situation loops.
struct Scratch {
  std::vector<double> beta, sd_mult, v, p, acc;

  void reserve(int T, int J, int P) {
    beta.resize(T);
    sd_mult.resize(T);
    v.resize(J);
    p.resize(J);
    acc.resize(P);
  }
};

}  // namespace dcm::kernel
