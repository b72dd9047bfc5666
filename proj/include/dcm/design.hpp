#pragma once

#include <vector>

#include "dcm/dataset.hpp"
#include "dcm/model.hpp"

namespace dcm {

// A ModelSpec resolved against a schema: name lookups done once, parameter
// slots assigned in canonical order. Shared by the RUM and RRM kernels so the
// two models see identical coefficient layouts and comparisons align
// attribute-by-attribute.
struct CompiledSpec {
  struct TermSlot {
    int param;     // slot in the parameter vector (also the mean for random)
    int attr;      // attribute column in the schema
    int cov;       // covariate column, -1 for plain terms
    int sd_param;  // -1 for fixed coefficients
    int draw_dim;  // draw column, -1 for fixed coefficients
  };
  struct AscSlot {
    int param;
    int alt;  // 0-based alternative position
  };

  std::vector<TermSlot> terms;
  std::vector<AscSlot> ascs;
  std::vector<std::string> param_names;
  int n_random = 0;

  int n_params() const { return static_cast<int>(param_names.size()); }
  int n_terms() const { return static_cast<int>(terms.size()); }

  static CompiledSpec build(const ModelSpec& spec, const AttributeSchema& schema);
};

// One situation flattened for the inner loops: row-major J x T design values
// (terms only; constants are resolved from the alternative position).
struct CompiledSituation {
  int n_alts = 0;
  int chosen = -1;
  std::vector<unsigned char> avail;
  std::vector<double> x;  // n_alts * n_terms

  double value(int alt, int term, int n_terms) const { return x[alt * n_terms + term]; }
};

struct CompiledData {
  CompiledSpec cs;
  std::vector<CompiledSituation> rows;

  int n_situations() const { return static_cast<int>(rows.size()); }
};

CompiledSituation compile_situation(const CompiledSpec& cs,
                                    const ChoiceSituation& s);
CompiledData compile(const ModelSpec& spec, const ChoiceDataset& ds);

}  // namespace dcm
