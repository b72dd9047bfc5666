#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcm/dataset.hpp"
#include "dcm/model.hpp"

namespace dcm {

enum class GridCoding { Linear, Indicators };

// One logical design attribute with its level set. Linear attributes become a
// single schema column; Indicators expand to one binary column per non-base
// level (named <name>_<level_name>).
struct GridAttribute {
  std::string name;
  std::vector<double> levels;
  AttrKind kind = AttrKind::Categorical;
  GridCoding coding = GridCoding::Linear;
  std::vector<std::string> level_names;  // Indicators only
};

struct DesignGrid {
  std::vector<GridAttribute> attributes;

  AttributeSchema schema() const;
  int n_attributes() const { return static_cast<int>(attributes.size()); }

  // The courier choice grid: cost {14,18,22,26} dollars, delivery time
  // {1.5,3,5,24,72} hours (once/day coded 24h, 2-4 days coded 72h),
  // reputation {0,1,2}, four binary service flags, delivery location as two
  // indicators (home base), payment as one indicator, tip {0,1,2,3} dollars.
  static DesignGrid courier_grid();
};

// Uniform draws from the grid levels for each alternative. With exactly four
// alternatives the fourth courier is constrained to be the slow cheap one:
// its delivery time is resampled from levels >= the fastest of couriers 1-3
// and its cost from levels <= their cheapest. Situations are grouped into
// respondents of `situations_per_respondent` consecutive tasks. The returned
// dataset has no recorded choices yet.
ChoiceDataset generate_design(const DesignGrid& grid, int n_situations,
                              int n_alternatives, std::uint64_t seed,
                              int situations_per_respondent = 1);

// Samples each situation's choice from the model probabilities at `truth`.
// Random coefficients draw one realization per respondent. Random-coefficient
// RRM simulation is unsupported (the mixing protocol is not defined for it).
ChoiceDataset simulate_choices(const ChoiceDataset& design, const ModelSpec& spec,
                               const ParameterVector& truth, ModelKind kind,
                               std::uint64_t seed);

// JSON sidecar recording the generating truth for recovery tests.
void write_truth_sidecar(const std::string& path, const ParameterVector& truth,
                         ModelKind kind, std::uint64_t seed, int n_situations,
                         int n_alternatives);

}  // namespace dcm
