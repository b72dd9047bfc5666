#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dcm {

enum class AttrKind { Continuous, Binary, Categorical };

struct AttributeSpec {
  std::string name;
  AttrKind kind = AttrKind::Continuous;
  std::vector<double> levels;  // categorical only, >= 2 entries
};

// Column layout of a dataset: K alternative attributes plus case-level
// covariates. The order here is the column order of the CSV format.
struct AttributeSchema {
  std::vector<AttributeSpec> attributes;
  std::vector<std::string> covariates;

  int n_attributes() const { return static_cast<int>(attributes.size()); }
  int n_covariates() const { return static_cast<int>(covariates.size()); }
  int attribute_index(const std::string& name) const;  // -1 if absent
  int covariate_index(const std::string& name) const;  // -1 if absent
  void validate() const;                               // throws SchemaError
};

struct AlternativeRecord {
  std::string alt_id;
  std::vector<double> attributes;  // length K
  bool available = true;
};

struct ChoiceSituation {
  std::string situation_id;
  std::string respondent_id;
  std::vector<AlternativeRecord> alternatives;
  int chosen = -1;  // index into alternatives; -1 = no recorded choice
  std::vector<double> covariates;

  int n_alternatives() const { return static_cast<int>(alternatives.size()); }
  int n_available() const;
};

struct ChoiceDataset {
  AttributeSchema schema;
  std::vector<ChoiceSituation> situations;

  int n_situations() const { return static_cast<int>(situations.size()); }
  bool has_respondents() const;  // any nonempty respondent id
};

enum class Severity { Error, Warning };

struct Finding {
  Severity severity;
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool clean() const { return findings.empty(); }
  bool has_errors() const;
  // Line-oriented `SEVERITY<tab>code<tab>message`.
  std::string to_text() const;
};

// Long-format CSV: one row per alternative, header
// situation_id,respondent_id,alt_id,chosen,available,<attributes...>,<covariates...>.
// Leading '#' comment lines are skipped. Throws SchemaError / ParseError /
// IntegrityError; the returned dataset has no error-severity findings.
ChoiceDataset load_csv(const std::string& path, const AttributeSchema& schema);

// Inverse of load_csv up to decimal round-trip; values are written with
// shortest round-trip formatting. `header_comment`, when nonempty, is written
// as leading '#' lines.
void write_csv(const ChoiceDataset& ds, const std::string& path,
               const std::string& header_comment = "");

// Structural checks: unavailable-chosen, out-of-range binary/categorical
// values, and non-identified attributes (rank check on the matrix of
// within-situation attribute differences; singular values below 1e-10 of the
// largest count as zero).
ValidationReport validate_dataset(const ChoiceDataset& ds);

struct FoldPair {
  ChoiceDataset train;
  ChoiceDataset test;
};

// Partition over situations (never splits the alternatives of one situation);
// test folds are disjoint and exhaustive, sizes differ by at most one.
// `by_respondent` partitions whole respondents instead.
std::vector<FoldPair> split_kfold(const ChoiceDataset& ds, int folds,
                                  std::uint64_t seed, bool by_respondent = false);

}  // namespace dcm
