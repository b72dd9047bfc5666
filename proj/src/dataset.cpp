#include "dcm/dataset.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "dcm/error.hpp"
#include "dcm/io.hpp"
#include "dcm/rng.hpp"

namespace dcm {

int AttributeSchema::attribute_index(const std::string& name) const {
  for (size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i].name == name) return static_cast<int>(i);
  return -1;
}

int AttributeSchema::covariate_index(const std::string& name) const {
  for (size_t i = 0; i < covariates.size(); ++i)
    if (covariates[i] == name) return static_cast<int>(i);
  return -1;
}

void AttributeSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& a : attributes) {
    if (a.name.empty()) throw SchemaError("attribute with empty name");
    if (!seen.insert(a.name).second)
      throw SchemaError("duplicate attribute '" + a.name + "'");
    if (a.kind == AttrKind::Categorical && a.levels.size() < 2)
      throw SchemaError("categorical attribute '" + a.name +
                        "' declares fewer than 2 levels");
  }
  for (const auto& c : covariates) {
    if (c.empty()) throw SchemaError("covariate with empty name");
    if (!seen.insert(c).second)
      throw SchemaError("duplicate column name '" + c + "'");
  }
}

int ChoiceSituation::n_available() const {
  int n = 0;
  for (const auto& a : alternatives) n += a.available ? 1 : 0;
  return n;
}

bool ChoiceDataset::has_respondents() const {
  for (const auto& s : situations)
    if (!s.respondent_id.empty()) return true;
  return false;
}

bool ValidationReport::has_errors() const {
  for (const auto& f : findings)
    if (f.severity == Severity::Error) return true;
  return false;
}

std::string ValidationReport::to_text() const {
  std::string out;
  for (const auto& f : findings) {
    out += f.severity == Severity::Error ? "ERROR" : "WARNING";
    out += '\t';
    out += f.code;
    out += '\t';
    out += f.message;
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& cell, int row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError("row " + std::to_string(row) + ": non-numeric value '" +
                     cell + "' in column '" + col + "'");
  return v;
}

bool parse_flag(const std::string& cell, int row, const std::string& col) {
  if (cell == "0") return false;
  if (cell == "1") return true;
  throw ParseError("row " + std::to_string(row) + ": column '" + col +
                   "' must be 0 or 1, got '" + cell + "'");
}

}  // namespace

ChoiceDataset load_csv(const std::string& path, const AttributeSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");

  std::string line;
  int row = 0;
  // Skip leading comment lines, find the header.
  do {
    if (!std::getline(in, line)) throw ParseError("'" + path + "' is empty");
    ++row;
  } while (!line.empty() && line[0] == '#');

  std::vector<std::string> expected = {"situation_id", "respondent_id",
                                       "alt_id", "chosen", "available"};
  for (const auto& a : schema.attributes) expected.push_back(a.name);
  for (const auto& c : schema.covariates) expected.push_back(c);

  const auto header = split_line(line);
  for (const auto& name : expected)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw SchemaError("missing column '" + name + "' in '" + path + "'");
  if (header.size() != expected.size() ||
      !std::equal(header.begin(), header.end(), expected.begin()))
    throw SchemaError("unexpected column order in '" + path + "'");

  const int K = schema.n_attributes();
  const int C = schema.n_covariates();

  ChoiceDataset ds;
  ds.schema = schema;
  std::set<std::string> closed;
  ChoiceSituation cur;
  bool open = false;

  std::vector<int> chosen_rows;  // chosen flags of the open situation
  auto close_situation = [&]() {
    const int n_chosen =
        static_cast<int>(std::count(chosen_rows.begin(), chosen_rows.end(), 1));
    if (n_chosen != 1)
      throw IntegrityError("situation '" + cur.situation_id + "' has " +
                           std::to_string(n_chosen) +
                           " chosen rows (expected exactly 1)");
    if (cur.n_available() < 2)
      throw IntegrityError("situation '" + cur.situation_id +
                           "' has fewer than 2 available alternatives");
    closed.insert(cur.situation_id);
    ds.situations.push_back(std::move(cur));
    cur = ChoiceSituation{};
    chosen_rows.clear();
  };

  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_line(line);
    if (cells.size() != expected.size())
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(expected.size()) + " cells, got " +
                       std::to_string(cells.size()));

    const std::string& sid = cells[0];
    if (open && sid != cur.situation_id) close_situation();
    if (closed.count(sid))
      throw IntegrityError("situation '" + sid + "' rows are not contiguous");

    if (!open || cur.situation_id.empty()) {
      cur.situation_id = sid;
      cur.respondent_id = cells[1];
      cur.covariates.resize(C);
      for (int c = 0; c < C; ++c)
        cur.covariates[c] = parse_cell(cells[5 + K + c], row, schema.covariates[c]);
      open = true;
    } else {
      if (cells[1] != cur.respondent_id)
        throw IntegrityError("situation '" + sid +
                             "' has conflicting respondent ids");
      for (int c = 0; c < C; ++c) {
        const double v = parse_cell(cells[5 + K + c], row, schema.covariates[c]);
        if (v != cur.covariates[c])
          throw IntegrityError("covariate '" + schema.covariates[c] +
                               "' varies within situation '" + sid + "'");
      }
    }

    AlternativeRecord alt;
    alt.alt_id = cells[2];
    const bool chosen = parse_flag(cells[3], row, "chosen");
    alt.available = parse_flag(cells[4], row, "available");
    alt.attributes.resize(K);
    for (int k = 0; k < K; ++k)
      alt.attributes[k] = parse_cell(cells[5 + k], row, schema.attributes[k].name);
    chosen_rows.push_back(chosen ? 1 : 0);
    if (chosen) cur.chosen = static_cast<int>(cur.alternatives.size());
    cur.alternatives.push_back(std::move(alt));
  }
  if (open) close_situation();

  if (ds.situations.empty()) throw ParseError("'" + path + "' has no data rows");

  const auto report = validate_dataset(ds);
  for (const auto& f : report.findings)
    if (f.severity == Severity::Error)
      throw IntegrityError("'" + path + "': " + f.message);
  return ds;
}

void write_csv(const ChoiceDataset& ds, const std::string& path,
               const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  if (!header_comment.empty()) {
    std::istringstream lines(header_comment);
    std::string l;
    while (std::getline(lines, l)) out << "# " << l << '\n';
  }
  out << "situation_id,respondent_id,alt_id,chosen,available";
  for (const auto& a : ds.schema.attributes) out << ',' << a.name;
  for (const auto& c : ds.schema.covariates) out << ',' << c;
  out << '\n';
  for (const auto& s : ds.situations) {
    for (size_t j = 0; j < s.alternatives.size(); ++j) {
      const auto& alt = s.alternatives[j];
      out << s.situation_id << ',' << s.respondent_id << ',' << alt.alt_id << ','
          << (s.chosen == static_cast<int>(j) ? '1' : '0') << ','
          << (alt.available ? '1' : '0');
      for (double v : alt.attributes) out << ',' << format_double(v);
      for (double v : s.covariates) out << ',' << format_double(v);
      out << '\n';
    }
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

ValidationReport validate_dataset(const ChoiceDataset& ds) {
  ValidationReport report;
  if (ds.situations.empty()) {
    report.findings.push_back({Severity::Error, "empty", "dataset has no situations"});
    return report;
  }
  const int K = ds.schema.n_attributes();

  long diff_rows = 0;
  for (const auto& s : ds.situations) {
    if (s.n_alternatives() > 0) diff_rows += s.n_alternatives() - 1;

    if (s.chosen < 0 || s.chosen >= s.n_alternatives()) {
      report.findings.push_back(
          {Severity::Error, "no-chosen",
           "situation '" + s.situation_id + "' has no chosen alternative"});
    } else if (!s.alternatives[s.chosen].available) {
      report.findings.push_back(
          {Severity::Error, "unavailable-chosen",
           "situation '" + s.situation_id + "' chose an unavailable alternative"});
    }
    if (s.n_available() < 2)
      report.findings.push_back(
          {Severity::Error, "too-few-alternatives",
           "situation '" + s.situation_id + "' has fewer than 2 available alternatives"});

    for (const auto& alt : s.alternatives) {
      if (static_cast<int>(alt.attributes.size()) != K) {
        report.findings.push_back(
            {Severity::Error, "attribute-count",
             "situation '" + s.situation_id + "' alternative '" + alt.alt_id +
                 "' has " + std::to_string(alt.attributes.size()) +
                 " attributes (schema has " + std::to_string(K) + ")"});
        continue;
      }
      for (int k = 0; k < K; ++k) {
        const auto& spec = ds.schema.attributes[k];
        const double v = alt.attributes[k];
        if (!std::isfinite(v)) {
          report.findings.push_back(
              {Severity::Error, "non-finite",
               "situation '" + s.situation_id + "' attribute '" + spec.name +
                   "' is not finite"});
          continue;
        }
        bool ok = true;
        if (spec.kind == AttrKind::Binary) ok = (v == 0.0 || v == 1.0);
        if (spec.kind == AttrKind::Categorical)
          ok = std::find(spec.levels.begin(), spec.levels.end(), v) !=
               spec.levels.end();
        if (!ok)
          report.findings.push_back(
              {Severity::Warning, "attribute-range",
               "situation '" + s.situation_id + "' attribute '" + spec.name +
                   "' value " + format_double(v) + " outside declared range"});
      }
    }
  }

  // Identification: rank of the within-situation differenced design. An
  // attribute whose differences are all zero (or a collinear combination)
  // cannot move any choice probability.
  if (K > 0 && diff_rows > 0 && !report.has_errors()) {
    Eigen::MatrixXd D(diff_rows, K);
    long r = 0;
    for (const auto& s : ds.situations) {
      for (int j = 1; j < s.n_alternatives(); ++j) {
        for (int k = 0; k < K; ++k)
          D(r, k) = s.alternatives[j].attributes[k] - s.alternatives[0].attributes[k];
        ++r;
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-10 * (sv.size() > 0 ? sv(0) : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > cutoff) ++rank;
    if (rank < K) {
      const auto& V = svd.matrixV();
      std::vector<bool> flagged(K, false);
      for (int i = rank; i < sv.size(); ++i) {
        int worst = 0;
        for (int k = 1; k < K; ++k)
          if (std::abs(V(k, i)) > std::abs(V(worst, i))) worst = k;
        flagged[worst] = true;
      }
      for (int k = 0; k < K; ++k)
        if (flagged[k])
          report.findings.push_back(
              {Severity::Warning, "non-identified",
               "attribute '" + ds.schema.attributes[k].name +
                   "' has no identifying within-situation variation"});
    }
  }
  return report;
}

namespace {

ChoiceDataset subset(const ChoiceDataset& ds, const std::vector<int>& idx) {
  ChoiceDataset out;
  out.schema = ds.schema;
  out.situations.reserve(idx.size());
  for (int i : idx) out.situations.push_back(ds.situations[i]);
  return out;
}

}  // namespace

std::vector<FoldPair> split_kfold(const ChoiceDataset& ds, int folds,
                                  std::uint64_t seed, bool by_respondent) {
  const int n = ds.n_situations();
  if (folds < 2) throw Error("folds must be >= 2, got " + std::to_string(folds));

  // Units are situations, or whole respondents when requested.
  std::vector<std::vector<int>> units;
  if (by_respondent) {
    std::vector<std::string> order;
    std::vector<std::vector<int>> members;
    for (int i = 0; i < n; ++i) {
      const auto& rid = ds.situations[i].respondent_id;
      auto it = std::find(order.begin(), order.end(), rid);
      if (it == order.end()) {
        order.push_back(rid);
        members.push_back({i});
      } else {
        members[it - order.begin()].push_back(i);
      }
    }
    units = std::move(members);
  } else {
    units.resize(n);
    for (int i = 0; i < n; ++i) units[i] = {i};
  }

  const int u = static_cast<int>(units.size());
  if (folds > u)
    throw Error("folds (" + std::to_string(folds) + ") exceeds unit count (" +
                std::to_string(u) + ")");

  std::vector<int> perm(u);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, "split");
  for (int i = u - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<int>(rng.below(i + 1))]);

  std::vector<FoldPair> out;
  out.reserve(folds);
  int start = 0;
  for (int f = 0; f < folds; ++f) {
    const int size = u / folds + (f < u % folds ? 1 : 0);
    std::vector<bool> in_test(n, false);
    for (int p = start; p < start + size; ++p)
      for (int i : units[perm[p]]) in_test[i] = true;
    start += size;

    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < n; ++i)
      (in_test[i] ? test_idx : train_idx).push_back(i);
    out.push_back({subset(ds, train_idx), subset(ds, test_idx)});
  }
  return out;
}

}  // namespace dcm
