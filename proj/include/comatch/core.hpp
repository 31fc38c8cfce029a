#pragma once

// Shared domain types for human-machine decision fusion.
//
// Conventions used throughout the library:
//   * category index 0 is always "Not Key";
//   * confusion matrices are column-stochastic, entry (h, y) = p(human says h | truth y);
//   * probability vectors must sum to 1 within kProbTolerance and are
//     renormalized exactly when they do.

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "comatch/errors.hpp"

namespace comatch {

inline constexpr double kProbTolerance = 1e-9;
// Sums this close to 1 are left untouched so encode/decode round-trips are exact.
inline constexpr double kRenormalizeSlack = 1e-12;

using Label = std::size_t;
using Vector = std::vector<double>;

struct SentenceRef {
  std::string doc_id;
  std::size_t index = 0;

  auto operator<=>(const SentenceRef&) const = default;
  bool operator==(const SentenceRef&) const = default;
};

inline std::string to_string(const SentenceRef& ref) {
  return ref.doc_id + "#" + std::to_string(ref.index);
}

struct CategorySet {
  std::vector<std::string> names;
  std::vector<std::size_t> importance_rank;

  std::size_t size() const { return names.size(); }

  // Categories ranked by position: index i gets importance rank i.
  static CategorySet ranked(std::vector<std::string> names) {
    CategorySet cats;
    cats.importance_rank.resize(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) cats.importance_rank[i] = i;
    cats.names = std::move(names);
    return cats;
  }

  // "Not Key" plus C-1 generic key categories.
  static CategorySet generic(std::size_t count) {
    std::vector<std::string> names{"Not Key"};
    for (std::size_t i = 1; i < count; ++i) names.push_back("Key " + std::to_string(i));
    return ranked(std::move(names));
  }

  bool operator==(const CategorySet&) const = default;
};

struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  std::optional<Label> true_label;
  // Precomputed embedding carried by synthetic corpora; absent for text corpora.
  std::optional<Vector> vector;
  // Latent generating prototype of synthetic corpora.
  std::optional<std::size_t> group;

  SentenceRef ref() const { return {doc_id, index}; }
  bool operator==(const Sentence&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool operator==(const Document&) const = default;
};

struct CasePair {
  Document source;
  Document target;
  std::optional<std::size_t> true_relation;

  bool operator==(const CasePair&) const = default;
};

struct HumanDecision {
  SentenceRef ref;
  Label label = 0;

  bool operator==(const HumanDecision&) const = default;
};

struct MachineDecision {
  SentenceRef ref;
  Vector probs;

  bool operator==(const MachineDecision&) const = default;
};

struct FusedDecision {
  SentenceRef ref;
  Vector posterior;
  Label label = 0;
  bool fallback_used = false;

  bool operator==(const FusedDecision&) const = default;
};

struct ValidationReport {
  std::vector<std::string> issues;

  bool ok() const { return issues.empty(); }
  void add(std::string issue) { issues.push_back(std::move(issue)); }
  void merge(const ValidationReport& other, const std::string& prefix) {
    for (const auto& issue : other.issues) issues.push_back(prefix + issue);
  }
  std::string str() const {
    std::string out;
    for (const auto& issue : issues) {
      if (!out.empty()) out += "; ";
      out += issue;
    }
    return out;
  }
};

/// Index of the largest entry; ties go to the lowest index.
inline Label argmax(std::span<const double> values) {
  Label best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline ValidationReport validate_distribution(std::span<const double> probs,
                                              const std::string& path = "probs") {
  ValidationReport report;
  if (probs.empty()) {
    report.add(path + ": empty distribution");
    return report;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i])) {
      report.add(path + "[" + std::to_string(i) + "]: not finite");
      return report;
    }
    if (probs[i] < 0.0) report.add(path + "[" + std::to_string(i) + "]: negative");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > kProbTolerance) {
    report.add(path + ": probs sum " + format_double(sum) + " != 1");
  }
  return report;
}

/// Validates a distribution and renormalizes it exactly. Throws ValidationError
/// when it is further than kProbTolerance from summing to one.
inline Vector normalized_distribution(Vector probs, const std::string& path = "probs") {
  auto report = validate_distribution(probs, path);
  if (!report.ok()) throw ValidationError(report.str());
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > kRenormalizeSlack)
    for (double& p : probs) p /= sum;
  return probs;
}

/// Column-stochastic C x C matrix; entry (h, y) = p(H = h | y).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;

  /// Rows indexed by human label. Throws ValidationError unless every column
  /// sums to 1 within tolerance; columns are then renormalized exactly.
  explicit ConfusionMatrix(const std::vector<std::vector<double>>& rows) {
    auto report = validate_rows(rows);
    if (!report.ok()) throw ValidationError("confusion matrix: " + report.str());
    size_ = rows.size();
    entries_.resize(size_ * size_);
    for (std::size_t h = 0; h < size_; ++h)
      for (std::size_t y = 0; y < size_; ++y) entries_[h * size_ + y] = rows[h][y];
    renormalize_columns();
  }

  static ConfusionMatrix identity(std::size_t c) {
    return smoothed_identity(c, 0.0);
  }

  static ConfusionMatrix uniform(std::size_t c) { return smoothed_identity(c, 1.0); }

  /// (1 - eps) * I + eps / C * J
  static ConfusionMatrix smoothed_identity(std::size_t c, double eps) {
    std::vector<std::vector<double>> rows(c, std::vector<double>(c, eps / static_cast<double>(c)));
    for (std::size_t i = 0; i < c; ++i) rows[i][i] += 1.0 - eps;
    return ConfusionMatrix(rows);
  }

  static ValidationReport validate_rows(const std::vector<std::vector<double>>& rows) {
    ValidationReport report;
    const std::size_t c = rows.size();
    if (c < 2) {
      report.add("entries: need at least 2 categories");
      return report;
    }
    for (std::size_t h = 0; h < c; ++h) {
      if (rows[h].size() != c) {
        report.add("entries[" + std::to_string(h) + "]: row length " +
                   std::to_string(rows[h].size()) + " != " + std::to_string(c));
        return report;
      }
    }
    for (std::size_t y = 0; y < c; ++y) {
      double sum = 0.0;
      for (std::size_t h = 0; h < c; ++h) {
        const double v = rows[h][y];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kProbTolerance) {
          report.add("entries[" + std::to_string(h) + "][" + std::to_string(y) +
                     "]: outside [0,1]");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kProbTolerance) {
        report.add("column " + std::to_string(y) + ": sum " + format_double(sum) + " != 1");
      }
    }
    return report;
  }

  std::size_t size() const { return size_; }
  double operator()(Label h, Label y) const { return entries_[h * size_ + y]; }

  /// Likelihood row p(H = h | y) over all y.
  std::span<const double> row(Label h) const {
    return std::span<const double>(entries_).subspan(h * size_, size_);
  }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(size_);
    for (std::size_t h = 0; h < size_; ++h) out[h].assign(row(h).begin(), row(h).end());
    return out;
  }

  double max_abs_diff(const ConfusionMatrix& other) const {
    double m = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      m = std::max(m, std::abs(entries_[i] - other.entries_[i]));
    return m;
  }

  double frobenius_distance(const ConfusionMatrix& other) const {
    double s = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const double d = entries_[i] - other.entries_[i];
      s += d * d;
    }
    return std::sqrt(s);
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  void renormalize_columns() {
    for (std::size_t y = 0; y < size_; ++y) {
      double sum = 0.0;
      for (std::size_t h = 0; h < size_; ++h) sum += entries_[h * size_ + y];
      if (std::abs(sum - 1.0) <= kRenormalizeSlack) continue;
      for (std::size_t h = 0; h < size_; ++h) entries_[h * size_ + y] /= sum;
    }
  }

  std::size_t size_ = 0;
  std::vector<double> entries_;
};

struct DecisionRecord {
  SentenceRef ref;
  Vector embedding;
  Label human_label = 0;
  Vector machine_probs;
  // Ground truth kept by synthetic logs for evaluation only; EM never reads it.
  std::optional<Label> true_label;
  std::optional<std::size_t> group;

  bool operator==(const DecisionRecord&) const = default;
};

struct DecisionLog {
  std::size_t dimension = 0;
  CategorySet categories;
  std::vector<DecisionRecord> records;

  bool operator==(const DecisionLog&) const = default;
};

struct ProtoEmConfig {
  std::size_t prototypes = 4;
  std::size_t em_iterations = 40;
  double smoothing = 1.0;
  double init_epsilon = 0.2;
  std::uint64_t seed = 0;
  // Early stop when the largest entry change falls below this; 0 disables.
  double convergence_tol = 1e-7;

  bool operator==(const ProtoEmConfig&) const = default;
};

struct PrototypeModel {
  std::size_t dimension = 0;
  std::vector<Vector> centroids;
  std::vector<ConfusionMatrix> confusions;
  ProtoEmConfig config;

  std::size_t size() const { return centroids.size(); }
  std::size_t categories() const { return confusions.empty() ? 0 : confusions.front().size(); }
  bool operator==(const PrototypeModel&) const = default;
};

// ---------------------------------------------------------------------------
// validate(): every violated invariant with a readable path; never throws.

inline ValidationReport validate(const CategorySet& cats) {
  ValidationReport r;
  const std::size_t c = cats.names.size();
  if (c < 2) r.add("names: need at least 2 categories, got " + std::to_string(c));
  std::set<std::string> seen;
  for (std::size_t i = 0; i < c; ++i) {
    if (cats.names[i].empty()) r.add("names[" + std::to_string(i) + "]: empty");
    if (!seen.insert(cats.names[i]).second)
      r.add("names[" + std::to_string(i) + "]: duplicate '" + cats.names[i] + "'");
  }
  if (c > 0 && cats.names[0] != "Not Key") r.add("names[0]: must be 'Not Key'");
  if (cats.importance_rank.size() != c) {
    r.add("importance_rank: length " + std::to_string(cats.importance_rank.size()) +
          " != " + std::to_string(c));
  } else {
    std::vector<bool> hit(c, false);
    for (std::size_t i = 0; i < c; ++i) {
      const auto rank = cats.importance_rank[i];
      if (rank >= c || hit[rank]) {
        r.add("importance_rank: not a permutation of 0.." + std::to_string(c - 1));
        break;
      }
      hit[rank] = true;
    }
    if (c > 0 && cats.importance_rank[0] != 0) r.add("importance_rank[0]: must be 0");
  }
  return r;
}

inline ValidationReport validate(const Document& doc, std::optional<std::size_t> categories = {}) {
  ValidationReport r;
  if (doc.doc_id.empty()) r.add("doc_id: empty");
  if (doc.sentences.empty()) r.add("sentences: document is empty");
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const auto& s = doc.sentences[i];
    const std::string path = "sentences[" + std::to_string(i) + "]";
    if (s.index != i) r.add(path + ".index: " + std::to_string(s.index) + " != " + std::to_string(i));
    if (s.doc_id != doc.doc_id) r.add(path + ".doc_id: '" + s.doc_id + "' != '" + doc.doc_id + "'");
    if (categories && s.true_label && *s.true_label >= *categories)
      r.add(path + ".label: " + std::to_string(*s.true_label) + " >= C");
  }
  return r;
}

inline ValidationReport validate(const CasePair& pair, std::optional<std::size_t> categories = {}) {
  ValidationReport r;
  r.merge(validate(pair.source, categories), "source.");
  r.merge(validate(pair.target, categories), "target.");
  if (pair.source.doc_id == pair.target.doc_id) r.add("doc_id: source and target share '" + pair.source.doc_id + "'");
  return r;
}

inline ValidationReport validate(const HumanDecision& d, std::size_t categories) {
  ValidationReport r;
  if (d.label >= categories) r.add("label: " + std::to_string(d.label) + " >= C");
  return r;
}

inline ValidationReport validate(const MachineDecision& d, std::optional<std::size_t> categories = {}) {
  ValidationReport r = validate_distribution(d.probs);
  if (categories && d.probs.size() != *categories)
    r.add("probs: length " + std::to_string(d.probs.size()) + " != C");
  return r;
}

inline ValidationReport validate(const FusedDecision& d) {
  ValidationReport r = validate_distribution(d.posterior, "posterior");
  if (r.ok() && d.label != argmax(d.posterior)) r.add("argmax_label: not the posterior argmax");
  return r;
}

inline ValidationReport validate(const ConfusionMatrix& m) {
  return ConfusionMatrix::validate_rows(m.rows());
}

inline ValidationReport validate(const DecisionRecord& rec, std::size_t dimension, std::size_t categories) {
  ValidationReport r = validate_distribution(rec.machine_probs, "machine_probs");
  if (rec.machine_probs.size() != categories) r.add("machine_probs: length != C");
  if (rec.embedding.size() != dimension)
    r.add("embedding: dimension " + std::to_string(rec.embedding.size()) + " != " + std::to_string(dimension));
  if (rec.human_label >= categories) r.add("human_label: " + std::to_string(rec.human_label) + " >= C");
  if (rec.true_label && *rec.true_label >= categories) r.add("true_label: >= C");
  return r;
}

inline ValidationReport validate(const DecisionLog& log) {
  ValidationReport r;
  if (log.dimension == 0) r.add("dimension: must be positive");
  r.merge(validate(log.categories), "categories.");
  for (std::size_t i = 0; i < log.records.size(); ++i)
    r.merge(validate(log.records[i], log.dimension, log.categories.size()),
            "records[" + std::to_string(i) + "].");
  return r;
}

inline ValidationReport validate(const ProtoEmConfig& cfg) {
  ValidationReport r;
  if (cfg.prototypes == 0) r.add("prototypes: must be >= 1");
  if (cfg.smoothing < 0.0) r.add("smoothing: must be >= 0");
  if (!(cfg.init_epsilon >= 0.0 && cfg.init_epsilon < 1.0)) r.add("init_epsilon: must lie in [0,1)");
  if (cfg.convergence_tol < 0.0) r.add("convergence_tol: must be >= 0");
  return r;
}

inline ValidationReport validate(const PrototypeModel& m) {
  ValidationReport r;
  if (m.centroids.empty()) r.add("centroids: need at least one prototype");
  if (m.centroids.size() != m.confusions.size())
    r.add("confusions: count " + std::to_string(m.confusions.size()) + " != centroid count " +
          std::to_string(m.centroids.size()));
  for (std::size_t k = 0; k < m.centroids.size(); ++k)
    if (m.centroids[k].size() != m.dimension) r.add("centroids[" + std::to_string(k) + "]: dimension mismatch");
  for (std::size_t k = 0; k < m.confusions.size(); ++k) {
    r.merge(validate(m.confusions[k]), "confusions[" + std::to_string(k) + "].");
    if (m.confusions[k].size() != m.confusions.front().size())
      r.add("confusions[" + std::to_string(k) + "]: category count mismatch");
  }
  r.merge(validate(m.config), "config.");
  return r;
}

}  // namespace comatch
