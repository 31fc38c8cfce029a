#pragma once

// Relation prediction for a case pair from fused key-sentence decisions.
//
// The reference scorer compares, for each key category, the posterior-weighted
// embedding centroids of the two documents by cosine similarity, maps the mean
// cosine from [-1, 1] to [0, 1], and counts how many thresholds lie strictly
// below the score. Other scorers plug in through MatcherRegistry.

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/embedding.hpp"

namespace comatch {

struct MatchConfig {
  std::size_t relation_count = 3;
  std::vector<double> thresholds{0.45, 0.7};
};

inline ValidationReport validate(const MatchConfig& cfg) {
  ValidationReport r;
  if (cfg.relation_count < 1) r.add("relation_count: must be >= 1");
  if (cfg.thresholds.size() + 1 != cfg.relation_count) r.add("thresholds: need relation_count - 1 values");
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
    if (cfg.thresholds[i] < 0.0 || cfg.thresholds[i] > 1.0) r.add("thresholds: values must lie in [0,1]");
    if (i > 0 && !(cfg.thresholds[i] > cfg.thresholds[i - 1])) r.add("thresholds: must be strictly increasing");
  }
  return r;
}

struct CategorySimilarity {
  Label category = 0;
  double source_mass = 0.0;
  double target_mass = 0.0;
  std::optional<double> cosine;  // empty when either side has no mass
};

struct MatchResult {
  std::size_t relation = 0;
  double score = 0.0;
  std::vector<CategorySimilarity> breakdown;
  std::optional<std::string> diagnostic;
};

inline std::size_t relation_for_score(double score, const std::vector<double>& thresholds) {
  std::size_t r = 0;
  for (double t : thresholds)
    if (t < score) ++r;
  return r;
}

namespace detail {

inline std::vector<std::pair<Vector, double>> category_centroids(const Document& doc,
                                                                 const std::vector<FusedDecision>& fused,
                                                                 const EmbeddingMap& embeddings,
                                                                 std::size_t categories) {
  std::map<SentenceRef, const FusedDecision*> by_ref;
  for (const auto& f : fused) by_ref[f.ref] = &f;
  std::vector<std::pair<Vector, double>> out(categories);
  for (const auto& s : doc.sentences) {
    const auto ref = s.ref();
    auto fi = by_ref.find(ref);
    if (fi == by_ref.end()) throw CompletenessError("no fused decision for " + to_string(ref));
    auto ei = embeddings.find(ref);
    if (ei == embeddings.end()) throw CompletenessError("no embedding for " + to_string(ref));
    const auto& post = fi->second->posterior;
    if (post.size() != categories) throw RangeError("fused posterior size mismatch for " + to_string(ref));
    for (std::size_t c = 1; c < categories; ++c) {
      const double w = post[c];
      if (w <= 0.0) continue;
      auto& [centroid, mass] = out[c];
      if (centroid.empty()) centroid.assign(ei->second.size(), 0.0);
      for (std::size_t d = 0; d < centroid.size(); ++d) centroid[d] += w * ei->second[d];
      mass += w;
    }
  }
  for (auto& [centroid, mass] : out)
    if (mass > 0.0)
      for (double& x : centroid) x /= mass;
  return out;
}

inline double cosine(const Vector& a, const Vector& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

}  // namespace detail

inline MatchResult match_pair(const CasePair& pair, const std::vector<FusedDecision>& fused_source,
                              const std::vector<FusedDecision>& fused_target, const EmbeddingMap& embeddings,
                              const MatchConfig& cfg = {}) {
  auto cfg_report = validate(cfg);
  if (!cfg_report.ok()) throw ConfigError("match config: " + cfg_report.str());
  std::size_t categories = 0;
  if (!fused_source.empty()) categories = fused_source.front().posterior.size();
  if (categories < 2) throw RangeError("match_pair: fused decisions must cover at least 2 categories");

  const auto src = detail::category_centroids(pair.source, fused_source, embeddings, categories);
  const auto tgt = detail::category_centroids(pair.target, fused_target, embeddings, categories);

  MatchResult res;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 1; c < categories; ++c) {
    CategorySimilarity sim{c, src[c].second, tgt[c].second, std::nullopt};
    if (sim.source_mass > 0.0 && sim.target_mass > 0.0) {
      sim.cosine = detail::cosine(src[c].first, tgt[c].first);
      total += (*sim.cosine + 1.0) / 2.0;
      ++used;
    }
    res.breakdown.push_back(sim);
  }
  if (used == 0) {
    res.score = 0.0;
    res.relation = 0;
    res.diagnostic = "no key category carries posterior mass in both documents";
    return res;
  }
  res.score = std::clamp(total / static_cast<double>(used), 0.0, 1.0);
  res.relation = relation_for_score(res.score, cfg.thresholds);
  return res;
}

using MatcherFn = std::function<MatchResult(const CasePair&, const std::vector<FusedDecision>&,
                                            const std::vector<FusedDecision>&, const EmbeddingMap&,
                                            const MatchConfig&)>;

/// Name -> scorer table. "reference" is always present.
class MatcherRegistry {
 public:
  MatcherRegistry() { add("reference", match_pair); }

  void add(const std::string& name, MatcherFn fn) {
    std::lock_guard lock(mutex_);
    if (name.empty()) throw ConfigError("matcher name must be non-empty");
    if (!table_.emplace(name, std::move(fn)).second) throw ConfigError("matcher '" + name + "' is already registered");
  }

  MatcherFn get(const std::string& name) const {
    std::lock_guard lock(mutex_);
    auto it = table_.find(name);
    if (it == table_.end()) {
      std::string known;
      for (const auto& [n, _] : table_) known += (known.empty() ? "" : ", ") + n;
      throw ConfigError("unknown matcher '" + name + "'; available: " + known);
    }
    return it->second;
  }

  std::vector<std::string> names() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [n, _] : table_) out.push_back(n);
    return out;
  }

  static MatcherRegistry& global() {
    static MatcherRegistry registry;
    return registry;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, MatcherFn> table_;
};

inline void register_matcher(const std::string& name, MatcherFn fn) { MatcherRegistry::global().add(name, std::move(fn)); }

inline MatcherFn select_matcher(const std::string& name) { return MatcherRegistry::global().get(name); }

}  // namespace comatch
