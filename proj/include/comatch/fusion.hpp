#pragma once

// Machine calibration by temperature scaling and the closed-form Bayes fusion
// of a discrete human label with a machine distribution:
//
//   posterior[j] = phi(h, j) * M[j] / sum_q phi(h, q) * M[q]
//
// which follows from p(y | M, H) ∝ p(H | y) p(y | M) under conditional
// independence of H and M given y.

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/embedding.hpp"
#include "comatch/prototypes.hpp"

namespace comatch {

inline constexpr double kFusionDenominatorFloor = 1e-12;

struct CalibrationConfig {
  double temperature = 1.0;
  double fit_low = 0.05;
  double fit_high = 10.0;
  double fit_tolerance = 1e-4;
};

inline Vector apply_temperature(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw NumericError("temperature must be a positive finite number");
  double top = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (!std::isfinite(z)) throw NumericError("non-finite logit");
    top = std::max(top, z / temperature);
  }
  Vector p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] / temperature - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

/// Mean negative log-likelihood of `labels` under softmax(logits / T).
inline double temperature_nll(const std::vector<Vector>& logits, const std::vector<Label>& labels,
                              double temperature) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (double z : logits[i]) top = std::max(top, z / temperature);
    double lse = 0.0;
    for (double z : logits[i]) lse += std::exp(z / temperature - top);
    total += top + std::log(lse) - logits[i][labels[i]] / temperature;
  }
  return total / static_cast<double>(logits.size());
}

/// Golden-section search for the NLL-minimizing temperature inside the
/// configured bounds. Falls back to T = 1 if that candidate scores better.
inline double fit_temperature(const std::vector<Vector>& logits, const std::vector<Label>& labels,
                              const CalibrationConfig& cfg = {}) {
  if (logits.size() != labels.size()) throw RangeError("fit_temperature: logits/labels length mismatch");
  if (logits.size() < 10)
    throw InsufficientDataError("fit_temperature needs at least 10 labeled examples, got " +
                                std::to_string(logits.size()));
  if (!(cfg.fit_low > 0.0 && cfg.fit_low < cfg.fit_high)) throw ConfigError("fit bounds must satisfy 0 < low < high");
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] >= logits[i].size()) throw RangeError("fit_temperature: label out of range");
    for (double z : logits[i])
      if (!std::isfinite(z)) throw NumericError("fit_temperature: non-finite logit");
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = cfg.fit_low, b = cfg.fit_high;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = temperature_nll(logits, labels, c);
  double fd = temperature_nll(logits, labels, d);
  while (b - a > cfg.fit_tolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = temperature_nll(logits, labels, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = temperature_nll(logits, labels, d);
    }
  }
  const double best = 0.5 * (a + b);
  if (cfg.fit_low <= 1.0 && 1.0 <= cfg.fit_high &&
      temperature_nll(logits, labels, 1.0) < temperature_nll(logits, labels, best))
    return 1.0;
  return best;
}

/// Fuses one human label with one machine distribution under `phi`. When the
/// normalizer vanishes the machine distribution is returned with the fallback
/// flag set.
inline FusedDecision fuse(const MachineDecision& machine, const HumanDecision& human, const ConfusionMatrix& phi) {
  const std::size_t c = machine.probs.size();
  if (phi.size() != c) throw RangeError("fuse: confusion matrix size does not match the machine distribution");
  if (human.label >= c) throw RangeError("fuse: human label " + std::to_string(human.label) + " >= C");
  FusedDecision out;
  out.ref = machine.ref;
  out.posterior.resize(c);
  const auto likelihood = phi.row(human.label);
  double denom = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    out.posterior[j] = likelihood[j] * machine.probs[j];
    denom += out.posterior[j];
  }
  if (denom < kFusionDenominatorFloor) {
    out.posterior = machine.probs;
    out.fallback_used = true;
  } else {
    for (double& p : out.posterior) p /= denom;
  }
  out.label = argmax(out.posterior);
  return out;
}

/// Builds a FusedDecision from a label choice alone (one-hot posterior).
inline FusedDecision one_hot_decision(const SentenceRef& ref, Label label, std::size_t categories) {
  FusedDecision d;
  d.ref = ref;
  d.posterior.assign(categories, 0.0);
  d.posterior[label] = 1.0;
  d.label = label;
  return d;
}

/// Fuses every sentence of `doc`, taking phi from the nearest prototype of the
/// sentence embedding.
inline std::vector<FusedDecision> fuse_document(const Document& doc, const std::vector<MachineDecision>& machine,
                                                const std::vector<HumanDecision>& human, const PrototypeModel& model,
                                                const EmbeddingMap& embeddings) {
  std::map<SentenceRef, const MachineDecision*> m_by_ref;
  std::map<SentenceRef, const HumanDecision*> h_by_ref;
  for (const auto& m : machine) m_by_ref[m.ref] = &m;
  for (const auto& h : human) h_by_ref[h.ref] = &h;

  std::vector<FusedDecision> out;
  out.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) {
    const SentenceRef ref = s.ref();
    auto mi = m_by_ref.find(ref);
    auto hi = h_by_ref.find(ref);
    auto ei = embeddings.find(ref);
    if (mi == m_by_ref.end()) throw CompletenessError("missing machine decision for " + to_string(ref));
    if (hi == h_by_ref.end()) throw CompletenessError("missing human decision for " + to_string(ref));
    if (ei == embeddings.end()) throw CompletenessError("missing embedding for " + to_string(ref));
    const std::size_t k = assign_nearest(ei->second, model.centroids);
    out.push_back(fuse(*mi->second, *hi->second, model.confusions[k]));
  }
  return out;
}

}  // namespace comatch
