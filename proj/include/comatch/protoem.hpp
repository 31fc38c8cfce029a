#pragma once

// ProtoEM: cluster historical decision records into prototypes, then estimate
// one confusion matrix per prototype with EM, without ground truth.
//
//   E-step: gamma_i = fuse(M_i, H_i, phi)                (posterior over y)
//   M-step: N[q][k] = sum_i 1[H_i = q] * gamma_i[k]
//           phi[q][k] = (N[q][k] + alpha) / (sum_q' N[q'][k] + C * alpha)
//
// The M-step is the column-stochastic maximizer of the expected complete-data
// log-likelihood sum_i sum_k gamma_i[k] log phi[H_i][k] (alpha = 0).

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/fusion.hpp"
#include "comatch/prototypes.hpp"

namespace comatch {

inline std::vector<Vector> e_step(const std::vector<DecisionRecord>& records, const ConfusionMatrix& phi) {
  std::vector<Vector> posteriors;
  posteriors.reserve(records.size());
  for (const auto& r : records)
    posteriors.push_back(fuse({r.ref, r.machine_probs}, {r.ref, r.human_label}, phi).posterior);
  return posteriors;
}

inline ConfusionMatrix m_step(const std::vector<DecisionRecord>& records, const std::vector<Vector>& posteriors,
                              double alpha, std::size_t categories) {
  if (records.size() != posteriors.size()) throw RangeError("m_step: records/posteriors length mismatch");
  if (alpha < 0.0) throw ConfigError("m_step: smoothing must be >= 0");
  const std::size_t c = categories;
  std::vector<std::vector<double>> counts(c, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Label h = records[i].human_label;
    if (h >= c) throw RangeError("m_step: human label out of range");
    for (std::size_t k = 0; k < c; ++k) counts[h][k] += posteriors[i][k];
  }
  for (std::size_t k = 0; k < c; ++k) {
    double column = 0.0;
    for (std::size_t q = 0; q < c; ++q) column += counts[q][k];
    const double denom = column + static_cast<double>(c) * alpha;
    if (!(denom > 0.0))
      throw NumericError("m_step: degenerate column " + std::to_string(k) + " (no posterior mass and no smoothing)");
    for (std::size_t q = 0; q < c; ++q) counts[q][k] = (counts[q][k] + alpha) / denom;
  }
  return ConfusionMatrix(counts);
}

inline ConfusionMatrix m_step(const std::vector<DecisionRecord>& records, const std::vector<Vector>& posteriors,
                              double alpha) {
  if (posteriors.empty()) throw RangeError("m_step: category count unknown for an empty record set");
  return m_step(records, posteriors, alpha, posteriors.front().size());
}

/// sum_i sum_k gamma_i[k] * log phi[H_i][k], with 0 * log 0 taken as 0.
inline double expected_log_likelihood(const std::vector<DecisionRecord>& records,
                                      const std::vector<Vector>& posteriors, const ConfusionMatrix& phi) {
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto row = phi.row(records[i].human_label);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double g = posteriors[i][k];
      if (g == 0.0) continue;
      if (row[k] <= 0.0)
        throw NumericError("expected_log_likelihood: log(0) with positive posterior mass at record " +
                           std::to_string(i));
      total += g * std::log(row[k]);
    }
  }
  return total;
}

struct EmTraceEntry {
  std::size_t prototype = 0;
  std::size_t iter = 0;
  // Surrogate at (gamma_t, phi_t) and at (gamma_t, phi_{t+1}).
  double ell_before = 0.0;
  double ell = 0.0;
  double max_delta = 0.0;
};

struct ProtoEmResult {
  PrototypeModel model;
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> records_per_prototype;
  std::vector<EmTraceEntry> trace;
  std::vector<std::string> warnings;
};

struct EmRun {
  ConfusionMatrix phi;
  std::vector<EmTraceEntry> trace;
};

/// EM for a single record group, starting from (1 - eps) I + eps / C J.
inline EmRun run_em(const std::vector<DecisionRecord>& records, std::size_t categories, const ProtoEmConfig& cfg,
                    std::size_t prototype_id = 0) {
  EmRun run{ConfusionMatrix::smoothed_identity(categories, cfg.init_epsilon), {}};
  if (records.empty()) return run;
  for (std::size_t t = 0; t < cfg.em_iterations; ++t) {
    const auto posteriors = e_step(records, run.phi);
    ConfusionMatrix next = m_step(records, posteriors, cfg.smoothing, categories);
    EmTraceEntry entry;
    entry.prototype = prototype_id;
    entry.iter = t + 1;
    entry.ell_before = expected_log_likelihood(records, posteriors, run.phi);
    entry.ell = expected_log_likelihood(records, posteriors, next);
    entry.max_delta = next.max_abs_diff(run.phi);
    run.trace.push_back(entry);
    run.phi = std::move(next);
    if (cfg.convergence_tol > 0.0 && entry.max_delta < cfg.convergence_tol) break;
  }
  return run;
}

/// Full ProtoEM fit. Prototypes run independently and, when `threads` > 1, in
/// parallel; the result does not depend on the schedule.
inline ProtoEmResult fit_protoem(const DecisionLog& log, const ProtoEmConfig& cfg, std::size_t threads = 1) {
  auto cfg_report = validate(cfg);
  if (!cfg_report.ok()) throw ConfigError("protoem config: " + cfg_report.str());
  const std::size_t c = log.categories.size();
  if (c < 2) throw ConfigError("decision log must declare at least 2 categories");
  const std::size_t p = cfg.prototypes;
  if (log.records.size() < p * c)
    throw InsufficientDataError("ProtoEM needs at least P*C = " + std::to_string(p * c) + " records, got " +
                                std::to_string(log.records.size()));
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    if (r.embedding.size() != log.dimension)
      throw FormatError("record " + std::to_string(i) + ": embedding dimension " + std::to_string(r.embedding.size()) +
                        " != " + std::to_string(log.dimension));
    if (r.machine_probs.size() != c || r.human_label >= c)
      throw ValidationError("record " + std::to_string(i) + ": labels or machine probs inconsistent with C");
  }

  std::vector<Vector> points;
  points.reserve(log.records.size());
  for (const auto& r : log.records) points.push_back(r.embedding);
  KMeansResult km = kmeans_fit(points, p, cfg.seed);

  ProtoEmResult res;
  res.assignments = km.assignments;
  std::vector<std::vector<DecisionRecord>> groups(p);
  for (std::size_t i = 0; i < log.records.size(); ++i) groups[km.assignments[i]].push_back(log.records[i]);
  for (std::size_t k = 0; k < p; ++k) {
    res.records_per_prototype.push_back(groups[k].size());
    if (groups[k].size() < c)
      res.warnings.push_back("prototype " + std::to_string(k) + " has only " + std::to_string(groups[k].size()) +
                             " records (< C); its matrix is dominated by smoothing");
  }

  std::vector<EmRun> runs(p);
  auto work = [&](std::size_t k) { runs[k] = run_em(groups[k], c, cfg, k); };
  if (threads <= 1 || p == 1) {
    for (std::size_t k = 0; k < p; ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < std::min(threads, p); ++t)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < p; k = next++) work(k);
      });
    for (auto& th : pool) th.join();
  }

  res.model.dimension = log.dimension;
  res.model.centroids = std::move(km.centroids);
  res.model.config = cfg;
  for (auto& run : runs) {
    res.model.confusions.push_back(run.phi);
    res.trace.insert(res.trace.end(), run.trace.begin(), run.trace.end());
  }
  return res;
}

inline PrototypeModel run_protoem(const DecisionLog& log, const ProtoEmConfig& cfg) {
  return fit_protoem(log, cfg).model;
}

/// Single global confusion matrix; the prototype centroid is the embedding mean.
inline PrototypeModel run_naive_em(const DecisionLog& log, ProtoEmConfig cfg) {
  cfg.prototypes = 1;
  return fit_protoem(log, cfg).model;
}

}  // namespace comatch
