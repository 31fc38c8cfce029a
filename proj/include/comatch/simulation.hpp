#pragma once

// Ablation combiners, metrics and the experiment harness.
//
// run_experiment, per grid cell (noise rate x prototype count x EM iterations)
// and per seed:
//   1. split the corpus 50/50 by pair into history and evaluation,
//   2. simulate the machine on every sentence and calibrate it by temperature
//      scaling fitted on the history split,
//   3. simulate the practitioner (per latent group, scaled noise),
//   4. fit ProtoEM and Naive EM on the history decision log,
//   5. score every variant on the evaluation split: key-sentence metrics,
//      relation metrics through the matcher, and Frobenius error of the
//      uncertainty estimate.
// Seeds are derived from (base seed, seed index) only, so every cell sees the
// same corpus split and machine draws, and results do not depend on the
// thread schedule.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/corpus.hpp"
#include "comatch/embedding.hpp"
#include "comatch/fusion.hpp"
#include "comatch/matcher.hpp"
#include "comatch/protoem.hpp"
#include "comatch/simulators.hpp"

namespace comatch {

inline Label combine_intersection(Label machine_argmax, Label human_label) {
  return machine_argmax == human_label ? human_label : 0;
}

inline Label combine_union(Label machine_argmax, Label human_label, const CategorySet& cats) {
  if (machine_argmax >= cats.size() || human_label >= cats.size()) throw RangeError("combine_union: label >= C");
  return cats.importance_rank[human_label] >= cats.importance_rank[machine_argmax] ? human_label : machine_argmax;
}

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Accuracy plus precision/recall/F1 macro-averaged over the classes present in
/// `truth`. A class with no predicted positives has precision 0.
inline Metrics metrics(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw RangeError("metrics: length mismatch");
  if (truth.empty()) throw RangeError("metrics: empty input");
  std::set<Label> classes(truth.begin(), truth.end());
  Metrics m;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (Label c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predicted[i] == c && truth[i] == c) ++tp;
      else if (predicted[i] == c) ++fp;
      else if (truth[i] == c) ++fn;
    }
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.precision += p;
    m.recall += r;
    m.f1 += p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  const auto n = static_cast<double>(classes.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

/// Mean over sentences of ||phi_assigned - phi_true||_F.
inline double frobenius_error(const PrototypeModel& model, const std::map<SentenceRef, ConfusionMatrix>& truth,
                              const EmbeddingMap& embeddings) {
  if (embeddings.empty()) throw RangeError("frobenius_error: no sentences");
  double total = 0.0;
  for (const auto& [ref, vec] : embeddings) {
    auto it = truth.find(ref);
    if (it == truth.end()) throw CompletenessError("frobenius_error: no true matrix for " + to_string(ref));
    total += model.confusions[assign_nearest(vec, model.centroids)].frobenius_distance(it->second);
  }
  return total / static_cast<double>(embeddings.size());
}

enum class Variant { co_match, human_only, machine_only, intersection, union_, naive_em };

inline const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::co_match,     Variant::human_only, Variant::machine_only,
                                      Variant::intersection, Variant::union_,     Variant::naive_em};
  return v;
}

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::co_match: return "co-match";
    case Variant::human_only: return "human-only";
    case Variant::machine_only: return "machine-only";
    case Variant::intersection: return "intersection";
    case Variant::union_: return "union";
    case Variant::naive_em: return "naive-em";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  for (Variant v : all_variants())
    if (to_string(v) == s) return v;
  throw ConfigError("unknown variant '" + s +
                    "' (expected co-match, human-only, machine-only, intersection, union, naive-em)");
}

struct ExperimentConfig {
  std::vector<double> noise_rates{0.1, 0.2, 0.3, 0.4, 0.5};
  HumanNoiseModel noise_model = HumanNoiseModel::drop_to_notkey;
  std::vector<std::size_t> prototype_grid{4};
  std::vector<std::size_t> em_grid{40};
  std::vector<Variant> variants = all_variants();
  std::size_t seeds = 3;
  std::uint64_t base_seed = 0;
  MachineSimConfig machine{};
  bool calibrate = true;
  // Practitioner noise is scaled per latent group (cycled); sentences without a
  // group use the unscaled rate.
  std::vector<double> group_noise_multipliers{0.25, 1.75, 0.75, 1.25};
  double smoothing = 1.0;
  double init_epsilon = 0.2;
  MatchConfig match{};
  std::string matcher = "reference";
  EmbeddingConfig embedding{};
  double history_fraction = 0.5;
  std::size_t threads = 1;
};

struct VariantScores {
  Metrics key;
  Metrics relation;
  std::optional<double> frobenius;
};

struct SeedResult {
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::map<Variant, VariantScores> scores;
};

struct Summary {
  double mean = 0.0;
  double stdev = 0.0;
};

struct VariantSummary {
  std::map<std::string, Summary> values;  // metric name -> mean/stdev across seeds
};

struct CellReport {
  double noise_rate = 0.0;
  HumanNoiseModel noise_model = HumanNoiseModel::drop_to_notkey;
  std::size_t prototypes = 4;
  std::size_t em_iterations = 40;
  std::vector<SeedResult> seeds;
  std::map<Variant, VariantSummary> summary;

  double mean(Variant v, const std::string& metric) const { return summary.at(v).values.at(metric).mean; }
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellReport> cells;
};

inline std::vector<std::pair<std::string, double>> flatten(const VariantScores& s) {
  std::vector<std::pair<std::string, double>> out{
      {"key_accuracy", s.key.accuracy},       {"key_precision", s.key.precision},
      {"key_recall", s.key.recall},           {"key_f1", s.key.f1},
      {"relation_accuracy", s.relation.accuracy}, {"relation_precision", s.relation.precision},
      {"relation_recall", s.relation.recall}, {"relation_f1", s.relation.f1}};
  if (s.frobenius) out.emplace_back("frobenius", *s.frobenius);
  return out;
}

namespace detail {

struct FlatSentence {
  const Sentence* sentence;
  std::size_t pair;
  bool history;
};

// Empirical p(H | y) per latent group; unseen truth columns stay identity.
inline std::map<std::size_t, ConfusionMatrix> empirical_confusions(const std::vector<Label>& truth,
                                                                   const std::vector<Label>& human,
                                                                   const std::vector<std::size_t>& group,
                                                                   std::size_t c) {
  std::map<std::size_t, std::vector<std::vector<double>>> counts;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& m = counts.try_emplace(group[i], std::vector<std::vector<double>>(c, std::vector<double>(c, 0.0))).first->second;
    m[human[i]][truth[i]] += 1.0;
  }
  std::map<std::size_t, ConfusionMatrix> out;
  for (auto& [g, m] : counts) {
    for (std::size_t y = 0; y < c; ++y) {
      double col = 0.0;
      for (std::size_t h = 0; h < c; ++h) col += m[h][y];
      if (col == 0.0) {
        m[y][y] = 1.0;
        continue;
      }
      for (std::size_t h = 0; h < c; ++h) m[h][y] /= col;
    }
    out.emplace(g, ConfusionMatrix(m));
  }
  return out;
}

inline constexpr std::size_t kNoGroup = static_cast<std::size_t>(-1);

}  // namespace detail

inline std::vector<double> parse_noise_grid(const std::string& text);

/// One (cell, seed) evaluation.
inline SeedResult run_cell_seed(const std::vector<CasePair>& corpus, const CategorySet& cats,
                                const EmbeddingMap& embeddings, const ExperimentConfig& cfg, double noise_rate,
                                std::size_t prototypes, std::size_t em_iterations, std::size_t seed_index) {
  const std::size_t c = cats.size();
  SeedResult res;
  res.seed_index = seed_index;
  res.seed = derive_seed(cfg.base_seed, seed_index);

  // Split by pair.
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(res.seed, 1));
  split_rng.shuffle(order);
  const auto n_hist = static_cast<std::size_t>(std::llround(cfg.history_fraction * static_cast<double>(corpus.size())));
  std::vector<bool> is_hist(corpus.size(), false);
  for (std::size_t i = 0; i < n_hist; ++i) is_hist[order[i]] = true;

  std::vector<detail::FlatSentence> flat;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const auto* d : {&corpus[i].source, &corpus[i].target})
      for (const auto& s : d->sentences) flat.push_back({&s, i, is_hist[i]});
  std::vector<Label> truth(flat.size());
  std::vector<std::size_t> groups(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    truth[i] = *flat[i].sentence->true_label;
    groups[i] = flat[i].sentence->group.value_or(detail::kNoGroup);
  }

  // Machine decisions and calibration.
  MachineSimConfig mcfg = cfg.machine;
  mcfg.seed = derive_seed(res.seed, 2);
  const auto machine = simulate_machine(truth, c, mcfg);
  std::vector<Vector> hist_logits;
  std::vector<Label> hist_labels;
  for (std::size_t i = 0; i < flat.size(); ++i)
    if (flat[i].history) {
      hist_logits.push_back(machine.logits[i]);
      hist_labels.push_back(truth[i]);
    }
  res.temperature = cfg.calibrate && hist_logits.size() >= 10 ? fit_temperature(hist_logits, hist_labels) : 1.0;
  std::vector<Vector> probs(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) probs[i] = apply_temperature(machine.logits[i], res.temperature);

  // Practitioner decisions, per (split, group) with a scaled rate.
  std::vector<Label> human(flat.size());
  std::map<std::pair<bool, std::size_t>, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < flat.size(); ++i) buckets[{flat[i].history, groups[i]}].push_back(i);
  for (const auto& [key, idx] : buckets) {
    const auto& [hist, g] = key;
    double rate = noise_rate;
    if (g != detail::kNoGroup && !cfg.group_noise_multipliers.empty())
      rate *= cfg.group_noise_multipliers[g % cfg.group_noise_multipliers.size()];
    HumanSimConfig hcfg{std::clamp(rate, 0.0, 1.0), cfg.noise_model,
                        derive_seed(res.seed, 1000 + 2 * (g == detail::kNoGroup ? 0 : g + 1) + (hist ? 1 : 0))};
    std::vector<Label> sub;
    for (auto i : idx) sub.push_back(truth[i]);
    const auto noisy = simulate_human_labels(sub, c, hcfg);
    for (std::size_t k = 0; k < idx.size(); ++k) human[idx[k]] = noisy[k];
  }

  // History log and EM fits.
  DecisionLog log;
  log.categories = cats;
  log.dimension = embeddings.begin()->second.size();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (!flat[i].history) continue;
    DecisionRecord r;
    r.ref = flat[i].sentence->ref();
    r.embedding = embeddings.at(r.ref);
    r.human_label = human[i];
    r.machine_probs = probs[i];
    r.true_label = truth[i];
    if (groups[i] != detail::kNoGroup) r.group = groups[i];
    log.records.push_back(std::move(r));
  }
  ProtoEmConfig em_cfg;
  em_cfg.prototypes = prototypes;
  em_cfg.em_iterations = em_iterations;
  em_cfg.smoothing = cfg.smoothing;
  em_cfg.init_epsilon = cfg.init_epsilon;
  em_cfg.seed = derive_seed(res.seed, 3);
  const PrototypeModel proto = run_protoem(log, em_cfg);
  const PrototypeModel naive = run_naive_em(log, em_cfg);

  // Evaluation decisions per variant.
  std::vector<std::size_t> eval_idx;
  for (std::size_t i = 0; i < flat.size(); ++i)
    if (!flat[i].history) eval_idx.push_back(i);
  if (eval_idx.empty()) throw InsufficientDataError("evaluation split is empty");

  std::map<Variant, std::map<SentenceRef, FusedDecision>> decisions;
  for (auto i : eval_idx) {
    const SentenceRef ref = flat[i].sentence->ref();
    const MachineDecision md{ref, probs[i]};
    const HumanDecision hd{ref, human[i]};
    const Label m_arg = argmax(probs[i]);
    for (Variant v : cfg.variants) {
      FusedDecision d;
      switch (v) {
        case Variant::co_match:
          d = fuse(md, hd, proto.confusions[assign_nearest(embeddings.at(ref), proto.centroids)]);
          break;
        case Variant::naive_em: d = fuse(md, hd, naive.confusions[0]); break;
        case Variant::human_only: d = one_hot_decision(ref, human[i], c); break;
        case Variant::machine_only:
          d.ref = ref;
          d.posterior = probs[i];
          d.label = m_arg;
          break;
        case Variant::intersection: d = one_hot_decision(ref, combine_intersection(m_arg, human[i]), c); break;
        case Variant::union_: d = one_hot_decision(ref, combine_union(m_arg, human[i], cats), c); break;
      }
      decisions[v].emplace(ref, std::move(d));
    }
  }

  // True uncertainty per evaluation sentence: empirical confusion of its group.
  std::vector<Label> eval_truth, eval_human;
  std::vector<std::size_t> eval_groups;
  for (auto i : eval_idx) {
    eval_truth.push_back(truth[i]);
    eval_human.push_back(human[i]);
    eval_groups.push_back(groups[i]);
  }
  const auto true_phi = detail::empirical_confusions(eval_truth, eval_human, eval_groups, c);
  std::map<SentenceRef, ConfusionMatrix> truth_lookup;
  EmbeddingMap eval_embeddings;
  for (std::size_t k = 0; k < eval_idx.size(); ++k) {
    const SentenceRef ref = flat[eval_idx[k]].sentence->ref();
    truth_lookup.emplace(ref, true_phi.at(eval_groups[k]));
    eval_embeddings.emplace(ref, embeddings.at(ref));
  }

  const MatcherFn matcher = select_matcher(cfg.matcher);
  std::vector<std::size_t> eval_pairs;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (!is_hist[i]) eval_pairs.push_back(i);

  for (Variant v : cfg.variants) {
    VariantScores scores;
    const auto& dec = decisions.at(v);
    std::vector<Label> predicted;
    for (auto i : eval_idx) predicted.push_back(dec.at(flat[i].sentence->ref()).label);
    scores.key = metrics(predicted, eval_truth);

    // The matcher sees the selected key sentences, i.e. the argmax labels.
    std::vector<Label> rel_pred, rel_truth;
    for (auto pi : eval_pairs) {
      const auto& pair = corpus[pi];
      std::vector<FusedDecision> fs, ft;
      for (const auto& s : pair.source.sentences) fs.push_back(one_hot_decision(s.ref(), dec.at(s.ref()).label, c));
      for (const auto& s : pair.target.sentences) ft.push_back(one_hot_decision(s.ref(), dec.at(s.ref()).label, c));
      rel_pred.push_back(matcher(pair, fs, ft, embeddings, cfg.match).relation);
      rel_truth.push_back(*pair.true_relation);
    }
    scores.relation = metrics(rel_pred, rel_truth);

    if (v == Variant::co_match) scores.frobenius = frobenius_error(proto, truth_lookup, eval_embeddings);
    if (v == Variant::naive_em) scores.frobenius = frobenius_error(naive, truth_lookup, eval_embeddings);
    res.scores.emplace(v, scores);
  }
  return res;
}

inline void summarize(CellReport& cell, const std::vector<Variant>& variants) {
  for (Variant v : variants) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& s : cell.seeds)
      for (const auto& [name, value] : flatten(s.scores.at(v))) values[name].push_back(value);
    VariantSummary summary;
    for (const auto& [name, xs] : values) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      const double stdev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
      summary.values[name] = {mean, stdev};
    }
    cell.summary[v] = std::move(summary);
  }
}

inline bool corpus_is_labeled(const std::vector<CasePair>& corpus) {
  if (corpus.empty()) return false;
  for (const auto& p : corpus) {
    if (!p.true_relation) return false;
    for (const auto* d : {&p.source, &p.target})
      for (const auto& s : d->sentences)
        if (!s.true_label) return false;
  }
  return true;
}

inline ExperimentReport run_experiment(const std::vector<CasePair>& corpus, const CategorySet& cats,
                                       const ExperimentConfig& cfg) {
  if (!corpus_is_labeled(corpus))
    throw ConfigError("run_experiment needs a corpus with sentence labels and pair relations");
  auto cat_report = validate(cats);
  if (!cat_report.ok()) throw ConfigError("categories: " + cat_report.str());
  for (const auto& p : corpus) {
    auto r = validate(p, cats.size());
    if (!r.ok()) throw ValidationError(r.str());
  }
  if (cfg.seeds == 0) throw ConfigError("need at least one seed");
  if (cfg.variants.empty()) throw ConfigError("need at least one variant");
  for (double r : cfg.noise_rates)
    if (r < 0.0 || r > 1.0) throw ConfigError("noise rates must lie in [0,1]");
  select_matcher(cfg.matcher);

  // Embeddings: carried vectors when every sentence has one, else hashed text.
  EmbeddingMap embeddings;
  bool all_vectors = true;
  for (const auto& p : corpus)
    for (const auto* d : {&p.source, &p.target})
      for (const auto& s : d->sentences) all_vectors = all_vectors && s.vector.has_value();
  if (all_vectors) {
    for (const auto& p : corpus)
      for (const auto* d : {&p.source, &p.target})
        for (const auto& s : d->sentences) embeddings[s.ref()] = *s.vector;
  } else {
    std::vector<Document> docs;
    for (const auto& p : corpus) {
      docs.push_back(p.source);
      docs.push_back(p.target);
    }
    embeddings = embed_corpus(docs, cfg.embedding);
  }

  ExperimentReport report;
  report.config = cfg;
  for (double noise : cfg.noise_rates)
    for (std::size_t pk : cfg.prototype_grid)
      for (std::size_t iters : cfg.em_grid) {
        CellReport cell;
        cell.noise_rate = noise;
        cell.noise_model = cfg.noise_model;
        cell.prototypes = pk;
        cell.em_iterations = iters;
        cell.seeds.resize(cfg.seeds);
        report.cells.push_back(std::move(cell));
      }

  const std::size_t jobs = report.cells.size() * cfg.seeds;
  auto work = [&](std::size_t job) {
    auto& cell = report.cells[job / cfg.seeds];
    cell.seeds[job % cfg.seeds] = run_cell_seed(corpus, cats, embeddings, cfg, cell.noise_rate, cell.prototypes,
                                                cell.em_iterations, job % cfg.seeds);
  };
  if (cfg.threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < std::min(cfg.threads, jobs); ++t)
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
          try {
            work(j);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (auto& cell : report.cells) summarize(cell, cfg.variants);
  return report;
}

// ---------------------------------------------------------------------------
// Report output

inline Json to_json_value(const ExperimentReport& report) {
  const auto& cfg = report.config;
  Json variants = Json::array();
  for (Variant v : cfg.variants) variants.push_back(to_string(v));
  Json config{{"noise_rates", cfg.noise_rates},
              {"noise_model", to_string(cfg.noise_model)},
              {"prototype_grid", cfg.prototype_grid},
              {"em_grid", cfg.em_grid},
              {"variants", variants},
              {"seeds", cfg.seeds},
              {"base_seed", cfg.base_seed},
              {"machine_accuracy", cfg.machine.target_accuracy},
              {"machine_concentration", cfg.machine.concentration},
              {"machine_overconfidence", cfg.machine.overconfidence_scale},
              {"calibrate", cfg.calibrate},
              {"group_noise_multipliers", cfg.group_noise_multipliers},
              {"smoothing", cfg.smoothing},
              {"init_epsilon", cfg.init_epsilon},
              {"matcher", cfg.matcher},
              {"relation_count", cfg.match.relation_count},
              {"thresholds", cfg.match.thresholds},
              {"history_fraction", cfg.history_fraction}};
  Json cells = Json::array();
  for (const auto& cell : report.cells) {
    Json jc{{"noise_rate", cell.noise_rate},
            {"noise_model", to_string(cell.noise_model)},
            {"prototypes", cell.prototypes},
            {"em_iterations", cell.em_iterations}};
    Json summary = Json::object();
    for (const auto& [v, s] : cell.summary) {
      Json jv = Json::object();
      for (const auto& [name, sm] : s.values) jv[name] = {{"mean", sm.mean}, {"stdev", sm.stdev}};
      summary[to_string(v)] = jv;
    }
    jc["summary"] = summary;
    Json seeds = Json::array();
    for (const auto& sr : cell.seeds) {
      Json js{{"seed_index", sr.seed_index}, {"seed", sr.seed}, {"temperature", sr.temperature}};
      Json sc = Json::object();
      for (const auto& [v, s] : sr.scores) {
        Json jv = Json::object();
        for (const auto& [name, value] : flatten(s)) jv[name] = value;
        sc[to_string(v)] = jv;
      }
      js["scores"] = sc;
      seeds.push_back(js);
    }
    jc["seeds"] = seeds;
    cells.push_back(jc);
  }
  return {{"config", config}, {"cells", cells}};
}

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// One row per cell x variant x seed.
inline std::string to_csv(const ExperimentReport& report) {
  std::string out =
      "noise_rate,noise_model,prototypes,em_iterations,variant,seed_index,key_accuracy,key_precision,key_recall,"
      "key_f1,relation_accuracy,relation_precision,relation_recall,relation_f1,frobenius\n";
  for (const auto& cell : report.cells)
    for (Variant v : report.config.variants)
      for (const auto& sr : cell.seeds) {
        const auto& s = sr.scores.at(v);
        out += format_metric(cell.noise_rate) + "," + to_string(cell.noise_model) + "," +
               std::to_string(cell.prototypes) + "," + std::to_string(cell.em_iterations) + "," + to_string(v) + "," +
               std::to_string(sr.seed_index);
        for (double x : {s.key.accuracy, s.key.precision, s.key.recall, s.key.f1, s.relation.accuracy,
                         s.relation.precision, s.relation.recall, s.relation.f1})
          out += "," + format_metric(x);
        out += "," + (s.frobenius ? format_metric(*s.frobenius) : std::string());
        out += "\n";
      }
  return out;
}

/// "0.1..0.5" (step 0.1), "0.1..0.5:0.2", or a comma list.
inline std::vector<double> parse_noise_grid(const std::string& text) {
  std::vector<double> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const double lo = std::stod(text.substr(0, dots));
      std::string rest = text.substr(dots + 2);
      double step = 0.1;
      if (auto colon = rest.find(':'); colon != std::string::npos) {
        step = std::stod(rest.substr(colon + 1));
        rest = rest.substr(0, colon);
      }
      const double hi = std::stod(rest);
      if (!(step > 0.0) || hi < lo) throw ConfigError("bad noise range '" + text + "'");
      const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
      for (std::size_t i = 0; i <= n; ++i) out.push_back(std::round((lo + step * static_cast<double>(i)) * 1e9) / 1e9);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse noise grid '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty noise grid");
  return out;
}

}  // namespace comatch
