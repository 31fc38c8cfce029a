#pragma once

// Corpus and decision-log files (JSON Lines) and the seeded synthetic
// generator.
//
// Corpus: one CasePair per line.
// Decision log: a header line {"dimension", "categories", "importance_rank"},
// then one DecisionRecord per line.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/embedding.hpp"
#include "comatch/fusion.hpp"
#include "comatch/matcher.hpp"
#include "comatch/random.hpp"
#include "comatch/serialization.hpp"
#include "comatch/simulators.hpp"

namespace comatch {

struct LoadResult {
  std::vector<std::string> warnings;
};

namespace detail {

// Parses one JSON value per non-blank line, rejecting trailing garbage.
template <typename Fn>
void for_each_json_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + "malformed JSON: " + e.what());
    }
    try {
      fn(j, line_no);
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EnvironmentError("cannot write '" + path + "'");
  return out;
}

}  // namespace detail

inline std::vector<CasePair> load_corpus(const std::string& path, LoadResult* diagnostics = nullptr) {
  std::vector<CasePair> pairs;
  detail::for_each_json_line(path, [&](const Json& j, std::size_t) {
    CasePair p = case_pair_from_json(j);
    auto report = validate(p);
    if (!report.ok()) throw ValidationError(report.str());
    pairs.push_back(std::move(p));
  });
  if (pairs.empty() && diagnostics) diagnostics->warnings.push_back("corpus '" + path + "' is empty");
  return pairs;
}

inline void save_corpus(const std::vector<CasePair>& pairs, const std::string& path) {
  auto out = detail::open_for_write(path);
  for (const auto& p : pairs) out << to_json_value(p).dump() << '\n';
  if (!out) throw EnvironmentError("write to '" + path + "' failed");
}

inline DecisionLog load_decision_log(const std::string& path, LoadResult* diagnostics = nullptr) {
  DecisionLog log;
  bool have_header = false;
  detail::for_each_json_line(path, [&](const Json& j, std::size_t) {
    if (!have_header) {
      log.dimension = detail::get_as<std::size_t>(j, "dimension");
      const auto names = detail::get_as<std::vector<std::string>>(j, "categories");
      log.categories = CategorySet::ranked(names);
      if (auto rank = detail::get_optional<std::vector<std::size_t>>(j, "importance_rank"))
        log.categories.importance_rank = *rank;
      auto report = validate(log.categories);
      if (!report.ok()) throw ValidationError("categories: " + report.str());
      have_header = true;
      return;
    }
    DecisionRecord r = decision_record_from_json(j);
    if (r.embedding.size() != log.dimension)
      throw FormatError("embedding dimension " + std::to_string(r.embedding.size()) + " != declared " +
                        std::to_string(log.dimension));
    auto report = validate(r, log.dimension, log.categories.size());
    if (!report.ok()) throw ValidationError(report.str());
    log.records.push_back(std::move(r));
  });
  if (!have_header) throw FormatError("decision log '" + path + "' has no header line");
  if (log.records.empty() && diagnostics) diagnostics->warnings.push_back("decision log '" + path + "' has no records");
  return log;
}

inline void save_decision_log(const DecisionLog& log, const std::string& path) {
  auto out = detail::open_for_write(path);
  Json header{{"dimension", log.dimension},
              {"categories", log.categories.names},
              {"importance_rank", log.categories.importance_rank}};
  out << header.dump() << '\n';
  for (const auto& r : log.records) out << to_json_value(r).dump() << '\n';
  if (!out) throw EnvironmentError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Synthetic generator
//
// Sentence embeddings are Gaussian bumps around P prototype means. Means come
// in antipodal pairs (u, -u) so that pairs drawn from opposite topics score low
// under the reference matcher. Each document mixes prototypes through a
// Dirichlet topic vector; labels follow a prototype-specific class prior; the
// human label is drawn from the prototype's true confusion matrix and the
// machine distribution from the machine simulator, independently given the
// label. Pair relations come from the reference matcher applied to
// ground-truth key sentences.

struct GeneratorSpec {
  std::string name = "custom";
  CategorySet categories = CategorySet::generic(4);
  std::size_t prototypes = 4;
  std::size_t dimension = 16;
  std::size_t pairs = 400;
  std::size_t sentences_per_doc = 12;
  std::size_t history_records_per_prototype = 5000;
  double bump_scale = 3.0;
  double bump_sigma = 0.6;
  double topic_concentration = 0.3;
  double copy_probability = 0.6;
  double human_noise = 0.1;
  std::vector<double> noise_multipliers{0.25, 1.75, 0.75, 1.25};
  // Optional explicit per-prototype truth; generated when empty.
  std::vector<ConfusionMatrix> true_confusions;
  std::vector<Vector> class_priors;
  MachineSimConfig machine{};
  MatchConfig match{};
  // Text-backed mode: sentences get template text and are embedded by the
  // hashing embedder instead of carrying generated vectors.
  bool text_mode = false;
  EmbeddingConfig embedding{};
};

inline GeneratorSpec preset(const std::string& name) {
  GeneratorSpec s;
  if (name == "elam-like") {
    s.name = name;
    s.categories = CategorySet::ranked({"Not Key", "Constitutive Element", "Focus of Dispute", "Sentencing Factor"});
  } else if (name == "ecail-like") {
    s.name = name;
    s.categories = CategorySet::ranked({"Not Key", "Key"});
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected elam-like or ecail-like)");
  }
  return s;
}

inline ValidationReport validate(const GeneratorSpec& s) {
  ValidationReport r;
  r.merge(validate(s.categories), "categories.");
  const std::size_t c = s.categories.size();
  if (c != 2 && c != 4) r.add("categories: C must be 2 or 4");
  if (s.prototypes == 0) r.add("prototypes: must be >= 1");
  if (s.dimension < 2) r.add("dimension: must be >= 2");
  if (s.sentences_per_doc == 0) r.add("sentences_per_doc: must be >= 1");
  if (s.bump_sigma <= 0.0 || s.bump_scale <= 0.0) r.add("bump_scale/bump_sigma: must be positive");
  if (s.human_noise < 0.0 || s.human_noise > 1.0) r.add("human_noise: must lie in [0,1]");
  if (s.noise_multipliers.empty()) r.add("noise_multipliers: need at least one value");
  if (!s.true_confusions.empty()) {
    if (s.true_confusions.size() != s.prototypes) r.add("true_confusions: need one matrix per prototype");
    for (const auto& m : s.true_confusions)
      if (m.size() != c) r.add("true_confusions: matrix size != C");
  }
  if (!s.class_priors.empty()) {
    if (s.class_priors.size() != s.prototypes) r.add("class_priors: need one prior per prototype");
    for (const auto& p : s.class_priors) r.merge(validate_distribution(p, "prior"), "class_priors.");
  }
  if (s.text_mode) r.merge(validate(s.embedding), "embedding.");
  r.merge(validate(s.match), "match.");
  return r;
}

/// Drop-dominated noise: a key sentence is missed (marked Not Key) with 80% of
/// the prototype's rate and confused with another key category otherwise; a
/// Not Key sentence is marked key with a quarter of the rate.
inline ConfusionMatrix noisy_confusion(std::size_t c, double rate) {
  rate = std::clamp(rate, 0.0, 0.95);
  std::vector<std::vector<double>> rows(c, std::vector<double>(c, 0.0));
  const double spurious = rate / 4.0;
  rows[0][0] = 1.0 - spurious;
  for (std::size_t h = 1; h < c; ++h) rows[h][0] = spurious / static_cast<double>(c - 1);
  for (std::size_t y = 1; y < c; ++y) {
    rows[y][y] = 1.0 - rate;
    if (c == 2) {
      rows[0][y] = rate;
      continue;
    }
    rows[0][y] = 0.8 * rate;
    for (std::size_t h = 1; h < c; ++h)
      if (h != y) rows[h][y] = 0.2 * rate / static_cast<double>(c - 2);
  }
  return ConfusionMatrix(rows);
}

inline std::vector<ConfusionMatrix> true_confusions_for(const GeneratorSpec& s) {
  if (!s.true_confusions.empty()) return s.true_confusions;
  std::vector<ConfusionMatrix> out;
  for (std::size_t p = 0; p < s.prototypes; ++p)
    out.push_back(noisy_confusion(s.categories.size(),
                                  s.human_noise * s.noise_multipliers[p % s.noise_multipliers.size()]));
  return out;
}

/// Not Key share varies mildly by prototype; key mass is split evenly. Strongly
/// skewed priors make the simulated machine miscalibrated per prototype, which
/// EM then absorbs into the confusion estimate.
inline std::vector<Vector> class_priors_for(const GeneratorSpec& s) {
  if (!s.class_priors.empty()) return s.class_priors;
  const std::size_t c = s.categories.size();
  std::vector<Vector> out;
  for (std::size_t p = 0; p < s.prototypes; ++p) {
    Vector prior(c, 0.0);
    prior[0] = (c == 2 ? 0.45 : 0.25) + 0.05 * static_cast<double>(p % 3);
    for (std::size_t k = 1; k < c; ++k) prior[k] = (1.0 - prior[0]) / static_cast<double>(c - 1);
    out.push_back(prior);
  }
  return out;
}

struct SyntheticData {
  std::vector<CasePair> corpus;
  std::vector<ConfusionMatrix> true_confusions;
  std::vector<Vector> class_priors;
  std::vector<Vector> prototype_means;
  DecisionLog log;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<Vector> prototype_means(const GeneratorSpec& s, Rng& rng) {
  std::vector<Vector> means;
  for (std::size_t p = 0; p < s.prototypes; ++p) {
    if (p % 2 == 1) {
      Vector v = means.back();
      for (double& x : v) x = -x;
      means.push_back(std::move(v));
      continue;
    }
    Vector v(s.dimension);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : v) {
        x = rng.normal();
        norm += x * x;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : v) x = s.bump_scale * x / norm;
    means.push_back(std::move(v));
  }
  return means;
}

inline Vector draw_bump(const Vector& mean, double sigma, Rng& rng) {
  Vector v(mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) v[d] = mean[d] + sigma * rng.normal();
  return v;
}

struct TextVocabulary {
  std::vector<std::vector<std::string>> group_words;
  std::vector<std::vector<std::string>> label_words;
};

inline std::string pseudo_word(Rng& rng) {
  static const char* syllables[] = {"ka", "lo", "mi", "ru", "te", "sa", "no", "vi", "de", "po",
                                    "an", "el", "or", "us", "ti", "ba", "ge", "fu", "ze", "qi"};
  std::string w;
  const std::size_t n = 2 + rng.index(2);
  for (std::size_t i = 0; i < n; ++i) w += syllables[rng.index(20)];
  return w;
}

inline TextVocabulary make_vocabulary(const GeneratorSpec& s, Rng& rng) {
  TextVocabulary v;
  v.group_words.resize(s.prototypes);
  for (auto& words : v.group_words)
    for (int i = 0; i < 30; ++i) words.push_back(pseudo_word(rng));
  v.label_words.resize(s.categories.size());
  for (auto& words : v.label_words)
    for (int i = 0; i < 10; ++i) words.push_back(pseudo_word(rng));
  return v;
}

inline std::string template_text(const TextVocabulary& vocab, std::size_t group, Label label, Rng& rng) {
  std::string text;
  for (int i = 0; i < 6; ++i) text += vocab.group_words[group][rng.index(vocab.group_words[group].size())] + " ";
  for (int i = 0; i < 2; ++i) text += vocab.label_words[label][rng.index(vocab.label_words[label].size())] + " ";
  text.back() = '.';
  return text;
}

}  // namespace detail

inline SyntheticData gen_synthetic(const GeneratorSpec& spec, std::uint64_t seed) {
  auto report = validate(spec);
  if (!report.ok()) throw ConfigError("generator spec: " + report.str());
  const std::size_t c = spec.categories.size();
  const std::size_t p_count = spec.prototypes;

  SyntheticData data;
  data.true_confusions = true_confusions_for(spec);
  data.class_priors = class_priors_for(spec);
  Rng geometry(derive_seed(seed, 1));
  data.prototype_means = detail::prototype_means(spec, geometry);
  for (std::size_t a = 0; a < p_count; ++a)
    for (std::size_t b = a + 1; b < p_count; ++b)
      if (std::sqrt(squared_distance(data.prototype_means[a], data.prototype_means[b])) < 3.0 * spec.bump_sigma)
        data.warnings.push_back("prototype means " + std::to_string(a) + " and " + std::to_string(b) +
                                " are closer than 3 sigma; recovery guarantees do not hold");
  detail::TextVocabulary vocab;
  if (spec.text_mode) vocab = detail::make_vocabulary(spec, geometry);

  Rng rng(derive_seed(seed, 2));
  auto draw_topic = [&] {
    std::vector<double> alpha(p_count, spec.topic_concentration);
    return rng.dirichlet(alpha);
  };
  auto fresh_sentence = [&](const std::string& doc_id, std::size_t index, const Vector& topic) {
    Sentence s;
    s.doc_id = doc_id;
    s.index = index;
    const std::size_t g = rng.categorical(topic);
    s.group = g;
    s.true_label = rng.categorical(data.class_priors[g]);
    s.vector = detail::draw_bump(data.prototype_means[g], spec.bump_sigma, rng);
    if (spec.text_mode) s.text = detail::template_text(vocab, g, *s.true_label, rng);
    else s.text = "synthetic sentence " + std::to_string(index) + " of " + doc_id;
    return s;
  };

  // Relation-level latent: 0 opposite topic, 1 independent topic, 2 same topic,
  // 3 same topic with near-copied sentences.
  for (std::size_t i = 0; i < spec.pairs; ++i) {
    CasePair pair;
    const std::string sid = "case-" + std::to_string(i) + "-a";
    const std::string tid = "case-" + std::to_string(i) + "-b";
    const Vector topic = draw_topic();
    pair.source.doc_id = sid;
    for (std::size_t k = 0; k < spec.sentences_per_doc; ++k) pair.source.sentences.push_back(fresh_sentence(sid, k, topic));

    const std::size_t level = rng.index(4);
    Vector target_topic = topic;
    if (level == 0) {
      for (std::size_t g = 0; g < p_count; ++g) {
        const std::size_t partner = (g % 2 == 0) ? (g + 1 < p_count ? g + 1 : g) : g - 1;
        target_topic[partner] = topic[g];
      }
    } else if (level == 1) {
      target_topic = draw_topic();
    }
    pair.target.doc_id = tid;
    for (std::size_t k = 0; k < spec.sentences_per_doc; ++k) {
      if (level == 3 && rng.bernoulli(spec.copy_probability)) {
        Sentence s = pair.source.sentences[rng.index(pair.source.sentences.size())];
        s.doc_id = tid;
        s.index = k;
        s.vector = detail::draw_bump(*s.vector, 0.25 * spec.bump_sigma, rng);
        pair.target.sentences.push_back(std::move(s));
      } else {
        pair.target.sentences.push_back(fresh_sentence(tid, k, target_topic));
      }
    }
    data.corpus.push_back(std::move(pair));
  }

  if (spec.text_mode) {
    std::vector<Document> docs;
    for (const auto& p : data.corpus) {
      docs.push_back(p.source);
      docs.push_back(p.target);
    }
    auto emb = embed_corpus(docs, spec.embedding);
    for (auto& p : data.corpus)
      for (auto* d : {&p.source, &p.target})
        for (auto& s : d->sentences) s.vector.reset();
    // Relations are computed from text embeddings in this mode.
    for (auto& p : data.corpus) {
      std::vector<FusedDecision> fs, ft;
      for (const auto& s : p.source.sentences) fs.push_back(one_hot_decision(s.ref(), *s.true_label, c));
      for (const auto& s : p.target.sentences) ft.push_back(one_hot_decision(s.ref(), *s.true_label, c));
      p.true_relation = match_pair(p, fs, ft, emb, spec.match).relation;
    }
  } else {
    for (auto& p : data.corpus) {
      EmbeddingMap emb;
      std::vector<FusedDecision> fs, ft;
      for (const auto& s : p.source.sentences) {
        emb[s.ref()] = *s.vector;
        fs.push_back(one_hot_decision(s.ref(), *s.true_label, c));
      }
      for (const auto& s : p.target.sentences) {
        emb[s.ref()] = *s.vector;
        ft.push_back(one_hot_decision(s.ref(), *s.true_label, c));
      }
      p.true_relation = match_pair(p, fs, ft, emb, spec.match).relation;
    }
  }

  // Historical decision log: exactly history_records_per_prototype per prototype.
  data.log.categories = spec.categories;
  data.log.dimension = spec.text_mode ? spec.embedding.dimension : spec.dimension;
  Rng hist(derive_seed(seed, 3));
  std::vector<Label> labels;
  std::vector<std::size_t> groups;
  std::vector<Vector> vectors;
  std::vector<SentenceRef> refs;
  constexpr std::size_t kHistoryDocLength = 20;
  if (spec.text_mode) {
    // Documents of one prototype each, embedded with their context window.
    std::vector<Document> docs;
    std::size_t serial = 0;
    for (std::size_t g = 0; g < p_count; ++g) {
      for (std::size_t n = 0; n < spec.history_records_per_prototype; n += kHistoryDocLength) {
        Document d;
        d.doc_id = "hist-" + std::to_string(serial++);
        const std::size_t len = std::min(kHistoryDocLength, spec.history_records_per_prototype - n);
        for (std::size_t k = 0; k < len; ++k) {
          Sentence s;
          s.doc_id = d.doc_id;
          s.index = k;
          s.group = g;
          s.true_label = hist.categorical(data.class_priors[g]);
          s.text = detail::template_text(vocab, g, *s.true_label, hist);
          d.sentences.push_back(std::move(s));
        }
        docs.push_back(std::move(d));
      }
    }
    for (const auto& d : docs)
      for (std::size_t k = 0; k < d.sentences.size(); ++k) {
        refs.push_back(d.sentences[k].ref());
        labels.push_back(*d.sentences[k].true_label);
        groups.push_back(*d.sentences[k].group);
        vectors.push_back(embed_sentence(d, k, spec.embedding));
      }
  } else {
    std::size_t serial = 0;
    for (std::size_t g = 0; g < p_count; ++g)
      for (std::size_t n = 0; n < spec.history_records_per_prototype; ++n, ++serial) {
        refs.push_back({"hist-" + std::to_string(serial / kHistoryDocLength), serial % kHistoryDocLength});
        labels.push_back(hist.categorical(data.class_priors[g]));
        groups.push_back(g);
        vectors.push_back(detail::draw_bump(data.prototype_means[g], spec.bump_sigma, hist));
      }
  }
  MachineSimConfig mcfg = spec.machine;
  mcfg.seed = derive_seed(seed, 4);
  const auto machine = simulate_machine(labels, c, mcfg);
  Rng human(derive_seed(seed, 5));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    DecisionRecord r;
    r.ref = refs[i];
    r.embedding = std::move(vectors[i]);
    std::vector<double> column(c);
    for (std::size_t h = 0; h < c; ++h) column[h] = data.true_confusions[groups[i]](h, labels[i]);
    r.human_label = human.categorical(column);
    r.machine_probs = machine.probs[i];
    r.true_label = labels[i];
    r.group = groups[i];
    data.log.records.push_back(std::move(r));
  }
  return data;
}

// Truth file written next to a generated corpus.
inline Json truth_to_json(const SyntheticData& data, const GeneratorSpec& spec, std::uint64_t seed) {
  Json confusions = Json::array();
  for (const auto& m : data.true_confusions) confusions.push_back(to_json_value(m));
  return {{"preset", spec.name},
          {"seed", seed},
          {"categories", to_json_value(spec.categories)},
          {"prototype_means", data.prototype_means},
          {"class_priors", data.class_priors},
          {"noise_multipliers", spec.noise_multipliers},
          {"human_noise", spec.human_noise},
          {"confusions", std::move(confusions)}};
}

/// Overrides preset fields with any keys present in `j`.
inline GeneratorSpec generator_spec_from_json(const Json& j, GeneratorSpec base = {}) {
  if (!j.is_object()) throw FormatError("generator spec must be a JSON object");
  using detail::get_optional;
  if (auto v = get_optional<std::string>(j, "preset")) base = preset(*v);
  if (j.contains("categories")) base.categories = category_set_from_json(j.at("categories"));
  base.prototypes = get_optional<std::size_t>(j, "prototypes").value_or(base.prototypes);
  base.dimension = get_optional<std::size_t>(j, "dimension").value_or(base.dimension);
  base.pairs = get_optional<std::size_t>(j, "pairs").value_or(base.pairs);
  base.sentences_per_doc = get_optional<std::size_t>(j, "sentences_per_doc").value_or(base.sentences_per_doc);
  base.history_records_per_prototype =
      get_optional<std::size_t>(j, "history_records_per_prototype").value_or(base.history_records_per_prototype);
  base.bump_scale = get_optional<double>(j, "bump_scale").value_or(base.bump_scale);
  base.bump_sigma = get_optional<double>(j, "bump_sigma").value_or(base.bump_sigma);
  base.topic_concentration = get_optional<double>(j, "topic_concentration").value_or(base.topic_concentration);
  base.copy_probability = get_optional<double>(j, "copy_probability").value_or(base.copy_probability);
  base.human_noise = get_optional<double>(j, "human_noise").value_or(base.human_noise);
  base.noise_multipliers = get_optional<std::vector<double>>(j, "noise_multipliers").value_or(base.noise_multipliers);
  if (j.contains("true_confusions")) {
    base.true_confusions.clear();
    for (const auto& m : j.at("true_confusions")) base.true_confusions.push_back(confusion_from_json(m));
  }
  base.class_priors = get_optional<std::vector<Vector>>(j, "class_priors").value_or(base.class_priors);
  base.machine.target_accuracy = get_optional<double>(j, "machine_accuracy").value_or(base.machine.target_accuracy);
  base.machine.concentration = get_optional<double>(j, "machine_concentration").value_or(base.machine.concentration);
  base.machine.overconfidence_scale =
      get_optional<double>(j, "machine_overconfidence").value_or(base.machine.overconfidence_scale);
  base.text_mode = get_optional<bool>(j, "text_mode").value_or(base.text_mode);
  base.embedding.dimension = get_optional<std::size_t>(j, "embedding_dimension").value_or(base.embedding.dimension);
  return base;
}

}  // namespace comatch
