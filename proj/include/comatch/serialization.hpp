#pragma once

// JSON encodings of the domain types. Field-by-field schemas live in
// docs/schemas.md. Decoders throw FormatError on shape problems and
// ValidationError when a value breaks a domain invariant.

#include <json.hpp>

#include "comatch/core.hpp"

namespace comatch {

using Json = nlohmann::json;

namespace detail {

inline const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) throw FormatError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get_as(const Json& j, const char* key) {
  try {
    return require(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> get_optional(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline Json to_json_value(const SentenceRef& r) { return {{"doc_id", r.doc_id}, {"index", r.index}}; }

inline SentenceRef sentence_ref_from_json(const Json& j) {
  return {detail::get_as<std::string>(j, "doc_id"), detail::get_as<std::size_t>(j, "index")};
}

inline Json to_json_value(const CategorySet& c) {
  return {{"names", c.names}, {"importance_rank", c.importance_rank}};
}

inline CategorySet category_set_from_json(const Json& j) {
  CategorySet c;
  c.names = detail::get_as<std::vector<std::string>>(j, "names");
  auto rank = detail::get_optional<std::vector<std::size_t>>(j, "importance_rank");
  if (rank) {
    c.importance_rank = *rank;
  } else {
    c = CategorySet::ranked(c.names);
  }
  return c;
}

// Corpus sentence: doc_id and index are implied by the enclosing document.
inline Json to_json_value(const Sentence& s) {
  Json j{{"text", s.text}, {"label", nullptr}};
  if (s.true_label) j["label"] = *s.true_label;
  if (s.vector) j["vector"] = *s.vector;
  if (s.group) j["group"] = *s.group;
  return j;
}

inline Json to_json_value(const Document& d) {
  Json sentences = Json::array();
  for (const auto& s : d.sentences) sentences.push_back(to_json_value(s));
  return {{"doc_id", d.doc_id}, {"sentences", std::move(sentences)}};
}

inline Document document_from_json(const Json& j) {
  Document d;
  d.doc_id = detail::get_as<std::string>(j, "doc_id");
  const Json& sentences = detail::require(j, "sentences");
  if (!sentences.is_array()) throw FormatError("field 'sentences': expected an array");
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Json& sj = sentences[i];
    Sentence s;
    s.doc_id = d.doc_id;
    s.index = i;
    s.text = detail::get_as<std::string>(sj, "text");
    s.true_label = detail::get_optional<Label>(sj, "label");
    s.vector = detail::get_optional<Vector>(sj, "vector");
    s.group = detail::get_optional<std::size_t>(sj, "group");
    d.sentences.push_back(std::move(s));
  }
  return d;
}

inline Json to_json_value(const CasePair& p) {
  Json j{{"source", to_json_value(p.source)}, {"target", to_json_value(p.target)}, {"relation", nullptr}};
  if (p.true_relation) j["relation"] = *p.true_relation;
  return j;
}

inline CasePair case_pair_from_json(const Json& j) {
  CasePair p;
  p.source = document_from_json(detail::require(j, "source"));
  p.target = document_from_json(detail::require(j, "target"));
  p.true_relation = detail::get_optional<std::size_t>(j, "relation");
  return p;
}

inline Json to_json_value(const HumanDecision& d) {
  return {{"doc_id", d.ref.doc_id}, {"index", d.ref.index}, {"label", d.label}};
}

inline HumanDecision human_decision_from_json(const Json& j) {
  return {sentence_ref_from_json(j), detail::get_as<Label>(j, "label")};
}

inline Json to_json_value(const MachineDecision& d) {
  return {{"doc_id", d.ref.doc_id}, {"index", d.ref.index}, {"probs", d.probs}};
}

inline MachineDecision machine_decision_from_json(const Json& j) {
  MachineDecision d{sentence_ref_from_json(j), detail::get_as<Vector>(j, "probs")};
  d.probs = normalized_distribution(std::move(d.probs));
  return d;
}

inline Json to_json_value(const FusedDecision& d) {
  return {{"doc_id", d.ref.doc_id},
          {"index", d.ref.index},
          {"posterior", d.posterior},
          {"label", d.label},
          {"fallback_used", d.fallback_used}};
}

inline FusedDecision fused_decision_from_json(const Json& j) {
  FusedDecision d;
  d.ref = sentence_ref_from_json(j);
  d.posterior = normalized_distribution(detail::get_as<Vector>(j, "posterior"), "posterior");
  d.label = detail::get_as<Label>(j, "label");
  d.fallback_used = detail::get_optional<bool>(j, "fallback_used").value_or(false);
  return d;
}

inline Json to_json_value(const ConfusionMatrix& m) { return m.rows(); }

inline ConfusionMatrix confusion_from_json(const Json& j) {
  try {
    return ConfusionMatrix(j.get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("confusion matrix: ") + e.what());
  }
}

inline Json to_json_value(const DecisionRecord& r) {
  Json j{{"doc_id", r.ref.doc_id},
         {"index", r.ref.index},
         {"embedding", r.embedding},
         {"human_label", r.human_label},
         {"machine_probs", r.machine_probs}};
  if (r.true_label) j["true_label"] = *r.true_label;
  if (r.group) j["group"] = *r.group;
  return j;
}

inline DecisionRecord decision_record_from_json(const Json& j) {
  DecisionRecord r;
  r.ref = sentence_ref_from_json(j);
  r.embedding = detail::get_as<Vector>(j, "embedding");
  r.human_label = detail::get_as<Label>(j, "human_label");
  r.machine_probs = normalized_distribution(detail::get_as<Vector>(j, "machine_probs"), "machine_probs");
  r.true_label = detail::get_optional<Label>(j, "true_label");
  r.group = detail::get_optional<std::size_t>(j, "group");
  return r;
}

inline Json to_json_value(const ProtoEmConfig& c) {
  return {{"prototypes", c.prototypes},         {"em_iterations", c.em_iterations},
          {"smoothing", c.smoothing},           {"init_epsilon", c.init_epsilon},
          {"seed", c.seed},                     {"convergence_tol", c.convergence_tol}};
}

inline ProtoEmConfig protoem_config_from_json(const Json& j) {
  ProtoEmConfig c;
  c.prototypes = detail::get_optional<std::size_t>(j, "prototypes").value_or(c.prototypes);
  c.em_iterations = detail::get_optional<std::size_t>(j, "em_iterations").value_or(c.em_iterations);
  c.smoothing = detail::get_optional<double>(j, "smoothing").value_or(c.smoothing);
  c.init_epsilon = detail::get_optional<double>(j, "init_epsilon").value_or(c.init_epsilon);
  c.seed = detail::get_optional<std::uint64_t>(j, "seed").value_or(c.seed);
  c.convergence_tol = detail::get_optional<double>(j, "convergence_tol").value_or(c.convergence_tol);
  return c;
}

inline Json to_json_value(const PrototypeModel& m) {
  Json confusions = Json::array();
  for (const auto& c : m.confusions) confusions.push_back(to_json_value(c));
  return {{"dimension", m.dimension},
          {"centroids", m.centroids},
          {"confusions", std::move(confusions)},
          {"config", to_json_value(m.config)}};
}

inline PrototypeModel prototype_model_from_json(const Json& j) {
  PrototypeModel m;
  m.dimension = detail::get_as<std::size_t>(j, "dimension");
  m.centroids = detail::get_as<std::vector<Vector>>(j, "centroids");
  const Json& confusions = detail::require(j, "confusions");
  if (!confusions.is_array()) throw FormatError("field 'confusions': expected an array");
  for (const auto& c : confusions) m.confusions.push_back(confusion_from_json(c));
  if (j.contains("config")) m.config = protoem_config_from_json(j.at("config"));
  auto report = validate(m);
  if (!report.ok()) throw ValidationError("prototype model: " + report.str());
  return m;
}

}  // namespace comatch
