#pragma once

// HTTP service for interactive co-matching sessions, under /api/v1.
//
//   POST /sessions                 create from a CasePair body or {"corpus_pair": i}
//   GET  /sessions/{id}
//   PUT  /sessions/{id}/decisions  [{doc_id, index, label}, ...]
//   POST /sessions/{id}/match      optional {"finalize_unmarked": "machine"}
//   GET  /model, PUT /model, GET /config, GET /healthz
//
// Handlers are plain member functions returning (status, JSON) so they can be
// driven without a socket; mount() binds them to an httplib::Server.
// Sessions are persisted as a JSON Lines append-log of full snapshots and
// replayed on start (last snapshot per id wins).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <httplib.h>

#include "comatch/core.hpp"
#include "comatch/corpus.hpp"
#include "comatch/embedding.hpp"
#include "comatch/fusion.hpp"
#include "comatch/matcher.hpp"
#include "comatch/serialization.hpp"
#include "comatch/simulators.hpp"

namespace comatch {

enum class MachineSource { simulator, imported };

struct ServiceConfig {
  MachineSource machine_source = MachineSource::simulator;
  MachineSimConfig machine{};   // simulator settings; seed is mixed with the pair content
  double temperature = 1.0;     // applied to simulator logits
  std::string machine_probs_path;  // imported: JSON Lines of {doc_id, index, probs}
  EmbeddingConfig embedding{};
  MatchConfig match{};
  std::string matcher = "reference";
  std::string data_dir;         // empty: sessions live in memory only
  std::string append_log_path;  // empty: live decisions are not recorded
  std::string ui_dir;           // empty: /ui is not served
  std::string cors_origin = "*";
  bool show_machine_suggestions = true;
};

struct Response {
  int status = 200;
  Json body;
};

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

struct SessionSentence {
  SentenceRef ref;
  MachineDecision machine;
  std::size_t prototype = 0;
  std::optional<Label> human;
  std::optional<FusedDecision> fused;
  bool machine_finalized = false;
};

struct Session {
  std::string id;
  CasePair pair;
  std::vector<SessionSentence> sentences;  // source sentences, then target
  std::optional<MatchResult> relation;
  std::string created_at;
  std::string updated_at;

  SessionSentence* find(const SentenceRef& ref) {
    for (auto& s : sentences)
      if (s.ref == ref) return &s;
    return nullptr;
  }
};

inline Json to_json_value(const MatchResult& m) {
  Json breakdown = Json::array();
  for (const auto& b : m.breakdown) {
    Json jb{{"category", b.category}, {"source_mass", b.source_mass}, {"target_mass", b.target_mass},
            {"cosine", nullptr}};
    if (b.cosine) jb["cosine"] = *b.cosine;
    breakdown.push_back(jb);
  }
  Json j{{"relation", m.relation}, {"score", m.score}, {"breakdown", breakdown}, {"diagnostic", nullptr}};
  if (m.diagnostic) j["diagnostic"] = *m.diagnostic;
  return j;
}

inline MatchResult match_result_from_json(const Json& j) {
  MatchResult m;
  m.relation = detail::get_as<std::size_t>(j, "relation");
  m.score = detail::get_as<double>(j, "score");
  for (const auto& b : j.value("breakdown", Json::array())) {
    CategorySimilarity s;
    s.category = detail::get_as<Label>(b, "category");
    s.source_mass = detail::get_as<double>(b, "source_mass");
    s.target_mass = detail::get_as<double>(b, "target_mass");
    s.cosine = detail::get_optional<double>(b, "cosine");
    m.breakdown.push_back(s);
  }
  m.diagnostic = detail::get_optional<std::string>(j, "diagnostic");
  return m;
}

inline Json to_json_value(const Session& s) {
  Json sentences = Json::array();
  for (const auto& ss : s.sentences) {
    Json j{{"doc_id", ss.ref.doc_id},
           {"index", ss.ref.index},
           {"machine_probs", ss.machine.probs},
           {"machine_label", argmax(ss.machine.probs)},
           {"prototype", ss.prototype},
           {"human_label", nullptr},
           {"fused", nullptr},
           {"machine_finalized", ss.machine_finalized}};
    if (ss.human) j["human_label"] = *ss.human;
    if (ss.fused) j["fused"] = to_json_value(*ss.fused);
    sentences.push_back(j);
  }
  Json j{{"session_id", s.id},
         {"pair", to_json_value(s.pair)},
         {"sentences", sentences},
         {"relation", nullptr},
         {"created_at", s.created_at},
         {"updated_at", s.updated_at}};
  if (s.relation) j["relation"] = to_json_value(*s.relation);
  return j;
}

inline Session session_from_json(const Json& j) {
  Session s;
  s.id = detail::get_as<std::string>(j, "session_id");
  s.pair = case_pair_from_json(detail::require(j, "pair"));
  for (const auto& js : detail::require(j, "sentences")) {
    SessionSentence ss;
    ss.ref = sentence_ref_from_json(js);
    ss.machine = {ss.ref, normalized_distribution(detail::get_as<Vector>(js, "machine_probs"), "machine_probs")};
    ss.prototype = detail::get_as<std::size_t>(js, "prototype");
    ss.human = detail::get_optional<Label>(js, "human_label");
    if (js.contains("fused") && !js.at("fused").is_null()) ss.fused = fused_decision_from_json(js.at("fused"));
    ss.machine_finalized = js.value("machine_finalized", false);
    s.sentences.push_back(std::move(ss));
  }
  if (j.contains("relation") && !j.at("relation").is_null()) s.relation = match_result_from_json(j.at("relation"));
  s.created_at = j.value("created_at", "");
  s.updated_at = j.value("updated_at", "");
  return s;
}

class Service {
 public:
  Service(ServiceConfig cfg, std::vector<CasePair> corpus) : cfg_(std::move(cfg)), corpus_(std::move(corpus)) {
    auto r = validate(cfg_.match);
    if (!r.ok()) throw ConfigError("match config: " + r.str());
    select_matcher(cfg_.matcher);
    if (cfg_.machine_source == MachineSource::imported) {
      if (cfg_.machine_probs_path.empty()) throw ConfigError("imported machine source needs a probabilities file");
      detail::for_each_json_line(cfg_.machine_probs_path, [&](const Json& j, std::size_t) {
        auto d = machine_decision_from_json(j);
        imported_[d.ref] = d.probs;
      });
    }
    if (!cfg_.data_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(cfg_.data_dir, ec);
      if (ec) throw EnvironmentError("cannot create data dir '" + cfg_.data_dir + "': " + ec.message());
      replay();
    }
  }

  /// Installs the prototype model; category names come from `categories` or
  /// default to generic ones.
  void load_model(PrototypeModel model, std::optional<CategorySet> categories = {}) {
    auto r = validate(model);
    if (!r.ok()) throw ValidationError("model: " + r.str());
    const std::size_t c = model.confusions.front().size();
    if (categories && categories->size() != c) throw ValidationError("model: category names do not match C");
    std::unique_lock lock(model_mutex_);
    model_ = std::make_shared<const PrototypeModel>(std::move(model));
    categories_ = categories ? *categories : CategorySet::generic(c);
  }

  bool ready() const {
    std::shared_lock lock(model_mutex_);
    return model_ != nullptr;
  }

  // ---- handlers

  Response healthz() const {
    const bool ok = ready();
    std::lock_guard lock(sessions_mutex_);
    return {200, {{"status", ok ? "ok" : "degraded"}, {"model_loaded", ok}, {"sessions", sessions_.size()}}};
  }

  Response get_model() const {
    auto [model, cats] = snapshot_model();
    if (!model) return error(503, "no model loaded");
    Json confusions = Json::array();
    for (const auto& m : model->confusions) confusions.push_back(to_json_value(m));
    return {200,
            {{"prototypes", model->centroids.size()},
             {"dimension", model->dimension},
             {"categories", to_json_value(cats)},
             {"confusions", confusions},
             {"config", to_json_value(model->config)}}};
  }

  Response put_model(const std::string& body) {
    try {
      const Json j = Json::parse(body);
      std::optional<CategorySet> cats;
      if (j.contains("categories")) cats = category_set_from_json(j.at("categories"));
      load_model(prototype_model_from_json(j), cats);
    } catch (const nlohmann::json::exception& e) {
      return error(400, std::string("malformed JSON: ") + e.what());
    } catch (const Error& e) {
      return error(400, e.what());
    }
    return get_model();
  }

  Response get_config() const {
    auto [model, cats] = snapshot_model();
    Json j{{"show_machine_suggestions", cfg_.show_machine_suggestions},
           {"machine_source", cfg_.machine_source == MachineSource::simulator ? "simulator" : "imported"},
           {"relation_count", cfg_.match.relation_count},
           {"thresholds", cfg_.match.thresholds},
           {"corpus_pairs", corpus_.size()},
           {"categories", nullptr}};
    if (model) j["categories"] = to_json_value(cats);
    return {200, j};
  }

  Response create_session(const std::string& body) {
    auto [model, cats] = snapshot_model();
    if (!model) return error(503, "no model loaded");
    Json j;
    try {
      j = Json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return error(400, std::string("malformed JSON: ") + e.what());
    }
    Session s;
    try {
      if (j.is_object() && j.contains("corpus_pair")) {
        const auto idx = detail::get_as<std::size_t>(j, "corpus_pair");
        if (idx >= corpus_.size())
          return error(400, "corpus_pair " + std::to_string(idx) + " out of range (" + std::to_string(corpus_.size()) +
                                " pairs loaded)");
        s.pair = corpus_[idx];
      } else {
        s.pair = case_pair_from_json(j.is_object() && j.contains("pair") ? j.at("pair") : j);
      }
      const std::size_t c = cats.size();
      auto report = validate(s.pair, c);
      if (!report.ok()) return error(400, "invalid pair: " + report.str());
      if (s.pair.source.doc_id == s.pair.target.doc_id) return error(400, "invalid pair: documents share a doc_id");

      const EmbeddingMap emb = pair_embeddings(s.pair, model->dimension);
      std::map<SentenceRef, Vector> inline_probs;
      if (j.is_object() && j.contains("machine_probs"))
        for (const auto& mj : j.at("machine_probs")) {
          auto d = machine_decision_from_json(mj);
          inline_probs[d.ref] = d.probs;
        }
      const auto machine = machine_probs(s.pair, c, inline_probs);
      for (const auto* d : {&s.pair.source, &s.pair.target})
        for (const auto& sent : d->sentences) {
          SessionSentence ss;
          ss.ref = sent.ref();
          ss.machine = {ss.ref, machine.at(ss.ref)};
          ss.prototype = assign_nearest(emb.at(ss.ref), model->centroids);
          s.sentences.push_back(std::move(ss));
        }
    } catch (const Error& e) {
      return error(400, e.what());
    }
    s.created_at = s.updated_at = iso_timestamp();
    {
      std::lock_guard lock(sessions_mutex_);
      do s.id = new_id();
      while (sessions_.count(s.id));
      auto entry = std::make_shared<Entry>();
      entry->session = std::move(s);
      sessions_[entry->session.id] = entry;
      std::lock_guard entry_lock(entry->mutex);
      persist(entry->session);
      return {201, to_json_value(entry->session)};
    }
  }

  Response get_session(const std::string& id) const {
    auto entry = find(id);
    if (!entry) return error(404, "unknown session '" + id + "'");
    std::lock_guard lock(entry->mutex);
    return {200, to_json_value(entry->session)};
  }

  Response put_decisions(const std::string& id, const std::string& body) {
    auto entry = find(id);
    if (!entry) return error(404, "unknown session '" + id + "'");
    auto [model, cats] = snapshot_model();
    if (!model) return error(503, "no model loaded");
    Json j;
    try {
      j = Json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return error(400, std::string("malformed JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("decisions")) j = j.at("decisions");
    if (!j.is_array()) return error(422, "expected a list of {doc_id, index, label}");

    std::lock_guard lock(entry->mutex);
    Session& s = entry->session;
    // Validate the whole batch before touching the session.
    std::vector<std::pair<SessionSentence*, Label>> updates;
    for (const auto& dj : j) {
      HumanDecision d;
      try {
        d = human_decision_from_json(dj);
      } catch (const Error& e) {
        return error(422, e.what());
      }
      SessionSentence* ss = s.find(d.ref);
      if (!ss) return error(422, "no sentence " + to_string(d.ref) + " in this session");
      if (d.label >= cats.size())
        return error(422, "label " + std::to_string(d.label) + " >= C = " + std::to_string(cats.size()));
      updates.emplace_back(ss, d.label);
    }
    EmbeddingMap live_emb;
    if (!cfg_.append_log_path.empty()) live_emb = pair_embeddings(s.pair, model->dimension);
    Json out = Json::array();
    for (auto& [ss, label] : updates) {
      const auto& phi = model->confusions.at(ss->prototype);
      ss->human = label;
      ss->fused = fuse(ss->machine, {ss->ref, label}, phi);
      ss->machine_finalized = false;
      Json fj = to_json_value(*ss->fused);
      fj["prototype"] = ss->prototype;
      fj["confusion_row"] = std::vector<double>(phi.row(label).begin(), phi.row(label).end());
      out.push_back(fj);
      if (!cfg_.append_log_path.empty()) record_live_decision(*ss, live_emb.at(ss->ref), *model, cats);
    }
    s.relation.reset();
    s.updated_at = iso_timestamp();
    persist(s);
    return {200, {{"session_id", s.id}, {"fused", out}}};
  }

  Response match(const std::string& id, const std::string& body) {
    auto entry = find(id);
    if (!entry) return error(404, "unknown session '" + id + "'");
    auto [model, cats] = snapshot_model();
    if (!model) return error(503, "no model loaded");
    bool finalize = false;
    if (!body.empty()) {
      try {
        const Json j = Json::parse(body);
        if (j.is_object() && j.contains("finalize_unmarked")) {
          const auto mode = j.at("finalize_unmarked").get<std::string>();
          if (mode != "machine") return error(400, "finalize_unmarked must be \"machine\"");
          finalize = true;
        }
      } catch (const nlohmann::json::exception& e) {
        return error(400, std::string("malformed JSON: ") + e.what());
      }
    }
    std::lock_guard lock(entry->mutex);
    Session& s = entry->session;
    std::size_t unmarked = 0;
    for (const auto& ss : s.sentences) unmarked += !ss.fused && !ss.machine_finalized;
    if (unmarked > 0 && !finalize)
      return error(409, std::to_string(unmarked) + " sentences have no decision; mark them or send "
                                                   "{\"finalize_unmarked\": \"machine\"}");
    std::vector<FusedDecision> fs, ft;
    EmbeddingMap emb;
    try {
      emb = pair_embeddings(s.pair, model->dimension);
    } catch (const Error& e) {
      return error(422, e.what());
    }
    const std::size_t c = cats.size();
    for (auto& ss : s.sentences) {
      if (!ss.fused) ss.machine_finalized = true;
      // The matcher consumes the selected label of each sentence.
      const Label label = ss.fused ? ss.fused->label : argmax(ss.machine.probs);
      auto d = one_hot_decision(ss.ref, label, c);
      (ss.ref.doc_id == s.pair.source.doc_id ? fs : ft).push_back(std::move(d));
    }
    try {
      s.relation = select_matcher(cfg_.matcher)(s.pair, fs, ft, emb, cfg_.match);
    } catch (const Error& e) {
      return error(422, e.what());
    }
    s.updated_at = iso_timestamp();
    persist(s);
    return {200, {{"session_id", s.id}, {"relation", s.relation->relation}, {"score", s.relation->score},
                  {"match", to_json_value(*s.relation)}}};
  }

  // ---- HTTP binding

  void mount(httplib::Server& server) {
    const std::string origin = cfg_.cors_origin;
    server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                                {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    auto send = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/api/v1/healthz", [=, this](const httplib::Request&, httplib::Response& res) { send(res, healthz()); });
    server.Get("/api/v1/model", [=, this](const httplib::Request&, httplib::Response& res) { send(res, get_model()); });
    server.Put("/api/v1/model",
               [=, this](const httplib::Request& req, httplib::Response& res) { send(res, put_model(req.body)); });
    server.Get("/api/v1/config", [=, this](const httplib::Request&, httplib::Response& res) { send(res, get_config()); });
    server.Post("/api/v1/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, create_session(req.body));
    });
    server.Get(R"(/api/v1/sessions/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, get_session(req.matches[1]));
    });
    server.Put(R"(/api/v1/sessions/([^/]+)/decisions)", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, put_decisions(req.matches[1], req.body));
    });
    server.Post(R"(/api/v1/sessions/([^/]+)/match)", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, match(req.matches[1], req.body));
    });
    if (!cfg_.ui_dir.empty() && !server.set_mount_point("/ui", cfg_.ui_dir))
      throw EnvironmentError("cannot serve UI directory '" + cfg_.ui_dir + "'");
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      res.status = 500;
      res.set_content(Json{{"error", what}}.dump(), "application/json");
    });
  }

  void flush() {
    std::lock_guard lock(log_mutex_);
    if (log_.is_open()) log_.flush();
    if (live_.is_open()) live_.flush();
  }

 private:
  struct Entry {
    std::mutex mutex;
    Session session;
  };

  static Response error(int status, const std::string& message) { return {status, {{"error", message}}}; }

  std::pair<std::shared_ptr<const PrototypeModel>, CategorySet> snapshot_model() const {
    std::shared_lock lock(model_mutex_);
    return {model_, categories_};
  }

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::string new_id() {
    std::uniform_int_distribution<std::uint64_t> dist;
    char buf[24];
    std::snprintf(buf, sizeof buf, "s-%012llx", static_cast<unsigned long long>(dist(id_rng_) & 0xffffffffffffULL));
    return buf;
  }

  // Carried vectors when present, else hashed text (dimension must match).
  EmbeddingMap pair_embeddings(const CasePair& pair, std::size_t dimension) const {
    EmbeddingMap emb;
    for (const auto* d : {&pair.source, &pair.target})
      for (std::size_t i = 0; i < d->sentences.size(); ++i) {
        const auto& s = d->sentences[i];
        if (s.vector) {
          if (s.vector->size() != dimension)
            throw ValidationError("sentence " + to_string(s.ref()) + ": vector dimension " +
                                  std::to_string(s.vector->size()) + " != model dimension " + std::to_string(dimension));
          emb[s.ref()] = *s.vector;
        } else {
          if (cfg_.embedding.dimension != dimension)
            throw ValidationError("sentence " + to_string(s.ref()) + " has no vector and the text embedder dimension " +
                                  std::to_string(cfg_.embedding.dimension) + " != model dimension " +
                                  std::to_string(dimension));
          emb[s.ref()] = embed_sentence(*d, i, cfg_.embedding);
        }
      }
    return emb;
  }

  std::map<SentenceRef, Vector> machine_probs(const CasePair& pair, std::size_t c,
                                              const std::map<SentenceRef, Vector>& inline_probs) const {
    std::map<SentenceRef, Vector> out;
    std::vector<SentenceRef> missing;
    for (const auto* d : {&pair.source, &pair.target})
      for (const auto& s : d->sentences) {
        const auto ref = s.ref();
        if (auto it = inline_probs.find(ref); it != inline_probs.end()) out[ref] = it->second;
        else if (auto it2 = imported_.find(ref); it2 != imported_.end()) out[ref] = it2->second;
        else missing.push_back(ref);
      }
    if (!missing.empty()) {
      if (cfg_.machine_source != MachineSource::simulator)
        throw CompletenessError("no machine probabilities for " + to_string(missing.front()));
      std::vector<Label> labels;
      for (const auto& ref : missing) {
        const auto& doc = ref.doc_id == pair.source.doc_id ? pair.source : pair.target;
        const auto& s = doc.sentences.at(ref.index);
        if (!s.true_label)
          throw CompletenessError("simulated machine needs a label for " + to_string(ref) +
                                  " (or pass machine_probs in the request)");
        labels.push_back(*s.true_label);
      }
      MachineSimConfig mcfg = cfg_.machine;
      // Same pair content -> same machine decisions.
      mcfg.seed = derive_seed(cfg_.machine.seed, detail::fnv1a(to_json_value(pair).dump()));
      const auto sim = simulate_machine(labels, c, mcfg);
      for (std::size_t i = 0; i < missing.size(); ++i) out[missing[i]] = apply_temperature(sim.logits[i], cfg_.temperature);
    }
    for (auto& [ref, p] : out)
      if (p.size() != c)
        throw ValidationError("machine probabilities for " + to_string(ref) + " have " + std::to_string(p.size()) +
                              " entries, expected " + std::to_string(c));
    return out;
  }

  std::string log_path() const { return (std::filesystem::path(cfg_.data_dir) / "sessions.jsonl").string(); }

  void replay() {
    const std::string path = log_path();
    if (std::filesystem::exists(path)) {
      detail::for_each_json_line(path, [&](const Json& j, std::size_t) {
        auto entry = std::make_shared<Entry>();
        entry->session = session_from_json(j);
        sessions_[entry->session.id] = entry;
      });
    }
    log_.open(path, std::ios::binary | std::ios::app);
    if (!log_) throw EnvironmentError("cannot open session log '" + path + "'");
  }

  void persist(const Session& s) {
    if (cfg_.data_dir.empty()) return;
    std::lock_guard lock(log_mutex_);
    log_ << to_json_value(s).dump() << '\n';
    log_.flush();
  }

  void record_live_decision(const SessionSentence& ss, const Vector& embedding, const PrototypeModel& model,
                            const CategorySet& cats) {
    std::lock_guard lock(log_mutex_);
    if (!live_.is_open()) {
      const bool fresh = !std::filesystem::exists(cfg_.append_log_path) ||
                         std::filesystem::file_size(cfg_.append_log_path) == 0;
      live_.open(cfg_.append_log_path, std::ios::binary | std::ios::app);
      if (!live_) throw EnvironmentError("cannot open decision log '" + cfg_.append_log_path + "'");
      if (fresh)
        live_ << Json{{"dimension", model.dimension},
                      {"categories", cats.names},
                      {"importance_rank", cats.importance_rank}}
                     .dump()
              << '\n';
    }
    DecisionRecord r;
    r.ref = ss.ref;
    r.human_label = *ss.human;
    r.machine_probs = ss.machine.probs;
    r.embedding = embedding;
    live_ << to_json_value(r).dump() << '\n';
    live_.flush();
  }

  ServiceConfig cfg_;
  std::vector<CasePair> corpus_;
  std::map<SentenceRef, Vector> imported_;

  mutable std::shared_mutex model_mutex_;
  std::shared_ptr<const PrototypeModel> model_;
  CategorySet categories_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mt19937_64 id_rng_{std::random_device{}()};

  std::mutex log_mutex_;
  std::ofstream log_;
  std::ofstream live_;
};

}  // namespace comatch
