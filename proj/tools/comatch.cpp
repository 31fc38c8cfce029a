// comatch: synthetic data, ProtoEM fitting, fusion, experiments and the HTTP service.
//
// Exit codes: 0 ok, 2 usage/config, 3 data, 4 environment.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "comatch/comatch.hpp"

namespace fs = std::filesystem;
using namespace comatch;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitEnvironment = 4;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EnvironmentError("cannot write '" + path + "'");
  out << text;
  if (!out) throw EnvironmentError("write to '" + path + "' failed");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed JSON: " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw EnvironmentError("cannot create '" + dir + "': " + ec.message());
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) out.push_back(static_cast<T>(std::stod(item, &used)));
      else out.push_back(static_cast<T>(std::stoull(item, &used)));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse " + what + " '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty " + what);
  return out;
}

// Every sentence must carry a vector, or the text embedder is used at `dimension`.
EmbeddingMap corpus_embeddings(const std::vector<CasePair>& corpus, std::size_t dimension, std::uint64_t seed,
                               const std::string& import_path) {
  if (!import_path.empty()) return import_embeddings(import_path, dimension);
  EmbeddingMap emb;
  bool all_vectors = true;
  for (const auto& p : corpus)
    for (const auto* d : {&p.source, &p.target})
      for (const auto& s : d->sentences) all_vectors = all_vectors && s.vector.has_value();
  if (all_vectors) {
    for (const auto& p : corpus)
      for (const auto* d : {&p.source, &p.target})
        for (const auto& s : d->sentences) {
          if (s.vector->size() != dimension)
            throw ValidationError("sentence " + to_string(s.ref()) + ": vector dimension " +
                                  std::to_string(s.vector->size()) + " != " + std::to_string(dimension));
          emb[s.ref()] = *s.vector;
        }
    return emb;
  }
  EmbeddingConfig cfg;
  cfg.dimension = dimension;
  cfg.seed = seed;
  std::vector<Document> docs;
  for (const auto& p : corpus) {
    docs.push_back(p.source);
    docs.push_back(p.target);
  }
  return embed_corpus(docs, cfg);
}

// ---------------------------------------------------------------------------

struct GenOptions {
  std::string preset = "elam-like";
  std::string spec_path;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
  std::size_t records = 0;
  double human_noise = -1.0;
  bool text = false;
};

void cmd_gen(const GenOptions& o) {
  GeneratorSpec spec = preset(o.preset);
  if (!o.spec_path.empty()) spec = generator_spec_from_json(read_json_file(o.spec_path), spec);
  if (o.pairs) spec.pairs = o.pairs;
  if (o.records) spec.history_records_per_prototype = o.records;
  if (o.human_noise >= 0.0) spec.human_noise = o.human_noise;
  if (o.text) spec.text_mode = true;
  const auto data = gen_synthetic(spec, o.seed);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  ensure_dir(o.out);
  save_corpus(data.corpus, (fs::path(o.out) / "pairs.jsonl").string());
  write_text((fs::path(o.out) / "truth.json").string(), truth_to_json(data, spec, o.seed).dump(2) + "\n");
  save_decision_log(data.log, (fs::path(o.out) / "history.jsonl").string());
}

struct ProtoEmOptions {
  std::string log;
  std::string out;
  std::string trace;
  std::size_t prototypes = 4;
  std::size_t iters = 40;
  double alpha = 1.0;
  double epsilon = 0.2;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool naive = false;
};

void cmd_protoem(const ProtoEmOptions& o) {
  LoadResult diag;
  const DecisionLog log = load_decision_log(o.log, &diag);
  for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
  ProtoEmConfig cfg;
  cfg.prototypes = o.naive ? 1 : o.prototypes;
  cfg.em_iterations = o.iters;
  cfg.smoothing = o.alpha;
  cfg.init_epsilon = o.epsilon;
  cfg.convergence_tol = o.tol;
  cfg.seed = o.seed;
  const auto res = fit_protoem(log, cfg, o.threads);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  Json model = to_json_value(res.model);
  model["categories"] = to_json_value(log.categories);
  model["records_per_prototype"] = res.records_per_prototype;
  write_text(o.out, model.dump(2) + "\n");
  if (!o.trace.empty()) {
    std::string lines;
    for (const auto& t : res.trace)
      lines += Json{{"prototype", t.prototype}, {"iter", t.iter}, {"ell", t.ell}, {"max_delta", t.max_delta}}.dump() +
               "\n";
    write_text(o.trace, lines);
  }
}

struct LoadedModel {
  PrototypeModel model;
  std::optional<CategorySet> categories;
};

LoadedModel load_model_file(const std::string& path) {
  const Json j = read_json_file(path);
  LoadedModel m{prototype_model_from_json(j), std::nullopt};
  if (j.contains("categories")) m.categories = category_set_from_json(j.at("categories"));
  return m;
}

struct FuseOptions {
  std::string corpus;
  std::string model;
  std::string phi;  // "identity" or "uniform": one global matrix, no model needed
  std::size_t categories = 0;
  std::string machine;
  double machine_accuracy = 0.75;
  double concentration = 5.0;
  double temperature = 1.0;
  std::string human;
  double human_noise = -1.0;
  std::string noise_model = "drop_to_notkey";
  std::string embeddings;
  std::size_t dimension = 256;
  std::uint64_t seed = 0;
  std::string out;
  std::string match;
  std::string matcher = "reference";
};

void cmd_fuse(const FuseOptions& o) {
  const auto corpus = load_corpus(o.corpus);
  if (corpus.empty()) throw ValidationError("corpus '" + o.corpus + "' has no pairs");

  std::optional<LoadedModel> model;
  if (!o.model.empty()) model = load_model_file(o.model);
  if (!model && o.phi.empty()) throw ConfigError("fuse needs --model or --phi identity|uniform");
  if (!o.phi.empty() && o.phi != "identity" && o.phi != "uniform")
    throw ConfigError("--phi must be identity or uniform");
  std::size_t c = o.categories;
  if (model) c = model->model.confusions.front().size();
  if (c < 2) throw ConfigError("category count unknown: pass --model or --categories");
  if (o.categories && model && o.categories != c) throw ConfigError("--categories disagrees with the model");

  std::vector<SentenceRef> refs;
  std::vector<const Sentence*> sentences;
  for (const auto& p : corpus)
    for (const auto* d : {&p.source, &p.target})
      for (const auto& s : d->sentences) {
        refs.push_back(s.ref());
        sentences.push_back(&s);
      }
  auto labels_for = [&](const char* what) {
    std::vector<Label> labels;
    for (const auto* s : sentences) {
      if (!s->true_label)
        throw ConfigError(std::string("simulated ") + what + " decisions need a labeled corpus (" +
                          to_string(s->ref()) + " has no label); pass a decisions file instead");
      labels.push_back(*s->true_label);
    }
    return labels;
  };

  std::map<SentenceRef, Vector> machine;
  if (!o.machine.empty()) {
    detail::for_each_json_line(o.machine, [&](const Json& j, std::size_t) {
      auto d = machine_decision_from_json(j);
      machine[d.ref] = d.probs;
    });
  } else {
    MachineSimConfig mcfg;
    mcfg.target_accuracy = o.machine_accuracy;
    mcfg.concentration = o.concentration;
    mcfg.seed = derive_seed(o.seed, 2);
    const auto sim = simulate_machine(labels_for("machine"), c, mcfg);
    for (std::size_t i = 0; i < refs.size(); ++i) machine[refs[i]] = apply_temperature(sim.logits[i], o.temperature);
  }
  std::map<SentenceRef, Label> human;
  if (!o.human.empty()) {
    detail::for_each_json_line(o.human, [&](const Json& j, std::size_t) {
      auto d = human_decision_from_json(j);
      human[d.ref] = d.label;
    });
  } else if (o.human_noise >= 0.0) {
    HumanSimConfig hcfg{o.human_noise, human_noise_model_from_string(o.noise_model), derive_seed(o.seed, 5)};
    const auto labels = simulate_human_labels(labels_for("human"), c, hcfg);
    for (std::size_t i = 0; i < refs.size(); ++i) human[refs[i]] = labels[i];
  } else {
    throw ConfigError("fuse needs --human FILE or --human-noise RATE");
  }

  const std::size_t dim = model ? model->model.dimension : o.dimension;
  EmbeddingMap emb;
  if (model || !o.match.empty()) emb = corpus_embeddings(corpus, dim, o.seed, o.embeddings);

  const ConfusionMatrix global = o.phi == "uniform" ? ConfusionMatrix::uniform(c) : ConfusionMatrix::identity(c);
  std::map<SentenceRef, FusedDecision> fused;
  std::string lines;
  for (const auto& ref : refs) {
    auto mi = machine.find(ref);
    if (mi == machine.end()) throw CompletenessError("no machine decision for " + to_string(ref));
    auto hi = human.find(ref);
    if (hi == human.end()) throw CompletenessError("no human decision for " + to_string(ref));
    if (mi->second.size() != c) throw ValidationError("machine decision for " + to_string(ref) + " has wrong length");
    if (hi->second >= c) throw ValidationError("human label for " + to_string(ref) + " is >= C");
    const ConfusionMatrix* phi = &global;
    Json extra;
    if (o.phi.empty()) {
      const auto k = assign_nearest(emb.at(ref), model->model.centroids);
      phi = &model->model.confusions[k];
      extra = k;
    }
    auto d = fuse({ref, mi->second}, {ref, hi->second}, *phi);
    Json j = to_json_value(d);
    j["human_label"] = hi->second;
    j["prototype"] = extra;
    lines += j.dump() + "\n";
    fused.emplace(ref, std::move(d));
  }
  write_text(o.out, lines);

  if (!o.match.empty()) {
    MatchConfig mc;
    const auto matcher = select_matcher(o.matcher);
    std::string rel;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& p = corpus[i];
      std::vector<FusedDecision> fs, ft;
      for (const auto& s : p.source.sentences) fs.push_back(one_hot_decision(s.ref(), fused.at(s.ref()).label, c));
      for (const auto& s : p.target.sentences) ft.push_back(one_hot_decision(s.ref(), fused.at(s.ref()).label, c));
      const auto r = matcher(p, fs, ft, emb, mc);
      Json j{{"pair", i},
             {"source", p.source.doc_id},
             {"target", p.target.doc_id},
             {"relation", r.relation},
             {"score", r.score},
             {"true_relation", nullptr}};
      if (p.true_relation) j["true_relation"] = *p.true_relation;
      if (r.diagnostic) j["diagnostic"] = *r.diagnostic;
      rel += j.dump() + "\n";
    }
    write_text(o.match, rel);
  }
}

struct SimulateOptions {
  std::string corpus;
  std::string preset = "elam-like";
  std::string out;
  std::string noise = "0.1..0.5";
  std::string noise_model = "drop_to_notkey";
  std::string variants = "all";
  std::string k_grid = "4";
  std::string em_grid = "40";
  std::size_t seeds = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double machine_accuracy = 0.75;
  double concentration = 5.0;
  double overconfidence = 1.0;
  bool no_calibrate = false;
  std::string matcher = "reference";
};

void cmd_simulate(const SimulateOptions& o) {
  ExperimentConfig cfg;
  cfg.noise_rates = parse_noise_grid(o.noise);
  cfg.noise_model = human_noise_model_from_string(o.noise_model);
  cfg.prototype_grid = parse_list<std::size_t>(o.k_grid, "k-grid");
  cfg.em_grid = parse_list<std::size_t>(o.em_grid, "em-grid");
  if (o.variants != "all") {
    cfg.variants.clear();
    std::stringstream ss(o.variants);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) cfg.variants.push_back(variant_from_string(item));
  }
  cfg.seeds = o.seeds;
  cfg.base_seed = o.seed;
  cfg.threads = o.threads;
  cfg.machine.target_accuracy = o.machine_accuracy;
  cfg.machine.concentration = o.concentration;
  cfg.machine.overconfidence_scale = o.overconfidence;
  cfg.calibrate = !o.no_calibrate;
  cfg.matcher = o.matcher;

  std::vector<CasePair> corpus;
  CategorySet cats;
  if (!o.corpus.empty()) {
    corpus = load_corpus(o.corpus);
    if (!corpus_is_labeled(corpus))
      throw ValidationError("corpus '" + o.corpus + "' lacks sentence labels or pair relations");
    std::size_t c = 2;
    for (const auto& p : corpus)
      for (const auto* d : {&p.source, &p.target})
        for (const auto& s : d->sentences) c = std::max(c, *s.true_label + 1);
    cats = c == preset(o.preset).categories.size() ? preset(o.preset).categories : CategorySet::generic(c);
  } else {
    const GeneratorSpec spec = preset(o.preset);
    corpus = gen_synthetic(spec, o.seed).corpus;
    cats = spec.categories;
  }
  const auto report = run_experiment(corpus, cats, cfg);
  ensure_dir(o.out);
  write_text((fs::path(o.out) / "report.json").string(), to_json_value(report).dump(2) + "\n");
  write_text((fs::path(o.out) / "report.csv").string(), to_csv(report));
}

struct ServeOptions {
  std::string addr = "127.0.0.1:8787";
  std::string model;
  std::string corpus;
  std::string data_dir;
  std::string ui_dir;
  std::string machine_probs;
  std::string append_log;
  std::string cors_origin = "*";
  double machine_accuracy = 0.75;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  bool hide_machine = false;
};

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const ServeOptions& o) {
  const auto colon = o.addr.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--addr must be host:port");
  const std::string host = o.addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(o.addr.substr(colon + 1));
  } catch (const std::logic_error&) {
    throw ConfigError("--addr port is not a number");
  }
  if (port < 0 || port > 65535) throw ConfigError("--addr port out of range");

  ServiceConfig cfg;
  cfg.machine.target_accuracy = o.machine_accuracy;
  cfg.machine.seed = o.seed;
  cfg.temperature = o.temperature;
  cfg.data_dir = o.data_dir;
  cfg.ui_dir = o.ui_dir;
  cfg.append_log_path = o.append_log;
  cfg.cors_origin = o.cors_origin;
  cfg.show_machine_suggestions = !o.hide_machine;
  if (!o.machine_probs.empty()) {
    cfg.machine_source = MachineSource::imported;
    cfg.machine_probs_path = o.machine_probs;
  }
  std::optional<LoadedModel> model;
  if (!o.model.empty()) {
    try {
      model = load_model_file(o.model);
    } catch (const Error& e) {
      throw ConfigError(std::string("bad model: ") + e.what());
    }
  }
  std::vector<CasePair> corpus;
  if (!o.corpus.empty()) corpus = load_corpus(o.corpus);
  Service service(cfg, std::move(corpus));
  if (model) {
    try {
      service.load_model(model->model, model->categories);
    } catch (const Error& e) {
      throw ConfigError(std::string("bad model: ") + e.what());
    }
  } else {
    std::cerr << "warning: no --model given; serving in degraded mode until PUT /api/v1/model\n";
  }

  httplib::Server server;
  // httplib defaults to SO_REUSEPORT, which would let a second server share a busy port.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  service.mount(server);
  if (!server.bind_to_port(host, port)) throw EnvironmentError("cannot bind " + o.addr + " (address in use?)");
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  std::cerr << "listening on http://" << o.addr << "/api/v1\n";
  server.listen_after_bind();
  g_stop = true;
  watcher.join();
  service.flush();
  std::cerr << "shut down\n";
  return 0;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const EnvironmentError*>(&e)) return kExitEnvironment;
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-machine co-matching of legal case pairs"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);

  auto seed_option = [](CLI::App* sub, std::uint64_t& target) {
    sub->add_option("--seed", target, "Random seed (falls back to $COMATCH_SEED)")->envname("COMATCH_SEED");
  };

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic corpus, truth matrices and a decision log");
  g->add_option("--preset", gen.preset, "elam-like (C=4) or ecail-like (C=2)")->capture_default_str();
  g->add_option("--spec", gen.spec_path, "JSON generator spec overriding the preset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--pairs", gen.pairs, "Number of case pairs");
  g->add_option("--records", gen.records, "History records per prototype");
  g->add_option("--human-noise", gen.human_noise, "Base practitioner noise rate of the history log");
  g->add_flag("--text", gen.text, "Template text embedded by the hashing embedder");
  seed_option(g, gen.seed);

  ProtoEmOptions pe;
  auto* p = app.add_subcommand("protoem", "Fit prototype confusion matrices from a decision log");
  p->add_option("--log", pe.log, "Decision log (JSON Lines)")->required();
  p->add_option("--out", pe.out, "Model file to write")->required();
  p->add_option("--trace", pe.trace, "Per-iteration trace (JSON Lines)");
  p->add_option("--prototypes,-k", pe.prototypes, "Number of prototypes")->capture_default_str();
  p->add_option("--iters", pe.iters, "EM iterations per prototype")->capture_default_str();
  p->add_option("--alpha", pe.alpha, "Additive smoothing of the M-step")->capture_default_str();
  p->add_option("--epsilon", pe.epsilon, "Off-diagonal mass of the initial matrix")->capture_default_str();
  p->add_option("--tol", pe.tol, "Early stop when no entry moves more than this (0 disables)")->capture_default_str();
  p->add_option("--threads", pe.threads, "Worker threads (output does not depend on it)")->capture_default_str();
  p->add_flag("--naive", pe.naive, "Single global matrix (same as --prototypes 1)");
  seed_option(p, pe.seed);

  FuseOptions fu;
  auto* f = app.add_subcommand("fuse", "Fuse machine and human decisions for every sentence of a corpus");
  f->add_option("--corpus", fu.corpus, "Corpus (JSON Lines of case pairs)")->required();
  f->add_option("--model", fu.model, "Prototype model from `comatch protoem`");
  f->add_option("--phi", fu.phi, "Debug: one global matrix instead of a model (identity|uniform)");
  f->add_option("--categories", fu.categories, "Category count when no model is given");
  f->add_option("--machine", fu.machine, "Machine decisions (JSON Lines {doc_id,index,probs})");
  f->add_option("--machine-accuracy", fu.machine_accuracy, "Simulated machine accuracy")->capture_default_str();
  f->add_option("--concentration", fu.concentration, "Simulated machine concentration")->capture_default_str();
  f->add_option("--temperature", fu.temperature, "Temperature applied to simulated logits")->capture_default_str();
  f->add_option("--human", fu.human, "Human decisions (JSON Lines {doc_id,index,label})");
  f->add_option("--human-noise", fu.human_noise, "Simulate the practitioner at this noise rate");
  f->add_option("--noise-model", fu.noise_model, "drop_to_notkey or uniform_confusion")->capture_default_str();
  f->add_option("--embeddings", fu.embeddings, "Imported embeddings (JSON Lines {doc_id,index,vector})");
  f->add_option("--dimension", fu.dimension, "Text embedder dimension when no model is given")->capture_default_str();
  f->add_option("--out", fu.out, "Fused decisions file (JSON Lines)")->required();
  f->add_option("--match", fu.match, "Also write pair relations (JSON Lines)");
  f->add_option("--matcher", fu.matcher, "Registered matcher name")->capture_default_str();
  seed_option(f, fu.seed);

  SimulateOptions si;
  auto* s = app.add_subcommand("simulate", "Run the ablation / sensitivity experiment grid");
  s->add_option("--corpus", si.corpus, "Labeled corpus; a preset corpus is generated when omitted");
  s->add_option("--preset", si.preset, "Preset used for generation and category names")->capture_default_str();
  s->add_option("--out", si.out, "Output directory for report.json and report.csv")->required();
  s->add_option("--noise", si.noise, "Noise grid: lo..hi[:step] or a comma list")->capture_default_str();
  s->add_option("--noise-model", si.noise_model, "drop_to_notkey or uniform_confusion")->capture_default_str();
  s->add_option("--variants", si.variants, "all, or a comma list of variant names")->capture_default_str();
  s->add_option("--k-grid", si.k_grid, "Prototype counts, e.g. 1,2,4,6,8,10")->capture_default_str();
  s->add_option("--em-grid", si.em_grid, "EM iteration counts, e.g. 20,40,60,80,100")->capture_default_str();
  s->add_option("--seeds", si.seeds, "Seeds per grid cell")->capture_default_str();
  s->add_option("--threads", si.threads, "Worker threads (output does not depend on it)")->capture_default_str();
  s->add_option("--machine-accuracy", si.machine_accuracy, "Simulated machine accuracy")->capture_default_str();
  s->add_option("--concentration", si.concentration, "Simulated machine concentration")->capture_default_str();
  s->add_option("--overconfidence", si.overconfidence, "Logit scale of the simulated machine")->capture_default_str();
  s->add_flag("--no-calibrate", si.no_calibrate, "Skip temperature scaling on the history split");
  s->add_option("--matcher", si.matcher, "Registered matcher name")->capture_default_str();
  seed_option(s, si.seed);

  ServeOptions sv;
  auto* v = app.add_subcommand("serve", "Serve the session API under /api/v1");
  v->add_option("--addr", sv.addr, "host:port")->capture_default_str();
  v->add_option("--model", sv.model, "Prototype model file");
  v->add_option("--corpus", sv.corpus, "Corpus whose pairs sessions can reference");
  v->add_option("--data-dir", sv.data_dir, "Session log directory (replayed on start)");
  v->add_option("--ui-dir", sv.ui_dir, "Static web UI directory served under /ui");
  v->add_option("--machine-probs", sv.machine_probs, "Imported machine probabilities instead of the simulator");
  v->add_option("--append-log", sv.append_log, "Append live human decisions to this decision log");
  v->add_option("--cors-origin", sv.cors_origin, "Allowed CORS origin")->capture_default_str();
  v->add_option("--machine-accuracy", sv.machine_accuracy, "Simulated machine accuracy")->capture_default_str();
  v->add_option("--temperature", sv.temperature, "Temperature applied to simulated logits")->capture_default_str();
  v->add_flag("--hide-machine", sv.hide_machine, "Tell the UI to hide machine suggestions");
  seed_option(v, sv.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (g->parsed()) cmd_gen(gen);
    else if (p->parsed()) cmd_protoem(pe);
    else if (f->parsed()) cmd_fuse(fu);
    else if (s->parsed()) cmd_simulate(si);
    else if (v->parsed()) return cmd_serve(sv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
