#include <gtest/gtest.h>

#include <thread>

#include "comatch/corpus.hpp"
#include "comatch/protoem.hpp"
#include "comatch/service.hpp"
#include "test_util.hpp"

using namespace comatch;

namespace {

struct World {
  SyntheticData data;
  PrototypeModel model;
  CategorySet cats;
};

const World& world() {
  static const World w = [] {
    World w;
    auto spec = preset("elam-like");
    spec.pairs = 6;
    spec.history_records_per_prototype = 300;
    w.data = gen_synthetic(spec, 8);
    w.model = run_protoem(w.data.log, ProtoEmConfig{});
    w.cats = spec.categories;
    return w;
  }();
  return w;
}

std::unique_ptr<Service> make_service(ServiceConfig cfg = {}) {
  auto svc = std::make_unique<Service>(cfg, world().data.corpus);
  svc->load_model(world().model, world().cats);
  return svc;
}

std::string create(Service& svc, std::size_t pair = 0) {
  auto r = svc.create_session(Json{{"corpus_pair", pair}}.dump());
  EXPECT_EQ(r.status, 201) << r.body.dump();
  return r.body.at("session_id").get<std::string>();
}

Json decision(const std::string& doc, std::size_t index, Label label) {
  return {{"doc_id", doc}, {"index", index}, {"label", label}};
}

}  // namespace

TEST(Service, HealthIsDegradedWithoutModel) {
  Service svc({}, world().data.corpus);
  auto h = svc.healthz();
  EXPECT_EQ(h.status, 200);
  EXPECT_EQ(h.body.at("status"), "degraded");
  EXPECT_EQ(svc.get_model().status, 503);
  EXPECT_EQ(svc.create_session(Json{{"corpus_pair", 0}}.dump()).status, 503);
  svc.load_model(world().model, world().cats);
  EXPECT_EQ(svc.healthz().body.at("status"), "ok");
}

TEST(Service, ModelSummaryListsConfusions) {
  auto svc = make_service();
  auto m = svc->get_model();
  ASSERT_EQ(m.status, 200);
  EXPECT_EQ(m.body.at("prototypes"), 4);
  EXPECT_EQ(m.body.at("confusions").size(), 4u);
  EXPECT_EQ(m.body.at("categories").at("names").size(), 4u);
}

TEST(Service, PutModelReplacesModel) {
  Service svc({}, world().data.corpus);
  auto naive = run_naive_em(world().data.log, ProtoEmConfig{});
  auto body = to_json_value(naive);
  body["categories"] = to_json_value(world().cats);
  auto r = svc.put_model(body.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body.at("prototypes"), 1);
  EXPECT_EQ(svc.put_model("{\"centroids\": []}").status, 400);
}

TEST(Service, CreateSessionPrecomputesMachineAndPrototypes) {
  auto svc = make_service();
  auto r = svc->create_session(Json{{"corpus_pair", 1}}.dump());
  ASSERT_EQ(r.status, 201);
  const auto& pair = world().data.corpus[1];
  const auto& sents = r.body.at("sentences");
  ASSERT_EQ(sents.size(), pair.source.size() + pair.target.size());
  for (const auto& s : sents) {
    auto probs = s.at("machine_probs").get<Vector>();
    EXPECT_TRUE(validate_distribution(probs).ok());
    EXPECT_TRUE(s.at("fused").is_null());
    const auto& doc = s.at("doc_id") == pair.source.doc_id ? pair.source : pair.target;
    const auto& vec = *doc.sentences[s.at("index").get<std::size_t>()].vector;
    EXPECT_EQ(s.at("prototype").get<std::size_t>(), assign_nearest(vec, world().model.centroids));
  }
  EXPECT_NE(create(*svc, 1), create(*svc, 1));
}

TEST(Service, SamePairGetsSameMachineDecisions) {
  auto svc = make_service();
  auto a = svc->get_session(create(*svc, 2)).body.at("sentences");
  auto b = svc->get_session(create(*svc, 2)).body.at("sentences");
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].at("machine_probs"), b[i].at("machine_probs"));
}

TEST(Service, InvalidPairsAreRejected) {
  auto svc = make_service();
  auto pair = world().data.corpus[0];
  pair.target.sentences.clear();
  EXPECT_EQ(svc->create_session(to_json_value(pair).dump()).status, 400);
  EXPECT_EQ(svc->create_session("{not json").status, 400);
  EXPECT_EQ(svc->create_session(Json{{"corpus_pair", 999}}.dump()).status, 400);
  // Inline pairs work when they carry labels or machine probabilities.
  EXPECT_EQ(svc->create_session(Json{{"pair", to_json_value(world().data.corpus[3])}}.dump()).status, 201);
}

TEST(Service, DecisionsAreFusedWithPrototypeConfusion) {
  auto svc = make_service();
  const auto id = create(*svc);
  const auto session = svc->get_session(id).body;
  const auto& s0 = session.at("sentences")[0];
  const std::string doc = s0.at("doc_id");
  auto r = svc->put_decisions(id, Json::array({decision(doc, 0, 2)}).dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& f = r.body.at("fused")[0];
  const auto k = s0.at("prototype").get<std::size_t>();
  const auto& phi = world().model.confusions[k];
  auto expected = fuse({{doc, 0}, s0.at("machine_probs").get<Vector>()}, {{doc, 0}, 2}, phi);
  EXPECT_EQ(f.at("posterior").get<Vector>(), expected.posterior);
  EXPECT_EQ(f.at("label").get<Label>(), expected.label);
  EXPECT_EQ(f.at("prototype").get<std::size_t>(), k);
  const auto row = phi.row(2);
  EXPECT_EQ(f.at("confusion_row").get<Vector>(), Vector(row.begin(), row.end()));
}

TEST(Service, LastWriteWinsAndValidation) {
  auto svc = make_service();
  const auto id = create(*svc);
  const std::string doc = world().data.corpus[0].source.doc_id;
  ASSERT_EQ(svc->put_decisions(id, Json::array({decision(doc, 1, 1)}).dump()).status, 200);
  ASSERT_EQ(svc->put_decisions(id, Json::array({decision(doc, 1, 3)}).dump()).status, 200);
  auto s = svc->get_session(id).body.at("sentences")[1];
  EXPECT_EQ(s.at("human_label"), 3);
  EXPECT_EQ(svc->put_decisions(id, Json::array({decision(doc, 1, 4)}).dump()).status, 422);
  EXPECT_EQ(svc->put_decisions(id, Json::array({decision("nope", 0, 1)}).dump()).status, 422);
  EXPECT_EQ(svc->put_decisions("missing", Json::array({decision(doc, 1, 1)}).dump()).status, 404);
  // A rejected batch leaves the session untouched.
  EXPECT_EQ(svc->put_decisions(id, Json::array({decision(doc, 1, 0), decision(doc, 0, 9)}).dump()).status, 422);
  EXPECT_EQ(svc->get_session(id).body.at("sentences")[1].at("human_label"), 3);
  EXPECT_EQ(svc->get_session("missing").status, 404);
}

TEST(Service, MatchRequiresDecisionsOrFinalize) {
  auto svc = make_service();
  const auto id = create(*svc);
  EXPECT_EQ(svc->match(id, "").status, 409);
  EXPECT_EQ(svc->match(id, "{\"finalize_unmarked\": \"human\"}").status, 400);
  auto r = svc->match(id, "{\"finalize_unmarked\": \"machine\"}");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(svc->match("missing", "").status, 404);

  // Zero human input plus machine fill equals the machine-only variant.
  const auto session = svc->get_session(id).body;
  const auto& pair = world().data.corpus[0];
  std::vector<FusedDecision> fs, ft;
  EmbeddingMap emb;
  for (const auto& s : session.at("sentences")) {
    SentenceRef ref{s.at("doc_id"), s.at("index")};
    auto d = one_hot_decision(ref, s.at("machine_label").get<Label>(), 4);
    (ref.doc_id == pair.source.doc_id ? fs : ft).push_back(d);
    EXPECT_TRUE(s.at("machine_finalized").get<bool>());
  }
  for (const auto* d : {&pair.source, &pair.target})
    for (const auto& s : d->sentences) emb[s.ref()] = *s.vector;
  auto expected = match_pair(pair, fs, ft, emb);
  EXPECT_EQ(r.body.at("relation").get<std::size_t>(), expected.relation);
  EXPECT_DOUBLE_EQ(r.body.at("score").get<double>(), expected.score);
}

TEST(Service, FullyMarkedSessionMatchesWithoutFinalize) {
  auto svc = make_service();
  const auto id = create(*svc, 4);
  const auto& pair = world().data.corpus[4];
  Json batch = Json::array();
  for (const auto* d : {&pair.source, &pair.target})
    for (const auto& s : d->sentences) batch.push_back(decision(s.doc_id, s.index, *s.true_label));
  ASSERT_EQ(svc->put_decisions(id, batch.dump()).status, 200);
  auto r = svc->match(id, "");
  ASSERT_EQ(r.status, 200);
  EXPECT_FALSE(svc->get_session(id).body.at("relation").is_null());
  // New decisions invalidate the stored relation.
  svc->put_decisions(id, Json::array({batch[0]}).dump());
  EXPECT_TRUE(svc->get_session(id).body.at("relation").is_null());
}

TEST(Service, ReplayingSubmissionsGivesSameFusedState) {
  auto svc = make_service();
  const auto a = create(*svc, 5), b = create(*svc, 5);
  const std::string doc = world().data.corpus[5].target.doc_id;
  const std::vector<Json> sequence{Json::array({decision(doc, 0, 1), decision(doc, 2, 0)}),
                                   Json::array({decision(doc, 0, 3)}), Json::array({decision(doc, 1, 2)})};
  for (const auto& req : sequence) {
    svc->put_decisions(a, req.dump());
    svc->put_decisions(b, req.dump());
  }
  auto sa = svc->get_session(a).body.at("sentences");
  auto sb = svc->get_session(b).body.at("sentences");
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_EQ(sa[i].at("fused"), sb[i].at("fused"));
}

TEST(Service, ConcurrentSubmissionsSerialize) {
  auto svc = make_service();
  const auto id = create(*svc);
  const std::string doc = world().data.corpus[0].source.doc_id;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        // Each request sets sentences 0..3 all to the same label.
        const Label label = static_cast<Label>((t + i) % 4);
        Json batch = Json::array();
        for (std::size_t k = 0; k < 4; ++k) batch.push_back(decision(doc, k, label));
        svc->put_decisions(id, batch.dump());
      }
    });
  for (auto& th : threads) th.join();
  const auto sents = svc->get_session(id).body.at("sentences");
  const auto label = sents[0].at("human_label").get<Label>();
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(sents[k].at("human_label").get<Label>(), label) << "torn update at sentence " << k;
    auto expected = fuse({{doc, k}, sents[k].at("machine_probs").get<Vector>()}, {{doc, k}, label},
                         world().model.confusions[sents[k].at("prototype").get<std::size_t>()]);
    EXPECT_EQ(sents[k].at("fused").at("posterior").get<Vector>(), expected.posterior);
  }
}

TEST(Service, SessionsSurviveRestart) {
  testutil::TempDir dir("svc");
  ServiceConfig cfg;
  cfg.data_dir = dir.file("data");
  std::string id;
  Json before;
  {
    auto svc = make_service(cfg);
    id = create(*svc);
    const std::string doc = world().data.corpus[0].source.doc_id;
    svc->put_decisions(id, Json::array({decision(doc, 0, 1)}).dump());
    svc->put_decisions(id, Json::array({decision(doc, 0, 2)}).dump());
    svc->match(id, "{\"finalize_unmarked\": \"machine\"}");
    svc->flush();
    before = svc->get_session(id).body;
  }
  auto svc = make_service(cfg);
  auto after = svc->get_session(id);
  ASSERT_EQ(after.status, 200);
  EXPECT_EQ(after.body, before);
}

TEST(Service, AppendLogRecordsLiveDecisions) {
  testutil::TempDir dir("svc");
  ServiceConfig cfg;
  cfg.append_log_path = dir.file("live.jsonl");
  auto svc = make_service(cfg);
  const auto id = create(*svc);
  const std::string doc = world().data.corpus[0].source.doc_id;
  svc->put_decisions(id, Json::array({decision(doc, 0, 1), decision(doc, 1, 0)}).dump());
  svc->flush();
  auto log = load_decision_log(cfg.append_log_path);
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.dimension, world().model.dimension);
  EXPECT_EQ(log.records[0].human_label, 1u);
  EXPECT_EQ(log.records[0].embedding, *world().data.corpus[0].source.sentences[0].vector);
}

TEST(Service, ImportedMachineProbabilities) {
  testutil::TempDir dir("svc");
  const auto& pair = world().data.corpus[0];
  std::string lines;
  for (const auto* d : {&pair.source, &pair.target})
    for (const auto& s : d->sentences)
      lines += to_json_value(MachineDecision{s.ref(), {0.25, 0.25, 0.25, 0.25}}).dump() + "\n";
  testutil::write_file(dir.file("probs.jsonl"), lines);
  ServiceConfig cfg;
  cfg.machine_source = MachineSource::imported;
  cfg.machine_probs_path = dir.file("probs.jsonl");
  auto svc = make_service(cfg);
  auto r = svc->create_session(Json{{"corpus_pair", 0}}.dump());
  ASSERT_EQ(r.status, 201);
  EXPECT_EQ(r.body.at("sentences")[0].at("machine_probs").get<Vector>(), (Vector{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(svc->create_session(Json{{"corpus_pair", 1}}.dump()).status, 400);
}

TEST(Service, ConfigEndpointReportsUiSettings) {
  ServiceConfig cfg;
  cfg.show_machine_suggestions = false;
  auto svc = make_service(cfg);
  auto c = svc->get_config().body;
  EXPECT_FALSE(c.at("show_machine_suggestions").get<bool>());
  EXPECT_EQ(c.at("relation_count"), 3);
  EXPECT_EQ(c.at("corpus_pairs"), world().data.corpus.size());
}

TEST(ServiceHttp, RoutesCorsAndStaticUi) {
  testutil::TempDir dir("ui");
  testutil::write_file(dir.file("index.html"), "<html>ui</html>");
  ServiceConfig cfg;
  cfg.ui_dir = dir.path().string();
  cfg.cors_origin = "http://localhost:5173";
  auto svc = make_service(cfg);
  httplib::Server server;
  svc->mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/api/v1/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(Json::parse(health->body).at("status"), "ok");
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");

  auto options = client.Options("/api/v1/sessions");
  ASSERT_TRUE(options);
  EXPECT_EQ(options->status, 204);
  EXPECT_NE(options->get_header_value("Access-Control-Allow-Methods").find("PUT"), std::string::npos);

  auto created = client.Post("/api/v1/sessions", Json{{"corpus_pair", 0}}.dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  const auto id = Json::parse(created->body).at("session_id").get<std::string>();
  const std::string doc = world().data.corpus[0].source.doc_id;
  auto put = client.Put("/api/v1/sessions/" + id + "/decisions", Json::array({decision(doc, 0, 1)}).dump(),
                        "application/json");
  ASSERT_TRUE(put);
  EXPECT_EQ(put->status, 200);
  auto conflict = client.Post("/api/v1/sessions/" + id + "/match", "", "application/json");
  ASSERT_TRUE(conflict);
  EXPECT_EQ(conflict->status, 409);
  auto matched = client.Post("/api/v1/sessions/" + id + "/match", "{\"finalize_unmarked\":\"machine\"}",
                             "application/json");
  ASSERT_TRUE(matched);
  EXPECT_EQ(matched->status, 200);
  auto missing = client.Get("/api/v1/sessions/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto model = client.Get("/api/v1/model");
  ASSERT_TRUE(model);
  EXPECT_EQ(Json::parse(model->body).at("confusions").size(), 4u);
  auto ui = client.Get("/ui/index.html");
  ASSERT_TRUE(ui);
  EXPECT_EQ(ui->status, 200);
  EXPECT_EQ(ui->body, "<html>ui</html>");

  server.stop();
  th.join();
}
