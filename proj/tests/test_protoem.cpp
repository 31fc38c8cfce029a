#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "comatch/corpus.hpp"
#include "comatch/protoem.hpp"

using namespace comatch;

namespace {

DecisionRecord rec(Label h, Vector m, Vector emb = {0.0}) { return {{"d", 0}, std::move(emb), h, std::move(m), {}, {}}; }

DecisionLog small_log(std::uint64_t seed, std::size_t per_prototype = 400) {
  auto spec = preset("elam-like");
  spec.pairs = 4;
  spec.history_records_per_prototype = per_prototype;
  return gen_synthetic(spec, seed).log;
}

void expect_column_stochastic(const ConfusionMatrix& m) {
  for (std::size_t y = 0; y < m.size(); ++y) {
    double s = 0.0;
    for (std::size_t h = 0; h < m.size(); ++h) s += m(h, y);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

}  // namespace

TEST(EStep, IdentityPhiGivesOneHotAtHuman) {
  std::vector<DecisionRecord> rs{rec(0, {0.3, 0.7}), rec(1, {0.9, 0.1})};
  auto post = e_step(rs, ConfusionMatrix::identity(2));
  EXPECT_EQ(post[0], (Vector{1.0, 0.0}));
  EXPECT_EQ(post[1], (Vector{0.0, 1.0}));
}

TEST(EStep, UniformPhiReturnsMachine) {
  std::vector<DecisionRecord> rs{rec(2, {0.1, 0.2, 0.7}), rec(0, {0.5, 0.25, 0.25})};
  auto post = e_step(rs, ConfusionMatrix::uniform(3));
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(post[i][k], rs[i].machine_probs[k], 1e-15);
}

TEST(EStep, SingleRecordHandCase) {
  auto post = e_step({rec(0, {0.6, 0.4})}, ConfusionMatrix({{0.9, 0.2}, {0.1, 0.8}}));
  EXPECT_NEAR(post[0][0], 0.87097, 1e-5);
  EXPECT_NEAR(post[0][1], 0.12903, 1e-5);
}

TEST(MStep, ThreeRecordHandExample) {
  std::vector<DecisionRecord> rs{rec(0, {0.5, 0.5}), rec(0, {0.5, 0.5}), rec(1, {0.5, 0.5})};
  std::vector<Vector> post{{0.8, 0.2}, {0.6, 0.4}, {0.1, 0.9}};
  auto phi = m_step(rs, post, 0.0);
  EXPECT_NEAR(phi(0, 0), 0.9333, 1e-4);
  EXPECT_NEAR(phi(0, 1), 0.4, 1e-4);
  EXPECT_NEAR(phi(1, 0), 0.0667, 1e-4);
  EXPECT_NEAR(phi(1, 1), 0.6, 1e-4);
  EXPECT_NEAR(phi(0, 0), 1.4 / 1.5, 1e-12);
}

TEST(MStep, OneHotAtHumanGivesIdentity) {
  std::vector<DecisionRecord> rs{rec(0, {1, 0, 0}), rec(1, {0, 1, 0}), rec(2, {0, 0, 1}), rec(1, {0, 1, 0})};
  std::vector<Vector> post{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 0}};
  EXPECT_EQ(m_step(rs, post, 0.0), ConfusionMatrix::identity(3));
}

TEST(MStep, EmptyColumnWithSmoothingIsUniform) {
  std::vector<DecisionRecord> rs{rec(0, {1, 0, 0}), rec(1, {0, 1, 0})};
  std::vector<Vector> post{{1, 0, 0}, {0, 1, 0}};
  auto phi = m_step(rs, post, 1.0);
  for (std::size_t h = 0; h < 3; ++h) EXPECT_NEAR(phi(h, 2), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(phi(0, 0), 2.0 / 4.0, 1e-15);
}

TEST(MStep, EmptyColumnWithoutSmoothingIsNumericError) {
  std::vector<DecisionRecord> rs{rec(0, {1, 0, 0})};
  EXPECT_THROW(m_step(rs, {{1, 0, 0}}, 0.0), NumericError);
}

TEST(ExpectedLogLikelihood, ClosedForms) {
  std::vector<DecisionRecord> rs{rec(0, {0.5, 0.5}), rec(1, {0.5, 0.5}), rec(1, {0.5, 0.5})};
  std::vector<Vector> onehot{{1, 0}, {0, 1}, {0, 1}};
  EXPECT_EQ(expected_log_likelihood(rs, onehot, ConfusionMatrix::identity(2)), 0.0);
  std::vector<Vector> any{{0.3, 0.7}, {0.5, 0.5}, {0.9, 0.1}};
  EXPECT_NEAR(expected_log_likelihood(rs, any, ConfusionMatrix::uniform(2)), 3.0 * std::log(0.5), 1e-12);
  EXPECT_THROW(expected_log_likelihood(rs, any, ConfusionMatrix::identity(2)), NumericError);
}

TEST(ProtoEm, MonotoneSurrogateWithoutSmoothing) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    ProtoEmConfig cfg;
    cfg.smoothing = 0.0;
    cfg.convergence_tol = 0.0;
    cfg.seed = seed;
    auto res = fit_protoem(small_log(seed), cfg);
    ASSERT_EQ(res.trace.size(), 4u * 40u);
    for (const auto& e : res.trace) EXPECT_GE(e.ell, e.ell_before - 1e-9) << "proto " << e.prototype << " it " << e.iter;
  }
}

TEST(ProtoEm, OutputsAreColumnStochastic) {
  auto res = fit_protoem(small_log(1), ProtoEmConfig{});
  ASSERT_EQ(res.model.confusions.size(), 4u);
  EXPECT_TRUE(validate(res.model).ok());
  for (const auto& m : res.model.confusions) expect_column_stochastic(m);
}

TEST(ProtoEm, SinglePrototypeEqualsNaiveEm) {
  auto log = small_log(2);
  ProtoEmConfig cfg;
  cfg.prototypes = 1;
  cfg.seed = 5;
  EXPECT_EQ(run_protoem(log, cfg), run_naive_em(log, cfg));
}

TEST(ProtoEm, NaiveEmHasOneGlobalMeanCentroid) {
  auto log = small_log(3);
  auto model = run_naive_em(log, ProtoEmConfig{});
  ASSERT_EQ(model.size(), 1u);
  ASSERT_EQ(model.confusions.size(), 1u);
  EXPECT_EQ(model.config.prototypes, 1u);
  for (std::size_t d = 0; d < log.dimension; ++d) {
    double mean = 0.0;
    for (const auto& r : log.records) mean += r.embedding[d];
    EXPECT_NEAR(model.centroids[0][d], mean / log.records.size(), 1e-9);
  }
}

TEST(ProtoEm, ZeroIterationsReturnsInitialization) {
  ProtoEmConfig cfg;
  cfg.em_iterations = 0;
  auto model = run_protoem(small_log(4), cfg);
  for (const auto& m : model.confusions) EXPECT_EQ(m, ConfusionMatrix::smoothed_identity(4, 0.2));
}

TEST(ProtoEm, DeterministicAndScheduleIndependent) {
  auto log = small_log(5);
  ProtoEmConfig cfg;
  cfg.seed = 9;
  auto a = fit_protoem(log, cfg, 1);
  auto b = fit_protoem(log, cfg, 1);
  auto c = fit_protoem(log, cfg, 4);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.model, c.model);
  EXPECT_EQ(to_json_value(a.model).dump(), to_json_value(c.model).dump());
}

TEST(ProtoEm, RecordOrderDoesNotChangePrototypes) {
  auto log = small_log(6);
  auto shuffled = log;
  Rng rng(1);
  rng.shuffle(shuffled.records);
  auto a = run_protoem(log, ProtoEmConfig{});
  auto b = run_protoem(shuffled, ProtoEmConfig{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::size_t j = assign_nearest(a.centroids[k], b.centroids);
    for (std::size_t d = 0; d < log.dimension; ++d) EXPECT_NEAR(a.centroids[k][d], b.centroids[j][d], 1e-9);
    EXPECT_LT(a.confusions[k].max_abs_diff(b.confusions[j]), 1e-9);
  }
}

TEST(ProtoEm, RecoversPerPrototypeTruth) {
  auto spec = preset("elam-like");
  spec.pairs = 4;
  spec.history_records_per_prototype = 2000;
  auto data = gen_synthetic(spec, 11);
  auto model = run_protoem(data.log, ProtoEmConfig{});
  for (std::size_t k = 0; k < model.size(); ++k) {
    // Match each estimated prototype to the truth of its majority group.
    std::vector<std::size_t> votes(spec.prototypes, 0);
    for (const auto& r : data.log.records)
      if (assign_nearest(r.embedding, model.centroids) == k) ++votes[*r.group];
    const auto g = std::max_element(votes.begin(), votes.end()) - votes.begin();
    EXPECT_LT(model.confusions[k].frobenius_distance(data.true_confusions[g]), 0.15) << "prototype " << k;
  }
}

TEST(ProtoEm, ErrorsAndWarnings) {
  DecisionLog log;
  log.dimension = 1;
  log.categories = CategorySet::generic(2);
  for (int i = 0; i < 7; ++i) log.records.push_back(rec(i % 2, {0.5, 0.5}, {static_cast<double>(i)}));
  ProtoEmConfig cfg;
  EXPECT_THROW(fit_protoem(log, cfg), InsufficientDataError);
  cfg.prototypes = 3;
  log.records.push_back(rec(0, {0.5, 0.5}, {100.0}));
  auto res = fit_protoem(log, cfg);
  // The outlier at 100 ends up alone in its prototype.
  EXPECT_NE(std::find(res.records_per_prototype.begin(), res.records_per_prototype.end(), 1u),
            res.records_per_prototype.end());
  EXPECT_FALSE(res.warnings.empty());
  cfg.init_epsilon = 1.0;
  EXPECT_THROW(fit_protoem(log, cfg), ConfigError);
}
