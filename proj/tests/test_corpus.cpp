#include <gtest/gtest.h>

#include <cmath>

#include "comatch/corpus.hpp"
#include "test_util.hpp"

using namespace comatch;

namespace {

const SyntheticData& big_data() {
  static const SyntheticData data = [] {
    auto spec = preset("elam-like");
    spec.pairs = 20;
    return gen_synthetic(spec, 21);
  }();
  return data;
}

// Plug-in conditional mutual information I(A; B | Y) in nats.
double conditional_mi(const std::vector<Label>& a, const std::vector<Label>& b, const std::vector<Label>& y,
                      std::size_t c) {
  std::vector<double> nabc(c * c * c, 0.0), nay(c * c, 0.0), nby(c * c, 0.0), ny(c, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    nabc[(y[i] * c + a[i]) * c + b[i]] += 1;
    nay[y[i] * c + a[i]] += 1;
    nby[y[i] * c + b[i]] += 1;
    ny[y[i]] += 1;
  }
  double mi = 0.0;
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double n = nabc[(k * c + i) * c + j];
        if (n == 0) continue;
        mi += n / a.size() * std::log(n * ny[k] / (nay[k * c + i] * nby[k * c + j]));
      }
  return mi;
}

}  // namespace

TEST(CorpusFiles, SaveLoadRoundTrip) {
  testutil::TempDir dir("corpus");
  const auto& data = big_data();
  save_corpus(data.corpus, dir.file("pairs.jsonl"));
  EXPECT_EQ(load_corpus(dir.file("pairs.jsonl")), data.corpus);
  save_decision_log(data.log, dir.file("log.jsonl"));
  EXPECT_EQ(load_decision_log(dir.file("log.jsonl")), data.log);
}

TEST(CorpusFiles, MissingSentencesNamesLine) {
  testutil::TempDir dir("corpus");
  const auto path = dir.file("bad.jsonl");
  std::vector<CasePair> one{big_data().corpus.front()};
  save_corpus(one, path);
  auto text = testutil::read_file(path);
  text += "{\"source\":{\"doc_id\":\"x\"},\"target\":{\"doc_id\":\"y\",\"sentences\":[]},\"relation\":null}\n";
  testutil::write_file(path, text);
  try {
    load_corpus(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("sentences"), std::string::npos) << msg;
  }
}

TEST(CorpusFiles, EmptyFileWarns) {
  testutil::TempDir dir("corpus");
  testutil::write_file(dir.file("empty.jsonl"), "");
  LoadResult diag;
  EXPECT_TRUE(load_corpus(dir.file("empty.jsonl"), &diag).empty());
  EXPECT_EQ(diag.warnings.size(), 1u);
}

TEST(CorpusFiles, TrailingGarbageIsRejected) {
  testutil::TempDir dir("corpus");
  std::vector<CasePair> one{big_data().corpus.front()};
  save_corpus(one, dir.file("p.jsonl"));
  auto text = testutil::read_file(dir.file("p.jsonl"));
  text.insert(text.size() - 1, " xyz");
  testutil::write_file(dir.file("p.jsonl"), text);
  EXPECT_THROW(load_corpus(dir.file("p.jsonl")), FormatError);
}

TEST(CorpusFiles, InvalidPairIsValidationError) {
  testutil::TempDir dir("corpus");
  testutil::write_file(dir.file("p.jsonl"),
                       "{\"source\":{\"doc_id\":\"x\",\"sentences\":[]},\"target\":{\"doc_id\":\"y\",\"sentences\":"
                       "[{\"text\":\"a\",\"label\":0}]},\"relation\":null}\n");
  EXPECT_THROW(load_corpus(dir.file("p.jsonl")), ValidationError);
}

TEST(DecisionLogFiles, UnnormalizedMachineProbsIsValidationError) {
  testutil::TempDir dir("log");
  testutil::write_file(dir.file("l.jsonl"),
                       "{\"dimension\":2,\"categories\":[\"Not Key\",\"Key\"]}\n"
                       "{\"doc_id\":\"a\",\"index\":0,\"embedding\":[0,1],\"human_label\":1,\"machine_probs\":[0.5,0.4]}\n");
  EXPECT_THROW(load_decision_log(dir.file("l.jsonl")), ValidationError);
}

TEST(DecisionLogFiles, DimensionMismatchIsFormatError) {
  testutil::TempDir dir("log");
  testutil::write_file(dir.file("l.jsonl"),
                       "{\"dimension\":2,\"categories\":[\"Not Key\",\"Key\"]}\n"
                       "{\"doc_id\":\"a\",\"index\":0,\"embedding\":[0,1],\"human_label\":1,\"machine_probs\":[0.5,0.5]}\n"
                       "{\"doc_id\":\"a\",\"index\":1,\"embedding\":[0,1,2],\"human_label\":1,\"machine_probs\":[0.5,0.5]}\n");
  try {
    load_decision_log(dir.file("l.jsonl"));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(DecisionLogFiles, MissingHeaderIsFormatError) {
  testutil::TempDir dir("log");
  testutil::write_file(dir.file("l.jsonl"), "\n");
  EXPECT_THROW(load_decision_log(dir.file("l.jsonl")), FormatError);
}

TEST(Generator, PresetShapes) {
  auto elam = preset("elam-like");
  auto ecail = preset("ecail-like");
  EXPECT_EQ(elam.categories.size(), 4u);
  EXPECT_EQ(ecail.categories.size(), 2u);
  EXPECT_EQ(elam.prototypes, 4u);
  EXPECT_THROW(preset("unknown"), ConfigError);
  ecail.pairs = 10;
  ecail.history_records_per_prototype = 50;
  auto d = gen_synthetic(ecail, 1);
  EXPECT_EQ(d.corpus.size(), 10u);
  EXPECT_EQ(d.log.records.size(), 200u);
  EXPECT_EQ(d.log.categories.size(), 2u);
  EXPECT_TRUE(validate(d.log).ok());
  for (const auto& p : d.corpus) {
    EXPECT_TRUE(validate(p, 2).ok());
    ASSERT_TRUE(p.true_relation.has_value());
    EXPECT_LT(*p.true_relation, 3u);
  }
}

TEST(Generator, DeterministicForSameSeed) {
  auto spec = preset("elam-like");
  spec.pairs = 15;
  spec.history_records_per_prototype = 100;
  auto a = gen_synthetic(spec, 4);
  auto b = gen_synthetic(spec, 4);
  auto c = gen_synthetic(spec, 5);
  EXPECT_EQ(a.corpus, b.corpus);
  EXPECT_EQ(a.log, b.log);
  EXPECT_NE(a.corpus, c.corpus);
}

TEST(Generator, HumanMachineConditionallyIndependentGivenTruth) {
  const auto& recs = big_data().log.records;
  std::vector<Label> h, m, y;
  for (std::size_t i = 0; i < 10000; ++i) {
    h.push_back(recs[i * recs.size() / 10000].human_label);
    m.push_back(argmax(recs[i * recs.size() / 10000].machine_probs));
    y.push_back(*recs[i * recs.size() / 10000].true_label);
  }
  const double observed = conditional_mi(h, m, y, 4);
  // Baseline: human labels permuted within each truth stratum, which forces independence.
  Rng rng(3);
  double mean = 0.0, sq = 0.0;
  const int reps = 30;
  for (int r = 0; r < reps; ++r) {
    auto hp = h;
    for (Label k = 0; k < 4; ++k) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == k) idx.push_back(i);
      auto vals = idx;
      rng.shuffle(vals);
      for (std::size_t i = 0; i < idx.size(); ++i) hp[idx[i]] = h[vals[i]];
    }
    const double v = conditional_mi(hp, m, y, 4);
    mean += v / reps;
    sq += v * v / reps;
  }
  const double sd = std::sqrt(std::max(0.0, sq - mean * mean));
  EXPECT_LT(observed, mean + 4.0 * sd + 1e-4) << "observed " << observed << " baseline " << mean << " +- " << sd;
  EXPECT_LT(observed, 0.01);
}

TEST(Generator, HumanLabelsFollowTrueConfusions) {
  const auto& data = big_data();
  const std::size_t c = 4;
  for (std::size_t g = 0; g < 4; ++g) {
    std::vector<std::vector<double>> counts(c, std::vector<double>(c, 0.0));
    std::vector<double> col(c, 0.0);
    for (const auto& r : data.log.records)
      if (*r.group == g) {
        counts[r.human_label][*r.true_label] += 1;
        col[*r.true_label] += 1;
      }
    for (std::size_t h = 0; h < c; ++h)
      for (std::size_t y = 0; y < c; ++y) counts[h][y] /= col[y];
    EXPECT_LT(ConfusionMatrix(counts).frobenius_distance(data.true_confusions[g]), 0.1) << "group " << g;
  }
}

TEST(Generator, DefaultGeometryIsWellSeparated) {
  EXPECT_TRUE(big_data().warnings.empty());
  auto spec = preset("elam-like");
  spec.pairs = 2;
  spec.history_records_per_prototype = 10;
  spec.bump_scale = 0.1;
  EXPECT_FALSE(gen_synthetic(spec, 1).warnings.empty());
}

TEST(Generator, TextModeUsesEmbedder) {
  auto spec = preset("ecail-like");
  spec.pairs = 3;
  spec.history_records_per_prototype = 20;
  spec.text_mode = true;
  spec.embedding.dimension = 32;
  auto d = gen_synthetic(spec, 2);
  EXPECT_EQ(d.log.dimension, 32u);
  for (const auto& p : d.corpus)
    for (const auto& s : p.source.sentences) {
      EXPECT_FALSE(s.text.empty());
      EXPECT_FALSE(s.vector.has_value());
    }
}

TEST(Generator, SpecJsonOverridesPreset) {
  auto spec = generator_spec_from_json(Json{{"preset", "ecail-like"}, {"pairs", 7}, {"human_noise", 0.3}});
  EXPECT_EQ(spec.categories.size(), 2u);
  EXPECT_EQ(spec.pairs, 7u);
  EXPECT_EQ(spec.human_noise, 0.3);
  auto bad = preset("elam-like");
  bad.categories = CategorySet::generic(3);
  EXPECT_THROW(gen_synthetic(bad, 0), ConfigError);
}
