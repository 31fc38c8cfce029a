#pragma once

// Simulated practitioners and machines.
//
// Human noise models:
//   drop_to_notkey     floor(rate * #keys) key sentences, chosen uniformly, become Not Key
//   uniform_confusion  each label is replaced by a uniform random category with prob. rate
//
// Machine: per sentence a coin with P(correct) = target_accuracy fixes whether
// the argmax hits the truth; the distribution is then drawn from
// Dirichlet(a + e_truth), a = 1 / concentration, rejecting draws whose argmax
// disagrees with the coin. Logits are overconfidence_scale * log(probs).

#include <cmath>
#include <string>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/fusion.hpp"
#include "comatch/random.hpp"

namespace comatch {

enum class HumanNoiseModel { drop_to_notkey, uniform_confusion };

inline std::string to_string(HumanNoiseModel m) {
  return m == HumanNoiseModel::drop_to_notkey ? "drop_to_notkey" : "uniform_confusion";
}

inline HumanNoiseModel human_noise_model_from_string(const std::string& s) {
  if (s == "drop_to_notkey" || s == "drop") return HumanNoiseModel::drop_to_notkey;
  if (s == "uniform_confusion" || s == "uniform") return HumanNoiseModel::uniform_confusion;
  throw ConfigError("unknown human noise model '" + s + "' (expected drop_to_notkey or uniform_confusion)");
}

struct HumanSimConfig {
  double noise_rate = 0.1;
  HumanNoiseModel model = HumanNoiseModel::drop_to_notkey;
  std::uint64_t seed = 0;
};

struct MachineSimConfig {
  double target_accuracy = 0.75;
  double concentration = 5.0;
  double overconfidence_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Noisy copy of `labels`. With a fixed seed the set of corrupted positions
/// grows monotonically with the noise rate.
inline std::vector<Label> simulate_human_labels(std::span<const Label> labels, std::size_t categories,
                                                const HumanSimConfig& cfg) {
  if (!(cfg.noise_rate >= 0.0 && cfg.noise_rate <= 1.0)) throw ConfigError("noise_rate must lie in [0,1]");
  for (auto l : labels)
    if (l >= categories) throw RangeError("simulate_human: label " + std::to_string(l) + " >= C");
  std::vector<Label> out(labels.begin(), labels.end());
  Rng rng(cfg.seed);
  if (cfg.model == HumanNoiseModel::drop_to_notkey) {
    std::vector<std::size_t> keys;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] != 0) keys.push_back(i);
    const auto n = static_cast<std::size_t>(std::floor(cfg.noise_rate * static_cast<double>(keys.size()) + 1e-9));
    rng.shuffle(keys);
    for (std::size_t k = 0; k < n; ++k) out[keys[k]] = 0;
  } else {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double u = rng.uniform();
      const Label replacement = rng.index(categories);
      if (u < cfg.noise_rate) out[i] = replacement;
    }
  }
  return out;
}

inline std::vector<HumanDecision> simulate_human(const std::vector<SentenceRef>& refs, std::span<const Label> labels,
                                                 std::size_t categories, const HumanSimConfig& cfg) {
  if (refs.size() != labels.size()) throw RangeError("simulate_human: refs/labels length mismatch");
  const auto noisy = simulate_human_labels(labels, categories, cfg);
  std::vector<HumanDecision> out;
  out.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) out.push_back({refs[i], noisy[i]});
  return out;
}

struct MachineSimOutput {
  std::vector<Vector> logits;
  std::vector<Vector> probs;  // softmax(logits), before any calibration
};

inline MachineSimOutput simulate_machine(std::span<const Label> labels, std::size_t categories,
                                         const MachineSimConfig& cfg) {
  const double chance = 1.0 / static_cast<double>(categories);
  if (!(cfg.target_accuracy > chance && cfg.target_accuracy <= 1.0))
    throw ConfigError("target_accuracy must lie in (1/C, 1]");
  if (!(cfg.concentration > 0.0)) throw ConfigError("concentration must be positive");
  if (!(cfg.overconfidence_scale > 0.0)) throw ConfigError("overconfidence_scale must be positive");

  constexpr double kFloor = 1e-12;
  constexpr int kMaxDraws = 10000;
  const double a = 1.0 / cfg.concentration;
  Rng rng(cfg.seed);
  MachineSimOutput out;
  out.logits.reserve(labels.size());
  out.probs.reserve(labels.size());
  std::vector<double> alpha(categories);
  for (Label y : labels) {
    if (y >= categories) throw RangeError("simulate_machine: label " + std::to_string(y) + " >= C");
    const bool correct = rng.bernoulli(cfg.target_accuracy);
    for (std::size_t c = 0; c < categories; ++c) alpha[c] = a + (c == y ? 1.0 : 0.0);
    Vector p;
    int draws = 0;
    do {
      p = rng.dirichlet(alpha);
    } while ((argmax(p) == y) != correct && ++draws < kMaxDraws);
    if ((argmax(p) == y) != correct) {
      // Rejection budget exhausted: force the coin outcome by swapping mass.
      const Label top = argmax(p);
      const Label other = correct ? y : (y + 1 + rng.index(categories - 1)) % categories;
      std::swap(p[top], p[other]);
    }
    double sum = 0.0;
    for (double& v : p) {
      v = std::max(v, kFloor);
      sum += v;
    }
    Vector z(categories);
    for (std::size_t c = 0; c < categories; ++c) z[c] = cfg.overconfidence_scale * std::log(p[c] / sum);
    out.probs.push_back(apply_temperature(z, 1.0));
    out.logits.push_back(std::move(z));
  }
  return out;
}

}  // namespace comatch
