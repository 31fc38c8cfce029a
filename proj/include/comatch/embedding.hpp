#pragma once

// Deterministic sentence-in-context embedder: signed feature hashing of token
// n-grams over a window of neighbouring sentences, L2-normalized. Also reads
// precomputed vectors from JSON Lines for real encoders.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/random.hpp"
#include "comatch/serialization.hpp"

namespace comatch {

struct EmbeddingConfig {
  std::size_t dimension = 256;
  std::size_t context_window = 2;
  std::size_t ngram_min = 1;
  std::size_t ngram_max = 3;
  std::uint64_t seed = 0;
};

inline ValidationReport validate(const EmbeddingConfig& cfg) {
  ValidationReport r;
  if (cfg.dimension < 8) r.add("dimension: must be >= 8");
  if (cfg.ngram_min == 0) r.add("ngram_range: minimum must be >= 1");
  if (cfg.ngram_min > cfg.ngram_max) r.add("ngram_range: min > max");
  return r;
}

using EmbeddingMap = std::map<SentenceRef, Vector>;

/// Lowercased tokens split on ASCII whitespace and punctuation. Bytes >= 0x80
/// are kept as token characters so UTF-8 text survives intact.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Hash embedding of a token sequence; all zeros when there are no tokens.
inline Vector hash_tokens(const std::vector<std::string>& tokens, const EmbeddingConfig& cfg) {
  Vector v(cfg.dimension, 0.0);
  // Little-endian salt bytes so the hash does not depend on host byte order.
  const std::uint64_t salt = mix_seed(cfg.seed);
  char salt_bytes[8];
  for (int i = 0; i < 8; ++i) salt_bytes[i] = static_cast<char>((salt >> (8 * i)) & 0xff);
  const std::uint64_t salted = detail::fnv1a(std::string_view(salt_bytes, 8));
  for (std::size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if (tokens.size() < n) break;
    for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
      std::uint64_t h = salted;
      for (std::size_t k = 0; k < n; ++k) {
        h = detail::fnv1a(tokens[start + k], h);
        h = detail::fnv1a("\x1f", h);
      }
      h = mix_seed(h);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[(h & 0x7fffffffffffffffULL) % cfg.dimension] += sign;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

/// Embeds sentence `index` together with up to L neighbours on each side,
/// truncated at the document boundary.
inline Vector embed_sentence(const Document& doc, std::size_t index, const EmbeddingConfig& cfg) {
  if (index >= doc.sentences.size())
    throw RangeError("sentence index " + std::to_string(index) + " out of range for document '" + doc.doc_id +
                     "' with " + std::to_string(doc.sentences.size()) + " sentences");
  const std::size_t lo = index >= cfg.context_window ? index - cfg.context_window : 0;
  const std::size_t hi = std::min(doc.sentences.size() - 1, index + cfg.context_window);
  std::vector<std::string> tokens;
  for (std::size_t i = lo; i <= hi; ++i) {
    auto t = tokenize(doc.sentences[i].text);
    tokens.insert(tokens.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return hash_tokens(tokens, cfg);
}

inline EmbeddingMap embed_corpus(const std::vector<Document>& docs, const EmbeddingConfig& cfg) {
  EmbeddingMap out;
  for (const auto& doc : docs)
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) out[{doc.doc_id, i}] = embed_sentence(doc, i, cfg);
  return out;
}

/// Reads {"doc_id", "index", "vector"} lines. Throws FormatError naming the
/// offending line on dimension mismatches, duplicates or malformed JSON.
inline EmbeddingMap import_embeddings(const std::string& path, std::size_t expected_dimension) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embeddings file '" + path + "'");
  EmbeddingMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    try {
      const Json j = Json::parse(line);
      SentenceRef ref = sentence_ref_from_json(j);
      auto vec = detail::get_as<Vector>(j, "vector");
      if (vec.size() != expected_dimension)
        throw FormatError("dimension " + std::to_string(vec.size()) + " != expected " +
                          std::to_string(expected_dimension) + " for " + to_string(ref));
      if (!out.emplace(ref, std::move(vec)).second) throw FormatError("duplicate sentence " + to_string(ref));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + e.what());
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  return out;
}

}  // namespace comatch
