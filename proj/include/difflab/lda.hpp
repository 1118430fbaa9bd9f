#pragma once

// Latent Dirichlet allocation by collapsed Gibbs sampling.
//
// Token w in document d is resampled from
//
//   p(z = k) ~ (n_dk + alpha) (n_kw + beta) / (n_k + V beta)
//
// with the token's own assignment removed from every count.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "difflab/common.hpp"

namespace difflab {

struct LdaOptions {
  int topics = 100;
  int iterations = 1000;
  double alpha = -1.0;  // negative -> 50 / topics
  double beta = 0.01;
  std::uint64_t seed = 0;
  // Average doc-topic estimates over the last n sweeps instead of reading the
  // final state. 0 keeps the final state.
  int average_last_n = 0;

  double resolved_alpha() const { return alpha < 0.0 ? 50.0 / topics : alpha; }
  void validate() const;
};

// Frozen topic-word counts plus hyperparameters.
class LdaModel {
 public:
  LdaModel() = default;
  LdaModel(int topics, std::vector<TokenId> vocabulary, double alpha, double beta);

  int topics() const { return topics_; }
  std::size_t vocabulary_size() const { return vocabulary_.size(); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  std::span<const TokenId> vocabulary() const { return vocabulary_; }
  std::optional<std::uint32_t> word_index(TokenId token) const;

  std::uint32_t count(std::uint32_t word, int topic) const { return word_topic_[word * topics_ + topic]; }
  std::uint64_t topic_total(int topic) const { return topic_totals_[topic]; }

  // Normalized word distribution of `topic`, indexed like vocabulary().
  std::vector<double> topic_word(int topic) const;

  // Profile for a document not seen during training, by Gibbs sampling its
  // assignments against the frozen counts. Out-of-vocabulary tokens are
  // dropped and counted; returns nullopt when nothing is left.
  std::optional<std::vector<double>> fold_in(std::span<const TokenId> doc, int iterations,
                                             std::uint64_t seed, std::size_t* dropped = nullptr) const;

  // Binary checkpoint: magic "DLLDA1", u32 K, u32 V, f64 alpha, f64 beta,
  // V token ids (u32), K topic totals (u64), V*K counts (u32, word-major).
  void save(const std::string& path) const;
  static LdaModel load(const std::string& path);

  bool operator==(const LdaModel&) const = default;

 private:
  friend class GibbsSampler;
  int topics_ = 0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::vector<TokenId> vocabulary_;  // sorted ascending
  std::vector<std::uint32_t> word_topic_;
  std::vector<std::uint64_t> topic_totals_;
};

// Single chain. Exposed for the sampler correctness tests; fit_lda wraps it.
class GibbsSampler {
 public:
  GibbsSampler(std::span<const std::vector<TokenId>> docs, int topics, double alpha, double beta,
               std::uint64_t seed);

  void sweep();

  std::size_t documents() const { return doc_offsets_.size() - 1; }
  // Assignments of document d, aligned with its token order.
  std::span<const std::uint16_t> assignments(std::size_t d) const {
    return {assignments_.data() + doc_offsets_[d], doc_offsets_[d + 1] - doc_offsets_[d]};
  }
  std::span<const std::uint16_t> all_assignments() const { return assignments_; }
  std::vector<double> theta(std::size_t d) const;
  const LdaModel& model() const { return model_; }

 private:
  LdaModel model_;
  std::vector<std::size_t> doc_offsets_;
  std::vector<std::uint32_t> words_;
  std::vector<std::uint16_t> assignments_;
  std::vector<std::uint32_t> doc_topic_;
  std::vector<double> weights_;
  std::mt19937_64 rng_;
};

struct LdaFit {
  LdaModel model;
  std::vector<std::vector<double>> theta;  // per document
};

// Throws ConfigError on bad options and DataError on an empty corpus or an
// empty document.
LdaFit fit_lda(std::span<const std::vector<TokenId>> docs, const LdaOptions& opts);

}  // namespace difflab
