#include "difflab/lda.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "difflab/binary_io.hpp"

namespace difflab {

namespace {

constexpr char kLdaMagic[6] = {'D', 'L', 'L', 'D', 'A', '1'};

std::size_t sample_index(std::span<const double> cumulative, double u) {
  const double target = u * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

}  // namespace

void LdaOptions::validate() const {
  if (topics < 1) throw ConfigError("LDA needs at least one topic");
  if (topics > 65535) throw ConfigError("LDA supports at most 65535 topics");
  if (iterations < 1) throw ConfigError("LDA needs at least one iteration");
  if (!(beta > 0.0)) throw ConfigError("LDA beta must be positive");
  if (alpha == 0.0 || std::isnan(alpha)) throw ConfigError("LDA alpha must be positive");
  if (average_last_n < 0 || average_last_n > iterations) {
    throw ConfigError("average-last-n must lie in [0, iterations]");
  }
}

LdaModel::LdaModel(int topics, std::vector<TokenId> vocabulary, double alpha, double beta)
    : topics_(topics),
      alpha_(alpha),
      beta_(beta),
      vocabulary_(std::move(vocabulary)),
      word_topic_(vocabulary_.size() * static_cast<std::size_t>(topics), 0),
      topic_totals_(static_cast<std::size_t>(topics), 0) {}

std::optional<std::uint32_t> LdaModel::word_index(TokenId token) const {
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), token);
  if (it == vocabulary_.end() || *it != token) return std::nullopt;
  return static_cast<std::uint32_t>(it - vocabulary_.begin());
}

std::vector<double> LdaModel::topic_word(int topic) const {
  const double v = static_cast<double>(vocabulary_.size());
  const double denom = static_cast<double>(topic_totals_[topic]) + v * beta_;
  std::vector<double> phi(vocabulary_.size());
  for (std::size_t w = 0; w < phi.size(); ++w) phi[w] = (count(static_cast<std::uint32_t>(w), topic) + beta_) / denom;
  return phi;
}

std::optional<std::vector<double>> LdaModel::fold_in(std::span<const TokenId> doc, int iterations,
                                                     std::uint64_t seed, std::size_t* dropped) const {
  std::vector<std::uint32_t> words;
  std::size_t oov = 0;
  for (TokenId t : doc) {
    if (auto w = word_index(t)) words.push_back(*w);
    else ++oov;
  }
  if (dropped) *dropped = oov;
  if (words.empty()) return std::nullopt;

  const auto k_count = static_cast<std::size_t>(topics_);
  const double vbeta = static_cast<double>(vocabulary_.size()) * beta_;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::uint32_t> doc_topic(k_count, 0);
  std::vector<std::uint16_t> z(words.size());
  for (auto& zi : z) {
    zi = static_cast<std::uint16_t>(std::min<std::size_t>(static_cast<std::size_t>(unif(rng) * k_count), k_count - 1));
    ++doc_topic[zi];
  }
  std::vector<double> cum(k_count);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --doc_topic[z[i]];
      double acc = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        acc += (doc_topic[k] + alpha_) * (count(words[i], static_cast<int>(k)) + beta_) /
               (static_cast<double>(topic_totals_[k]) + vbeta);
        cum[k] = acc;
      }
      z[i] = static_cast<std::uint16_t>(sample_index(cum, unif(rng)));
      ++doc_topic[z[i]];
    }
  }
  std::vector<double> theta(k_count);
  const double denom = static_cast<double>(words.size()) + static_cast<double>(k_count) * alpha_;
  for (std::size_t k = 0; k < k_count; ++k) theta[k] = (doc_topic[k] + alpha_) / denom;
  return theta;
}

void LdaModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write LDA checkpoint: " + path);
  out.write(kLdaMagic, sizeof kLdaMagic);
  binio::write_u32(out, static_cast<std::uint32_t>(topics_));
  binio::write_u32(out, static_cast<std::uint32_t>(vocabulary_.size()));
  binio::write_f64(out, alpha_);
  binio::write_f64(out, beta_);
  for (TokenId t : vocabulary_) binio::write_u32(out, t);
  for (auto n : topic_totals_) binio::write_u64(out, n);
  for (auto n : word_topic_) binio::write_u32(out, n);
  if (!out) throw DataError("failed writing LDA checkpoint: " + path);
}

LdaModel LdaModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read LDA checkpoint: " + path);
  char magic[6];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kLdaMagic, sizeof magic) != 0) throw DataError("bad LDA checkpoint magic");
  const auto k = static_cast<int>(binio::read_u32(in));
  const std::uint32_t v = binio::read_u32(in);
  const double alpha = binio::read_f64(in);
  const double beta = binio::read_f64(in);
  std::vector<TokenId> vocab(v);
  for (auto& t : vocab) t = binio::read_u32(in);
  LdaModel m(k, std::move(vocab), alpha, beta);
  for (auto& n : m.topic_totals_) n = binio::read_u64(in);
  for (auto& n : m.word_topic_) n = binio::read_u32(in);
  if (!in) throw DataError("truncated LDA checkpoint: " + path);
  return m;
}

GibbsSampler::GibbsSampler(std::span<const std::vector<TokenId>> docs, int topics, double alpha,
                           double beta, std::uint64_t seed)
    : rng_(seed) {
  if (docs.empty()) throw DataError("LDA corpus is empty");
  std::vector<TokenId> vocab;
  for (const auto& d : docs) {
    if (d.empty()) throw DataError("LDA corpus contains an empty document");
    vocab.insert(vocab.end(), d.begin(), d.end());
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  model_ = LdaModel(topics, std::move(vocab), alpha, beta);

  const auto k_count = static_cast<std::size_t>(topics);
  doc_offsets_.reserve(docs.size() + 1);
  doc_offsets_.push_back(0);
  for (const auto& d : docs) {
    for (TokenId t : d) words_.push_back(*model_.word_index(t));
    doc_offsets_.push_back(words_.size());
  }
  assignments_.resize(words_.size());
  doc_topic_.assign(docs.size() * k_count, 0);
  weights_.resize(k_count);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t d = 0; d + 1 < doc_offsets_.size(); ++d) {
    for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(unif(rng_) * k_count), k_count - 1);
      assignments_[i] = static_cast<std::uint16_t>(k);
      ++doc_topic_[d * k_count + k];
      ++model_.word_topic_[words_[i] * k_count + k];
      ++model_.topic_totals_[k];
    }
  }
}

void GibbsSampler::sweep() {
  const auto k_count = static_cast<std::size_t>(model_.topics_);
  const double alpha = model_.alpha_;
  const double beta = model_.beta_;
  const double vbeta = static_cast<double>(model_.vocabulary_.size()) * beta;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto& wt = model_.word_topic_;
  auto& totals = model_.topic_totals_;
  for (std::size_t d = 0; d + 1 < doc_offsets_.size(); ++d) {
    std::uint32_t* dt = doc_topic_.data() + d * k_count;
    for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
      const std::uint32_t w = words_[i];
      std::uint32_t* wrow = wt.data() + static_cast<std::size_t>(w) * k_count;
      const std::size_t old = assignments_[i];
      --dt[old];
      --wrow[old];
      --totals[old];
      double acc = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        acc += (dt[k] + alpha) * (wrow[k] + beta) / (static_cast<double>(totals[k]) + vbeta);
        weights_[k] = acc;
      }
      const std::size_t k = sample_index(weights_, unif(rng_));
      assignments_[i] = static_cast<std::uint16_t>(k);
      ++dt[k];
      ++wrow[k];
      ++totals[k];
    }
  }
}

std::vector<double> GibbsSampler::theta(std::size_t d) const {
  const auto k_count = static_cast<std::size_t>(model_.topics_);
  const double n = static_cast<double>(doc_offsets_[d + 1] - doc_offsets_[d]);
  const double denom = n + static_cast<double>(k_count) * model_.alpha_;
  std::vector<double> out(k_count);
  for (std::size_t k = 0; k < k_count; ++k) out[k] = (doc_topic_[d * k_count + k] + model_.alpha_) / denom;
  return out;
}

LdaFit fit_lda(std::span<const std::vector<TokenId>> docs, const LdaOptions& opts) {
  opts.validate();
  GibbsSampler sampler(docs, opts.topics, opts.resolved_alpha(), opts.beta, opts.seed);
  const std::size_t n_docs = sampler.documents();
  std::vector<std::vector<double>> avg;
  if (opts.average_last_n > 0) avg.assign(n_docs, std::vector<double>(static_cast<std::size_t>(opts.topics), 0.0));
  for (int it = 0; it < opts.iterations; ++it) {
    sampler.sweep();
    if (opts.average_last_n > 0 && it >= opts.iterations - opts.average_last_n) {
      for (std::size_t d = 0; d < n_docs; ++d) {
        const auto th = sampler.theta(d);
        for (std::size_t k = 0; k < th.size(); ++k) avg[d][k] += th[k];
      }
    }
  }
  LdaFit fit;
  fit.model = sampler.model();
  fit.theta.resize(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    if (opts.average_last_n > 0) {
      // Renormalize so the average stays on the simplex to rounding.
      double s = 0.0;
      for (double x : avg[d]) s += x;
      for (double& x : avg[d]) x /= s;
      fit.theta[d] = std::move(avg[d]);
    } else {
      fit.theta[d] = sampler.theta(d);
    }
  }
  return fit;
}

}  // namespace difflab
