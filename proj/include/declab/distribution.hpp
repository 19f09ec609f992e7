#pragma once

/**
 * Exactly-known distributions over fixed-length token sequences.
 *
 * Two concrete representations:
 *  - TableDistribution: explicit sequence -> probability map.
 *  - MarkovChainDistribution: initial vector + row-stochastic transition
 *    matrix; sequences are length-L node paths (never null-padded).
 *
 * Conditional vectors are indexed 0..|V|-1 for vocabulary tokens with the
 * null slot at index |V|. All objects are immutable after construction and
 * safe for concurrent reads.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "declab/errors.hpp"
#include "declab/sequence.hpp"

namespace declab {

/// Sequence-space cap; DECODING_LAB_BUDGET overrides the 8^8 default.
inline std::size_t default_budget() {
  if (const char* env = std::getenv("DECODING_LAB_BUDGET")) {
    long long v = std::atoll(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 16777216;  // 8^8
}

inline std::size_t pow_checked(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / base)
      return std::numeric_limits<std::size_t>::max();
    r *= base;
  }
  return r;
}

class SequenceDistribution {
 public:
  virtual ~SequenceDistribution() = default;

  virtual int vocab_size() const = 0;
  virtual int length() const = 0;

  /// p(v | prefix) for every v, null slot last. Sums to 1. A prefix that
  /// already contains the null token yields a point mass on null; a prefix
  /// with zero marginal probability is an error.
  virtual std::vector<double> conditional_next(const Sequence& prefix) const = 0;

  /// Joint probability of a full-length sequence (0 off support).
  virtual double sequence_prob(const Sequence& y) const = 0;

  /// Probability that positions start..start+|gram|-1 equal `gram`
  /// (0-based start; start + |gram| <= L).
  virtual double ngram_marginal(int start, const Sequence& gram) const = 0;

  int null_slot() const { return vocab_size(); }
  int slot_of(Token t) const { return t == kNullToken ? vocab_size() : t; }
  Token token_of_slot(int s) const { return s == vocab_size() ? kNullToken : s; }
};

/// Left-to-right product; switches to a log-space accumulator for long
/// products so that desk-scale probabilities do not underflow.
inline double ordered_product(const std::vector<double>& factors) {
  if (factors.size() <= 16) {
    double p = 1.0;
    for (double f : factors) p *= f;
    return p;
  }
  double lg = 0.0;
  for (double f : factors) {
    if (f == 0.0) return 0.0;
    lg += std::log(f);
  }
  return std::exp(lg);
}

// ---------------------------------------------------------------------------
// TableDistribution
// ---------------------------------------------------------------------------

class TableDistribution final : public SequenceDistribution {
 public:
  TableDistribution(Vocabulary vocab, int length, std::map<Sequence, double> entries,
                    double sum_tolerance = 1e-12)
      : vocab_(vocab), length_(length), entries_(std::move(entries)) {
    if (length_ < 1) throw ValidationError("sequence length must be >= 1");
    double total = 0.0;
    for (const auto& [y, p] : entries_) {
      if (static_cast<int>(y.size()) != length_)
        throw ValidationError("entry \"" + format_sequence(y) + "\" has wrong length");
      if (!tokens_in_range(y, vocab_.size))
        throw ValidationError("entry \"" + format_sequence(y) + "\" has out-of-range token");
      if (!null_suffixed(y))
        throw ValidationError("entry \"" + format_sequence(y) + "\" violates the null-suffix rule");
      if (p < 0.0) throw ValidationError("negative probability on \"" + format_sequence(y) + "\"");
      total += p;
    }
    if (std::abs(total - 1.0) > sum_tolerance)
      throw ValidationError("probabilities sum to " + std::to_string(total) + ", not 1");
  }

  int vocab_size() const override { return vocab_.size; }
  int length() const override { return length_; }
  const std::map<Sequence, double>& entries() const { return entries_; }

  double sequence_prob(const Sequence& y) const override {
    auto it = entries_.find(y);
    return it == entries_.end() ? 0.0 : it->second;
  }

  std::vector<double> conditional_next(const Sequence& prefix) const override {
    const int V = vocab_.size;
    std::vector<double> cond(V + 1, 0.0);
    if (static_cast<int>(prefix.size()) >= length_)
      throw ValidationError("prefix length must be < L");
    if (contains_null(prefix)) {
      cond[V] = 1.0;
      return cond;
    }
    double mass = 0.0;
    const std::size_t k = prefix.size();
    for (const auto& [y, p] : entries_) {
      if (p == 0.0) continue;
      if (!std::equal(prefix.begin(), prefix.end(), y.begin())) continue;
      mass += p;
      cond[slot_of(y[k])] += p;
    }
    if (mass <= 0.0) throw UndefinedConditionalError(format_sequence(prefix));
    for (double& c : cond) c /= mass;
    return cond;
  }

  double ngram_marginal(int start, const Sequence& gram) const override {
    if (start < 0 || start + static_cast<int>(gram.size()) > length_)
      throw ValidationError("n-gram window out of range");
    double m = 0.0;
    for (const auto& [y, p] : entries_) {
      if (p == 0.0) continue;
      if (std::equal(gram.begin(), gram.end(), y.begin() + start)) m += p;
    }
    return m;
  }

  static TableDistribution point_mass(Vocabulary vocab, const Sequence& y) {
    return TableDistribution(vocab, static_cast<int>(y.size()), {{y, 1.0}});
  }

  /// Uniform over all of V^L (no null padding).
  static TableDistribution uniform(Vocabulary vocab, int length) {
    std::size_t n = pow_checked(vocab.size, length);
    std::map<Sequence, double> e;
    Sequence y(length, 0);
    const double p = 1.0 / static_cast<double>(n);
    while (true) {
      e[y] = p;
      int i = length - 1;
      while (i >= 0 && y[i] == vocab.size - 1) y[i--] = 0;
      if (i < 0) break;
      ++y[i];
    }
    return TableDistribution(vocab, length, std::move(e), 1e-9);
  }

 private:
  Vocabulary vocab_;
  int length_;
  std::map<Sequence, double> entries_;
};

// ---------------------------------------------------------------------------
// MarkovChainDistribution
// ---------------------------------------------------------------------------

class MarkovChainDistribution final : public SequenceDistribution {
 public:
  MarkovChainDistribution(std::vector<double> initial,
                          std::vector<std::vector<double>> transitions, int length)
      : initial_(std::move(initial)), transitions_(std::move(transitions)), length_(length) {
    const int m = static_cast<int>(initial_.size());
    if (m < 1) throw ValidationError("chain needs at least one node");
    if (length_ < 1) throw ValidationError("path length must be >= 1");
    if (static_cast<int>(transitions_.size()) != m)
      throw ValidationError("transition matrix must be m x m");
    check_stochastic(initial_, "initial");
    for (const auto& row : transitions_) {
      if (static_cast<int>(row.size()) != m)
        throw ValidationError("transition matrix must be m x m");
      check_stochastic(row, "transition row");
    }
    // Forward state marginals, used by ngram_marginal instead of enumeration.
    state_marginals_.resize(length_);
    state_marginals_[0] = initial_;
    for (int i = 1; i < length_; ++i) {
      state_marginals_[i].assign(m, 0.0);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          state_marginals_[i][b] += state_marginals_[i - 1][a] * transitions_[a][b];
    }
  }

  int vocab_size() const override { return static_cast<int>(initial_.size()); }
  int length() const override { return length_; }
  const std::vector<double>& initial() const { return initial_; }
  const std::vector<std::vector<double>>& transitions() const { return transitions_; }
  const std::vector<double>& state_marginal(int i) const { return state_marginals_[i]; }

  double sequence_prob(const Sequence& y) const override {
    if (static_cast<int>(y.size()) != length_) throw ValidationError("wrong sequence length");
    if (contains_null(y)) return 0.0;
    std::vector<double> factors;
    factors.reserve(y.size());
    factors.push_back(initial_[y[0]]);
    for (std::size_t i = 1; i < y.size(); ++i)
      factors.push_back(transitions_[y[i - 1]][y[i]]);
    return ordered_product(factors);
  }

  std::vector<double> conditional_next(const Sequence& prefix) const override {
    const int m = vocab_size();
    std::vector<double> cond(m + 1, 0.0);
    if (static_cast<int>(prefix.size()) >= length_)
      throw ValidationError("prefix length must be < L");
    if (contains_null(prefix)) {
      cond[m] = 1.0;
      return cond;
    }
    if (!prefix.empty()) {
      double mass = initial_[prefix[0]];
      for (std::size_t i = 1; i < prefix.size() && mass > 0.0; ++i)
        mass *= transitions_[prefix[i - 1]][prefix[i]];
      if (mass <= 0.0) throw UndefinedConditionalError(format_sequence(prefix));
    }
    const std::vector<double>& row =
        prefix.empty() ? initial_ : transitions_[prefix.back()];
    std::copy(row.begin(), row.end(), cond.begin());
    return cond;
  }

  double ngram_marginal(int start, const Sequence& gram) const override {
    if (start < 0 || start + static_cast<int>(gram.size()) > length_)
      throw ValidationError("n-gram window out of range");
    if (contains_null(gram)) return 0.0;
    double m = state_marginals_[start][gram[0]];
    for (std::size_t j = 1; j < gram.size() && m > 0.0; ++j)
      m *= transitions_[gram[j - 1]][gram[j]];
    return m;
  }

 private:
  static void check_stochastic(const std::vector<double>& v, const char* what) {
    double s = 0.0;
    for (double x : v) {
      if (x < 0.0) throw ValidationError(std::string(what) + " has a negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw ValidationError(std::string(what) + " sums to " + std::to_string(s) + ", not 1");
  }

  std::vector<double> initial_;
  std::vector<std::vector<double>> transitions_;
  int length_;
  std::vector<std::vector<double>> state_marginals_;
};

// ---------------------------------------------------------------------------
// ConditionalModel: finite input space with one output distribution per input
// ---------------------------------------------------------------------------

struct ConditionalModel {
  struct Input {
    std::string id;
    double weight;
    std::shared_ptr<const SequenceDistribution> dist;
  };
  std::vector<Input> inputs;

  void validate() const {
    if (inputs.empty()) throw ValidationError("conditional model has no inputs");
    double s = 0.0;
    for (const auto& in : inputs) {
      if (in.weight < 0.0) throw ValidationError("negative input weight");
      if (!in.dist) throw ValidationError("input \"" + in.id + "\" has no distribution");
      s += in.weight;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw ValidationError("input weights sum to " + std::to_string(s) + ", not 1");
  }
};

// ---------------------------------------------------------------------------
// Conversions, sampling, information measures
// ---------------------------------------------------------------------------

inline TableDistribution markov_to_table(const MarkovChainDistribution& mc,
                                         std::size_t budget = default_budget()) {
  const int m = mc.vocab_size();
  const int L = mc.length();
  if (pow_checked(m, L) > budget)
    throw BudgetExceededError("instance too large: " + std::to_string(m) + "^" +
                              std::to_string(L) + " sequences exceed the budget");
  std::map<Sequence, double> e;
  Sequence y(L, 0);
  while (true) {
    e[y] = mc.sequence_prob(y);
    int i = L - 1;
    while (i >= 0 && y[i] == m - 1) y[i--] = 0;
    if (i < 0) break;
    ++y[i];
  }
  return TableDistribution(Vocabulary(m), L, std::move(e), 1e-9);
}

/// Symmetric Dirichlet(alpha) initial vector and transition rows via
/// normalized Gamma(alpha, 1) draws; deterministic given the rng state.
inline MarkovChainDistribution sample_dirichlet_chain(std::mt19937_64& rng, int m,
                                                      double alpha, int length) {
  if (m < 2) throw ValidationError("need at least 2 nodes");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  auto draw_row = [&]() {
    std::vector<double> row(m);
    double s = 0.0;
    for (double& x : row) {
      x = gamma(rng);
      s += x;
    }
    if (s <= 0.0) {  // pathological underflow at tiny alpha
      std::fill(row.begin(), row.end(), 1.0 / m);
      return row;
    }
    for (double& x : row) x /= s;
    return row;
  };
  std::vector<double> initial = draw_row();
  std::vector<std::vector<double>> trans(m);
  for (auto& row : trans) row = draw_row();
  return MarkovChainDistribution(std::move(initial), std::move(trans), length);
}

/// Shannon entropy in nats.
inline double entropy(const TableDistribution& p) {
  double h = 0.0;
  for (const auto& [y, prob] : p.entries())
    if (prob > 0.0) h -= prob * std::log(prob);
  return h < 0.0 ? 0.0 : h;
}

/// KL(p || q) in nats; +infinity when p has mass where q has none.
inline double kl_divergence(const TableDistribution& p, const TableDistribution& q) {
  if (p.vocab_size() != q.vocab_size() || p.length() != q.length())
    throw ValidationError("KL divergence requires matching vocabulary and length");
  double kl = 0.0;
  for (const auto& [y, pp] : p.entries()) {
    if (pp == 0.0) continue;
    double qq = q.sequence_prob(y);
    if (qq == 0.0) return std::numeric_limits<double>::infinity();
    kl += pp * std::log(pp / qq);
  }
  return kl > 0.0 ? kl : 0.0;
}

/// Exact entropy of the path distribution of a chain, via state marginals.
inline double chain_entropy(const MarkovChainDistribution& mc) {
  auto row_entropy = [](const std::vector<double>& row) {
    double h = 0.0;
    for (double x : row)
      if (x > 0.0) h -= x * std::log(x);
    return h;
  };
  double h = row_entropy(mc.initial());
  for (int i = 0; i + 1 < mc.length(); ++i) {
    const auto& s = mc.state_marginal(i);
    for (int a = 0; a < mc.vocab_size(); ++a)
      if (s[a] > 0.0) h += s[a] * row_entropy(mc.transitions()[a]);
  }
  return h;
}

/// KL(chain || uniform over m^L paths) = L log m - H(chain).
inline double chain_kl_from_uniform(const MarkovChainDistribution& mc) {
  double kl = mc.length() * std::log(static_cast<double>(mc.vocab_size())) - chain_entropy(mc);
  return kl > 0.0 ? kl : 0.0;
}

}  // namespace declab
