#pragma once

/**
 * N-gram Hamming and cross-entropy objectives, the g-score whose argmax is
 * the optimal output for N-gram Hamming, exact expected risk, and the
 * brute-force oracle.
 *
 * The oracle rounds g to 15 decimal places before taking the argmax set;
 * decoders use a 1e-12 comparison tolerance instead. The two mechanisms
 * are deliberately different.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "declab/decoders.hpp"
#include "declab/distribution.hpp"
#include "declab/errors.hpp"
#include "declab/ntp.hpp"
#include "declab/sequence.hpp"

namespace declab {

enum class LossKind { ngram_hamming, cross_entropy };

struct LossSpec {
  LossKind kind = LossKind::ngram_hamming;
  int N = 1;

  void validate(int L) const {
    if (kind == LossKind::ngram_hamming && (N < 1 || N > L))
      throw ValidationError("need 1 <= N <= L");
  }
};

/// Count of positions i with yhat[i..i+N-1] != y[i..i+N-1]. N = 1 is the
/// Hamming distance, N = L the 0-1 loss.
inline int ngram_hamming(const Sequence& yhat, const Sequence& y, int N) {
  if (yhat.size() != y.size()) throw ValidationError("sequences must have equal length");
  const int L = static_cast<int>(y.size());
  if (N < 1 || N > L) throw ValidationError("need 1 <= N <= L");
  int loss = 0;
  for (int i = 0; i + N <= L; ++i)
    if (!std::equal(yhat.begin() + i, yhat.begin() + i + N, y.begin() + i)) ++loss;
  return loss;
}

/// g(y) = sum_i p(y_{i:i+N-1}).
inline double g_score(const SequenceDistribution& dist, const Sequence& y, int N) {
  const int L = dist.length();
  if (static_cast<int>(y.size()) != L) throw ValidationError("wrong sequence length");
  double g = 0.0;
  for (int i = 0; i + N <= L; ++i)
    g += dist.ngram_marginal(i, Sequence(y.begin() + i, y.begin() + i + N));
  return g;
}

/// E_{y~dist}[ngram_hamming(yhat, y, N)] = L - N + 1 - g(yhat).
inline double expected_ngram_risk(const SequenceDistribution& dist, const Sequence& yhat, int N) {
  return dist.length() - N + 1 - g_score(dist, yhat, N);
}

// ---------------------------------------------------------------------------
// Brute-force oracle (necessarily exponential in L)
// ---------------------------------------------------------------------------

struct OracleResult {
  std::vector<Sequence> optimal_set;  // rounded argmax set, lexicographic order
  double best_g = 0.0;
  std::vector<std::pair<Sequence, double>> all;  // filled when keep_all

  bool contains(const Sequence& y) const {
    return std::find(optimal_set.begin(), optimal_set.end(), y) != optimal_set.end();
  }
  bool tie() const { return optimal_set.size() > 1; }
};

namespace detail {

inline long long round15(double g) { return std::llround(g * 1e15); }

// Shared enumeration core: walks every null-suffixed length-L sequence,
// scoring g incrementally via a callback that evaluates one n-gram window.
template <typename MarginalFn>
OracleResult oracle_enumerate(int V, int L, int N, MarginalFn&& window_marginal, bool keep_all) {
  OracleResult res;
  long long best_key = std::numeric_limits<long long>::min();
  Sequence y;
  std::vector<double> partial{0.0};  // g over completed windows, per depth
  auto rec = [&](auto&& self) -> void {
    const int depth = static_cast<int>(y.size());
    if (depth == L) {
      const double g = partial.back();
      const long long key = round15(g);
      if (key > best_key) {
        best_key = key;
        res.best_g = g;
        res.optimal_set.clear();
      }
      if (key == best_key) res.optimal_set.push_back(y);
      if (keep_all) res.all.emplace_back(y, g);
      return;
    }
    const bool null_forced = depth > 0 && y.back() == kNullToken;
    for (int slot = 0; slot <= V; ++slot) {
      Token t = slot == V ? kNullToken : slot;
      if (null_forced && t != kNullToken) continue;
      y.push_back(t);
      double g = partial.back();
      if (static_cast<int>(y.size()) >= N) {
        const int start = static_cast<int>(y.size()) - N;
        g += window_marginal(start, Sequence(y.begin() + start, y.end()));
      }
      partial.push_back(g);
      self(self);
      partial.pop_back();
      y.pop_back();
    }
  };
  rec(rec);
  return res;
}

}  // namespace detail

/// Enumerates the output space, computes g with memoized n-gram marginals,
/// rounds to 15 decimal places, and returns the full argmax (tie) set.
inline OracleResult oracle_optimal(const SequenceDistribution& dist, int N,
                                   std::size_t budget = default_budget(),
                                   bool keep_all = false) {
  const int V = dist.vocab_size();
  const int L = dist.length();
  if (N < 1 || N > L) throw ValidationError("need 1 <= N <= L");
  if (pow_checked(V, L) > budget)
    throw BudgetExceededError("instance too large: |V|^L exceeds the budget");

  // Marginal lookups dominate for table distributions; memoize them. The
  // Markov implementation is already O(N) per window, no cache needed.
  const bool cache = dynamic_cast<const MarkovChainDistribution*>(&dist) == nullptr;
  std::map<std::pair<int, Sequence>, double> memo;
  auto window = [&](int start, const Sequence& gram) {
    if (!cache) return dist.ngram_marginal(start, gram);
    auto key = std::make_pair(start, gram);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double m = dist.ngram_marginal(start, gram);
    memo.emplace(std::move(key), m);
    return m;
  };
  return detail::oracle_enumerate(V, L, N, window, keep_all);
}

/// Oracle restricted to next-token queries: reconstructs the joint through
/// the predictor's conditionals, then scores g from it. Used to measure
/// how many conditional values an optimal decoder must read.
inline OracleResult oracle_optimal_counted(NextTokenPredictor& ntp, int N,
                                           std::size_t budget = default_budget()) {
  const int V = ntp.vocab_size();
  const int L = ntp.length();
  if (pow_checked(V, L) > budget)
    throw BudgetExceededError("instance too large: |V|^L exceeds the budget");
  std::map<Sequence, double> joint;
  Sequence y;
  auto rec = [&](auto&& self, double acc) -> void {
    if (static_cast<int>(y.size()) == L) {
      joint[y] += acc;
      return;
    }
    std::vector<double> cond = ntp.conditional_next(y);
    for (int slot = 0; slot <= V; ++slot) {
      if (cond[slot] <= 0.0) continue;
      y.push_back(slot == V ? kNullToken : slot);
      self(self, acc * cond[slot]);
      y.pop_back();
    }
  };
  rec(rec, 1.0);

  std::map<std::pair<int, Sequence>, double> memo;
  auto window = [&](int start, const Sequence& gram) {
    auto key = std::make_pair(start, gram);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double m = 0.0;
    for (const auto& [seq, p] : joint)
      if (std::equal(gram.begin(), gram.end(), seq.begin() + start)) m += p;
    memo.emplace(std::move(key), m);
    return m;
  };
  return detail::oracle_enumerate(V, L, N, window, false);
}

// ---------------------------------------------------------------------------
// Cross entropy
// ---------------------------------------------------------------------------

/// E_{y~p_true}[-log p_dec(y)]; +infinity when p_dec misses support.
inline double cross_entropy(const TableDistribution& p_true, const TableDistribution& p_dec) {
  if (p_true.vocab_size() != p_dec.vocab_size() || p_true.length() != p_dec.length())
    throw ValidationError("cross entropy requires matching vocabulary and length");
  double ce = 0.0;
  for (const auto& [y, p] : p_true.entries()) {
    if (p == 0.0) continue;
    double q = p_dec.sequence_prob(y);
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    ce -= p * std::log(q);
  }
  return ce;
}

// ---------------------------------------------------------------------------
// Expected risk
// ---------------------------------------------------------------------------

struct RiskReport {
  double risk = 0.0;
  double optimal_risk = 0.0;
  std::vector<Sequence> optimal_set;  // single-input runs only
  std::shared_ptr<const TableDistribution> decoder_output;
  bool is_optimal = false;
  bool tie_flag = false;
};

/// Weighted expected risk over the model's inputs with the exact decoder
/// output law per input. For N-gram Hamming, is_optimal means the decoder
/// output support lies inside the oracle argmax set for every input.
inline RiskReport expected_risk(const ConditionalModel& model, const DecoderSpec& spec,
                                const LossSpec& loss, std::size_t budget = default_budget()) {
  model.validate();
  const int L = model.inputs.front().dist->length();
  const int V = model.inputs.front().dist->vocab_size();
  loss.validate(L);
  for (const auto& in : model.inputs)
    if (in.dist->length() != L || in.dist->vocab_size() != V)
      throw ValidationError("all inputs must share vocabulary and length");

  RiskReport report;
  report.is_optimal = true;
  std::map<Sequence, double> mixture;

  for (const auto& in : model.inputs) {
    NextTokenPredictor ntp(in.dist);
    TableDistribution p_dec = output_distribution(spec, ntp, budget);
    for (const auto& [y, p] : p_dec.entries())
      if (p > 0.0) mixture[y] += in.weight * p;

    if (loss.kind == LossKind::ngram_hamming) {
      OracleResult oracle = oracle_optimal(*in.dist, loss.N, budget);
      double risk = 0.0;
      bool optimal = true;
      for (const auto& [yhat, p] : p_dec.entries()) {
        if (p == 0.0) continue;
        risk += p * expected_ngram_risk(*in.dist, yhat, loss.N);
        optimal &= oracle.contains(yhat);
      }
      report.risk += in.weight * risk;
      report.optimal_risk += in.weight * (L - loss.N + 1 - oracle.best_g);
      report.is_optimal &= optimal;
      report.tie_flag |= oracle.tie();
      if (model.inputs.size() == 1) report.optimal_set = oracle.optimal_set;
    } else {
      auto table = std::dynamic_pointer_cast<const TableDistribution>(in.dist);
      TableDistribution p_true =
          table ? *table
                : markov_to_table(dynamic_cast<const MarkovChainDistribution&>(*in.dist), budget);
      double ce = cross_entropy(p_true, p_dec);
      double h = entropy(p_true);
      report.risk += in.weight * ce;
      report.optimal_risk += in.weight * h;
      report.is_optimal &= std::isfinite(ce) && ce - h <= 1e-9;
    }
  }
  report.decoder_output = std::make_shared<TableDistribution>(
      Vocabulary(V), L, std::move(mixture), 1e-9);
  return report;
}

// ---------------------------------------------------------------------------
// Temperature-scaling risk bounds
// ---------------------------------------------------------------------------

struct TempBounds {
  double c1 = 0.0;  // per-position expected log(p_max / p), summed
  double c2 = 0.0;  // per-position expected log(p / p_min), summed
  double c3 = 0.0;  // upper-envelope constant; same expression as c1
  double lower = 0.0;
  double upper = 0.0;
  double exact = 0.0;  // E_{y~p}[-log p^gamma(y)]
};

/// Bracketing constants for the cross entropy of temperature-scaled
/// sampling, assembled from expectations of log conditionals over every
/// positive-probability prefix. Requires full support over V^L.
inline TempBounds temp_bound_constants(const TableDistribution& p, double gamma) {
  if (gamma < 0.0 || std::isinf(gamma)) throw ValidationError("gamma must be finite and >= 0");
  const int V = p.vocab_size();
  const int L = p.length();
  const double logV = std::log(static_cast<double>(V));

  TempBounds b;
  std::vector<std::pair<Sequence, double>> level{{Sequence{}, 1.0}};
  for (int i = 0; i < L; ++i) {
    std::vector<std::pair<Sequence, double>> next;
    for (const auto& [prefix, w] : level) {
      std::vector<double> cond = p.conditional_next(prefix);
      if (cond[V] > 0.0) throw SupportViolationError("support violation: null mass at prefix " +
                                                     format_sequence(prefix));
      double pmax = 0.0, pmin = 1.0, z = 0.0;
      for (int v = 0; v < V; ++v) {
        if (cond[v] <= 0.0)
          throw SupportViolationError("support violation: zero conditional at prefix " +
                                      format_sequence(prefix));
        pmax = std::max(pmax, cond[v]);
        pmin = std::min(pmin, cond[v]);
        z += std::pow(cond[v], gamma);
      }
      double gap_max = 0.0, gap_min = 0.0, neglog = 0.0;
      for (int v = 0; v < V; ++v) {
        gap_max += cond[v] * (std::log(pmax) - std::log(cond[v]));
        gap_min += cond[v] * (std::log(cond[v]) - std::log(pmin));
        neglog -= cond[v] * std::log(cond[v]);
      }
      b.c1 += w * gap_max;
      b.c2 += w * gap_min;
      b.exact += w * (gamma * neglog + std::log(z));
      for (int v = 0; v < V; ++v) {
        Sequence q = prefix;
        q.push_back(v);
        next.emplace_back(std::move(q), w * cond[v]);
      }
    }
    level = std::move(next);
  }
  b.c3 = b.c1;
  // Both lower envelopes hold for every gamma; report the tighter one.
  b.lower = std::max(gamma * b.c1, L * logV - gamma * b.c2);
  b.upper = gamma * b.c3 + L * logV;
  return b;
}

}  // namespace declab
