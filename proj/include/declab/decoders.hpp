#pragma once

/**
 * Decoding algorithms over a next-token predictor, plus exact computation
 * of each decoder's output distribution.
 *
 * Lookahead enumerates continuations depth-first in token-index order
 * (null slot last); "first seen" tie breaking is exactly that order.
 * Prefix conditionals are memoized inside the predictor, so shared
 * prefixes are queried once.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "declab/distribution.hpp"
#include "declab/errors.hpp"
#include "declab/ntp.hpp"
#include "declab/sequence.hpp"

namespace declab {

enum class DecoderKind { kt_lookahead, beam_lookahead, random_sample, temp_scaled_sample };
enum class TiePolicy { first_seen, error_on_tie };

struct DecoderSpec {
  DecoderKind kind = DecoderKind::kt_lookahead;
  int K = 1;  // lookahead depth
  int T = 1;  // commit length
  int B = 1;  // beam width
  double gamma = 1.0;
  TiePolicy tie_policy = TiePolicy::first_seen;
  double tie_tolerance = 1e-12;

  void validate(int L) const {
    if (T < 1 || K < T || K > L) throw ValidationError("need 1 <= T <= K <= L");
    if (B < 1) throw ValidationError("beam width must be >= 1");
    if (gamma < 0.0) throw ValidationError("gamma must be >= 0");
  }
};

struct DecodeResult {
  Sequence output;
  bool tie_flag = false;
};

namespace detail {

// Enumerates every positive-probability continuation of `base` of length
// `depth` and reports (continuation, conditional chain product) in
// token-index order. Null branches force nulls afterwards via the
// predictor's own conditionals.
template <typename Fn>
void for_each_continuation(NextTokenPredictor& ntp, const Sequence& base, int depth, Fn&& emit) {
  const int V = ntp.vocab_size();
  Sequence prefix = base;
  Sequence cont;
  std::vector<double> probs;  // running chain products, one per level
  auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(cont.size()) == depth) {
      emit(cont, probs.empty() ? 1.0 : probs.back());
      return;
    }
    std::vector<double> cond = ntp.conditional_next(prefix);
    double acc = probs.empty() ? 1.0 : probs.back();
    for (int slot = 0; slot <= V; ++slot) {
      double p = cond[slot];
      if (p <= 0.0) continue;
      Token t = slot == V ? kNullToken : slot;
      cont.push_back(t);
      prefix.push_back(t);
      probs.push_back(acc * p);
      self(self);
      probs.pop_back();
      prefix.pop_back();
      cont.pop_back();
    }
  };
  rec(rec);
}

struct ArgmaxTracker {
  double best = -1.0;
  Sequence best_seq;
  std::vector<Sequence> tied;
  double tol;

  explicit ArgmaxTracker(double tolerance) : tol(tolerance) {}

  void offer(const Sequence& s, double v) {
    if (best < 0.0 || v > best + tol) {
      best = v;
      best_seq = s;
      tied.clear();
    } else if (v >= best - tol) {
      tied.push_back(s);
    }
  }

  bool has_tie() const { return !tied.empty(); }

  void raise_if(TiePolicy policy) const {
    if (policy == TiePolicy::error_on_tie && has_tie()) {
      std::vector<std::string> reprs;
      reprs.push_back(format_sequence(best_seq));
      for (const auto& s : tied) reprs.push_back(format_sequence(s));
      throw TieError(std::move(reprs));
    }
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// K_T-lookahead
// ---------------------------------------------------------------------------

/// Repeatedly scores all c-length continuations (c = min{K, L - |y|}) by
/// the chain-rule product of conditionals and commits the first
/// min{T, L - |y|} tokens of the best one. K = T = 1 is greedy decoding.
inline DecodeResult kt_lookahead(NextTokenPredictor& ntp, const DecoderSpec& spec) {
  const int L = ntp.length();
  spec.validate(L);
  Sequence y;
  bool tie_flag = false;
  while (static_cast<int>(y.size()) < L) {
    const int c = std::min(spec.K, L - static_cast<int>(y.size()));
    detail::ArgmaxTracker track(spec.tie_tolerance);
    detail::for_each_continuation(ntp, y, c,
                                  [&](const Sequence& cont, double p) { track.offer(cont, p); });
    track.raise_if(spec.tie_policy);
    tie_flag |= track.has_tie();
    const int h = std::min(spec.T, L - static_cast<int>(y.size()));
    y.insert(y.end(), track.best_seq.begin(), track.best_seq.begin() + h);
  }
  return {y, tie_flag};
}

// ---------------------------------------------------------------------------
// Beam variant
// ---------------------------------------------------------------------------

/// Keeps the top B prefixes by chain-rule probability, extending each by
/// all c-length continuations and committing T tokens per step. B = 1
/// reproduces kt_lookahead under the same tie policy.
inline DecodeResult beam_lookahead(NextTokenPredictor& ntp, const DecoderSpec& spec) {
  const int L = ntp.length();
  spec.validate(L);
  struct Cand {
    Sequence prefix;
    double prob;
  };
  std::vector<Cand> beam{{Sequence{}, 1.0}};
  bool tie_flag = false;

  auto prefix_prob = [&](const Sequence& prefix) {
    double p = 1.0;
    Sequence head;
    for (Token t : prefix) {
      p *= ntp.conditional_next(head)[t == kNullToken ? ntp.vocab_size() : t];
      head.push_back(t);
    }
    return p;
  };

  while (static_cast<int>(beam.front().prefix.size()) < L) {
    const int len = static_cast<int>(beam.front().prefix.size());
    const int c = std::min(spec.K, L - len);
    const int h = std::min(spec.T, L - len);

    struct Scored {
      Sequence committed;  // candidate prefix + first h continuation tokens
      double score;        // full c-step chain probability
    };
    std::vector<Scored> pool;
    for (const Cand& cand : beam) {
      detail::for_each_continuation(ntp, cand.prefix, c, [&](const Sequence& cont, double p) {
        Sequence committed = cand.prefix;
        committed.insert(committed.end(), cont.begin(), cont.begin() + h);
        pool.push_back({std::move(committed), cand.prob * p});
      });
    }

    // First-seen top-B selection, matching the kt_lookahead argmax rule.
    std::vector<bool> taken(pool.size(), false);
    std::vector<Cand> next;
    double last_score = 0.0;
    for (int b = 0; b < spec.B && static_cast<int>(next.size()) < static_cast<int>(pool.size());
         ++b) {
      int best = -1;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (taken[i]) continue;
        if (best < 0 || pool[i].score > pool[best].score + spec.tie_tolerance) best = static_cast<int>(i);
      }
      if (best < 0) break;
      taken[best] = true;
      last_score = pool[best].score;
      bool dup = false;
      for (const Cand& c2 : next) dup |= c2.prefix == pool[best].committed;
      if (!dup) next.push_back({pool[best].committed, prefix_prob(pool[best].committed)});
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!taken[i] && std::abs(pool[i].score - last_score) <= spec.tie_tolerance) {
        tie_flag = true;
        if (spec.tie_policy == TiePolicy::error_on_tie)
          throw TieError({format_sequence(pool[i].committed)});
      }
    }
    beam = std::move(next);
  }

  detail::ArgmaxTracker track(spec.tie_tolerance);
  for (const Cand& cand : beam) track.offer(cand.prefix, cand.prob);
  track.raise_if(spec.tie_policy);
  tie_flag |= track.has_tie();
  return {track.best_seq, tie_flag};
}

// ---------------------------------------------------------------------------
// Temperature scaling
// ---------------------------------------------------------------------------

/// p_i^gamma / sum_j p_j^gamma. gamma = 1 is the identity, gamma = 0 the
/// uniform distribution over the support, gamma = inf a point mass on the
/// first-seen argmax. Zero entries stay zero for every gamma > 0.
inline std::vector<double> temperature_scale(const std::vector<double>& probs, double gamma) {
  if (gamma < 0.0) throw ValidationError("gamma must be >= 0");
  std::vector<double> out(probs.size(), 0.0);
  if (std::isinf(gamma)) {
    int best = -1;
    for (std::size_t i = 0; i < probs.size(); ++i)
      if (probs[i] > 0.0 && (best < 0 || probs[i] > probs[best])) best = static_cast<int>(i);
    if (best < 0) throw ValidationError("empty support");
    out[best] = 1.0;
    return out;
  }
  if (gamma == 0.0) {
    int support = 0;
    for (double p : probs)
      if (p > 0.0) ++support;
    if (support == 0) throw ValidationError("empty support");
    for (std::size_t i = 0; i < probs.size(); ++i)
      if (probs[i] > 0.0) out[i] = 1.0 / support;
    return out;
  }
  double pmax = 0.0;
  for (double p : probs) pmax = std::max(pmax, p);
  if (pmax <= 0.0) throw ValidationError("empty support");
  double z = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      out[i] = std::exp(gamma * (std::log(probs[i]) - std::log(pmax)));
      z += out[i];
    }
  }
  for (double& o : out) o /= z;
  return out;
}

// ---------------------------------------------------------------------------
// Sampling decoders
// ---------------------------------------------------------------------------

namespace detail {

inline Token sample_slot(const std::vector<double>& cond, std::mt19937_64& rng, int V) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  int last_positive = -1;
  for (int slot = 0; slot <= V; ++slot) {
    if (cond[slot] <= 0.0) continue;
    last_positive = slot;
    acc += cond[slot];
    if (u < acc) return slot == V ? kNullToken : slot;
  }
  return last_positive == V ? kNullToken : last_positive;  // rounding slack
}

}  // namespace detail

inline Sequence random_sample(NextTokenPredictor& ntp, std::mt19937_64& rng) {
  const int L = ntp.length();
  const int V = ntp.vocab_size();
  Sequence y;
  while (static_cast<int>(y.size()) < L)
    y.push_back(detail::sample_slot(ntp.conditional_next(y), rng, V));
  return y;
}

inline Sequence temp_scaled_sample(NextTokenPredictor& ntp, std::mt19937_64& rng, double gamma) {
  const int L = ntp.length();
  const int V = ntp.vocab_size();
  Sequence y;
  while (static_cast<int>(y.size()) < L)
    y.push_back(detail::sample_slot(temperature_scale(ntp.conditional_next(y), gamma), rng, V));
  return y;
}

// ---------------------------------------------------------------------------
// Exact output distributions
// ---------------------------------------------------------------------------

/// Exact law of the decoder's output. Deterministic decoders give a point
/// mass; random sampling reproduces the predictor's joint; temperature-
/// scaled sampling gives the product of scaled conditionals.
inline TableDistribution output_distribution(const DecoderSpec& spec, NextTokenPredictor& ntp,
                                             std::size_t budget = default_budget()) {
  const int L = ntp.length();
  const int V = ntp.vocab_size();
  spec.validate(L);
  if (pow_checked(V, L) > budget)
    throw BudgetExceededError("instance too large: |V|^L exceeds the budget");

  const Vocabulary vocab(V);
  if (spec.kind == DecoderKind::kt_lookahead)
    return TableDistribution::point_mass(vocab, kt_lookahead(ntp, spec).output);
  if (spec.kind == DecoderKind::beam_lookahead)
    return TableDistribution::point_mass(vocab, beam_lookahead(ntp, spec).output);
  if (spec.kind == DecoderKind::temp_scaled_sample && std::isinf(spec.gamma)) {
    DecoderSpec greedy;
    greedy.tie_policy = spec.tie_policy;
    greedy.tie_tolerance = spec.tie_tolerance;
    return TableDistribution::point_mass(vocab, kt_lookahead(ntp, greedy).output);
  }

  const bool scaled = spec.kind == DecoderKind::temp_scaled_sample;
  std::map<Sequence, double> entries;
  Sequence y;
  auto rec = [&](auto&& self, double acc) -> void {
    if (static_cast<int>(y.size()) == L) {
      entries[y] += acc;
      return;
    }
    std::vector<double> cond = ntp.conditional_next(y);
    if (scaled) cond = temperature_scale(cond, spec.gamma);
    for (int slot = 0; slot <= V; ++slot) {
      if (cond[slot] <= 0.0) continue;
      y.push_back(slot == V ? kNullToken : slot);
      self(self, acc * cond[slot]);
      y.pop_back();
    }
  };
  rec(rec, 1.0);
  return TableDistribution(vocab, L, std::move(entries), 1e-9);
}

}  // namespace declab
