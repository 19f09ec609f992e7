#pragma once

/**
 * Query-only next-token-predictor interface.
 *
 * Decoders see only conditional_next; joint probabilities stay hidden.
 * Each distinct prefix query increments the counter once; cache hits do
 * not count. The counter is the only mutable state, so a predictor is
 * shareable across threads.
 */

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "declab/distribution.hpp"
#include "declab/errors.hpp"
#include "declab/sequence.hpp"

namespace declab {

struct SequenceHash {
  std::size_t operator()(const Sequence& y) const {
    std::size_t h = 1469598103934665603ull;
    for (Token t : y) {
      h ^= static_cast<std::size_t>(t) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

class NextTokenPredictor {
 public:
  explicit NextTokenPredictor(std::shared_ptr<const SequenceDistribution> dist,
                              double epsilon = 0.0)
      : dist_(std::move(dist)), epsilon_(epsilon) {
    if (!dist_) throw ValidationError("predictor needs a distribution");
    if (epsilon_ < 0.0 || epsilon_ > 1.0) throw ValidationError("epsilon must be in [0,1]");
  }

  int vocab_size() const { return dist_->vocab_size(); }
  int length() const { return dist_->length(); }

  std::vector<double> conditional_next(const Sequence& prefix) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(prefix);
      if (it != cache_.end()) return it->second;
    }
    std::vector<double> cond = dist_->conditional_next(prefix);
    if (epsilon_ > 0.0) mix_uniform(cond);
    std::lock_guard<std::mutex> lock(mu_);
    // Cap the memo so deep lookahead enumerations (which visit each prefix
    // once anyway) cannot blow up memory. Beyond the cap, repeat queries
    // may be double counted; the counter is only read at small sizes.
    if (cache_.size() < kCacheCap) {
      auto [it, inserted] = cache_.emplace(prefix, std::move(cond));
      if (inserted) count_.fetch_add(1, std::memory_order_relaxed);
      return it->second;
    }
    count_.fetch_add(1, std::memory_order_relaxed);
    return cond;
  }

  /// Distinct conditional-distribution queries issued so far.
  std::uint64_t query_count() const { return count_.load(std::memory_order_relaxed); }

 private:
  // (1-eps) p + eps * uniform over the tokens legal at this prefix. Mixing
  // only over the support keeps zero entries zero and the null rule intact.
  void mix_uniform(std::vector<double>& cond) const {
    int support = 0;
    for (double c : cond)
      if (c > 0.0) ++support;
    for (double& c : cond)
      if (c > 0.0) c = (1.0 - epsilon_) * c + epsilon_ / support;
  }

  static constexpr std::size_t kCacheCap = 1u << 16;

  std::shared_ptr<const SequenceDistribution> dist_;
  double epsilon_;
  mutable std::mutex mu_;
  std::unordered_map<Sequence, std::vector<double>, SequenceHash> cache_;
  std::atomic<std::uint64_t> count_{0};
};

struct PerturbationSchedule {
  std::vector<double> epsilons;

  void validate() const {
    double prev = 1.0;
    for (double e : epsilons) {
      if (e < 0.0 || e > 1.0) throw ValidationError("epsilon out of [0,1]");
      if (e > prev + 1e-15) throw ValidationError("epsilons must be non-increasing");
      prev = e;
    }
  }

  /// Default schedule eps_i = 2^-i, i = 0..steps-1.
  static PerturbationSchedule geometric(int steps) {
    PerturbationSchedule s;
    double e = 1.0;
    for (int i = 0; i < steps; ++i, e *= 0.5) s.epsilons.push_back(e);
    return s;
  }
};

inline NextTokenPredictor wrap(std::shared_ptr<const SequenceDistribution> dist) {
  return NextTokenPredictor(std::move(dist));
}

/// Convergence emulation: mixes every conditional of the true distribution
/// with the uniform distribution over its support, weight schedule[step].
inline NextTokenPredictor perturbed_predictor(
    std::shared_ptr<const SequenceDistribution> true_dist,
    const PerturbationSchedule& schedule, int step) {
  schedule.validate();
  if (step < 0 || step >= static_cast<int>(schedule.epsilons.size()))
    throw ValidationError("schedule step out of range");
  return NextTokenPredictor(std::move(true_dist), schedule.epsilons[step]);
}

}  // namespace declab
