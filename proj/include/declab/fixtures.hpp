#pragma once

/**
 * Small hand-built distributions where lookahead depth, commit length, and
 * the brute-force oracle provably disagree (or agree) in known ways. Used
 * by the verification suite and the tests.
 */

#include <map>
#include <vector>

#include "declab/distribution.hpp"
#include "declab/sequence.hpp"

namespace declab::fixtures {

/// Greedy decoding is optimal for 1-gram Hamming here, while 2-step
/// lookahead locks onto 1111 and is not. Vocabulary {0,1,2}, L = 4.
inline TableDistribution greedy_beats_lookahead_table() {
  std::map<Sequence, double> e{
      {{0, 0, 0, 0}, 0.28},
      {{0, 1, 0, 0}, 0.12},
      {{2, 0, 0, 0}, 0.23},
      {{1, 1, 1, 1}, 0.37},
  };
  return TableDistribution(Vocabulary(3), 4, std::move(e));
}

/// Same separation for the 0-1 loss: greedy finds the max-probability
/// sequence 0000, 2-step lookahead does not. Vocabulary {0,1}, L = 4.
inline TableDistribution greedy_beats_lookahead_zero_one_table() {
  std::map<Sequence, double> e{
      {{0, 0, 0, 0}, 0.408},
      {{0, 1, 1, 1}, 0.102},
      {{1, 1, 0, 0}, 0.2401},
      {{1, 1, 1, 1}, 0.2499},
  };
  return TableDistribution(Vocabulary(2), 4, std::move(e));
}

/// Committing T+1 tokens per step is optimal while committing T is not,
/// for N-gram Hamming with N < L. Instantiated at K = 2, T = 1, L = 4
/// over vocabulary {0,1,2}.
inline TableDistribution long_commit_wins_table() {
  std::map<Sequence, double> e{
      {{0, 0, 0, 0}, 0.27675},
      {{1, 0, 0, 0}, 0.25},
      {{0, 0, 2, 0}, 0.03075},
      {{0, 1, 1, 1}, 0.2925},
      {{0, 2, 0, 0}, 0.15},
  };
  return TableDistribution(Vocabulary(3), 4, std::move(e));
}

/// The analogous construction for the 0-1 loss (N = L), same K, T, L.
inline TableDistribution long_commit_wins_zero_one_table() {
  std::map<Sequence, double> e{
      {{0, 0, 2, 2}, 0.051},
      {{0, 0, 0, 0}, 0.459},
      {{0, 1, 1, 1}, 0.2499},
      {{0, 1, 1, 0}, 0.2401},
  };
  return TableDistribution(Vocabulary(3), 4, std::move(e));
}

/// Fully connected chain with k cycle nodes (0..k-1) and a two-node
/// high-probability loop (nodes k, k+1). Lookahead of depth k keeps
/// walking the 0..k-1 cycle while the loop nodes dominate the position
/// marginals. Unlabeled edges share the leftover mass, nudged by
/// 1e-4 * rank so no argmax ties occur; the initial distribution is near
/// uniform with node 0 on top.
inline MarkovChainDistribution cycle_trap_chain(int k, int length) {
  const int m = k + 2;
  const int loop_a = k;
  const int loop_b = k + 1;
  std::vector<std::map<int, double>> named(m);
  for (int i = 0; i + 1 < k; ++i) named[i][i + 1] = 0.99;
  named[k - 1][0] = 1.0 / (k + 2) + 0.01;
  named[k - 1][loop_a] = 1.01 / (k + 2);
  named[k - 1][loop_b] = 1.02 / (k + 2);
  named[loop_a][loop_b] = 0.985;
  named[loop_b][loop_a] = 0.98;

  std::vector<std::vector<double>> trans(m, std::vector<double>(m, 0.0));
  for (int r = 0; r < m; ++r) {
    double used = 0.0;
    for (const auto& [c, w] : named[r]) {
      trans[r][c] = w;
      used += w;
    }
    int unnamed = m - static_cast<int>(named[r].size());
    const double base = (1.0 - used) / unnamed;
    int rank = 1;
    double total = 0.0;
    for (int c = 0; c < m; ++c) {
      if (!named[r].count(c)) trans[r][c] = base + 1e-4 * rank++;
      total += trans[r][c];
    }
    for (int c = 0; c < m; ++c) trans[r][c] /= total;
  }

  std::vector<double> initial(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    initial[i] = 1.0 / m + 1e-4 * (m - i);
    total += initial[i];
  }
  for (double& x : initial) x /= total;
  return MarkovChainDistribution(std::move(initial), std::move(trans), length);
}

}  // namespace declab::fixtures
