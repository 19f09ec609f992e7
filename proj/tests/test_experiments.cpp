#include <cmath>
#include <random>

#include <doctest.h>

#include "declab/distribution.hpp"
#include "declab/errors.hpp"
#include "declab/experiments.hpp"
#include "declab/io.hpp"
#include "declab/losses.hpp"

using namespace declab;
using namespace declab::experiments;

namespace {

SweepConfig tiny_config() {
  SweepConfig cfg;
  cfg.alphas = {10.0};
  cfg.node_counts = {2};
  cfg.lengths = {2};
  cfg.gram_lookahead = {1, 2};
  cfg.trials = 1;
  cfg.workers = 1;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  SweepConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.alphas = {-1.0};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tiny_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tiny_config();
  cfg.node_counts = {1};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("degenerate single-trial sweep") {
  SweepResult result = run_sweep(tiny_config());
  CHECK(result.rows.size() == 4);  // (N,K) in {1,2}^2
  CHECK(result.skipped_cells == 0);
  for (const SweepRow& r : result.rows) {
    CHECK((r.mean_optimal_fraction == 0.0 || r.mean_optimal_fraction == 1.0));
    CHECK(r.trials == 1);
    CHECK(r.T == 1);
    CHECK(r.mean_kl_from_uniform >= 0.0);
  }
}

TEST_CASE("fractions are means of 0/1 indicators") {
  SweepConfig cfg = tiny_config();
  cfg.trials = 4;
  cfg.alphas = {0.25};
  for (const SweepRow& r : run_sweep(cfg).rows) {
    const double scaled = r.mean_optimal_fraction * 4;
    CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-15));
  }
}

TEST_CASE("budget-exceeding cells are skipped, not fatal") {
  SweepConfig cfg = tiny_config();
  cfg.lengths = {2, 8};
  cfg.budget = 16;  // 2^8 > 16
  SweepResult result = run_sweep(cfg);
  CHECK(result.skipped_cells == 4);  // L=8 admits N,K in {1,2} -> 4 cells
  for (const SweepRow& r : result.rows) CHECK(r.L == 2);
}

TEST_CASE("worker count does not change the result") {
  SweepConfig cfg;
  cfg.alphas = {0.5, 10.0};
  cfg.node_counts = {2, 3};
  cfg.lengths = {2, 4};
  cfg.gram_lookahead = {1, 2, 4};
  cfg.trials = 6;
  cfg.master_seed = 99;
  cfg.workers = 1;
  const std::string csv1 = run_sweep(cfg).to_csv();
  cfg.workers = 3;
  const std::string csv3 = run_sweep(cfg).to_csv();
  cfg.workers = 8;
  const std::string csv8 = run_sweep(cfg).to_csv();
  CHECK(csv1 == csv3);
  CHECK(csv1 == csv8);
}

TEST_CASE("different master seeds change the result") {
  SweepConfig cfg = tiny_config();
  cfg.alphas = {0.25};
  cfg.trials = 20;
  const std::string a = run_sweep(cfg).to_csv();
  cfg.master_seed = 1;
  const std::string b = run_sweep(cfg).to_csv();
  CHECK(a != b);
}

TEST_CASE("csv round trip") {
  SweepConfig cfg = tiny_config();
  cfg.trials = 3;
  SweepResult result = run_sweep(cfg);
  const std::string csv = result.to_csv();
  CHECK(csv.rfind("alpha,m,L,N,K,T,mean_optimal_fraction,mean_kl_from_uniform,trials,tie_rate",
                  0) == 0);
  SweepResult parsed = SweepResult::from_csv(csv);
  CHECK(parsed.rows.size() == result.rows.size());
  CHECK(parsed.to_csv() == csv);
  CHECK_THROWS_AS(SweepResult::from_csv("alpha\n1,2\n"), ValidationError);
}

TEST_CASE("chain oracle matches brute force") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 15; ++trial) {
    const int m = 2 + trial % 3;
    const int L = 3 + trial % 3;
    MarkovChainDistribution mc = sample_dirichlet_chain(rng, m, 0.5, L);
    for (int N = 1; N <= L; ++N) {
      ChainOracle fast = chain_oracle(mc, N);
      OracleResult slow = oracle_optimal(mc, N);
      CHECK(fast.best_g == doctest::Approx(slow.best_g).epsilon(1e-12));
      CHECK(fast.tie == slow.tie());
    }
  }
}

TEST_CASE("chain oracle reports full ties") {
  MarkovChainDistribution uniform({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, 3);
  for (int N : {1, 2, 3}) {
    ChainOracle oracle = chain_oracle(uniform, N);
    CHECK(oracle.tie);
    CHECK(oracle.best_g ==
          doctest::Approx(oracle_optimal(uniform, N).best_g).epsilon(1e-12));
  }
}

TEST_CASE("plot emission") {
  CHECK(emit_plots(SweepResult{}, "/tmp/declab_test_plots_empty").empty());

  SweepConfig cfg;
  cfg.alphas = {0.25, 10.0};
  cfg.node_counts = {2};
  cfg.lengths = {2};
  cfg.gram_lookahead = {1, 2};
  cfg.trials = 2;
  cfg.workers = 1;
  SweepResult result = run_sweep(cfg);
  std::vector<std::string> files = emit_plots(result, "/tmp/declab_test_plots");
  CHECK(files.size() == 6);  // three figures, csv + svg each
  for (const std::string& f : files) CHECK_NOTHROW(io::read_text_file(f));

  // figure 2 subset: N = L rows only
  SweepResult fig2 = SweepResult::from_csv(io::read_text_file("/tmp/declab_test_plots/fig_2.csv"));
  for (const SweepRow& r : fig2.rows) CHECK(r.N == r.L);

  std::vector<std::string> tk = emit_plots(result, "/tmp/declab_test_plots", true);
  CHECK(tk.front().find("fig_4") != std::string::npos);
}

TEST_CASE("verification suite passes") {
  for (const CheckResult& check : verify_all()) {
    INFO(check.id, ": ", check.evidence);
    CHECK(check.pass);
  }
}
