#include <cmath>
#include <map>
#include <memory>
#include <random>

#include <doctest.h>

#include "declab/decoders.hpp"
#include "declab/distribution.hpp"
#include "declab/errors.hpp"
#include "declab/fixtures.hpp"
#include "declab/losses.hpp"
#include "declab/ntp.hpp"

using namespace declab;

namespace {

TableDistribution random_full_table(std::mt19937_64& rng, int vocab, int length) {
  std::exponential_distribution<double> expo(1.0);
  std::map<Sequence, double> e;
  Sequence y(length, 0);
  double total = 0.0;
  while (true) {
    e[y] = expo(rng) + 1e-9;
    total += e[y];
    int i = length - 1;
    while (i >= 0 && y[i] == vocab - 1) y[i--] = 0;
    if (i < 0) break;
    ++y[i];
  }
  for (auto& [seq, p] : e) p /= total;
  return TableDistribution(Vocabulary(vocab), length, std::move(e), 1e-9);
}

// direct E_{y~p}[ngram_hamming(yhat, y, N)] over the support
double enumerated_risk(const TableDistribution& p, const Sequence& yhat, int N) {
  double risk = 0.0;
  for (const auto& [y, prob] : p.entries())
    if (prob > 0.0) risk += prob * ngram_hamming(yhat, y, N);
  return risk;
}

}  // namespace

TEST_CASE("ngram_hamming") {
  CHECK(ngram_hamming({0, 1, 1, 0}, {0, 1, 1, 0}, 2) == 0);
  CHECK(ngram_hamming({0, 0, 1, 1}, {0, 0, 0, 1}, 2) == 2);
  CHECK(ngram_hamming({0, 0, 1, 1}, {0, 0, 0, 1}, 4) == 1);
  CHECK(ngram_hamming({0, 0, 1, 1}, {0, 1, 0, 1}, 1) == 2);
  CHECK_THROWS_AS(ngram_hamming({0, 1}, {0, 1, 1}, 1), ValidationError);
  CHECK_THROWS_AS(ngram_hamming({0, 1}, {0, 1}, 3), ValidationError);
}

TEST_CASE("g_score on the four-sequence table") {
  TableDistribution p = fixtures::greedy_beats_lookahead_table();
  CHECK(g_score(p, {0, 0, 0, 0}, 1) == doctest::Approx(2.17).epsilon(1e-12));
  CHECK(g_score(p, {1, 1, 1, 1}, 1) == doctest::Approx(1.60).epsilon(1e-12));
  // N = L reduces to the sequence probability
  CHECK(g_score(p, {1, 1, 1, 1}, 4) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("expected_ngram_risk") {
  TableDistribution point = TableDistribution::point_mass(Vocabulary(2), {0, 1, 0});
  CHECK(expected_ngram_risk(point, {0, 1, 0}, 1) == doctest::Approx(0.0));

  TableDistribution p = fixtures::greedy_beats_lookahead_table();
  CHECK(expected_ngram_risk(p, {0, 0, 0, 0}, 1) == doctest::Approx(1.83).epsilon(1e-12));

  TableDistribution u = TableDistribution::uniform(Vocabulary(2), 4);
  CHECK(expected_ngram_risk(u, {0, 1, 1, 0}, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("risk identity holds on random tables") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 25; ++trial) {
    const int vocab = 2 + trial % 2;
    const int length = 3 + trial % 3;
    TableDistribution p = random_full_table(rng, vocab, length);
    for (int N = 1; N <= length; ++N) {
      Sequence yhat(length);
      for (Token& t : yhat) t = static_cast<Token>(rng() % vocab);
      CHECK(expected_ngram_risk(p, yhat, N) ==
            doctest::Approx(enumerated_risk(p, yhat, N)).epsilon(1e-10));
    }
  }
}

TEST_CASE("oracle_optimal") {
  TableDistribution p = fixtures::greedy_beats_lookahead_table();
  OracleResult r1 = oracle_optimal(p, 1);
  CHECK(r1.optimal_set == std::vector<Sequence>{{0, 0, 0, 0}});
  CHECK(r1.best_g == doctest::Approx(2.17).epsilon(1e-12));
  CHECK(!r1.tie());

  TableDistribution p2 = fixtures::greedy_beats_lookahead_zero_one_table();
  OracleResult r2 = oracle_optimal(p2, 4);
  CHECK(r2.optimal_set == std::vector<Sequence>{{0, 0, 0, 0}});

  TableDistribution u = TableDistribution::uniform(Vocabulary(2), 2);
  OracleResult ru = oracle_optimal(u, 1);
  CHECK(ru.optimal_set.size() == 4);
  CHECK(ru.tie());

  CHECK_THROWS_AS(oracle_optimal(p, 5), ValidationError);
  CHECK_THROWS_AS(oracle_optimal(p, 1, 10), BudgetExceededError);

  OracleResult kept = oracle_optimal(u, 1, default_budget(), true);
  CHECK(kept.all.size() >= 4);  // includes null-padded candidates
}

TEST_CASE("every sequence has risk at least the oracle's") {
  std::mt19937_64 rng(61);
  TableDistribution p = random_full_table(rng, 2, 4);
  for (int N : {1, 2, 4}) {
    OracleResult oracle = oracle_optimal(p, N);
    const double best = expected_ngram_risk(p, oracle.optimal_set.front(), N);
    Sequence y(4, 0);
    while (true) {
      CHECK(expected_ngram_risk(p, y, N) >= best - 1e-10);
      int i = 3;
      while (i >= 0 && y[i] == 1) y[i--] = 0;
      if (i < 0) break;
      ++y[i];
    }
  }
}

TEST_CASE("counted oracle matches the plain oracle") {
  auto p = std::make_shared<TableDistribution>(fixtures::greedy_beats_lookahead_table());
  NextTokenPredictor ntp(p);
  OracleResult counted = oracle_optimal_counted(ntp, 1);
  OracleResult plain = oracle_optimal(*p, 1);
  CHECK(counted.optimal_set == plain.optimal_set);
  CHECK(ntp.query_count() > 0);
}

TEST_CASE("cross_entropy") {
  TableDistribution u = TableDistribution::uniform(Vocabulary(2), 3);
  CHECK(cross_entropy(u, u) == doctest::Approx(3 * std::log(2.0)).epsilon(1e-12));

  TableDistribution p = fixtures::greedy_beats_lookahead_table();
  CHECK(cross_entropy(p, p) == doctest::Approx(entropy(p)).epsilon(1e-12));

  TableDistribution point = TableDistribution::point_mass(Vocabulary(2), {0, 0, 0});
  CHECK(std::isinf(cross_entropy(u, point)));
}

TEST_CASE("cross entropy decomposes into entropy plus KL") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 10; ++trial) {
    TableDistribution p = random_full_table(rng, 2, 3);
    TableDistribution q = random_full_table(rng, 2, 3);
    CHECK(cross_entropy(p, q) - entropy(p) - kl_divergence(p, q) ==
          doctest::Approx(0.0).epsilon(1e-10));
  }
}

TEST_CASE("expected_risk of greedy on the four-sequence table") {
  auto p = std::make_shared<TableDistribution>(fixtures::greedy_beats_lookahead_table());
  ConditionalModel model{{{"x", 1.0, p}}};
  DecoderSpec greedy;
  LossSpec loss;
  RiskReport report = expected_risk(model, greedy, loss);
  CHECK(report.risk == doctest::Approx(1.83).epsilon(1e-12));
  CHECK(report.optimal_risk == doctest::Approx(1.83).epsilon(1e-12));
  CHECK(report.is_optimal);
  CHECK(!report.tie_flag);
  CHECK(report.optimal_set == std::vector<Sequence>{{0, 0, 0, 0}});
  CHECK(report.decoder_output->sequence_prob({0, 0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("sampling is strictly suboptimal off the optimal set") {
  auto p = std::make_shared<TableDistribution>(fixtures::greedy_beats_lookahead_table());
  ConditionalModel model{{{"x", 1.0, p}}};
  DecoderSpec sampler;
  sampler.kind = DecoderKind::random_sample;
  LossSpec loss;
  RiskReport report = expected_risk(model, sampler, loss);
  CHECK(report.risk > 1.83 + 1e-6);
  CHECK(!report.is_optimal);

  // strict increase is at least (mass off the optimal set) * (g gap)
  OracleResult oracle = oracle_optimal(*p, 1);
  double off_mass = 0.0, best_other_g = 0.0;
  for (const auto& [y, prob] : p->entries()) {
    if (oracle.contains(y)) continue;
    off_mass += prob;
    best_other_g = std::max(best_other_g, g_score(*p, y, 1));
  }
  CHECK(report.risk - report.optimal_risk >= off_mass * (oracle.best_g - best_other_g) - 1e-10);
}

TEST_CASE("duplicated inputs give the single-input risk") {
  auto p = std::make_shared<TableDistribution>(fixtures::greedy_beats_lookahead_table());
  DecoderSpec greedy;
  LossSpec loss;
  RiskReport one = expected_risk(ConditionalModel{{{"x", 1.0, p}}}, greedy, loss);
  RiskReport two =
      expected_risk(ConditionalModel{{{"a", 0.5, p}, {"b", 0.5, p}}}, greedy, loss);
  CHECK(two.risk == doctest::Approx(one.risk).epsilon(1e-12));
  CHECK(two.is_optimal == one.is_optimal);
}

TEST_CASE("cross-entropy risk of a deterministic decoder is infinite") {
  auto p = std::make_shared<TableDistribution>(fixtures::greedy_beats_lookahead_table());
  ConditionalModel model{{{"x", 1.0, p}}};
  DecoderSpec greedy;
  LossSpec loss;
  loss.kind = LossKind::cross_entropy;
  RiskReport report = expected_risk(model, greedy, loss);
  CHECK(std::isinf(report.risk));
  CHECK(!report.is_optimal);

  DecoderSpec sampler;
  sampler.kind = DecoderKind::random_sample;
  RiskReport exact = expected_risk(model, sampler, loss);
  CHECK(exact.risk == doctest::Approx(entropy(*p)).epsilon(1e-10));
  CHECK(exact.is_optimal);
}

TEST_CASE("scaled conditionals keep uniform and deterministic laws fixed") {
  auto scaled_law = [](std::shared_ptr<const TableDistribution> p, double gamma) {
    DecoderSpec spec;
    spec.kind = DecoderKind::temp_scaled_sample;
    spec.gamma = gamma;
    NextTokenPredictor ntp(p);
    return output_distribution(spec, ntp);
  };
  auto u = std::make_shared<TableDistribution>(TableDistribution::uniform(Vocabulary(2), 3));
  auto point = std::make_shared<TableDistribution>(
      TableDistribution::point_mass(Vocabulary(2), {1, 0, 1}));
  for (double gamma : {0.5, 2.0, 7.0}) {
    CHECK(kl_divergence(*u, scaled_law(u, gamma)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(kl_divergence(*point, scaled_law(point, gamma)) == doctest::Approx(0.0).epsilon(1e-12));
  }
  std::mt19937_64 rng(71);
  for (double gamma : {0.5, 2.0}) {
    auto p = std::make_shared<TableDistribution>(random_full_table(rng, 2, 3));
    CHECK(kl_divergence(*p, scaled_law(p, gamma)) > 1e-6);
  }
}

TEST_CASE("temperature bound constants") {
  std::map<Sequence, double> e{
      {{0, 0}, 0.4}, {{0, 1}, 0.3}, {{1, 0}, 0.2}, {{1, 1}, 0.1}};
  TableDistribution p(Vocabulary(2), 2, e);

  TempBounds identity = temp_bound_constants(p, 1.0);
  CHECK(identity.exact == doctest::Approx(entropy(p)).epsilon(1e-10));
  CHECK(identity.lower <= identity.exact + 1e-12);
  CHECK(identity.exact <= identity.upper + 1e-12);

  TempBounds zero = temp_bound_constants(p, 0.0);
  CHECK(zero.exact == doctest::Approx(2 * std::log(2.0)).epsilon(1e-9));

  for (double gamma : {0.25, 0.5, 2.0, 4.0}) {
    TempBounds b = temp_bound_constants(p, gamma);
    CHECK(b.lower <= b.exact + 1e-12);
    CHECK(b.exact <= b.upper + 1e-12);
    CHECK(b.c1 > 0.0);
    CHECK(b.c2 > 0.0);
    CHECK(b.c3 == b.c1);

    // cross-check `exact` against the direct expectation over all sequences
    DecoderSpec spec;
    spec.kind = DecoderKind::temp_scaled_sample;
    spec.gamma = gamma;
    auto sp = std::make_shared<TableDistribution>(p);
    NextTokenPredictor ntp(sp);
    TableDistribution law = output_distribution(spec, ntp);
    CHECK(b.exact == doctest::Approx(cross_entropy(p, law)).epsilon(1e-10));
  }

  TableDistribution gappy = fixtures::greedy_beats_lookahead_table();
  CHECK_THROWS_AS(temp_bound_constants(gappy, 2.0), SupportViolationError);
}

TEST_CASE("loss spec validation") {
  LossSpec loss;
  loss.N = 0;
  CHECK_THROWS_AS(loss.validate(4), ValidationError);
  loss.N = 5;
  CHECK_THROWS_AS(loss.validate(4), ValidationError);
  loss.kind = LossKind::cross_entropy;
  CHECK_NOTHROW(loss.validate(4));
}
