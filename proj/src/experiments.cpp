#include "declab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "declab/decoders.hpp"
#include "declab/errors.hpp"
#include "declab/fixtures.hpp"
#include "declab/io.hpp"
#include "declab/losses.hpp"
#include "declab/ntp.hpp"

namespace declab::experiments {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Per-trial seed from (master, alpha index, node-count index, trial index);
// independent of scheduling.
std::uint64_t trial_seed(std::uint64_t master, int a_idx, int m_idx, int trial) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(a_idx) + 0x100));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(m_idx) + 0x10000));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(trial) + 0x1000000));
  return h;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

// Null-padded outputs never beat a full-length path here because every
// window marginal of a positive chain is positive. Values are compared
// after the same 15-decimal rounding the brute-force argmax uses, and
// `tie` reports whether more than one sequence attains the rounded max.
ChainOracle chain_oracle(const MarkovChainDistribution& mc, int N) {
  const int m = mc.vocab_size();
  const int L = mc.length();
  const std::size_t states = pow_checked(m, N - 1);

  // val[s]: best g over completed windows for prefixes whose last N-1
  // tokens decode to s; cnt[s]: how many prefixes attain it.
  std::vector<double> val(states, 0.0);
  std::vector<std::uint64_t> cnt(states, 1);
  std::vector<Token> gram(std::max(N - 1, 1));

  // Positions 0..N-2 only build up the context; cnt[s] = 1 because a full
  // (N-1)-gram state is the prefix itself.
  for (int pos = N - 1; pos < L; ++pos) {
    const int start = pos - N + 1;
    std::vector<double> nval(states, -1.0);
    std::vector<std::uint64_t> ncnt(states, 0);
    for (std::size_t s = 0; s < states; ++s) {
      if (cnt[s] == 0) continue;
      // Weight of the window completed at `pos` factors as (context
      // marginal) * (one transition into the new token).
      double w0;
      Token last;
      if (N == 1) {
        w0 = 1.0;
        last = -1;
      } else {
        std::size_t rest = s;
        for (int j = N - 2; j >= 0; --j) {
          gram[j] = static_cast<Token>(rest % m);
          rest /= m;
        }
        w0 = mc.state_marginal(start)[gram[0]];
        for (int j = 1; j <= N - 2 && w0 > 0.0; ++j) w0 *= mc.transitions()[gram[j - 1]][gram[j]];
        last = gram[N - 2];
      }
      for (Token t = 0; t < m; ++t) {
        const double w = N == 1 ? mc.state_marginal(start)[t] : w0 * mc.transitions()[last][t];
        const double cand = val[s] + w;
        const std::size_t ns = N == 1 ? 0 : (s * m) % states + t;
        if (nval[ns] < 0.0 || detail::round15(cand) > detail::round15(nval[ns])) {
          nval[ns] = cand;
          ncnt[ns] = cnt[s];
        } else if (detail::round15(cand) == detail::round15(nval[ns])) {
          ncnt[ns] += cnt[s];
          nval[ns] = std::max(nval[ns], cand);
        }
      }
    }
    val = std::move(nval);
    cnt = std::move(ncnt);
  }

  ChainOracle out;
  long long best_key = std::numeric_limits<long long>::min();
  std::uint64_t multiplicity = 0;
  for (std::size_t s = 0; s < states; ++s) {
    if (cnt[s] == 0) continue;
    const long long key = detail::round15(val[s]);
    if (key > best_key) {
      best_key = key;
      out.best_g = val[s];
      multiplicity = cnt[s];
    } else if (key == best_key) {
      multiplicity += cnt[s];
      out.best_g = std::max(out.best_g, val[s]);
    }
  }
  out.tie = multiplicity > 1;
  return out;
}

void SweepConfig::validate() const {
  if (alphas.empty() || node_counts.empty() || lengths.empty() || gram_lookahead.empty())
    throw ValidationError("sweep grid must be non-empty");
  for (double a : alphas)
    if (!(a > 0.0)) throw ValidationError("alpha must be positive");
  for (int m : node_counts)
    if (m < 2) throw ValidationError("node counts must be >= 2");
  for (int L : lengths)
    if (L < 1) throw ValidationError("lengths must be >= 1");
  for (int v : gram_lookahead)
    if (v < 1) throw ValidationError("N/K values must be >= 1");
  if (trials < 1) throw ValidationError("trials must be >= 1");
}

// ---------------------------------------------------------------------------
// run_sweep
// ---------------------------------------------------------------------------

SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  SweepResult result;

  using CellKey = std::tuple<int, int, int>;  // (L, N, K)
  struct TrialOut {
    std::map<int, double> kl;                       // per L
    std::map<CellKey, std::pair<bool, bool>> cell;  // (optimal, tie)
  };

  for (std::size_t a_idx = 0; a_idx < config.alphas.size(); ++a_idx) {
    const double alpha = config.alphas[a_idx];
    for (std::size_t m_idx = 0; m_idx < config.node_counts.size(); ++m_idx) {
      const int m = config.node_counts[m_idx];

      std::vector<int> feasible;
      for (int L : config.lengths) {
        if (pow_checked(m, L) <= config.budget)
          feasible.push_back(L);
        else
          for (int N : config.gram_lookahead)
            for (int K : config.gram_lookahead)
              if (N <= L && K <= L) ++result.skipped_cells;
      }
      if (feasible.empty()) continue;

      std::vector<TrialOut> outs(config.trials);
      std::atomic<int> next{0};
      auto worker = [&]() {
        int t;
        while ((t = next.fetch_add(1)) < config.trials) {
          std::mt19937_64 rng(trial_seed(config.master_seed, static_cast<int>(a_idx),
                                         static_cast<int>(m_idx), t));
          MarkovChainDistribution drawn = sample_dirichlet_chain(rng, m, alpha, 1);
          TrialOut& out = outs[t];
          for (int L : feasible) {
            auto mc = std::make_shared<MarkovChainDistribution>(drawn.initial(),
                                                                drawn.transitions(), L);
            out.kl[L] = chain_kl_from_uniform(*mc);
            std::map<int, ChainOracle> oracles;
            for (int N : config.gram_lookahead)
              if (N <= L) oracles.emplace(N, chain_oracle(*mc, N));
            for (int K : config.gram_lookahead) {
              if (K > L) continue;
              DecoderSpec spec;
              spec.K = K;
              spec.T = config.t_mode == SweepConfig::TMode::k ? K : 1;
              NextTokenPredictor ntp(mc);
              DecodeResult decoded = kt_lookahead(ntp, spec);
              for (int N : config.gram_lookahead) {
                if (N > L) continue;
                const ChainOracle& oracle = oracles.at(N);
                const bool optimal = detail::round15(g_score(*mc, decoded.output, N)) ==
                                     detail::round15(oracle.best_g);
                out.cell[{L, N, K}] = {optimal, oracle.tie || decoded.tie_flag};
              }
            }
          }
        }
      };

      int nthreads = config.workers > 0 ? config.workers
                                        : static_cast<int>(std::thread::hardware_concurrency());
      nthreads = std::max(1, std::min(nthreads, config.trials));
      std::vector<std::thread> threads;
      for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
      for (auto& th : threads) th.join();

      // Order-fixed reduction over trial index.
      for (int L : feasible) {
        double kl_sum = 0.0;
        for (const TrialOut& out : outs) kl_sum += out.kl.at(L);
        const double kl_mean = kl_sum / config.trials;
        for (int N : config.gram_lookahead) {
          if (N > L) continue;
          for (int K : config.gram_lookahead) {
            if (K > L) continue;
            int optimal = 0, ties = 0;
            for (const TrialOut& out : outs) {
              const auto& [opt, tie] = out.cell.at({L, N, K});
              optimal += opt;
              ties += tie;
            }
            result.rows.push_back({alpha, m, L, N, K,
                                   config.t_mode == SweepConfig::TMode::k ? K : 1,
                                   static_cast<double>(optimal) / config.trials, kl_mean,
                                   config.trials, static_cast<double>(ties) / config.trials});
          }
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::string SweepResult::to_csv() const {
  std::ostringstream os;
  os << "alpha,m,L,N,K,T,mean_optimal_fraction,mean_kl_from_uniform,trials,tie_rate\n";
  for (const SweepRow& r : rows)
    os << fmt(r.alpha) << ',' << r.m << ',' << r.L << ',' << r.N << ',' << r.K << ',' << r.T
       << ',' << fmt(r.mean_optimal_fraction) << ',' << fmt(r.mean_kl_from_uniform) << ','
       << r.trials << ',' << fmt(r.tie_rate) << '\n';
  return os.str();
}

SweepResult SweepResult::from_csv(const std::string& csv) {
  SweepResult result;
  std::istringstream is(csv);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 10) throw ValidationError("malformed sweep CSV row: " + line);
    result.rows.push_back({std::stod(fields[0]), std::stoi(fields[1]), std::stoi(fields[2]),
                           std::stoi(fields[3]), std::stoi(fields[4]), std::stoi(fields[5]),
                           std::stod(fields[6]), std::stod(fields[7]), std::stoi(fields[8]),
                           std::stod(fields[9])});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Plots
// ---------------------------------------------------------------------------

namespace {

struct PlotLine {
  std::string label;
  std::vector<std::pair<double, double>> pts;  // (kl, fraction)
};

struct PlotPanel {
  std::string title;
  std::vector<PlotLine> lines;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string render_svg(const std::string& title, std::vector<PlotPanel> panels, int cols) {
  const int pw = 340, ph = 260, ml = 52, mb = 36, mt = 28, mr = 12;
  const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
  const int width = cols * pw, height = rows * ph + 24;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<text x=\"" << width / 2 << "\" y=\"14\" text-anchor=\"middle\" font-size=\"13\">"
     << title << "</text>\n";
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    PlotPanel& panel = panels[pi];
    const int ox = static_cast<int>(pi % cols) * pw + ml;
    const int oy = static_cast<int>(pi / cols) * ph + 24 + mt;
    const int iw = pw - ml - mr, ih = ph - mt - mb;
    double xmin = 1e300, xmax = -1e300;
    for (auto& line : panel.lines) {
      std::sort(line.pts.begin(), line.pts.end());
      for (auto& [x, y] : line.pts) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
      }
    }
    if (xmin > xmax) continue;
    if (xmax - xmin < 1e-12) {
      xmin -= 0.5;
      xmax += 0.5;
    }
    auto sx = [&](double x) { return ox + (x - xmin) / (xmax - xmin) * iw; };
    auto sy = [&](double y) { return oy + ih - y * ih; };  // fraction axis fixed to [0,1]
    os << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << iw << "\" height=\"" << ih
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << ox + iw / 2 << "\" y=\"" << oy - 8 << "\" text-anchor=\"middle\">"
       << panel.title << "</text>\n";
    os << "<text x=\"" << ox + iw / 2 << "\" y=\"" << oy + ih + 26
       << "\" text-anchor=\"middle\">mean KL from uniform</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
      const double fy = tick / 4.0;
      os << "<text x=\"" << ox - 6 << "\" y=\"" << sy(fy) + 3
         << "\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
      const double fx = xmin + (xmax - xmin) * tick / 4.0;
      os << "<text x=\"" << sx(fx) << "\" y=\"" << oy + ih + 12 << "\" text-anchor=\"middle\">"
         << fmt(fx) << "</text>\n";
    }
    for (std::size_t li = 0; li < panel.lines.size(); ++li) {
      const PlotLine& line = panel.lines[li];
      const char* color = kPalette[li % (sizeof kPalette / sizeof *kPalette)];
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : line.pts) os << sx(x) << ',' << sy(y) << ' ';
      os << "\"/>\n";
      for (const auto& [x, y] : line.pts)
        os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"2\" fill=\"" << color
           << "\"/>\n";
      os << "<text x=\"" << ox + iw - 4 << "\" y=\"" << oy + 12 + 11 * static_cast<int>(li)
         << "\" text-anchor=\"end\" fill=\"" << color << "\">" << line.label << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  SweepResult tmp;
  tmp.rows = rows;
  return tmp.to_csv();
}

// Panels keyed (m, L) in sorted order; lines keyed by label within a panel.
std::vector<PlotPanel> build_panels(const std::vector<SweepRow>& rows, bool panel_per_m) {
  std::map<std::pair<int, int>, std::map<std::string, PlotLine>> grid;
  for (const SweepRow& r : rows) {
    auto key = std::make_pair(panel_per_m ? r.m : 0, r.L);
    char label[32];
    std::snprintf(label, sizeof label, "N=%d K=%d", r.N, r.K);
    auto& line = grid[key][label];
    line.label = label;
    line.pts.emplace_back(r.mean_kl_from_uniform, r.mean_optimal_fraction);
  }
  std::vector<PlotPanel> panels;
  for (auto& [key, lines] : grid) {
    PlotPanel panel;
    char title[48];
    if (panel_per_m)
      std::snprintf(title, sizeof title, "m=%d  L=%d", key.first, key.second);
    else
      std::snprintf(title, sizeof title, "L=%d", key.second);
    panel.title = title;
    for (auto& [label, line] : lines) panel.lines.push_back(std::move(line));
    panels.push_back(std::move(panel));
  }
  return panels;
}

}  // namespace

std::vector<std::string> emit_plots(const SweepResult& result, const std::string& out_dir,
                                    bool t_equals_k) {
  std::vector<std::string> written;
  if (result.rows.empty()) return written;
  std::filesystem::create_directories(out_dir);
  const int base = t_equals_k ? 4 : 1;
  const char* family = t_equals_k ? "T=K lookahead" : "T=1 lookahead";

  int max_m = 0;
  for (const SweepRow& r : result.rows) max_m = std::max(max_m, r.m);

  auto emit = [&](int fig_id, const std::vector<SweepRow>& rows, const std::string& title,
                  bool panel_per_m) {
    if (rows.empty()) return;
    const std::string stem = out_dir + "/fig_" + std::to_string(fig_id);
    io::write_text_file(stem + ".csv", rows_to_csv(rows));
    io::write_text_file(stem + ".svg",
                        render_svg(title, build_panels(rows, panel_per_m), panel_per_m ? 4 : 4));
    written.push_back(stem + ".csv");
    written.push_back(stem + ".svg");
  };

  std::vector<SweepRow> hamming, zero_one;
  for (const SweepRow& r : result.rows) {
    if (r.N == 1 && r.m == max_m) hamming.push_back(r);
    if (r.N == r.L) zero_one.push_back(r);
  }
  emit(base, hamming, std::string(family) + ", 1-gram Hamming, m=" + std::to_string(max_m),
       false);
  emit(base + 1, zero_one, std::string(family) + ", L-gram Hamming (0-1 loss)", false);
  emit(base + 2, result.rows, std::string(family) + ", full grid", true);
  return written;
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

namespace {

TableDistribution random_table(std::mt19937_64& rng, int vocab, int length) {
  std::exponential_distribution<double> expo(1.0);
  std::map<Sequence, double> e;
  Sequence y(length, 0);
  double total = 0.0;
  while (true) {
    double w = expo(rng) + 1e-9;
    e[y] = w;
    total += w;
    int i = length - 1;
    while (i >= 0 && y[i] == vocab - 1) y[i--] = 0;
    if (i < 0) break;
    ++y[i];
  }
  for (auto& [seq, p] : e) p /= total;
  return TableDistribution(Vocabulary(vocab), length, std::move(e), 1e-9);
}

std::vector<double> softmax(const std::vector<double>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] - zmax);
  for (double& x : p) x /= s;
  return p;
}

CheckResult check_softmax_equivalence() {
  std::mt19937_64 rng(314159);
  std::normal_distribution<double> normal(0.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(7);
    for (double& x : z) x = normal(rng);
    for (double temp : {0.3, 1.0, 3.0}) {
      std::vector<double> scaled_logits(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) scaled_logits[i] = z[i] / temp;
      std::vector<double> a = softmax(scaled_logits);
      std::vector<double> b = temperature_scale(softmax(z), 1.0 / temp);
      for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    }
  }
  return {"softmax_equivalence", worst <= 1e-12,
          "max |softmax(z/T) - powerscale(softmax(z),1/T)| = " + fmt(worst) +
              " over 100 logit vectors, T in {0.3,1,3}"};
}

CheckResult check_query_lower_bound() {
  std::ostringstream ev;
  bool pass = true;
  for (int L : {3, 4, 5}) {
    auto uniform = std::make_shared<TableDistribution>(TableDistribution::uniform(Vocabulary(2), L));
    NextTokenPredictor ntp(uniform);
    oracle_optimal_counted(ntp, L);
    const std::uint64_t coverage = ntp.query_count() * 2;  // values read per query
    const std::uint64_t bound = (1ull << L) - 1;
    pass &= coverage >= bound;
    ev << "L=" << L << ": read " << coverage << " conditional values (bound " << bound << "); ";
  }
  return {"query_lower_bound", pass, ev.str()};
}

CheckResult check_cycle_trap() {
  auto chain = std::make_shared<MarkovChainDistribution>(fixtures::cycle_trap_chain(3, 6));
  DecoderSpec spec;
  spec.K = 3;
  spec.T = 3;
  NextTokenPredictor ntp(chain);
  Sequence out = kt_lookahead(ntp, spec).output;
  OracleResult oracle = oracle_optimal(*chain, 1);
  const Sequence cycle{0, 1, 2, 0, 1, 2};
  bool loop_node = false;
  for (const Sequence& y : oracle.optimal_set)
    for (Token t : y) loop_node |= (t == 3 || t == 4);
  const bool pass = out == cycle && !oracle.contains(out) && loop_node;
  return {"lookahead_cycle_trap", pass,
          "lookahead output " + format_sequence(out) + ", oracle argmax " +
              format_sequence(oracle.optimal_set.front()) +
              (loop_node ? " (enters the high-probability loop)" : " (no loop node!)")};
}

CheckResult check_depth_separation() {
  auto first = std::make_shared<TableDistribution>(fixtures::greedy_beats_lookahead_table());
  NextTokenPredictor n1(first), n2(first);
  DecoderSpec greedy;
  DecoderSpec deep;
  deep.K = 2;
  deep.T = 2;
  Sequence g = kt_lookahead(n1, greedy).output;
  Sequence d = kt_lookahead(n2, deep).output;
  OracleResult oracle = oracle_optimal(*first, 1);
  bool pass = g == Sequence{0, 0, 0, 0} && d == Sequence{1, 1, 1, 1} && oracle.contains(g) &&
              !oracle.contains(d);
  double g_greedy = g_score(*first, g, 1), g_deep = g_score(*first, d, 1);
  pass &= std::abs(g_greedy - 2.17) < 1e-12 && std::abs(g_deep - 1.60) < 1e-12;

  auto second =
      std::make_shared<TableDistribution>(fixtures::greedy_beats_lookahead_zero_one_table());
  NextTokenPredictor n3(second), n4(second);
  Sequence g2 = kt_lookahead(n3, greedy).output;
  Sequence d2 = kt_lookahead(n4, deep).output;
  OracleResult oracle2 = oracle_optimal(*second, 4);
  pass &= oracle2.contains(g2) && !oracle2.contains(d2);

  return {"lookahead_depth_separation", pass,
          "greedy " + format_sequence(g) + " (g=" + fmt(g_greedy) + ") in argmax; depth-2 " +
              format_sequence(d) + " (g=" + fmt(g_deep) + ") not; 0-1 case: greedy " +
              format_sequence(g2) + " in argmax, depth-2 " + format_sequence(d2) + " not"};
}

CheckResult check_commit_separation() {
  bool pass = true;
  std::ostringstream ev;
  struct Case {
    TableDistribution table;
    int N;
    const char* name;
  };
  Case cases[] = {{fixtures::long_commit_wins_table(), 1, "N<L"},
                  {fixtures::long_commit_wins_zero_one_table(), 4, "N=L"}};
  for (const Case& c : cases) {
    auto dist = std::make_shared<TableDistribution>(c.table);
    DecoderSpec short_commit, long_commit;
    short_commit.K = long_commit.K = 2;
    short_commit.T = 1;
    long_commit.T = 2;
    NextTokenPredictor n1(dist), n2(dist);
    Sequence a = kt_lookahead(n1, short_commit).output;
    Sequence b = kt_lookahead(n2, long_commit).output;
    OracleResult oracle = oracle_optimal(*dist, c.N);
    pass &= !oracle.contains(a) && oracle.contains(b);
    ev << c.name << ": T=1 -> " << format_sequence(a) << " (not argmax), T=2 -> "
       << format_sequence(b) << " (argmax); ";
  }

  // For K >= L - T1 and N = L, a longer-commit optimum implies the
  // shorter-commit decoder is optimal too.
  std::mt19937_64 rng(271828);
  int applicable = 0, violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = std::make_shared<TableDistribution>(random_table(rng, 2, 4));
    DecoderSpec t1, t2;
    t1.K = t2.K = 3;
    t1.T = 1;
    t2.T = 2;
    NextTokenPredictor n1(p), n2(p);
    Sequence y1 = kt_lookahead(n1, t1).output;
    Sequence y2 = kt_lookahead(n2, t2).output;
    OracleResult oracle = oracle_optimal(*p, 4);
    if (oracle.contains(y2)) {
      ++applicable;
      violations += oracle.contains(y1) ? 0 : 1;
    }
  }
  pass &= violations == 0 && applicable > 0;
  ev << "monotone side (K>=L-T, N=L): " << applicable << "/100 applicable, " << violations
     << " violations";
  return {"commit_length_separation", pass, ev.str()};
}

CheckResult check_sampling_consistency() {
  std::mt19937_64 rng(161803);
  bool pass = true;
  double final_gap_worst = 0.0, identity_worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int vocab = 2 + trial % 2;
    const int length = 3 + trial % 2;
    auto p = std::make_shared<TableDistribution>(random_table(rng, vocab, length));
    PerturbationSchedule schedule = PerturbationSchedule::geometric(31);
    DecoderSpec sampler;
    sampler.kind = DecoderKind::random_sample;
    double h = entropy(*p);
    double prev_gap = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 31; ++step) {
      NextTokenPredictor ntp = perturbed_predictor(p, schedule, step);
      TableDistribution p_dec = output_distribution(sampler, ntp);
      const double ce = cross_entropy(*p, p_dec);
      const double kl = kl_divergence(*p, p_dec);
      identity_worst = std::max(identity_worst, std::abs(ce - h - kl));
      const double gap = ce - h;
      pass &= gap <= prev_gap + 1e-12;
      prev_gap = gap;
      if (step == 30) final_gap_worst = std::max(final_gap_worst, gap);
    }
  }
  pass &= identity_worst <= 1e-10 && final_gap_worst <= 1e-6;
  return {"sampling_consistency", pass,
          "CE-H-KL identity error " + fmt(identity_worst) + "; final CE gap at eps=2^-30: " +
              fmt(final_gap_worst)};
}

CheckResult check_temperature_fixed_points() {
  std::mt19937_64 rng(662607);
  auto scaled_law = [](std::shared_ptr<const TableDistribution> p, double gamma) {
    DecoderSpec spec;
    spec.kind = DecoderKind::temp_scaled_sample;
    spec.gamma = gamma;
    NextTokenPredictor ntp(p);
    return output_distribution(spec, ntp);
  };
  auto p = std::make_shared<TableDistribution>(random_table(rng, 3, 3));
  const double kl_nondeg = kl_divergence(*p, scaled_law(p, 2.0));
  const double kl_identity = kl_divergence(*p, scaled_law(p, 1.0));
  auto uniform = std::make_shared<TableDistribution>(TableDistribution::uniform(Vocabulary(2), 3));
  double kl_uniform = 0.0;
  for (double gamma : {0.5, 2.0, 7.0})
    kl_uniform = std::max(kl_uniform, kl_divergence(*uniform, scaled_law(uniform, gamma)));
  const bool pass = kl_nondeg > 1e-6 && kl_identity <= 1e-12 && kl_uniform <= 1e-12;
  return {"temperature_fixed_points", pass,
          "KL(p||p^2) = " + fmt(kl_nondeg) + " (> 1e-6); KL at gamma=1: " + fmt(kl_identity) +
              "; uniform p, gamma in {0.5,2,7}: " + fmt(kl_uniform)};
}

CheckResult check_temperature_brackets() {
  std::mt19937_64 rng(141421);
  TableDistribution p = random_table(rng, 3, 3);
  const double uniform_ce = p.length() * std::log(static_cast<double>(p.vocab_size()));
  bool pass = true;
  std::ostringstream ev;
  double prev_exact = 0.0;
  for (double gamma : {0.25, 0.5, 2.0, 4.0, 8.0}) {
    TempBounds b = temp_bound_constants(p, gamma);
    pass &= b.lower - 1e-9 <= b.exact && b.exact <= b.upper + 1e-9;
    if (gamma > 1.0) {
      pass &= b.exact > prev_exact;  // grows linearly in gamma, C1 > 0
      prev_exact = b.exact;
    }
    ev << "g=" << fmt(gamma) << ": " << fmt(b.lower) << " <= " << fmt(b.exact)
       << " <= " << fmt(b.upper) << "; ";
  }
  TempBounds zero = temp_bound_constants(p, 0.0);
  pass &= std::abs(zero.exact - uniform_ce) <= 1e-9;
  ev << "gamma=0 exact " << fmt(zero.exact) << " vs L*log|V| " << fmt(uniform_ce);
  return {"temperature_brackets", pass, ev.str()};
}

}  // namespace

std::vector<CheckResult> verify_all() {
  std::vector<CheckResult> report;
  report.push_back(check_softmax_equivalence());
  report.push_back(check_query_lower_bound());
  report.push_back(check_cycle_trap());
  report.push_back(check_depth_separation());
  report.push_back(check_commit_separation());
  report.push_back(check_sampling_consistency());
  report.push_back(check_temperature_fixed_points());
  report.push_back(check_temperature_brackets());
  return report;
}

}  // namespace declab::experiments
