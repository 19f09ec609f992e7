// Command-line front end: decode, oracle, risk, sweep, verify, plot.
//
// Exit codes: 0 success, 1 validation error, 2 budget exceeded,
// 3 verification failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "declab/decoders.hpp"
#include "declab/distribution.hpp"
#include "declab/errors.hpp"
#include "declab/experiments.hpp"
#include "declab/io.hpp"
#include "declab/losses.hpp"
#include "declab/ntp.hpp"

namespace {

using declab::io::json;

constexpr const char* kVersion = "0.1.0";

json load_json(const std::string& path) {
  return json::parse(declab::io::read_text_file(path));
}

// --override a.b=value entries applied onto a config object. Values parse
// as JSON when possible, else as strings.
void apply_overrides(json& config, const std::vector<std::string>& overrides) {
  for (const std::string& entry : overrides) {
    auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw declab::ValidationError("override \"" + entry + "\" is not key=value");
    std::string pointer = "/" + entry.substr(0, eq);
    for (auto& c : pointer)
      if (c == '.') c = '/';
    json value;
    try {
      value = json::parse(entry.substr(eq + 1));
    } catch (const json::parse_error&) {
      value = entry.substr(eq + 1);
    }
    config[json::json_pointer(pointer)] = value;
  }
}

void reject_unknown_keys(const json& config, std::initializer_list<const char*> allowed) {
  if (!config.is_object()) return;
  for (const auto& [key, value] : config.items()) {
    bool known = false;
    for (const char* k : allowed) known |= key == k;
    if (!known) throw declab::ValidationError("unknown config key \"" + key + "\"");
  }
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    std::uint64_t seed) {
  json manifest{{"command", command},
                {"version", kVersion},
                {"seed", seed},
                {"config_hash", declab::io::config_hash(config)}};
  declab::io::write_text_file(out_dir + "/run_manifest.json", manifest.dump(2) + "\n");
}

std::string out_dir_of(const std::string& out_path) {
  std::filesystem::path p(out_path);
  std::filesystem::path dir = p.has_parent_path() ? p.parent_path() : ".";
  std::filesystem::create_directories(dir);
  return dir.string();
}

declab::experiments::SweepConfig sweep_config_from_json(const json& j) {
  reject_unknown_keys(j, {"alphas", "node_counts", "lengths", "gram_lookahead", "t_mode",
                          "trials", "master_seed", "budget", "workers"});
  declab::experiments::SweepConfig cfg;
  if (j.contains("alphas")) cfg.alphas = j["alphas"].get<std::vector<double>>();
  if (j.contains("node_counts")) cfg.node_counts = j["node_counts"].get<std::vector<int>>();
  if (j.contains("lengths")) cfg.lengths = j["lengths"].get<std::vector<int>>();
  if (j.contains("gram_lookahead"))
    cfg.gram_lookahead = j["gram_lookahead"].get<std::vector<int>>();
  if (j.contains("t_mode")) {
    const std::string mode = j["t_mode"].get<std::string>();
    if (mode == "one")
      cfg.t_mode = declab::experiments::SweepConfig::TMode::one;
    else if (mode == "k")
      cfg.t_mode = declab::experiments::SweepConfig::TMode::k;
    else
      throw declab::ValidationError("t_mode must be \"one\" or \"k\"");
  }
  if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
  if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("budget")) cfg.budget = j["budget"].get<std::size_t>();
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"decoding lab: exact decoding-risk experiments on small sequence distributions"};
  app.require_subcommand(1);

  std::string config_path, decoder_path, loss_path, out_path;
  std::uint64_t seed = 0;
  int workers = -1;
  std::vector<std::string> overrides;
  bool t_equals_k = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON (or CSV for plot) input file");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed, "RNG seed / sweep master seed");
    sub->add_option("--out", out_path, "output file or directory");
    sub->add_option("--override", overrides, "config override, key=value (repeatable)");
  };

  auto* decode = app.add_subcommand("decode", "run one decoder on one distribution");
  add_common(decode, true);
  decode->add_option("--decoder", decoder_path, "decoder spec JSON")->required();

  auto* oracle = app.add_subcommand("oracle", "brute-force argmax of the g-score");
  add_common(oracle, true);
  oracle->add_option("--loss", loss_path, "loss spec JSON")->required();

  auto* risk = app.add_subcommand("risk", "exact expected risk of a decoder");
  add_common(risk, true);
  risk->add_option("--decoder", decoder_path, "decoder spec JSON")->required();
  risk->add_option("--loss", loss_path, "loss spec JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "random Markov-chain simulation grid");
  add_common(sweep, false);
  sweep->add_option("--workers", workers, "worker threads (0 = hardware concurrency)");

  auto* verify = app.add_subcommand("verify", "numeric verification suite");
  add_common(verify, false);

  auto* plot = app.add_subcommand("plot", "figures from a sweep CSV");
  add_common(plot, true);
  plot->add_flag("--t-equals-k", t_equals_k, "label figures as the T=K family");

  CLI11_PARSE(app, argc, argv);

  auto emit = [&](const json& result) {
    const std::string text = result.dump(2) + "\n";
    if (out_path.empty()) {
      std::cout << text;
    } else {
      declab::io::write_text_file(out_path, text);
      std::cout << "wrote " << out_path << "\n";
    }
  };

  if (decode->parsed()) {
    json dist_json = load_json(config_path);
    apply_overrides(dist_json, overrides);
    reject_unknown_keys(dist_json,
                        {"type", "vocab_size", "L", "entries", "initial", "transitions", "inputs"});
    declab::ConditionalModel model = declab::io::model_from_json(dist_json);
    declab::DecoderSpec spec = declab::io::decoder_spec_from_json(load_json(decoder_path));
    json outputs = json::array();
    std::mt19937_64 rng(seed);
    for (const auto& input : model.inputs) {
      declab::NextTokenPredictor ntp(input.dist);
      json entry{{"input", input.id}};
      switch (spec.kind) {
        case declab::DecoderKind::kt_lookahead: {
          declab::DecodeResult r = declab::kt_lookahead(ntp, spec);
          entry["output"] = declab::format_sequence(r.output);
          entry["tie"] = r.tie_flag;
          break;
        }
        case declab::DecoderKind::beam_lookahead: {
          declab::DecodeResult r = declab::beam_lookahead(ntp, spec);
          entry["output"] = declab::format_sequence(r.output);
          entry["tie"] = r.tie_flag;
          break;
        }
        case declab::DecoderKind::random_sample:
          entry["output"] = declab::format_sequence(declab::random_sample(ntp, rng));
          break;
        case declab::DecoderKind::temp_scaled_sample:
          entry["output"] =
              declab::format_sequence(declab::temp_scaled_sample(ntp, rng, spec.gamma));
          break;
      }
      entry["queries"] = ntp.query_count();
      outputs.push_back(std::move(entry));
    }
    emit(json{{"decoder", declab::io::decoder_spec_to_json(spec)}, {"results", outputs}});
    if (!out_path.empty()) write_manifest(out_dir_of(out_path), "decode", dist_json, seed);
    return 0;
  }

  if (oracle->parsed()) {
    json dist_json = load_json(config_path);
    apply_overrides(dist_json, overrides);
    reject_unknown_keys(dist_json, {"type", "vocab_size", "L", "entries", "initial", "transitions"});
    auto dist = declab::io::distribution_from_json(dist_json);
    declab::LossSpec loss = declab::io::loss_spec_from_json(load_json(loss_path));
    loss.validate(dist->length());
    if (loss.kind != declab::LossKind::ngram_hamming)
      throw declab::ValidationError("the oracle command needs an n-gram Hamming loss");
    declab::OracleResult result =
        declab::oracle_optimal(*dist, loss.N, declab::default_budget(), true);
    const std::string csv = declab::io::oracle_to_csv(result);
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      declab::io::write_text_file(out_path, csv);
      std::cout << "wrote " << out_path << "\n";
      write_manifest(out_dir_of(out_path), "oracle", dist_json, seed);
    }
    return 0;
  }

  if (risk->parsed()) {
    json model_json = load_json(config_path);
    apply_overrides(model_json, overrides);
    reject_unknown_keys(model_json,
                        {"type", "vocab_size", "L", "entries", "initial", "transitions", "inputs"});
    declab::ConditionalModel model = declab::io::model_from_json(model_json);
    declab::DecoderSpec spec = declab::io::decoder_spec_from_json(load_json(decoder_path));
    declab::LossSpec loss = declab::io::loss_spec_from_json(load_json(loss_path));
    declab::RiskReport report = declab::expected_risk(model, spec, loss);
    emit(declab::io::risk_report_to_json(report));
    if (!out_path.empty()) write_manifest(out_dir_of(out_path), "risk", model_json, seed);
    return 0;
  }

  if (sweep->parsed()) {
    json config = config_path.empty() ? json::object() : load_json(config_path);
    apply_overrides(config, overrides);
    declab::experiments::SweepConfig cfg = sweep_config_from_json(config);
    if (seed != 0) cfg.master_seed = seed;
    if (workers >= 0) cfg.workers = workers;
    declab::experiments::SweepResult result = declab::experiments::run_sweep(cfg);
    const std::string csv = result.to_csv();
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      const std::string dir = out_dir_of(out_path + "/sweep.csv");
      declab::io::write_text_file(out_path + "/sweep.csv", csv);
      write_manifest(dir, "sweep", config, cfg.master_seed);
      std::cout << "wrote " << out_path << "/sweep.csv (" << result.rows.size() << " rows, "
                << result.skipped_cells << " cells skipped for budget)\n";
    }
    return 0;
  }

  if (verify->parsed()) {
    bool all_pass = true;
    json report = json::array();
    for (const declab::experiments::CheckResult& check : declab::experiments::verify_all()) {
      all_pass &= check.pass;
      std::cout << (check.pass ? "PASS" : "FAIL") << "  " << check.id << ": " << check.evidence
                << "\n";
      report.push_back(json{{"id", check.id}, {"pass", check.pass}, {"evidence", check.evidence}});
    }
    if (!out_path.empty()) {
      declab::io::write_text_file(out_path, report.dump(2) + "\n");
      write_manifest(out_dir_of(out_path), "verify", json::object(), seed);
    }
    return all_pass ? 0 : 3;
  }

  if (plot->parsed()) {
    declab::experiments::SweepResult result =
        declab::experiments::SweepResult::from_csv(declab::io::read_text_file(config_path));
    const std::string dir = out_path.empty() ? "." : out_path;
    out_dir_of(dir + "/fig.csv");
    std::vector<std::string> written = declab::experiments::emit_plots(result, dir, t_equals_k);
    if (written.empty()) {
      std::cout << "no rows to plot\n";
    } else {
      for (const std::string& path : written) std::cout << "wrote " << path << "\n";
      write_manifest(dir, "plot", json{{"source", config_path}}, seed);
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const declab::BudgetExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const declab::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
