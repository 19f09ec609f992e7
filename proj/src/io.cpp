#include "declab/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "declab/errors.hpp"

namespace declab::io {

namespace {

double probability_from(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return std::stod(v.get<std::string>());
  throw ValidationError("probability must be a number or decimal string");
}

std::vector<double> vector_from(const json& arr) {
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(probability_from(v));
  return out;
}

}  // namespace

std::shared_ptr<SequenceDistribution> distribution_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  const int L = j.at("L").get<int>();
  if (type == "table") {
    const int vocab = j.at("vocab_size").get<int>();
    std::map<Sequence, double> entries;
    for (const auto& [key, value] : j.at("entries").items())
      entries[parse_sequence(key, vocab)] = probability_from(value);
    return std::make_shared<TableDistribution>(Vocabulary(vocab), L, std::move(entries), 1e-9);
  }
  if (type == "markov") {
    std::vector<std::vector<double>> trans;
    for (const auto& row : j.at("transitions")) trans.push_back(vector_from(row));
    return std::make_shared<MarkovChainDistribution>(vector_from(j.at("initial")),
                                                     std::move(trans), L);
  }
  throw ValidationError("unknown distribution type \"" + type + "\"");
}

json distribution_to_json(const SequenceDistribution& dist) {
  json j;
  j["L"] = dist.length();
  if (const auto* t = dynamic_cast<const TableDistribution*>(&dist)) {
    j["type"] = "table";
    j["vocab_size"] = t->vocab_size();
    json entries = json::object();
    for (const auto& [y, p] : t->entries()) entries[format_sequence(y)] = p;
    j["entries"] = std::move(entries);
    return j;
  }
  if (const auto* m = dynamic_cast<const MarkovChainDistribution*>(&dist)) {
    j["type"] = "markov";
    j["vocab_size"] = m->vocab_size();
    j["initial"] = m->initial();
    j["transitions"] = m->transitions();
    return j;
  }
  throw ValidationError("unserializable distribution type");
}

ConditionalModel model_from_json(const json& j) {
  ConditionalModel model;
  if (j.contains("inputs")) {
    for (const auto& in : j.at("inputs"))
      model.inputs.push_back({in.value("id", std::string("input")),
                              probability_from(in.at("weight")),
                              distribution_from_json(in.at("distribution"))});
  } else {
    model.inputs.push_back({"input", 1.0, distribution_from_json(j)});
  }
  model.validate();
  return model;
}

DecoderSpec decoder_spec_from_json(const json& j) {
  DecoderSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "kt_lookahead")
    spec.kind = DecoderKind::kt_lookahead;
  else if (kind == "beam_lookahead")
    spec.kind = DecoderKind::beam_lookahead;
  else if (kind == "random_sample")
    spec.kind = DecoderKind::random_sample;
  else if (kind == "temp_scaled_sample")
    spec.kind = DecoderKind::temp_scaled_sample;
  else
    throw ValidationError("unknown decoder kind \"" + kind + "\"");
  spec.K = j.value("K", 1);
  spec.T = j.value("T", 1);
  spec.B = j.value("B", 1);
  if (j.contains("gamma")) {
    const auto& g = j.at("gamma");
    if (g.is_string() && (g == "inf" || g == "infinity"))
      spec.gamma = std::numeric_limits<double>::infinity();
    else
      spec.gamma = probability_from(g);
  }
  const std::string policy = j.value("tie_policy", std::string("first_seen"));
  if (policy == "first_seen")
    spec.tie_policy = TiePolicy::first_seen;
  else if (policy == "error_on_tie")
    spec.tie_policy = TiePolicy::error_on_tie;
  else
    throw ValidationError("unknown tie policy \"" + policy + "\"");
  spec.tie_tolerance = j.value("tie_tolerance", 1e-12);
  return spec;
}

json decoder_spec_to_json(const DecoderSpec& spec) {
  json j;
  switch (spec.kind) {
    case DecoderKind::kt_lookahead: j["kind"] = "kt_lookahead"; break;
    case DecoderKind::beam_lookahead: j["kind"] = "beam_lookahead"; break;
    case DecoderKind::random_sample: j["kind"] = "random_sample"; break;
    case DecoderKind::temp_scaled_sample: j["kind"] = "temp_scaled_sample"; break;
  }
  j["K"] = spec.K;
  j["T"] = spec.T;
  j["B"] = spec.B;
  if (std::isinf(spec.gamma))
    j["gamma"] = "inf";
  else
    j["gamma"] = spec.gamma;
  j["tie_policy"] = spec.tie_policy == TiePolicy::first_seen ? "first_seen" : "error_on_tie";
  return j;
}

LossSpec loss_spec_from_json(const json& j) {
  LossSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ngram_hamming")
    spec.kind = LossKind::ngram_hamming;
  else if (kind == "cross_entropy")
    spec.kind = LossKind::cross_entropy;
  else
    throw ValidationError("unknown loss kind \"" + kind + "\"");
  spec.N = j.value("N", 1);
  return spec;
}

json risk_report_to_json(const RiskReport& report) {
  json j;
  j["risk"] = std::isinf(report.risk) ? json("inf") : json(report.risk);
  j["optimal_risk"] = report.optimal_risk;
  j["is_optimal"] = report.is_optimal;
  j["tie_flag"] = report.tie_flag;
  json set = json::array();
  for (const auto& y : report.optimal_set) set.push_back(format_sequence(y));
  j["optimal_set"] = std::move(set);
  if (report.decoder_output) {
    json out = json::object();
    for (const auto& [y, p] : report.decoder_output->entries())
      if (p > 0.0) out[format_sequence(y)] = p;
    j["decoder_output"] = std::move(out);
  }
  return j;
}

std::string oracle_to_csv(const OracleResult& result) {
  std::ostringstream os;
  os << "sequence,g,rounded_g,is_optimal\n";
  char buf[64];
  for (const auto& [y, g] : result.all) {
    std::snprintf(buf, sizeof buf, "%.17g", g);
    os << format_sequence(y) << ',' << buf << ',';
    std::snprintf(buf, sizeof buf, "%.15f", static_cast<double>(detail::round15(g)) / 1e15);
    os << buf << ',' << (result.contains(y) ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string read_text_file(const std::string& path) {
  if (std::filesystem::is_directory(path))
    throw ValidationError("cannot read " + path + ": is a directory");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::uint64_t config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace declab::io
