#pragma once

/**
 * JSON configs and CSV/JSON outputs. Distribution files look like
 *   {"type":"table","vocab_size":3,"L":4,"entries":{"0000":0.28,...}}
 *   {"type":"markov","L":6,"initial":[...],"transitions":[[...],...]}
 * with probabilities given as doubles or decimal strings.
 */

#include <memory>
#include <string>

#include <json.hpp>

#include "declab/decoders.hpp"
#include "declab/distribution.hpp"
#include "declab/losses.hpp"

namespace declab::io {

using json = nlohmann::json;

std::shared_ptr<SequenceDistribution> distribution_from_json(const json& j);
json distribution_to_json(const SequenceDistribution& dist);

/// Either a bare distribution (single input, weight 1) or
/// {"inputs":[{"id","weight","distribution":{...}}, ...]}.
ConditionalModel model_from_json(const json& j);

DecoderSpec decoder_spec_from_json(const json& j);
json decoder_spec_to_json(const DecoderSpec& spec);

LossSpec loss_spec_from_json(const json& j);

json risk_report_to_json(const RiskReport& report);

/// CSV with header sequence,g,rounded_g,is_optimal (requires keep_all).
std::string oracle_to_csv(const OracleResult& result);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// FNV-1a of the canonical (dumped) config, for run manifests.
std::uint64_t config_hash(const json& j);

}  // namespace declab::io
