#pragma once

#include <json.hpp>

#include "triagekit/compression.hpp"
#include "triagekit/dataset.hpp"
#include "triagekit/experts.hpp"
#include "triagekit/metrics.hpp"
#include "triagekit/ontology.hpp"
#include "triagekit/pipeline.hpp"
#include "triagekit/relevance.hpp"
#include "triagekit/routing.hpp"

namespace triagekit {

using json = nlohmann::json;

// RFC3339-ish UTC timestamp or integer epoch milliseconds.
std::int64_t parse_timestamp_ms(const json& value);
std::string format_timestamp_ms(std::int64_t ms);

void to_json(json& j, const RawLog& v);
void from_json(const json& j, RawLog& v);
void to_json(json& j, const NormalizedAlert& v);
void from_json(const json& j, NormalizedAlert& v);
void to_json(json& j, const Label& v);
void from_json(const json& j, Label& v);
void to_json(json& j, const ReasoningStep& v);
void from_json(const json& j, ReasoningStep& v);
void to_json(json& j, const ReasoningChain& v);
void from_json(const json& j, ReasoningChain& v);
void to_json(json& j, const RelevanceVector& v);
void from_json(const json& j, RelevanceVector& v);
void to_json(json& j, const FidelityReport& v);
void from_json(const json& j, FidelityReport& v);
void to_json(json& j, const CompressedChain& v);
void from_json(const json& j, CompressedChain& v);
void to_json(json& j, const TrainingTuple& v);
void from_json(const json& j, TrainingTuple& v);
void to_json(json& j, const DomainPartition& v);
void from_json(const json& j, DomainPartition& v);
void to_json(json& j, const SplitResult& v);
void to_json(json& j, const SyntheticRecord& v);
void from_json(const json& j, SyntheticRecord& v);
void to_json(json& j, const RoutingDecision& v);
void to_json(json& j, const ExpertOutput& v);
void from_json(const json& j, ExpertOutput& v);
void to_json(json& j, const TriageRecord& v);
void from_json(const json& j, TriageRecord& v);
void to_json(json& j, const MetricsReport& v);

// Config tree parsing (missing keys fall back to defaults).
void from_json(const json& j, NormalizeSchema& v);
void from_json(const json& j, Taxonomy& v);
void from_json(const json& j, LabelMapping& v);
void from_json(const json& j, ScorerSpec& v);
void from_json(const json& j, CompressionConfig& v);
void to_json(json& j, const CompressionConfig& v);
void from_json(const json& j, FidelityEvaluatorSpec& v);
void from_json(const json& j, KeywordRouteRules& v);
void from_json(const json& j, RouterConfig& v);
void from_json(const json& j, ExpertSpec& v);
void from_json(const json& j, ExpertRegistry& v);
void from_json(const json& j, SplitSpec& v);
void from_json(const json& j, SyntheticSpec& v);
void from_json(const json& j, PerturbationSpec& v);
void from_json(const json& j, PartitionConfig& v);
void from_json(const json& j, PipelineConfig& v);

// Wrapped stream line {"raw": ..., "truth"?: ..., "chain"?: ...} or a bare
// RawLog object.
StreamAlert parse_stream_alert(const json& j);
json dump_stream_alert(const StreamAlert& a);

std::string cfg_hash(const CompressionConfig& cfg);

}  // namespace triagekit
