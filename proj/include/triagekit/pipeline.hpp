#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "triagekit/dataset.hpp"
#include "triagekit/experts.hpp"
#include "triagekit/metrics.hpp"
#include "triagekit/routing.hpp"

namespace triagekit {

struct Budgets {
    double delta_t_s = 3.0;  // per-alert latency budget, > 0
    int delta_token = 40;
};

struct PipelineConfig {
    NormalizeSchema schema = default_schema();
    LabelMapping label_table;
    Taxonomy taxonomy = default_taxonomy();
    RouterConfig router;
    ExpertRegistry experts = mock_oracle_registry();
    CompressionConfig compression;      // tuple-building mode
    ScorerSpec scorer = default_keyword_scorer();
    FidelityEvaluatorSpec fidelity;
    Budgets budgets;
    std::optional<double> arrival_rate;  // alerts/second, simulation only
    std::uint64_t seed = 0;
    int jobs = 1;
    int in_flight_window = 64;

    void validate() const;
};

// One input alert plus whatever evaluation data rides along with it.
struct StreamAlert {
    RawLog raw;
    std::optional<Label> truth;
    std::optional<ReasoningChain> chain;
};

struct TriageRecord {
    std::int64_t seq = 0;  // 1-based ingest order
    std::string alert_id;
    std::string expert_id;  // the expert that actually produced the verdict
    nlohmann::json soar;
    bool budget_ok = true;
    bool degraded_input = false;
    std::map<std::string, double> wall_times;
    std::optional<Label> truth;  // passthrough for downstream evaluation
};

struct StreamResult {
    std::vector<TriageRecord> records;     // ordered by seq
    std::optional<MetricsReport> metrics;  // present when any alert carried truth
};

// Shared backends behind thread-safe facades; reused across alerts.
class PipelineContext {
public:
    explicit PipelineContext(const PipelineConfig& cfg);

    const PipelineConfig& cfg;
    Router router;
    ExpertPool expert_pool;
};

// normalize -> route -> infer -> render. Never throws on bad input; every
// failure collapses into a degraded record.
TriageRecord triage(const StreamAlert& alert, PipelineContext& ctx, std::int64_t seq);

// Processes every alert (conservation: one record per input), optionally in
// parallel; record contents do not depend on the interleaving.
StreamResult run_stream(const std::vector<StreamAlert>& alerts, const PipelineConfig& cfg);

}  // namespace triagekit
