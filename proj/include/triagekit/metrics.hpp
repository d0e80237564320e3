#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triagekit/ontology.hpp"

namespace triagekit {

struct MetricsReport {
    double acc_risk = 0.0;    // exact risk-level match rate
    double acc_threat = 0.0;  // exact (category, subtype) match rate
    double r_high = 0.0;      // recall of truth High/Critical as High/Critical
    double fpr = 0.0;         // truth-Low predicted Medium/High/Critical
    double l_avg_s = 0.0;
    std::optional<double> token_cost_rel;  // mean tokens / baseline mean
    int n = 0;
    // rows = truth risk, cols = predicted risk; row sums = class supports
    std::array<std::array<int, 4>, 4> risk_confusion{};
};

// Minimal slice of a TriageRecord needed for scoring.
struct EvalRecord {
    std::string alert_id;
    Label predicted;
    double latency_s = 0.0;
    int tokens = 0;
};

// Truth ids must cover every record id (IdMismatch otherwise). Records are
// scored in id order, so any permutation of the input yields an identical
// report.
MetricsReport evaluate(const std::vector<EvalRecord>& records,
                       const std::map<std::string, Label>& truth,
                       std::optional<double> baseline_tokens = std::nullopt);

enum class PerturbationKind { TruncateFields, DropCritical, CorruptTokens };

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::TruncateFields;
    double p = 0.0;   // truncate_fields / corrupt_tokens
    int k = 0;        // drop_critical
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr const char* kCorruptionToken = "GARBLE";

// Deterministic in (seed, stream position); p = 0 or k = 0 is the identity.
// drop_critical stamps the degraded marker once three or more critical
// fields were removed.
RawLog perturb_one(const RawLog& raw, const PerturbationSpec& spec, const NormalizeSchema& schema,
                   std::uint64_t stream_index);

std::vector<RawLog> perturb(const std::vector<RawLog>& alerts, const PerturbationSpec& spec,
                            const NormalizeSchema& schema);

}  // namespace triagekit
