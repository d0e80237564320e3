#pragma once

#include <optional>
#include <string>
#include <vector>

#include "triagekit/relevance.hpp"

namespace triagekit {

enum class GreedyVariant {
    AsWritten,         // fill the budget in density order, break at the first misfit
    DensityImproving,  // additionally stop before any addition that lowers total ID
};

struct CompressionConfig {
    int delta_token = 40;          // token budget, >= 1
    double epsilon_smooth = 1.0;   // density denominator smoothing
    double epsilon_fidelity = 0.05;
    GreedyVariant variant = GreedyVariant::AsWritten;
    bool skip_oversized = false;   // skip a non-fitting candidate instead of stopping
    int repair_rounds = 1;

    void validate() const;  // throws ConfigError
};

struct FidelityReport {
    double p_full = 1.0;
    double p_compressed = 1.0;
    bool satisfied = true;
};

enum class FidelityKind { Coverage, External };

struct FidelityEvaluatorSpec {
    FidelityKind kind = FidelityKind::Coverage;
    std::string command;  // external kind
    double timeout_s = 10.0;
};

struct CompressedChain {
    std::vector<int> selected;          // original indices, strictly increasing
    std::vector<ReasoningStep> steps;   // the selected steps, original order
    double density = 0.0;
    FidelityReport fidelity;
    bool repair_applied = false;

    int total_len() const;
};

// Greedy density maximization under the token budget, then up to
// repair_rounds fidelity repairs (add the highest-relevance unused step
// that fits, ties to the lowest index).
CompressedChain compress(const ReasoningChain& chain, const RelevanceVector& rel,
                         const NormalizedAlert& context, const Label& label,
                         const CompressionConfig& cfg, const FidelityEvaluatorSpec& fid);

// Exhaustive enumeration over all subsets within budget. ID ties go to the
// lexicographically smallest index set. Guarded to chains of <= 20 steps.
CompressedChain oracle_optimal(const ReasoningChain& chain, const RelevanceVector& rel,
                               const CompressionConfig& cfg);

// Coverage evaluator: P(y|r) := rel mass of r / rel mass of the full chain,
// with P := 0 when the full chain carries zero relevance.
FidelityReport check_fidelity(const NormalizedAlert& context, const Label& label,
                              const ReasoningChain& full, const CompressedChain& sub,
                              const RelevanceVector& rel, const FidelityEvaluatorSpec& fid,
                              double epsilon_fidelity);

}  // namespace triagekit
