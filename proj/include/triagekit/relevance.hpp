#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triagekit/ontology.hpp"

namespace triagekit {

struct ReasoningStep {
    std::string text;
    int token_len = 0;  // whitespace token count of text

    bool operator==(const ReasoningStep&) const = default;
};

ReasoningStep make_step(std::string text);

struct ReasoningChain {
    std::vector<ReasoningStep> steps;

    int total_len() const;
    bool operator==(const ReasoningChain&) const = default;
};

ReasoningChain make_chain(const std::vector<std::string>& texts);

struct RelevanceVector {
    std::vector<double> scores;  // one per step, finite, >= 0
    std::string scorer_id;
    std::optional<std::string> aggregation;  // external scorer metadata, audit only
};

enum class ScorerKind { Keyword, Fixture, External };

struct ScorerSpec {
    ScorerKind kind = ScorerKind::Keyword;
    std::map<std::string, double> keyword_weights;          // keyword kind
    std::map<std::string, std::vector<double>> fixtures;    // fixture kind: chain id -> scores
    std::string fixture_file;                               // optional, merged into fixtures on load
    std::string command;                                    // external kind: shell command
    double timeout_s = 10.0;
};

ScorerSpec default_keyword_scorer();

// One finite non-negative score per step. Keyword: sum of configured weights
// over the distinct normalized words of the step. Fixture: replay by
// context.alert_id. External: line-delimited JSON over the child's stdio.
RelevanceVector score_chain(const ReasoningChain& chain, const NormalizedAlert& context,
                            const Label& label, const ScorerSpec& scorer);

// ID(r) = sum(scores) / (sum(token_len) + epsilon). Empty selection -> 0.
double information_density(std::span<const int> token_lens, std::span<const double> scores,
                           double epsilon_smooth);

// Density of a subset of chain steps given the full-chain relevance vector.
double information_density_subset(const ReasoningChain& chain, const RelevanceVector& rel,
                                  std::span<const int> selected, double epsilon_smooth);

}  // namespace triagekit
