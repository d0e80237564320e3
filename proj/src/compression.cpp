#include "triagekit/compression.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include <json.hpp>

#include "triagekit/errors.hpp"
#include "triagekit/serialization.hpp"
#include "triagekit/subprocess.hpp"

namespace triagekit {

void CompressionConfig::validate() const {
    if (delta_token < 1) throw ConfigError("delta_token must be >= 1");
    if (epsilon_smooth <= 0.0) throw ConfigError("epsilon_smooth must be positive");
    if (epsilon_fidelity < 0.0 || epsilon_fidelity > 1.0)
        throw ConfigError("epsilon_fidelity must be in [0,1]");
    if (repair_rounds < 0) throw ConfigError("repair_rounds must be non-negative");
}

int CompressedChain::total_len() const {
    int n = 0;
    for (const auto& s : steps) n += s.token_len;
    return n;
}

namespace {

double subset_density(const ReasoningChain& chain, const RelevanceVector& rel,
                      const std::vector<int>& selected, double eps) {
    return information_density_subset(chain, rel, selected, eps);
}

CompressedChain finish(const ReasoningChain& chain, const RelevanceVector& rel,
                       std::vector<int> selected, double eps) {
    std::sort(selected.begin(), selected.end());
    CompressedChain out;
    out.selected = std::move(selected);
    for (int idx : out.selected) out.steps.push_back(chain.steps[static_cast<std::size_t>(idx)]);
    out.density = subset_density(chain, rel, out.selected, eps);
    return out;
}

FidelityReport coverage_fidelity(const ReasoningChain& full, const std::vector<int>& selected,
                                 const RelevanceVector& rel, double epsilon_fidelity) {
    double total = 0.0;
    for (double s : rel.scores) total += s;
    FidelityReport report;
    if (total <= 0.0) {
        report.p_full = 0.0;
        report.p_compressed = 0.0;
    } else {
        double covered = 0.0;
        for (int idx : selected) covered += rel.scores.at(static_cast<std::size_t>(idx));
        report.p_full = 1.0;
        report.p_compressed = covered / total;
    }
    report.satisfied = report.p_compressed >= report.p_full - epsilon_fidelity;
    return report;
}

FidelityReport external_fidelity(const NormalizedAlert& context, const Label& label,
                                 const ReasoningChain& full, const std::vector<int>& selected,
                                 const FidelityEvaluatorSpec& fid, double epsilon_fidelity) {
    static std::map<std::string, std::unique_ptr<LineProtocolClient>> clients;
    static std::mutex clients_mutex;
    LineProtocolClient* client = nullptr;
    {
        std::lock_guard<std::mutex> lock(clients_mutex);
        auto& slot = clients[fid.command];
        if (!slot) slot = std::make_unique<LineProtocolClient>(fid.command, fid.timeout_s);
        client = slot.get();
    }
    json request{{"id", context.alert_id}, {"context", context}, {"label", label}};
    json steps = json::array();
    for (const auto& s : full.steps) steps.push_back(s.text);
    request["steps"] = steps;
    request["selected"] = selected;

    json response = json::parse(client->round_trip(request.dump(), context.alert_id));
    FidelityReport report;
    report.p_full = response.value("p_full", 1.0);
    report.p_compressed = response.value("p_compressed", 0.0);
    if (!std::isfinite(report.p_full) || !std::isfinite(report.p_compressed) ||
        report.p_full < 0.0 || report.p_full > 1.0 || report.p_compressed < 0.0 ||
        report.p_compressed > 1.0)
        throw ExternalScorerFailure("fidelity response probabilities out of range");
    report.satisfied = report.p_compressed >= report.p_full - epsilon_fidelity;
    return report;
}

FidelityReport run_fidelity(const NormalizedAlert& context, const Label& label,
                            const ReasoningChain& full, const std::vector<int>& selected,
                            const RelevanceVector& rel, const FidelityEvaluatorSpec& fid,
                            double epsilon_fidelity) {
    if (fid.kind == FidelityKind::Coverage)
        return coverage_fidelity(full, selected, rel, epsilon_fidelity);
    return external_fidelity(context, label, full, selected, fid, epsilon_fidelity);
}

}  // namespace

CompressedChain compress(const ReasoningChain& chain, const RelevanceVector& rel,
                         const NormalizedAlert& context, const Label& label,
                         const CompressionConfig& cfg, const FidelityEvaluatorSpec& fid) {
    cfg.validate();
    if (rel.scores.size() != chain.steps.size())
        throw LengthMismatch("relevance vector has " + std::to_string(rel.scores.size()) +
                             " scores for a " + std::to_string(chain.steps.size()) + "-step chain");

    const std::size_t n = chain.steps.size();
    const double eps = cfg.epsilon_smooth;

    std::vector<bool> visited(n, false);
    std::vector<int> selected;
    int budget_left = cfg.delta_token;
    double current_rel = 0.0;
    double current_len = 0.0;

    // Greedy pass: highest per-step density first, ties to the lowest index.
    while (budget_left > 0) {
        int best = -1;
        double best_density = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (visited[j]) continue;
            double d = rel.scores[j] / (chain.steps[j].token_len + eps);
            if (d > best_density) {
                best_density = d;
                best = static_cast<int>(j);
            }
        }
        if (best < 0) break;  // all steps visited
        const int len = chain.steps[static_cast<std::size_t>(best)].token_len;
        if (len > budget_left) {
            if (cfg.skip_oversized) {
                visited[static_cast<std::size_t>(best)] = true;
                continue;
            }
            break;
        }
        if (cfg.variant == GreedyVariant::DensityImproving && !selected.empty()) {
            double now = current_rel / (current_len + eps);
            double next = (current_rel + rel.scores[static_cast<std::size_t>(best)]) /
                          (current_len + len + eps);
            if (next < now) break;
        }
        visited[static_cast<std::size_t>(best)] = true;
        selected.push_back(best);
        budget_left -= len;
        current_rel += rel.scores[static_cast<std::size_t>(best)];
        current_len += len;
    }

    CompressedChain out = finish(chain, rel, std::move(selected), eps);
    out.fidelity = run_fidelity(context, label, chain, out.selected, rel, fid, cfg.epsilon_fidelity);

    // Fidelity repair: add the highest-relevance unused step that still fits.
    int rounds = std::min<int>(cfg.repair_rounds, static_cast<int>(n));
    for (int round = 0; round < rounds && !out.fidelity.satisfied; ++round) {
        int best = -1;
        double best_rel = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::find(out.selected.begin(), out.selected.end(), static_cast<int>(j)) !=
                out.selected.end())
                continue;
            if (chain.steps[j].token_len > budget_left) continue;
            if (rel.scores[j] > best_rel) {
                best_rel = rel.scores[j];
                best = static_cast<int>(j);
            }
        }
        if (best < 0) break;  // nothing fits
        budget_left -= chain.steps[static_cast<std::size_t>(best)].token_len;
        std::vector<int> grown = out.selected;
        grown.push_back(best);
        out = finish(chain, rel, std::move(grown), eps);
        out.fidelity = run_fidelity(context, label, chain, out.selected, rel, fid, cfg.epsilon_fidelity);
        out.repair_applied = true;
    }
    return out;
}

CompressedChain oracle_optimal(const ReasoningChain& chain, const RelevanceVector& rel,
                               const CompressionConfig& cfg) {
    cfg.validate();
    if (rel.scores.size() != chain.steps.size())
        throw LengthMismatch("relevance vector does not match chain length");
    const std::size_t n = chain.steps.size();
    if (n > 20) throw ChainTooLong("oracle enumeration is guarded to chains of <= 20 steps");

    const double eps = cfg.epsilon_smooth;
    std::uint32_t best_mask = 0;
    double best_density = 0.0;  // empty subset

    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        int len = 0;
        double score = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (1u << j)) {
                len += chain.steps[j].token_len;
                score += rel.scores[j];
            }
        }
        if (len > cfg.delta_token) continue;
        double d = mask == 0 ? 0.0 : score / (len + eps);
        if (d > best_density) {
            best_density = d;
            best_mask = mask;
        } else if (d == best_density && mask != best_mask) {
            // equal density: keep the lexicographically smaller index set,
            // walking both sets in ascending index order ({} < {0} < {0,1} < {1})
            auto next_bit = [&](std::uint32_t m, int from) {
                for (int j = from + 1; j < static_cast<int>(n); ++j)
                    if (m & (1u << j)) return j;
                return static_cast<int>(n);  // exhausted sentinel
            };
            int ia = -1, ib = -1;
            for (;;) {
                ia = next_bit(best_mask, ia);
                ib = next_bit(mask, ib);
                if (ia == static_cast<int>(n) && ib == static_cast<int>(n)) break;
                if (ib == static_cast<int>(n)) { best_mask = mask; break; }  // challenger is a prefix
                if (ia == static_cast<int>(n)) break;                        // incumbent is a prefix
                if (ib < ia) { best_mask = mask; break; }
                if (ia < ib) break;
            }
        }
    }

    std::vector<int> selected;
    for (std::size_t j = 0; j < n; ++j)
        if (best_mask & (1u << j)) selected.push_back(static_cast<int>(j));
    CompressedChain out = finish(chain, rel, std::move(selected), eps);
    out.fidelity = coverage_fidelity(chain, out.selected, rel, cfg.epsilon_fidelity);
    return out;
}

FidelityReport check_fidelity(const NormalizedAlert& context, const Label& label,
                              const ReasoningChain& full, const CompressedChain& sub,
                              const RelevanceVector& rel, const FidelityEvaluatorSpec& fid,
                              double epsilon_fidelity) {
    return run_fidelity(context, label, full, sub.selected, rel, fid, epsilon_fidelity);
}

}  // namespace triagekit
