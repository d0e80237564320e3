#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "triagekit/ontology.hpp"
#include "triagekit/routing.hpp"

namespace triagekit {

enum class ExpertKind { MockOracle, MockNoisy, Fixture, External };

struct ExpertOutput {
    std::vector<std::string> reasoning;  // 1-5 bullets
    Label label;
    double confidence = 0.0;
};

struct ExpertSpec {
    std::string expert_id;
    std::optional<Category> domain;  // nullopt = fallback (multi-domain)
    ExpertKind kind = ExpertKind::MockOracle;
    double noise_rate = 0.0;         // mock_noisy
    std::uint64_t seed = 0;          // mock_noisy
    std::map<std::string, ExpertOutput> fixtures;  // fixture kind: alert id -> output
    std::string command;             // external kind
    double timeout_s = 10.0;
    std::optional<double> simulated_latency_s;
};

// One expert per domain plus exactly one fallback.
struct ExpertRegistry {
    std::map<Category, ExpertSpec> domain_experts;
    ExpertSpec fallback;

    void validate() const;
    const ExpertSpec* find(const std::string& expert_id) const;
    std::map<Category, std::string> domain_ids() const;
};

// Registry of oracle mocks, one per category plus an oracle fallback.
ExpertRegistry mock_oracle_registry();

class ExpertPool;

// Dispatch one alert to one expert. Mock kinds are pure given the per-alert
// derived seed; external experts go through the shared line-protocol pool.
ExpertOutput infer(const NormalizedAlert& alert, const ExpertSpec& expert,
                   const Taxonomy& taxonomy, ExpertPool* pool = nullptr);

// Shared child processes for external experts, keyed by command.
class ExpertPool {
public:
    ExpertPool();
    ~ExpertPool();
    LineProtocolClient& client_for(const std::string& command, double timeout_s);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct Timings {
    double route_s = 0.0;
    double expert_s = 0.0;

    double total_s() const { return route_s + expert_s; }
};

// Canonical SOAR document: sorted keys, fixed field set, byte-stable across
// re-renders of identical inputs.
nlohmann::json render_soar(const ExpertOutput& output, const RoutingDecision& decision,
                           const std::string& alert_id, const Timings& timings);

}  // namespace triagekit
