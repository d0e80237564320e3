#include "triagekit/experts.hpp"

#include <cmath>
#include <mutex>

#include "triagekit/errors.hpp"
#include "triagekit/rng.hpp"
#include "triagekit/serialization.hpp"
#include "triagekit/subprocess.hpp"
#include "triagekit/text.hpp"

namespace triagekit {

void ExpertRegistry::validate() const {
    if (fallback.expert_id.empty()) throw ConfigError("registry needs a fallback expert");
    if (fallback.domain) throw ConfigError("the fallback expert must not claim a domain");
    for (Category c : kCategories) {
        auto it = domain_experts.find(c);
        if (it == domain_experts.end() || it->second.expert_id.empty())
            throw ConfigError("registry is missing an expert for " + to_string(c));
    }
}

const ExpertSpec* ExpertRegistry::find(const std::string& expert_id) const {
    if (fallback.expert_id == expert_id) return &fallback;
    for (const auto& [cat, spec] : domain_experts)
        if (spec.expert_id == expert_id) return &spec;
    return nullptr;
}

std::map<Category, std::string> ExpertRegistry::domain_ids() const {
    std::map<Category, std::string> out;
    for (const auto& [cat, spec] : domain_experts) out[cat] = spec.expert_id;
    return out;
}

ExpertRegistry mock_oracle_registry() {
    ExpertRegistry registry;
    for (Category c : kCategories) {
        ExpertSpec spec;
        spec.expert_id = "expert_" + to_lower(to_string(c));
        spec.domain = c;
        spec.kind = ExpertKind::MockOracle;
        registry.domain_experts[c] = std::move(spec);
    }
    registry.fallback.expert_id = "fallback";
    registry.fallback.kind = ExpertKind::MockOracle;
    return registry;
}

struct ExpertPool::Impl {
    std::map<std::string, std::unique_ptr<LineProtocolClient>> clients;
    std::mutex mutex;
};

ExpertPool::ExpertPool() : impl_(std::make_unique<Impl>()) {}
ExpertPool::~ExpertPool() = default;

LineProtocolClient& ExpertPool::client_for(const std::string& command, double timeout_s) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    auto& slot = impl_->clients[command];
    if (!slot) slot = std::make_unique<LineProtocolClient>(command, timeout_s);
    return *slot;
}

namespace {

// The synthetic generator stamps the label into the process name and the
// file-hash prefix; the oracle mock reads it back from whatever fields
// survived, so lost critical fields mean lost label components.
Label decode_field_label(const NormalizedAlert& alert, const Taxonomy& taxonomy) {
    Label label{RiskLevel::Low, Category::Other, "Unknown"};
    if (alert.process) {
        if (auto subtype = subtype_from_process(*alert.process, taxonomy)) {
            label.subtype = *subtype;
            if (auto category = taxonomy.category_of(*subtype)) label.category = *category;
        }
    }
    if (alert.file_hash) {
        if (auto risk = risk_from_hash(*alert.file_hash)) label.risk_level = *risk;
    }
    return label;
}

std::vector<std::string> mock_bullets(const NormalizedAlert& alert, const Label& label) {
    std::string port = alert.dst_port ? std::to_string(*alert.dst_port) : "unavailable";
    return {
        "process " + alert.process.value_or("unavailable") + " associated with " + label.subtype +
            " tradecraft",
        "network profile over " + alert.protocol.value_or("unknown") + " port " + port +
            " fits " + to_string(label.category),
        "evidence weight supports a " + to_string(label.risk_level) + " risk classification",
    };
}

RiskLevel adjacent_flip(RiskLevel level, Rng& rng) {
    switch (level) {
        case RiskLevel::Low: return RiskLevel::Medium;
        case RiskLevel::Critical: return RiskLevel::High;
        default:
            return rng.unit() < 0.5 ? static_cast<RiskLevel>(static_cast<int>(level) - 1)
                                    : static_cast<RiskLevel>(static_cast<int>(level) + 1);
    }
}

ExpertOutput external_infer(const NormalizedAlert& alert, const ExpertSpec& expert,
                            const Taxonomy& taxonomy, ExpertPool* pool) {
    if (!pool) throw ExternalExpertFailure("no expert pool available for external expert");
    try {
        auto& client = pool->client_for(expert.command, expert.timeout_s);
        nlohmann::json request{{"id", alert.alert_id}, {"context", alert}};
        nlohmann::json response = nlohmann::json::parse(client.round_trip(request.dump(), alert.alert_id));
        ExpertOutput out = response.get<ExpertOutput>();
        if (out.reasoning.empty() || out.reasoning.size() > 5)
            throw ExternalExpertFailure("expert reasoning must be 1-5 bullets");
        if (!std::isfinite(out.confidence) || out.confidence < 0.0 || out.confidence > 1.0)
            throw ExternalExpertFailure("expert confidence out of range");
        if (!validate_label(out.label, taxonomy).empty())
            throw ExternalExpertFailure("expert label fails ontology validation");
        return out;
    } catch (const ExternalExpertFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw ExternalExpertFailure(e.what());
    }
}

}  // namespace

ExpertOutput infer(const NormalizedAlert& alert, const ExpertSpec& expert,
                   const Taxonomy& taxonomy, ExpertPool* pool) {
    switch (expert.kind) {
        case ExpertKind::MockOracle: {
            ExpertOutput out;
            out.label = decode_field_label(alert, taxonomy);
            out.reasoning = mock_bullets(alert, out.label);
            out.confidence = 0.99;
            return out;
        }
        case ExpertKind::MockNoisy: {
            ExpertOutput out;
            out.label = decode_field_label(alert, taxonomy);
            Rng rng(derive_seed(expert.seed, fnv1a64(alert.alert_id)));
            if (rng.unit() < expert.noise_rate) out.label.risk_level = adjacent_flip(out.label.risk_level, rng);
            out.reasoning = mock_bullets(alert, out.label);
            out.confidence = 0.99;
            return out;
        }
        case ExpertKind::Fixture: {
            auto it = expert.fixtures.find(alert.alert_id);
            if (it == expert.fixtures.end())
                throw ExternalExpertFailure("no expert fixture for alert " + alert.alert_id);
            if (it->second.reasoning.empty() || it->second.reasoning.size() > 5)
                throw ExternalExpertFailure("fixture reasoning must be 1-5 bullets");
            return it->second;
        }
        case ExpertKind::External:
            return external_infer(alert, expert, taxonomy, pool);
    }
    throw ExternalExpertFailure("unreachable expert kind");
}

nlohmann::json render_soar(const ExpertOutput& output, const RoutingDecision& decision,
                           const std::string& alert_id, const Timings& timings) {
    int expert_tokens = 0;
    for (const auto& bullet : output.reasoning) expert_tokens += token_count(bullet);
    nlohmann::json doc{
        {"alert_id", alert_id},
        {"confidence", output.confidence},
        {"label", output.label},
        {"reasoning", output.reasoning},
        {"routing",
         {{"k_pred", to_string(decision.k_pred)},
          {"p_conf", decision.p_conf},
          {"used_fallback", decision.used_fallback},
          {"degraded", decision.degraded}}},
        {"latency",
         {{"route_s", timings.route_s},
          {"expert_s", timings.expert_s},
          {"total_s", timings.total_s()}}},
        {"tokens", {{"route", decision.response_tokens}, {"expert", expert_tokens}}},
    };
    return doc;
}

}  // namespace triagekit
