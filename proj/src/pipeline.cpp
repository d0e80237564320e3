#include "triagekit/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "triagekit/errors.hpp"
#include "triagekit/serialization.hpp"

namespace triagekit {

void PipelineConfig::validate() const {
    if (budgets.delta_t_s <= 0.0) throw ConfigError("delta_t_s must be positive");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (in_flight_window < 1) throw ConfigError("in_flight_window must be >= 1");
    if (arrival_rate && *arrival_rate <= 0.0) throw ConfigError("arrival_rate must be positive");
    router.validate();
    experts.validate();
    compression.validate();
}

PipelineContext::PipelineContext(const PipelineConfig& config)
    : cfg(config), router(config.router) {
    cfg.validate();
}

namespace {

ExpertOutput safe_default_output() {
    ExpertOutput out;
    out.reasoning = {"expert backend unavailable, safe default applied"};
    out.label = Label{RiskLevel::Low, Category::Other, "Unknown"};
    out.confidence = 0.0;
    return out;
}

}  // namespace

TriageRecord triage(const StreamAlert& alert, PipelineContext& ctx, std::int64_t seq) {
    const PipelineConfig& cfg = ctx.cfg;

    NormalizedAlert normalized = normalize(alert.raw, cfg.schema);

    TriageRecord record;
    record.seq = seq;
    record.alert_id = normalized.alert_id;
    record.degraded_input = normalized.degraded_input;
    record.truth = alert.truth;

    RoutingDecision decision =
        ctx.router.route(normalized, cfg.experts.domain_ids(), cfg.experts.fallback.expert_id);

    const ExpertSpec* spec = cfg.experts.find(decision.routed_expert);
    if (!spec) spec = &cfg.experts.fallback;

    ExpertOutput output;
    double expert_s = 0.0;
    auto run_expert = [&](const ExpertSpec& expert) {
        auto started = std::chrono::steady_clock::now();
        ExpertOutput result = infer(normalized, expert, cfg.taxonomy, &ctx.expert_pool);
        expert_s = expert.simulated_latency_s
                       ? *expert.simulated_latency_s
                       : std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                             .count();
        return result;
    };
    try {
        output = run_expert(*spec);
    } catch (const std::exception&) {
        // Expert failure degrades to the fallback expert; if that fails too,
        // a safe default keeps the alert from dropping.
        decision.degraded = true;
        decision.used_fallback = true;
        decision.routed_expert = cfg.experts.fallback.expert_id;
        try {
            output = run_expert(cfg.experts.fallback);
        } catch (const std::exception&) {
            output = safe_default_output();
            expert_s = cfg.experts.fallback.simulated_latency_s.value_or(0.0);
        }
    }

    Timings timings;
    timings.route_s = decision.latency_s;
    timings.expert_s = expert_s;

    record.expert_id = decision.routed_expert;
    record.soar = render_soar(output, decision, normalized.alert_id, timings);
    record.budget_ok = timings.total_s() <= cfg.budgets.delta_t_s;
    record.wall_times = {{"route_s", timings.route_s},
                         {"expert_s", timings.expert_s},
                         {"total_s", timings.total_s()}};
    return record;
}

StreamResult run_stream(const std::vector<StreamAlert>& alerts, const PipelineConfig& cfg) {
    PipelineContext ctx(cfg);
    StreamResult result;
    result.records.resize(alerts.size());

    // seq is assigned at ingest; workers fill disjoint slots, so completion
    // interleaving never changes record content or order.
    const int jobs = std::max(1, std::min(cfg.jobs, cfg.in_flight_window));
    if (jobs == 1 || alerts.size() < 2) {
        for (std::size_t i = 0; i < alerts.size(); ++i)
            result.records[i] = triage(alerts[i], ctx, static_cast<std::int64_t>(i) + 1);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&]() {
                for (;;) {
                    std::size_t i = cursor.fetch_add(1);
                    if (i >= alerts.size()) return;
                    result.records[i] = triage(alerts[i], ctx, static_cast<std::int64_t>(i) + 1);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    // Single-server queueing report when an arrival rate is configured.
    if (cfg.arrival_rate) {
        double prev_completion = 0.0;
        for (std::size_t i = 0; i < result.records.size(); ++i) {
            double arrival = static_cast<double>(i) / *cfg.arrival_rate;
            double service = result.records[i].wall_times["total_s"];
            double start = std::max(arrival, prev_completion);
            prev_completion = start + service;
            result.records[i].wall_times["queue_wait_s"] = start - arrival;
            result.records[i].wall_times["completion_s"] = prev_completion;
        }
    }

    std::vector<EvalRecord> eval_records;
    std::map<std::string, Label> truth;
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        if (!alerts[i].truth) continue;
        const TriageRecord& r = result.records[i];
        EvalRecord e;
        e.alert_id = r.alert_id;
        e.predicted = r.soar.at("label").get<Label>();
        e.latency_s = r.soar.at("latency").at("total_s").get<double>();
        e.tokens = r.soar.at("tokens").at("route").get<int>() +
                   r.soar.at("tokens").at("expert").get<int>();
        eval_records.push_back(std::move(e));
        truth[r.alert_id] = *alerts[i].truth;
    }
    if (!eval_records.empty()) result.metrics = evaluate(eval_records, truth);
    return result;
}

}  // namespace triagekit
