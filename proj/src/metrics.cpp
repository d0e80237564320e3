#include "triagekit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "triagekit/errors.hpp"
#include "triagekit/rng.hpp"
#include "triagekit/text.hpp"

namespace triagekit {

void PerturbationSpec::validate() const {
    if (p < 0.0 || p > 1.0) throw ConfigError("perturbation p must be in [0,1]");
    if (k < 0) throw ConfigError("perturbation k must be >= 0");
}

MetricsReport evaluate(const std::vector<EvalRecord>& records,
                       const std::map<std::string, Label>& truth,
                       std::optional<double> baseline_tokens) {
    // Accumulate in id order so any permutation of the input produces a
    // bit-identical report.
    std::vector<const EvalRecord*> ordered;
    ordered.reserve(records.size());
    for (const auto& r : records) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(), [](const EvalRecord* a, const EvalRecord* b) {
        if (a->alert_id != b->alert_id) return a->alert_id < b->alert_id;
        if (a->predicted != b->predicted) return a->predicted < b->predicted;
        if (a->latency_s != b->latency_s) return a->latency_s < b->latency_s;
        return a->tokens < b->tokens;
    });

    MetricsReport report;
    report.n = static_cast<int>(records.size());
    if (records.empty()) return report;

    int risk_exact = 0, threat_exact = 0;
    int high_truth = 0, high_caught = 0;
    int low_truth = 0, low_raised = 0;
    double latency_sum = 0.0, token_sum = 0.0;

    for (const EvalRecord* r : ordered) {
        auto it = truth.find(r->alert_id);
        if (it == truth.end())
            throw IdMismatch("no ground truth for record " + r->alert_id);
        const Label& gold = it->second;
        const Label& pred = r->predicted;

        report.risk_confusion[static_cast<std::size_t>(gold.risk_level)]
                             [static_cast<std::size_t>(pred.risk_level)]++;
        if (pred.risk_level == gold.risk_level) ++risk_exact;
        if (pred.category == gold.category && pred.subtype == gold.subtype) ++threat_exact;

        bool truth_high = gold.risk_level == RiskLevel::High || gold.risk_level == RiskLevel::Critical;
        bool pred_high = pred.risk_level == RiskLevel::High || pred.risk_level == RiskLevel::Critical;
        if (truth_high) {
            ++high_truth;
            if (pred_high) ++high_caught;
        }
        if (gold.risk_level == RiskLevel::Low) {
            ++low_truth;
            if (pred.risk_level != RiskLevel::Low) ++low_raised;
        }

        latency_sum += r->latency_s;
        token_sum += r->tokens;
    }

    const double n = static_cast<double>(report.n);
    report.acc_risk = risk_exact / n;
    report.acc_threat = threat_exact / n;
    report.r_high = high_truth > 0 ? static_cast<double>(high_caught) / high_truth : 1.0;
    report.fpr = low_truth > 0 ? static_cast<double>(low_raised) / low_truth : 0.0;
    report.l_avg_s = latency_sum / n;
    if (baseline_tokens && *baseline_tokens > 0.0)
        report.token_cost_rel = (token_sum / n) / *baseline_tokens;
    return report;
}

namespace {

bool maps_to_slot(const std::string& key, const char* slot, const NormalizeSchema& schema) {
    std::string k = to_lower(key);
    if (k == slot) return true;
    if (auto it = schema.aliases.find(slot); it != schema.aliases.end()) {
        for (const auto& alias : it->second)
            if (k == to_lower(alias)) return true;
    }
    return false;
}

bool is_critical_key(const std::string& key, const NormalizeSchema& schema) {
    static const char* slots[] = {"src_ip",   "dst_ip",  "src_port", "dst_port",
                                  "protocol", "process", "file_hash"};
    for (const char* slot : slots)
        if (maps_to_slot(key, slot, schema)) return true;
    return false;
}

bool is_metadata_key(const std::string& key, const NormalizeSchema& schema) {
    std::string k = to_lower(key);
    return k == to_lower(schema.id_field) || k == to_lower(schema.label_field) ||
           k == kDegradedMarkerKey || k == "raw_label";
}

int round_count(double x) { return static_cast<int>(std::lround(x)); }

}  // namespace

RawLog perturb_one(const RawLog& raw, const PerturbationSpec& spec, const NormalizeSchema& schema,
                   std::uint64_t stream_index) {
    spec.validate();
    if (spec.kind != PerturbationKind::DropCritical && spec.p == 0.0) return raw;
    if (spec.kind == PerturbationKind::DropCritical && spec.k == 0) return raw;

    RawLog out = raw;
    Rng rng(derive_seed(spec.seed, stream_index));

    switch (spec.kind) {
        case PerturbationKind::TruncateFields: {
            std::vector<std::string> droppable;
            for (const auto& [key, value] : out.payload) {
                if (!is_critical_key(key, schema) && !is_metadata_key(key, schema))
                    droppable.push_back(key);
            }
            std::sort(droppable.begin(), droppable.end());
            rng.shuffle(droppable);
            int m = std::min<int>(round_count(spec.p * static_cast<double>(droppable.size())),
                                  static_cast<int>(droppable.size()));
            for (int i = 0; i < m; ++i) out.payload.erase(droppable[static_cast<std::size_t>(i)]);
            break;
        }
        case PerturbationKind::DropCritical: {
            std::vector<std::string> critical;
            for (const auto& [key, value] : out.payload)
                if (is_critical_key(key, schema)) critical.push_back(key);
            std::sort(critical.begin(), critical.end());
            rng.shuffle(critical);
            int m = std::min<int>(spec.k, static_cast<int>(critical.size()));
            for (int i = 0; i < m; ++i) out.payload.erase(critical[static_cast<std::size_t>(i)]);
            if (m >= 3) out.payload[kDegradedMarkerKey] = "true";
            break;
        }
        case PerturbationKind::CorruptTokens: {
            // behavior plus extra text: every non-critical, non-metadata value
            std::vector<std::string> keys;
            for (const auto& [key, value] : out.payload) {
                if (is_critical_key(key, schema) || is_metadata_key(key, schema)) continue;
                keys.push_back(key);
            }
            std::sort(keys.begin(), keys.end());
            std::vector<std::vector<std::string>> token_lists;
            int total = 0;
            for (const auto& key : keys) {
                std::vector<std::string> toks;
                for (auto t : tokenize(out.payload[key])) toks.emplace_back(t);
                total += static_cast<int>(toks.size());
                token_lists.push_back(std::move(toks));
            }
            int m = std::min(round_count(spec.p * total), total);
            std::vector<int> positions(static_cast<std::size_t>(total));
            for (int i = 0; i < total; ++i) positions[static_cast<std::size_t>(i)] = i;
            rng.shuffle(positions);
            std::vector<bool> corrupt(static_cast<std::size_t>(total), false);
            for (int i = 0; i < m; ++i) corrupt[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])] = true;

            int cursor = 0;
            for (std::size_t f = 0; f < keys.size(); ++f) {
                std::string rebuilt;
                for (auto& tok : token_lists[f]) {
                    if (!rebuilt.empty()) rebuilt += ' ';
                    rebuilt += corrupt[static_cast<std::size_t>(cursor++)] ? kCorruptionToken : tok;
                }
                out.payload[keys[f]] = rebuilt;
            }
            break;
        }
    }
    return out;
}

std::vector<RawLog> perturb(const std::vector<RawLog>& alerts, const PerturbationSpec& spec,
                            const NormalizeSchema& schema) {
    std::vector<RawLog> out;
    out.reserve(alerts.size());
    for (std::size_t i = 0; i < alerts.size(); ++i)
        out.push_back(perturb_one(alerts[i], spec, schema, i));
    return out;
}

}  // namespace triagekit
