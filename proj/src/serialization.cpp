#include "triagekit/serialization.hpp"

#include <cstdio>
#include <ctime>

#include "triagekit/errors.hpp"
#include "triagekit/text.hpp"

namespace triagekit {

namespace {

template <typename T>
void set_optional(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<T>();
    return std::nullopt;
}

}  // namespace

std::int64_t parse_timestamp_ms(const json& value) {
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (!value.is_string()) throw InputError("received_at must be a string or integer");
    const std::string s = value.get<std::string>();
    std::tm tm{};
    int ms = 0;
    int matched = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d", &tm.tm_year, &tm.tm_mon,
                              &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &ms);
    if (matched < 6) throw InputError("unparseable timestamp: " + s);
    if (matched == 6) ms = 0;
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    std::time_t secs = timegm(&tm);
    if (secs == static_cast<std::time_t>(-1)) throw InputError("unparseable timestamp: " + s);
    return static_cast<std::int64_t>(secs) * 1000 + ms;
}

std::string format_timestamp_ms(std::int64_t ms) {
    std::time_t secs = ms / 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms % 1000));
    return buf;
}

void to_json(json& j, const RawLog& v) {
    j = json{{"source", to_string(v.source)},
             {"payload", v.payload},
             {"received_at", format_timestamp_ms(v.received_at_ms)}};
}

void from_json(const json& j, RawLog& v) {
    v.source = parse_source(j.value("source", "other"));
    if (!j.contains("payload") || !j.at("payload").is_object() || j.at("payload").empty())
        throw InputError("raw log payload must be a non-empty object");
    v.payload.clear();
    for (const auto& [key, value] : j.at("payload").items()) {
        v.payload[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    v.received_at_ms = j.contains("received_at") ? parse_timestamp_ms(j.at("received_at")) : 0;
}

void to_json(json& j, const NormalizedAlert& v) {
    j = json{{"alert_id", v.alert_id},
             {"extra", v.extra},
             {"degraded_input", v.degraded_input}};
    set_optional(j, "src_ip", v.src_ip);
    set_optional(j, "dst_ip", v.dst_ip);
    set_optional(j, "src_port", v.src_port);
    set_optional(j, "dst_port", v.dst_port);
    set_optional(j, "protocol", v.protocol);
    set_optional(j, "process", v.process);
    set_optional(j, "file_hash", v.file_hash);
    set_optional(j, "behavior", v.behavior);
    set_optional(j, "raw_label", v.raw_label);
}

void from_json(const json& j, NormalizedAlert& v) {
    v = NormalizedAlert{};
    v.alert_id = j.value("alert_id", "");
    v.src_ip = get_optional<std::string>(j, "src_ip");
    v.dst_ip = get_optional<std::string>(j, "dst_ip");
    v.src_port = get_optional<int>(j, "src_port");
    v.dst_port = get_optional<int>(j, "dst_port");
    v.protocol = get_optional<std::string>(j, "protocol");
    v.process = get_optional<std::string>(j, "process");
    v.file_hash = get_optional<std::string>(j, "file_hash");
    v.behavior = get_optional<std::string>(j, "behavior");
    if (j.contains("extra")) v.extra = j.at("extra").get<std::map<std::string, std::string>>();
    v.raw_label = get_optional<std::string>(j, "raw_label");
    v.degraded_input = j.value("degraded_input", false);
}

void to_json(json& j, const Label& v) {
    j = json{{"risk_level", to_string(v.risk_level)},
             {"category", to_string(v.category)},
             {"subtype", v.subtype}};
}

void from_json(const json& j, Label& v) {
    v.risk_level = parse_risk(j.at("risk_level").get<std::string>());
    v.category = parse_category(j.at("category").get<std::string>());
    v.subtype = j.value("subtype", "Unknown");
}

void to_json(json& j, const ReasoningStep& v) {
    j = json{{"text", v.text}, {"token_len", v.token_len}};
}

void from_json(const json& j, ReasoningStep& v) {
    if (j.is_string()) {
        v = make_step(j.get<std::string>());
        return;
    }
    v = make_step(j.at("text").get<std::string>());
}

void to_json(json& j, const ReasoningChain& v) { j = json{{"steps", v.steps}}; }

void from_json(const json& j, ReasoningChain& v) {
    const json& steps = j.is_array() ? j : j.at("steps");
    v.steps = steps.get<std::vector<ReasoningStep>>();
}

void to_json(json& j, const RelevanceVector& v) {
    j = json{{"scores", v.scores}, {"scorer_id", v.scorer_id}};
    set_optional(j, "aggregation", v.aggregation);
}

void from_json(const json& j, RelevanceVector& v) {
    if (j.is_array()) {
        v.scores = j.get<std::vector<double>>();
        v.scorer_id = "inline";
        return;
    }
    v.scores = j.at("scores").get<std::vector<double>>();
    v.scorer_id = j.value("scorer_id", "inline");
    v.aggregation = get_optional<std::string>(j, "aggregation");
}

void to_json(json& j, const FidelityReport& v) {
    j = json{{"p_full", v.p_full}, {"p_compressed", v.p_compressed}, {"satisfied", v.satisfied}};
}

void from_json(const json& j, FidelityReport& v) {
    v.p_full = j.value("p_full", 1.0);
    v.p_compressed = j.value("p_compressed", 1.0);
    v.satisfied = j.value("satisfied", true);
}

void to_json(json& j, const CompressedChain& v) {
    j = json{{"selected", v.selected},
             {"steps", v.steps},
             {"density", v.density},
             {"fidelity", v.fidelity},
             {"repair_applied", v.repair_applied}};
}

void from_json(const json& j, CompressedChain& v) {
    v.selected = j.value("selected", std::vector<int>{});
    v.steps = j.value("steps", std::vector<ReasoningStep>{});
    v.density = j.value("density", 0.0);
    if (j.contains("fidelity")) v.fidelity = j.at("fidelity").get<FidelityReport>();
    v.repair_applied = j.value("repair_applied", false);
}

void to_json(json& j, const TrainingTuple& v) {
    j = json{{"alert", v.alert},
             {"compressed", v.compressed},
             {"label", v.label},
             {"provenance", {{"scorer_id", v.provenance.scorer_id}, {"cfg_hash", v.provenance.cfg_hash}}}};
}

void from_json(const json& j, TrainingTuple& v) {
    v.alert = j.at("alert").get<NormalizedAlert>();
    v.compressed = j.at("compressed").get<CompressedChain>();
    v.label = j.at("label").get<Label>();
    if (j.contains("provenance")) {
        v.provenance.scorer_id = j.at("provenance").value("scorer_id", "");
        v.provenance.cfg_hash = j.at("provenance").value("cfg_hash", "");
    }
}

void to_json(json& j, const DomainPartition& v) {
    j = json{{"domains", v.domains},
             {"catch_all_id", v.catch_all_id},
             {"catch_all_below_min", v.catch_all_below_min}};
}

void from_json(const json& j, DomainPartition& v) {
    v.domains = j.at("domains").get<std::map<std::string, std::vector<std::string>>>();
    v.catch_all_id = j.value("catch_all_id", "other");
    v.catch_all_below_min = j.value("catch_all_below_min", false);
}

void to_json(json& j, const SplitResult& v) {
    j = json{{"train", v.train}, {"val", v.val}, {"test", v.test}};
}

void to_json(json& j, const SyntheticRecord& v) {
    j = json{{"raw", v.raw}, {"truth", v.truth}, {"chain", v.chain}};
}

void from_json(const json& j, SyntheticRecord& v) {
    v.raw = j.at("raw").get<RawLog>();
    v.truth = j.at("truth").get<Label>();
    v.chain = j.at("chain").get<ReasoningChain>();
}

void to_json(json& j, const RoutingDecision& v) {
    j = json{{"k_pred", to_string(v.k_pred)},
             {"p_conf", v.p_conf},
             {"routed_expert", v.routed_expert},
             {"used_fallback", v.used_fallback},
             {"degraded", v.degraded},
             {"request_payload", v.request_payload},
             {"response_tokens", v.response_tokens},
             {"latency_s", v.latency_s}};
}

void to_json(json& j, const ExpertOutput& v) {
    j = json{{"reasoning", v.reasoning}, {"label", v.label}, {"confidence", v.confidence}};
}

void from_json(const json& j, ExpertOutput& v) {
    v.reasoning = j.at("reasoning").get<std::vector<std::string>>();
    v.label = j.at("label").get<Label>();
    v.confidence = j.at("confidence").get<double>();
}

void to_json(json& j, const TriageRecord& v) {
    j = json{{"seq", v.seq},
             {"alert_id", v.alert_id},
             {"expert_id", v.expert_id},
             {"soar", v.soar},
             {"budget_ok", v.budget_ok},
             {"degraded_input", v.degraded_input},
             {"wall_times", v.wall_times}};
    set_optional(j, "truth", v.truth);
}

void from_json(const json& j, TriageRecord& v) {
    v.seq = j.value("seq", 0);
    v.alert_id = j.value("alert_id", "");
    v.expert_id = j.value("expert_id", "");
    v.soar = j.value("soar", json::object());
    v.budget_ok = j.value("budget_ok", true);
    v.degraded_input = j.value("degraded_input", false);
    if (j.contains("wall_times"))
        v.wall_times = j.at("wall_times").get<std::map<std::string, double>>();
    v.truth = get_optional<Label>(j, "truth");
}

void to_json(json& j, const MetricsReport& v) {
    json confusion = json::array();
    for (const auto& row : v.risk_confusion) {
        confusion.push_back(std::vector<int>(row.begin(), row.end()));
    }
    j = json{{"acc_risk", v.acc_risk}, {"acc_threat", v.acc_threat},
             {"r_high", v.r_high},     {"fpr", v.fpr},
             {"l_avg_s", v.l_avg_s},   {"n", v.n},
             {"risk_confusion", confusion}};
    set_optional(j, "token_cost_rel", v.token_cost_rel);
}

void from_json(const json& j, NormalizeSchema& v) {
    v = default_schema();
    if (j.contains("aliases")) {
        for (const auto& [slot, names] : j.at("aliases").items())
            v.aliases[slot] = names.get<std::vector<std::string>>();
    }
    v.extra_fields = j.value("extra_fields", v.extra_fields);
    v.keep_unlisted_extra = j.value("keep_unlisted_extra", v.keep_unlisted_extra);
    v.id_field = j.value("id_field", v.id_field);
    v.label_field = j.value("label_field", v.label_field);
}

void from_json(const json& j, Taxonomy& v) {
    v.subtype_category.clear();
    for (const auto& [category, subtypes] : j.items()) {
        Category c = parse_category(category);
        for (const auto& s : subtypes) v.subtype_category[s.get<std::string>()] = c;
    }
}

void from_json(const json& j, LabelMapping& v) {
    v.entries.clear();
    for (const auto& e : j.value("entries", json::array())) {
        LabelMappingEntry entry;
        entry.pattern = e.at("pattern").get<std::string>();
        entry.label = e.at("label").get<Label>();
        v.entries.push_back(std::move(entry));
    }
    if (j.contains("default") && !j.at("default").is_null())
        v.fallback = j.at("default").get<Label>();
}

void from_json(const json& j, ScorerSpec& v) {
    std::string kind = j.value("kind", "keyword");
    if (kind == "keyword") {
        v.kind = ScorerKind::Keyword;
    } else if (kind == "fixture") {
        v.kind = ScorerKind::Fixture;
    } else if (kind == "external") {
        v.kind = ScorerKind::External;
    } else {
        throw ConfigError("unknown scorer kind: " + kind);
    }
    if (j.contains("weights"))
        v.keyword_weights = j.at("weights").get<std::map<std::string, double>>();
    else
        v.keyword_weights = default_keyword_scorer().keyword_weights;
    if (j.contains("fixtures"))
        v.fixtures = j.at("fixtures").get<std::map<std::string, std::vector<double>>>();
    v.fixture_file = j.value("fixture_file", "");
    v.command = j.value("command", "");
    v.timeout_s = j.value("timeout_s", 10.0);
}

void from_json(const json& j, CompressionConfig& v) {
    v.delta_token = j.value("delta_token", 40);
    v.epsilon_smooth = j.value("epsilon_smooth", 1.0);
    v.epsilon_fidelity = j.value("epsilon_fidelity", 0.05);
    std::string variant = j.value("variant", "as_written");
    if (variant == "as_written") v.variant = GreedyVariant::AsWritten;
    else if (variant == "density_improving") v.variant = GreedyVariant::DensityImproving;
    else throw ConfigError("unknown compression variant: " + variant);
    v.skip_oversized = j.value("skip_oversized", false);
    v.repair_rounds = j.value("repair_rounds", 1);
    v.validate();
}

void to_json(json& j, const CompressionConfig& v) {
    j = json{{"delta_token", v.delta_token},
             {"epsilon_smooth", v.epsilon_smooth},
             {"epsilon_fidelity", v.epsilon_fidelity},
             {"variant", v.variant == GreedyVariant::AsWritten ? "as_written" : "density_improving"},
             {"skip_oversized", v.skip_oversized},
             {"repair_rounds", v.repair_rounds}};
}

void from_json(const json& j, FidelityEvaluatorSpec& v) {
    std::string kind = j.value("kind", "coverage");
    if (kind == "coverage") v.kind = FidelityKind::Coverage;
    else if (kind == "external") v.kind = FidelityKind::External;
    else throw ConfigError("unknown fidelity kind: " + kind);
    v.command = j.value("command", "");
    v.timeout_s = j.value("timeout_s", 10.0);
}

void from_json(const json& j, KeywordRouteRules& v) {
    v.weights.clear();
    for (const auto& [category, words] : j.items())
        v.weights[parse_category(category)] = words.get<std::map<std::string, double>>();
}

void from_json(const json& j, RouterConfig& v) {
    v.tau = j.value("tau", 0.6);
    std::string backend = j.value("backend", "keyword_rules");
    if (backend == "keyword_rules") v.backend = RouterBackend::KeywordRules;
    else if (backend == "fixture") v.backend = RouterBackend::Fixture;
    else if (backend == "external") v.backend = RouterBackend::External;
    else throw ConfigError("unknown router backend: " + backend);
    v.redaction = j.value("redaction", std::vector<std::string>{"behavior", "protocol"});
    v.max_response_tokens = j.value("max_response_tokens", 4);
    if (j.contains("simulated_latency_s") && !j.at("simulated_latency_s").is_null())
        v.simulated_latency_s = j.at("simulated_latency_s").get<double>();
    if (j.contains("rules")) v.rules = j.at("rules").get<KeywordRouteRules>();
    if (j.contains("fixtures")) {
        for (const auto& [id, fx] : j.at("fixtures").items()) {
            FixtureRoute route;
            route.category = parse_category(fx.at("category").get<std::string>());
            route.confidence = fx.at("confidence").get<double>();
            v.fixtures[id] = route;
        }
    }
    v.command = j.value("command", "");
    v.timeout_s = j.value("timeout_s", 10.0);
    v.validate();
}

void from_json(const json& j, ExpertSpec& v) {
    v.expert_id = j.at("expert_id").get<std::string>();
    if (j.contains("domain") && !j.at("domain").is_null()) {
        std::string d = j.at("domain").get<std::string>();
        if (to_lower(d) != "fallback") v.domain = parse_category(d);
    }
    std::string kind = j.value("kind", "mock_oracle");
    if (kind == "mock_oracle") v.kind = ExpertKind::MockOracle;
    else if (kind == "mock_noisy") v.kind = ExpertKind::MockNoisy;
    else if (kind == "fixture") v.kind = ExpertKind::Fixture;
    else if (kind == "external") v.kind = ExpertKind::External;
    else throw ConfigError("unknown expert kind: " + kind);
    v.noise_rate = j.value("noise_rate", 0.0);
    v.seed = j.value("seed", 0ULL);
    if (j.contains("fixtures")) {
        for (const auto& [id, out] : j.at("fixtures").items())
            v.fixtures[id] = out.get<ExpertOutput>();
    }
    v.command = j.value("command", "");
    v.timeout_s = j.value("timeout_s", 10.0);
    if (j.contains("simulated_latency_s") && !j.at("simulated_latency_s").is_null())
        v.simulated_latency_s = j.at("simulated_latency_s").get<double>();
}

void from_json(const json& j, ExpertRegistry& v) {
    v.domain_experts.clear();
    if (j.contains("fallback")) v.fallback = j.at("fallback").get<ExpertSpec>();
    if (j.contains("domains")) {
        for (const auto& [category, spec] : j.at("domains").items()) {
            ExpertSpec expert = spec.get<ExpertSpec>();
            expert.domain = parse_category(category);
            v.domain_experts[*expert.domain] = std::move(expert);
        }
    }
    v.validate();
}

void from_json(const json& j, SplitSpec& v) {
    auto ratios = j.value("ratios", std::vector<double>{0.7, 0.1, 0.2});
    if (ratios.size() != 3) throw ConfigError("split ratios must have 3 entries");
    v.train = ratios[0];
    v.val = ratios[1];
    v.test = ratios[2];
    v.seed = j.value("seed", 0ULL);
    v.validate();
}

void from_json(const json& j, SyntheticSpec& v) {
    v = default_synthetic_spec();
    v.n = j.value("n", 0);
    if (j.contains("category_mix")) {
        v.category_mix.clear();
        for (const auto& [name, frac] : j.at("category_mix").items())
            v.category_mix[parse_category(name)] = frac.get<double>();
    }
    if (j.contains("risk_mix")) {
        v.risk_mix.clear();
        for (const auto& [name, frac] : j.at("risk_mix").items())
            v.risk_mix[parse_risk(name)] = frac.get<double>();
    }
    v.seed = j.value("seed", 0ULL);
    v.validate();
}

void from_json(const json& j, PerturbationSpec& v) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "truncate_fields") v.kind = PerturbationKind::TruncateFields;
    else if (kind == "drop_critical") v.kind = PerturbationKind::DropCritical;
    else if (kind == "corrupt_tokens") v.kind = PerturbationKind::CorruptTokens;
    else throw ConfigError("unknown perturbation kind: " + kind);
    v.p = j.value("p", 0.0);
    v.k = j.value("k", 0);
    v.seed = j.value("seed", 0ULL);
    v.validate();
}

void from_json(const json& j, PartitionConfig& v) {
    v.min_samples = j.value("min_samples", 500);
    v.k_max = j.value("k_max", 8);
    if (j.contains("pinned") && !j.at("pinned").is_null()) {
        std::map<std::string, std::vector<Category>> pinned;
        for (const auto& [domain, cats] : j.at("pinned").items()) {
            std::vector<Category> members;
            for (const auto& c : cats) members.push_back(parse_category(c.get<std::string>()));
            pinned[domain] = std::move(members);
        }
        v.pinned = std::move(pinned);
    }
}

void from_json(const json& j, PipelineConfig& v) {
    if (j.contains("schema")) v.schema = j.at("schema").get<NormalizeSchema>();
    if (j.contains("taxonomy")) v.taxonomy = j.at("taxonomy").get<Taxonomy>();
    if (j.contains("label_table")) v.label_table = j.at("label_table").get<LabelMapping>();
    if (j.contains("router")) v.router = j.at("router").get<RouterConfig>();
    if (j.contains("experts")) v.experts = j.at("experts").get<ExpertRegistry>();
    if (j.contains("compression")) v.compression = j.at("compression").get<CompressionConfig>();
    if (j.contains("scorer")) v.scorer = j.at("scorer").get<ScorerSpec>();
    if (j.contains("fidelity")) v.fidelity = j.at("fidelity").get<FidelityEvaluatorSpec>();
    if (j.contains("budgets")) {
        v.budgets.delta_t_s = j.at("budgets").value("delta_t_s", 3.0);
        v.budgets.delta_token = j.at("budgets").value("delta_token", 40);
    }
    if (j.contains("arrival_rate") && !j.at("arrival_rate").is_null())
        v.arrival_rate = j.at("arrival_rate").get<double>();
    v.seed = j.value("seed", 0ULL);
    v.jobs = j.value("jobs", 1);
    v.in_flight_window = j.value("in_flight_window", 64);
    v.validate();
}

StreamAlert parse_stream_alert(const json& j) {
    StreamAlert alert;
    if (j.contains("raw")) {
        alert.raw = j.at("raw").get<RawLog>();
        if (j.contains("truth") && !j.at("truth").is_null())
            alert.truth = j.at("truth").get<Label>();
        if (j.contains("chain") && !j.at("chain").is_null())
            alert.chain = j.at("chain").get<ReasoningChain>();
        return alert;
    }
    alert.raw = j.get<RawLog>();
    if (j.contains("truth") && !j.at("truth").is_null()) alert.truth = j.at("truth").get<Label>();
    if (j.contains("chain") && !j.at("chain").is_null())
        alert.chain = j.at("chain").get<ReasoningChain>();
    return alert;
}

json dump_stream_alert(const StreamAlert& a) {
    json j{{"raw", a.raw}};
    if (a.truth) j["truth"] = *a.truth;
    if (a.chain) j["chain"] = *a.chain;
    return j;
}

std::string cfg_hash(const CompressionConfig& cfg) {
    json j = cfg;
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

}  // namespace triagekit
