#include <doctest.h>

#include <algorithm>

#include "triagekit/dataset.hpp"
#include "triagekit/errors.hpp"
#include "triagekit/metrics.hpp"
#include "triagekit/pipeline.hpp"
#include "triagekit/rng.hpp"
#include "triagekit/serialization.hpp"
#include "triagekit/text.hpp"

using namespace triagekit;

namespace {

EvalRecord rec(const std::string& id, RiskLevel risk, Category cat = Category::Other,
               const std::string& subtype = "Unknown", double latency = 1.0, int tokens = 10) {
    EvalRecord r;
    r.alert_id = id;
    r.predicted = Label{risk, cat, subtype};
    r.latency_s = latency;
    r.tokens = tokens;
    return r;
}

// The hand-enumerated ten-alert fixture: four truth High/Critical and six
// truth Low; predictions miss one High (down to Low) and raise one Low to
// Medium, everything else exact.
struct Fixture {
    std::vector<EvalRecord> records;
    std::map<std::string, Label> truth;
};

Fixture ten_alert_fixture() {
    Fixture f;
    auto add = [&f](const std::string& id, RiskLevel truth_risk, RiskLevel pred_risk) {
        f.truth[id] = Label{truth_risk, Category::Malware, "Trojan"};
        f.records.push_back(rec(id, pred_risk, Category::Malware, "Trojan"));
    };
    add("h1", RiskLevel::High, RiskLevel::High);
    add("h2", RiskLevel::High, RiskLevel::Low);  // the missed High
    add("h3", RiskLevel::Critical, RiskLevel::Critical);
    add("h4", RiskLevel::High, RiskLevel::High);
    add("l1", RiskLevel::Low, RiskLevel::Low);
    add("l2", RiskLevel::Low, RiskLevel::Medium);  // the raised Low
    add("l3", RiskLevel::Low, RiskLevel::Low);
    add("l4", RiskLevel::Low, RiskLevel::Low);
    add("l5", RiskLevel::Low, RiskLevel::Low);
    add("l6", RiskLevel::Low, RiskLevel::Low);
    return f;
}

RawLog synthetic_raw(int i, std::uint64_t seed = 21) {
    SyntheticSpec spec = default_synthetic_spec();
    spec.n = i + 1;
    spec.seed = seed;
    return generate_synthetic(spec)[static_cast<std::size_t>(i)].raw;
}

}  // namespace

TEST_CASE("the ten-alert fixture scores R_High 0.75 and FPR 1/6 exactly") {
    Fixture f = ten_alert_fixture();
    MetricsReport report = evaluate(f.records, f.truth);
    CHECK(report.r_high == 0.75);
    CHECK(report.fpr == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(report.acc_risk == 0.8);
    CHECK(report.n == 10);
    // confusion row sums match class supports
    int low_row = 0;
    for (int c = 0; c < 4; ++c) low_row += report.risk_confusion[0][static_cast<std::size_t>(c)];
    CHECK(low_row == 6);
}

TEST_CASE("perfect predictions score ones across the board") {
    Fixture f = ten_alert_fixture();
    std::vector<EvalRecord> exact;
    for (const auto& [id, label] : f.truth)
        exact.push_back(rec(id, label.risk_level, label.category, label.subtype));
    MetricsReport report = evaluate(exact, f.truth);
    CHECK(report.acc_risk == 1.0);
    CHECK(report.acc_threat == 1.0);
    CHECK(report.r_high == 1.0);
    CHECK(report.fpr == 0.0);
}

TEST_CASE("token cost is normalized against the baseline mean") {
    Fixture f = ten_alert_fixture();
    for (auto& r : f.records) r.tokens = 71;
    MetricsReport report = evaluate(f.records, f.truth, 100.0);
    REQUIRE(report.token_cost_rel.has_value());
    CHECK(*report.token_cost_rel == doctest::Approx(0.71).epsilon(1e-12));
    MetricsReport no_baseline = evaluate(f.records, f.truth);
    CHECK_FALSE(no_baseline.token_cost_rel.has_value());
}

TEST_CASE("evaluate is order-invariant bit for bit") {
    Fixture f = ten_alert_fixture();
    MetricsReport a = evaluate(f.records, f.truth);
    std::reverse(f.records.begin(), f.records.end());
    MetricsReport b = evaluate(f.records, f.truth);
    CHECK(json(a).dump() == json(b).dump());
}

TEST_CASE("missing truth ids raise IdMismatch") {
    Fixture f = ten_alert_fixture();
    f.truth.erase("l3");
    CHECK_THROWS_AS(evaluate(f.records, f.truth), IdMismatch);
}

TEST_CASE("mock_noisy at rate q yields accuracy one minus q") {
    const double q = 0.10;
    PipelineConfig cfg;
    cfg.router.simulated_latency_s = 0.0;
    for (auto& [cat, spec] : cfg.experts.domain_experts) {
        spec.kind = ExpertKind::MockNoisy;
        spec.noise_rate = q;
        spec.seed = 17;
        spec.simulated_latency_s = 0.0;
    }
    cfg.experts.fallback.kind = ExpertKind::MockNoisy;
    cfg.experts.fallback.noise_rate = q;
    cfg.experts.fallback.seed = 17;
    cfg.experts.fallback.simulated_latency_s = 0.0;

    SyntheticSpec spec = default_synthetic_spec();
    spec.n = 10000;
    spec.seed = 2;
    std::vector<StreamAlert> alerts;
    for (auto& record : generate_synthetic(spec)) {
        StreamAlert alert;
        alert.raw = std::move(record.raw);
        alert.truth = record.truth;
        alerts.push_back(std::move(alert));
    }
    cfg.jobs = 4;
    StreamResult result = run_stream(alerts, cfg);
    REQUIRE(result.metrics.has_value());
    CHECK(std::abs(result.metrics->acc_risk - (1.0 - q)) <= 0.02);
}

TEST_CASE("perturbations with p=0 or k=0 are the identity") {
    RawLog raw = synthetic_raw(0);
    for (const char* kind : {"truncate_fields", "corrupt_tokens"}) {
        PerturbationSpec spec = json{{"kind", kind}, {"p", 0.0}, {"seed", 5}}.get<PerturbationSpec>();
        RawLog out = perturb_one(raw, spec, default_schema(), 0);
        CHECK(json(out).dump() == json(raw).dump());
    }
    PerturbationSpec drop = json{{"kind", "drop_critical"}, {"k", 0}, {"seed", 5}}.get<PerturbationSpec>();
    CHECK(json(perturb_one(raw, drop, default_schema(), 0)).dump() == json(raw).dump());
}

TEST_CASE("corrupt_tokens replaces exactly round(p*n) tokens") {
    RawLog raw;
    raw.source = LogSource::Ids;
    std::string behavior;
    for (int i = 0; i < 100; ++i) behavior += (i ? " w" : "w") + std::to_string(i);
    raw.payload = {{"behavior", behavior}, {"src", "10.0.0.1"}, {"alert_id", "c1"}};
    REQUIRE(token_count(behavior) == 100);

    PerturbationSpec spec = json{{"kind", "corrupt_tokens"}, {"p", 0.15}, {"seed", 3}}
                                .get<PerturbationSpec>();
    RawLog out = perturb_one(raw, spec, default_schema(), 0);
    int corrupted = 0;
    for (auto token : tokenize(out.payload.at("behavior")))
        if (token == kCorruptionToken) ++corrupted;
    CHECK(corrupted == 15);
    CHECK(out.payload.at("src") == "10.0.0.1");  // critical fields untouched
}

TEST_CASE("drop_critical removes exactly k slots and stamps the marker at three") {
    RawLog raw = synthetic_raw(1);
    NormalizeSchema schema = default_schema();

    PerturbationSpec spec = json{{"kind", "drop_critical"}, {"k", 3}, {"seed", 8}}
                                .get<PerturbationSpec>();
    RawLog out = perturb_one(raw, spec, schema, 0);
    NormalizedAlert before = normalize(raw, schema);
    NormalizedAlert after = normalize(out, schema);
    CHECK(before.critical_field_count() == 7);
    CHECK(after.critical_field_count() == 4);
    CHECK(after.degraded_input);

    PerturbationSpec two = json{{"kind", "drop_critical"}, {"k", 2}, {"seed", 8}}
                               .get<PerturbationSpec>();
    NormalizedAlert lighter = normalize(perturb_one(raw, two, schema, 0), schema);
    CHECK(lighter.critical_field_count() == 5);
    CHECK_FALSE(lighter.degraded_input);
}

TEST_CASE("perturbation is deterministic in the seed") {
    std::vector<RawLog> alerts;
    for (int i = 0; i < 40; ++i) alerts.push_back(synthetic_raw(i));
    for (const char* kind : {"truncate_fields", "drop_critical", "corrupt_tokens"}) {
        PerturbationSpec spec =
            json{{"kind", kind}, {"p", 0.5}, {"k", 2}, {"seed", 99}}.get<PerturbationSpec>();
        auto a = perturb(alerts, spec, default_schema());
        auto b = perturb(alerts, spec, default_schema());
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(json(a[i]).dump() == json(b[i]).dump());
    }
}

TEST_CASE("truncate_fields only removes non-critical values") {
    RawLog raw = synthetic_raw(2);
    PerturbationSpec spec =
        json{{"kind", "truncate_fields"}, {"p", 1.0}, {"seed", 4}}.get<PerturbationSpec>();
    RawLog out = perturb_one(raw, spec, default_schema(), 0);
    NormalizedAlert alert = normalize(out, default_schema());
    CHECK(alert.critical_field_count() == 7);
    CHECK_FALSE(out.payload.count("behavior"));
    CHECK(out.payload.count("alert_id"));  // ids survive truncation
}

TEST_CASE("accuracy degrades monotonically as critical fields drop") {
    SyntheticSpec spec = default_synthetic_spec();
    spec.n = 600;
    spec.seed = 31;
    auto corpus = generate_synthetic(spec);

    PipelineConfig cfg;
    cfg.router.simulated_latency_s = 0.0;
    for (auto& [cat, e] : cfg.experts.domain_experts) e.simulated_latency_s = 0.0;
    cfg.experts.fallback.simulated_latency_s = 0.0;

    double previous = 1.1;
    for (int k = 0; k <= 3; ++k) {
        PerturbationSpec pert =
            json{{"kind", "drop_critical"}, {"k", k}, {"seed", 12}}.get<PerturbationSpec>();
        std::vector<StreamAlert> alerts;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            StreamAlert alert;
            alert.raw = perturb_one(corpus[i].raw, pert, cfg.schema, i);
            alert.truth = corpus[i].truth;
            alerts.push_back(std::move(alert));
        }
        StreamResult result = run_stream(alerts, cfg);
        REQUIRE(result.metrics.has_value());
        double acc = result.metrics->acc_risk;
        CHECK(acc <= previous + 1e-12);
        previous = acc;
    }
}

TEST_CASE("evaluate stays order-invariant under duplicate ids") {
    std::map<std::string, Label> truth{{"dup", Label{RiskLevel::High, Category::DoS, "Flood"}}};
    std::vector<EvalRecord> records = {
        rec("dup", RiskLevel::High, Category::DoS, "Flood", 1.5, 12),
        rec("dup", RiskLevel::Low, Category::DoS, "Flood", 0.5, 9),
        rec("dup", RiskLevel::High, Category::Other, "Unknown", 1.5, 12),
    };
    MetricsReport a = evaluate(records, truth);
    std::swap(records[0], records[2]);
    std::swap(records[1], records[2]);
    MetricsReport b = evaluate(records, truth);
    CHECK(json(a).dump() == json(b).dump());
    CHECK(a.n == 3);
}
