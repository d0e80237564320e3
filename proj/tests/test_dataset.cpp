#include <doctest.h>

#include <algorithm>
#include <set>

#include "triagekit/dataset.hpp"
#include "triagekit/errors.hpp"
#include "triagekit/rng.hpp"
#include "triagekit/serialization.hpp"

using namespace triagekit;

namespace {

TrainingTuple tuple_with(const std::string& id, RiskLevel risk, Category cat,
                         const std::string& subtype) {
    TrainingTuple t;
    t.alert.alert_id = id;
    t.label = Label{risk, cat, subtype};
    t.compressed.selected = {0};
    t.compressed.steps = {make_step("evidence bullet")};
    return t;
}

std::vector<TrainingTuple> corpus_with_counts(
    const std::vector<std::pair<Category, int>>& counts) {
    std::vector<TrainingTuple> corpus;
    int serial = 0;
    for (const auto& [cat, n] : counts) {
        for (int i = 0; i < n; ++i)
            corpus.push_back(tuple_with("t" + std::to_string(serial++), RiskLevel::Low, cat,
                                        cat == Category::Other ? "APT" : "Unknown"));
    }
    return corpus;
}

ReasoningChain template_chain() {
    return make_chain({
        "process beacon matches known trojan command channel",          // rel-heavy
        "telemetry window covers the previous fifteen minute interval",
        "ransomware style encrypted writes hit shared user directories",
        "no additional context returned by the upstream collector",
        "suspicious payload staging under the temp directory",
        "asset inventory lookup shows a managed workstation owner",
        "backdoor implant persistence found in scheduled task definitions",
        "time source verified against the primary reference clock",
        "lateral movement with privilege escalation artifacts observed",
        "log schema version matches the current parser revision",
        "exfil staging artifacts reference the same batch id",
        "collector heartbeat remained stable during the capture period",
    });
}

}  // namespace

TEST_CASE("build_tuple lands in the 3-5 bullet range on a 12-step chain") {
    ReasoningChain chain = template_chain();
    NormalizedAlert alert;
    alert.alert_id = "t0";
    Label label{RiskLevel::High, Category::Malware, "Trojan"};
    RelevanceVector rel = score_chain(chain, alert, label, default_keyword_scorer());

    TupleBuildConfig cfg;
    cfg.compression.delta_token = static_cast<int>(0.32 * chain.total_len());
    TrainingTuple tuple = build_tuple(alert, label, chain, rel, cfg, FidelityEvaluatorSpec{});
    CHECK(tuple.compressed.selected.size() >= 3);
    CHECK(tuple.compressed.selected.size() <= 5);
    CHECK(tuple.provenance.scorer_id == "keyword");
    CHECK(tuple.provenance.cfg_hash == cfg_hash(cfg.compression));
}

TEST_CASE("build_tuple keeps a single in-budget step") {
    ReasoningChain chain = make_chain({"single trojan evidence step"});
    NormalizedAlert alert;
    Label label{RiskLevel::High, Category::Malware, "Trojan"};
    RelevanceVector rel = score_chain(chain, alert, label, default_keyword_scorer());
    TupleBuildConfig cfg;
    TrainingTuple tuple = build_tuple(alert, label, chain, rel, cfg, FidelityEvaluatorSpec{});
    CHECK(tuple.compressed.selected == std::vector<int>{0});
}

TEST_CASE("build_tuple rejects chains whose every step exceeds the budget") {
    ReasoningChain chain = make_chain({"a b c d e f", "g h i j k l"});
    NormalizedAlert alert;
    RelevanceVector rel;
    rel.scores = {5, 5};
    TupleBuildConfig cfg;
    cfg.compression.delta_token = 3;
    CHECK_THROWS_AS(build_tuple(alert, Label{}, chain, rel, cfg, FidelityEvaluatorSpec{}),
                    EmptyReasoning);
}

TEST_CASE("build_tuple trims past max_bullets by lowest density") {
    ReasoningChain chain = make_chain({"a", "b", "c", "d"});
    NormalizedAlert alert;
    RelevanceVector rel;
    rel.scores = {9, 7, 5, 3};
    TupleBuildConfig cfg;
    cfg.max_bullets = 2;
    cfg.compression.delta_token = 10;
    TrainingTuple tuple = build_tuple(alert, Label{}, chain, rel, cfg, FidelityEvaluatorSpec{});
    CHECK(tuple.compressed.selected == std::vector<int>{0, 1});
}

TEST_CASE("build_tuple enforces single-sentence bullets") {
    ReasoningChain chain = make_chain({"two sentences here. second one follows"});
    NormalizedAlert alert;
    RelevanceVector rel;
    rel.scores = {4};
    TupleBuildConfig cfg;
    CHECK_THROWS_AS(build_tuple(alert, Label{}, chain, rel, cfg, FidelityEvaluatorSpec{}),
                    InputError);
}

TEST_CASE("partition merges under-threshold categories into the catch-all") {
    auto corpus = corpus_with_counts(
        {{Category::Malware, 600}, {Category::DoS, 200}, {Category::Other, 120}});
    PartitionConfig cfg;
    cfg.min_samples = 500;
    DomainPartition part = partition(corpus, cfg);
    REQUIRE(part.domains.size() == 2);
    CHECK(part.domains.at("malware").size() == 600);
    CHECK(part.domains.at("other").size() == 320);
    CHECK(part.catch_all_id == "other");
    CHECK(part.catch_all_below_min);
}

TEST_CASE("partition is the identity when every category clears the bar") {
    auto corpus = corpus_with_counts(
        {{Category::Malware, 600}, {Category::DoS, 700}, {Category::Exploitation, 550}});
    PartitionConfig cfg;
    cfg.min_samples = 500;
    DomainPartition part = partition(corpus, cfg);
    REQUIRE(part.domains.size() == 3);
    CHECK(part.domains.at("malware").size() == 600);
    CHECK(part.domains.at("dos").size() == 700);
    CHECK(part.domains.at("exploitation").size() == 550);
    CHECK(part.domains.count("other") == 0);  // empty catch-all
}

TEST_CASE("partition covers the corpus with disjoint domains") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TrainingTuple> corpus;
        int serial = 0;
        for (Category c : kCategories) {
            int n = static_cast<int>(rng.below(40));
            for (int i = 0; i < n; ++i)
                corpus.push_back(tuple_with("r" + std::to_string(serial++), RiskLevel::Low, c,
                                            "Unknown"));
        }
        PartitionConfig cfg;
        cfg.min_samples = static_cast<int>(1 + rng.below(30));
        cfg.k_max = static_cast<int>(2 + rng.below(6));
        DomainPartition part = partition(corpus, cfg);

        std::set<std::string> seen;
        std::size_t total = 0;
        for (const auto& [domain, ids] : part.domains) {
            total += ids.size();
            for (const auto& id : ids) CHECK(seen.insert(id).second);
        }
        CHECK(total == corpus.size());
        CHECK(static_cast<int>(part.domains.size()) <= cfg.k_max);
    }
}

TEST_CASE("pinned four-domain deployment shape is honored") {
    auto corpus = corpus_with_counts({{Category::Exploitation, 40},
                                      {Category::Malware, 30},
                                      {Category::Reconnaissance, 10},
                                      {Category::DoS, 10},
                                      {Category::Other, 5},
                                      {Category::Exfiltration, 5}});
    PartitionConfig cfg;
    cfg.min_samples = 1;
    cfg.pinned = std::map<std::string, std::vector<Category>>{
        {"web_intrusion", {Category::Exploitation}},
        {"attack_use", {Category::Exfiltration}},
        {"malicious_software", {Category::Malware}},
        {"other", {Category::Reconnaissance, Category::DoS, Category::Other}},
    };
    DomainPartition part = partition(corpus, cfg);
    REQUIRE(part.domains.size() == 4);
    CHECK(part.domains.at("web_intrusion").size() == 40);
    CHECK(part.domains.at("malicious_software").size() == 30);
    CHECK(part.domains.at("attack_use").size() == 5);
    CHECK(part.domains.at("other").size() == 25);
    CHECK(part.catch_all_id == "other");
}

TEST_CASE("split hits exact 70/10/20 on one hundred uniform tuples") {
    std::vector<TrainingTuple> domain;
    for (int i = 0; i < 100; ++i)
        domain.push_back(tuple_with("s" + std::to_string(i), RiskLevel::Low, Category::Malware,
                                    "Trojan"));
    SplitSpec spec;
    spec.seed = 7;
    SplitResult result = split(domain, spec);
    CHECK(result.train.size() == 70);
    CHECK(result.val.size() == 10);
    CHECK(result.test.size() == 20);
}

TEST_CASE("degenerate split puts everything in train") {
    std::vector<TrainingTuple> domain;
    for (int i = 0; i < 9; ++i)
        domain.push_back(tuple_with("s" + std::to_string(i), RiskLevel::High, Category::DoS,
                                    "Flood"));
    SplitSpec spec;
    spec.train = 1.0;
    spec.val = 0.0;
    spec.test = 0.0;
    SplitResult result = split(domain, spec);
    CHECK(result.train.size() == 9);
    CHECK(result.val.empty());
    CHECK(result.test.empty());
}

TEST_CASE("split is deterministic in the seed and disjoint-covering") {
    Rng rng(88);
    std::vector<TrainingTuple> domain;
    for (int i = 0; i < 157; ++i) {
        RiskLevel risk = static_cast<RiskLevel>(rng.below(4));
        Category cat = static_cast<Category>(rng.below(6));
        domain.push_back(tuple_with("m" + std::to_string(i), risk, cat, "Unknown"));
    }
    SplitSpec spec;
    spec.seed = 1234;
    SplitResult a = split(domain, spec);
    SplitResult b = split(domain, spec);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    std::set<std::string> all;
    for (const auto& id : a.train) CHECK(all.insert(id).second);
    for (const auto& id : a.val) CHECK(all.insert(id).second);
    for (const auto& id : a.test) CHECK(all.insert(id).second);
    CHECK(all.size() == domain.size());

    SplitSpec other = spec;
    other.seed = 4321;
    SplitResult c = split(domain, other);
    CHECK(a.train != c.train);  // overwhelmingly likely with 157 ids
}

TEST_CASE("per-stratum split counts stay within one of the exact ratio") {
    Rng rng(31);
    std::vector<TrainingTuple> domain;
    std::map<std::string, int> stratum_sizes;
    for (int i = 0; i < 237; ++i) {
        RiskLevel risk = static_cast<RiskLevel>(rng.below(4));
        Category cat = static_cast<Category>(rng.below(3));
        domain.push_back(tuple_with("p" + std::to_string(i), risk, cat, "Unknown"));
        stratum_sizes[to_string(risk) + "|" + to_string(cat)]++;
    }
    SplitSpec spec;
    spec.seed = 5;
    SplitResult result = split(domain, spec);

    auto label_of = [&](const std::string& id) {
        for (const auto& t : domain)
            if (t.id() == id) return t.label;
        FAIL("unknown id");
        return Label{};
    };
    std::map<std::string, std::array<int, 3>> per_stratum;
    for (const auto& id : result.train) {
        Label l = label_of(id);
        per_stratum[to_string(l.risk_level) + "|" + to_string(l.category)][0]++;
    }
    for (const auto& id : result.val) {
        Label l = label_of(id);
        per_stratum[to_string(l.risk_level) + "|" + to_string(l.category)][1]++;
    }
    for (const auto& id : result.test) {
        Label l = label_of(id);
        per_stratum[to_string(l.risk_level) + "|" + to_string(l.category)][2]++;
    }
    const double ratios[3] = {0.7, 0.1, 0.2};
    for (const auto& [key, counts] : per_stratum) {
        int size = stratum_sizes[key];
        for (int part = 0; part < 3; ++part) {
            CHECK(std::abs(counts[static_cast<std::size_t>(part)] - ratios[part] * size) <=
                  1.0 + 1e-9);
        }
    }
}

TEST_CASE("synthetic generator hits exact largest-remainder counts") {
    SUBCASE("attack-log mix at n=1000") {
        SyntheticSpec spec = default_synthetic_spec();
        spec.n = 1000;
        spec.seed = 77;
        auto corpus = generate_synthetic(spec);
        REQUIRE(corpus.size() == 1000);
        std::map<Category, int> counts;
        for (const auto& rec : corpus) counts[rec.truth.category]++;
        CHECK(counts[Category::Exploitation] == 350);
        CHECK(counts[Category::Malware] == 250);
        CHECK(counts[Category::Reconnaissance] == 200);
        CHECK(counts[Category::Exfiltration] == 100);
        CHECK(counts[Category::Other] == 100);
    }
    SUBCASE("risk-information risk mix at n=100") {
        SyntheticSpec spec = default_synthetic_spec();
        spec.n = 100;
        spec.seed = 9;
        auto corpus = generate_synthetic(spec);
        std::map<RiskLevel, int> counts;
        for (const auto& rec : corpus) counts[rec.truth.risk_level]++;
        CHECK(counts[RiskLevel::Low] == 65);
        CHECK(counts[RiskLevel::Medium] == 25);
        CHECK(counts[RiskLevel::High] == 10);
    }
    SUBCASE("n=0 yields an empty corpus") {
        SyntheticSpec spec = default_synthetic_spec();
        spec.n = 0;
        CHECK(generate_synthetic(spec).empty());
    }
}

TEST_CASE("synthetic chains are 10-15 steps and compress non-empty at defaults") {
    SyntheticSpec spec = default_synthetic_spec();
    spec.n = 200;
    spec.seed = 3;
    auto corpus = generate_synthetic(spec);
    ScorerSpec scorer = default_keyword_scorer();
    CompressionConfig cfg;  // default budget
    for (const auto& rec : corpus) {
        std::size_t n = rec.chain.steps.size();
        CHECK(n >= 10);
        CHECK(n <= 15);
        NormalizedAlert alert = normalize(rec.raw, default_schema());
        RelevanceVector rel = score_chain(rec.chain, alert, rec.truth, scorer);
        CompressedChain out =
            compress(rec.chain, rel, alert, rec.truth, cfg, FidelityEvaluatorSpec{});
        CHECK_FALSE(out.selected.empty());
    }
}

TEST_CASE("synthetic generation is deterministic and label-recoverable") {
    SyntheticSpec spec = default_synthetic_spec();
    spec.n = 64;
    spec.seed = 11;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    REQUIRE(a.size() == b.size());
    Taxonomy taxonomy = default_taxonomy();
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(json(a[i]).dump() == json(b[i]).dump());
        NormalizedAlert alert = normalize(a[i].raw, default_schema());
        auto subtype = subtype_from_process(*alert.process, taxonomy);
        REQUIRE(subtype.has_value());
        CHECK(*subtype == a[i].truth.subtype);
        auto risk = risk_from_hash(*alert.file_hash);
        REQUIRE(risk.has_value());
        CHECK(*risk == a[i].truth.risk_level);
        CHECK(validate_label(a[i].truth, taxonomy).empty());
    }
}

TEST_CASE("spec validation rejects malformed mixes and ratios") {
    SyntheticSpec bad = default_synthetic_spec();
    bad.category_mix[Category::DoS] = 0.5;  // mix no longer sums to 1
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    SplitSpec negative;
    negative.train = 1.2;
    negative.val = -0.2;
    negative.test = 0.0;
    CHECK_THROWS_AS(negative.validate(), ConfigError);

    SplitSpec skewed;
    skewed.train = 0.5;
    skewed.val = 0.1;
    skewed.test = 0.1;
    CHECK_THROWS_AS(skewed.validate(), ConfigError);
}
