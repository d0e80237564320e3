#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "triagekit/errors.hpp"
#include "triagekit/relevance.hpp"
#include "triagekit/rng.hpp"

using namespace triagekit;

namespace {

const NormalizedAlert& test_context() {
    static const NormalizedAlert alert = [] {
        NormalizedAlert a;
        a.alert_id = "c1";
        return a;
    }();
    return alert;
}

ScorerSpec keyword_scorer(std::map<std::string, double> weights) {
    ScorerSpec spec;
    spec.kind = ScorerKind::Keyword;
    spec.keyword_weights = std::move(weights);
    return spec;
}

std::string helper(const char* name) {
    return std::string("python3 ") + TRIAGEKIT_TEST_HELPER_DIR + "/" + name;
}

}  // namespace

TEST_CASE("keyword scorer sums configured weights of present words") {
    ScorerSpec scorer = keyword_scorer({{"ransomware", 5}, {"encrypted", 3}});
    ReasoningChain chain = make_chain({"files encrypted by ransomware payload",
                                       "routine heartbeat message",
                                       "Encrypted, ransomware!"});
    RelevanceVector rel = score_chain(chain, test_context(), Label{}, scorer);
    CHECK(rel.scores == std::vector<double>{8.0, 0.0, 8.0});
    CHECK(rel.scorer_id == "keyword");
}

TEST_CASE("keyword scorer is word-order invariant") {
    ScorerSpec scorer = keyword_scorer({{"scan", 4}, {"probe", 2}});
    ReasoningChain a = make_chain({"probe then scan the host"});
    ReasoningChain b = make_chain({"the host scan then probe"});
    CHECK(score_chain(a, test_context(), Label{}, scorer).scores ==
          score_chain(b, test_context(), Label{}, scorer).scores);
}

TEST_CASE("fixture scorer echoes stored scores by chain id") {
    ScorerSpec scorer;
    scorer.kind = ScorerKind::Fixture;
    scorer.fixtures["c1"] = {8.0, 6.0, 1.0};
    ReasoningChain chain = make_chain({"a", "b", "c"});
    RelevanceVector rel = score_chain(chain, test_context(), Label{}, scorer);
    CHECK(rel.scores == std::vector<double>{8.0, 6.0, 1.0});

    NormalizedAlert other;
    other.alert_id = "missing";
    CHECK_THROWS_AS(score_chain(chain, other, Label{}, scorer), FixtureMissing);
}

TEST_CASE("information density matches the direct ratio") {
    // one step: 8 / (4 + 1)
    std::vector<int> lens{4};
    std::vector<double> scores{8.0};
    CHECK(information_density(lens, scores, 1.0) == doctest::Approx(1.6).epsilon(1e-12));

    // two steps: (8 + 6) / (4 + 6 + 1)
    std::vector<int> lens2{4, 6};
    std::vector<double> scores2{8.0, 6.0};
    CHECK(information_density(lens2, scores2, 1.0) ==
          doctest::Approx(14.0 / 11.0).epsilon(1e-12));

    CHECK(information_density({}, {}, 1.0) == 0.0);
    CHECK(information_density({}, {}, 0.001) == 0.0);
}

TEST_CASE("density scales linearly with relevance") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + rng.below(6);
        std::vector<int> lens;
        std::vector<double> scores;
        for (std::size_t i = 0; i < n; ++i) {
            lens.push_back(static_cast<int>(1 + rng.below(9)));
            scores.push_back(rng.unit() * 10.0);
        }
        double c = 0.5 + rng.unit() * 4.0;
        std::vector<double> scaled = scores;
        for (double& s : scaled) s *= c;
        CHECK(information_density(lens, scaled, 1.0) ==
              doctest::Approx(c * information_density(lens, scores, 1.0)).epsilon(1e-9));
    }
}

TEST_CASE("zero-length positive step never lowers density, zero-score step strictly does") {
    std::vector<int> lens{4, 6};
    std::vector<double> scores{8.0, 6.0};
    double base = information_density(lens, scores, 1.0);

    std::vector<int> with_free{4, 6, 0};
    std::vector<double> free_scores{8.0, 6.0, 2.0};
    CHECK(information_density(with_free, free_scores, 1.0) >= base);

    std::vector<int> with_dead{4, 6, 5};
    std::vector<double> dead_scores{8.0, 6.0, 0.0};
    CHECK(information_density(with_dead, dead_scores, 1.0) < base);
}

TEST_CASE("external scorer speaks the line protocol") {
    ScorerSpec scorer;
    scorer.kind = ScorerKind::External;
    scorer.command = helper("scorer_tokens.py");
    scorer.timeout_s = 10.0;
    ReasoningChain chain = make_chain({"one two three", "four five", "six"});
    RelevanceVector rel = score_chain(chain, test_context(), Label{}, scorer);
    CHECK(rel.scores == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(rel.scorer_id == "external");
    REQUIRE(rel.aggregation.has_value());
    CHECK(*rel.aggregation == "l2_sum");
}

TEST_CASE("external scorer tolerates out-of-order responses") {
    ScorerSpec scorer;
    scorer.kind = ScorerKind::External;
    scorer.command = helper("scorer_out_of_order.py");
    ReasoningChain chain = make_chain({"a b", "c"});
    RelevanceVector rel = score_chain(chain, test_context(), Label{}, scorer);
    CHECK(rel.scores == std::vector<double>{2.0, 1.0});
}

TEST_CASE("external scorer failure surfaces as ExternalScorerFailure") {
    SUBCASE("dead process") {
        ScorerSpec scorer;
        scorer.kind = ScorerKind::External;
        scorer.command = "false";
        scorer.timeout_s = 2.0;
        ReasoningChain chain = make_chain({"a"});
        CHECK_THROWS_AS(score_chain(chain, test_context(), Label{}, scorer),
                        ExternalScorerFailure);
    }
    SUBCASE("negative score rejected") {
        ScorerSpec scorer;
        scorer.kind = ScorerKind::External;
        scorer.command = helper("scorer_negative.py");
        ReasoningChain chain = make_chain({"a"});
        CHECK_THROWS_AS(score_chain(chain, test_context(), Label{}, scorer),
                        ExternalScorerFailure);
    }
    SUBCASE("timeout") {
        ScorerSpec scorer;
        scorer.kind = ScorerKind::External;
        scorer.command = helper("scorer_silent.py");
        scorer.timeout_s = 0.3;
        ReasoningChain chain = make_chain({"a"});
        CHECK_THROWS_AS(score_chain(chain, test_context(), Label{}, scorer),
                        ExternalScorerFailure);
    }
}

TEST_CASE("negative keyword weights are a config error") {
    ScorerSpec scorer = keyword_scorer({{"scan", -1.0}});
    ReasoningChain chain = make_chain({"scan"});
    CHECK_THROWS_AS(score_chain(chain, test_context(), Label{}, scorer), ConfigError);
}

TEST_CASE("fixture scores load from a fixture file") {
    std::string path =
        (std::filesystem::temp_directory_path() / "triagekit_fixture_scores.json").string();
    {
        std::ofstream out(path);
        out << R"({"c1": [4.0, 2.0]})";
    }
    ScorerSpec scorer;
    scorer.kind = ScorerKind::Fixture;
    scorer.fixture_file = path;
    ReasoningChain chain = make_chain({"a", "b"});
    RelevanceVector rel = score_chain(chain, test_context(), Label{}, scorer);
    CHECK(rel.scores == std::vector<double>{4.0, 2.0});
}

TEST_CASE("scoring an empty chain is rejected") {
    ReasoningChain chain;
    CHECK_THROWS_AS(score_chain(chain, test_context(), Label{}, default_keyword_scorer()),
                    InputError);
}

TEST_CASE("token lengths are computed from text") {
    ReasoningStep step = make_step("three token step");
    CHECK(step.token_len == 3);
    ReasoningChain chain = make_chain({"a b", "c d e"});
    CHECK(chain.total_len() == 5);
}
