#include "triagekit/relevance.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "triagekit/errors.hpp"
#include "triagekit/serialization.hpp"
#include "triagekit/subprocess.hpp"
#include "triagekit/text.hpp"

namespace triagekit {

ReasoningStep make_step(std::string text) {
    ReasoningStep step;
    step.token_len = token_count(text);
    step.text = std::move(text);
    return step;
}

ReasoningChain make_chain(const std::vector<std::string>& texts) {
    ReasoningChain chain;
    chain.steps.reserve(texts.size());
    for (const auto& t : texts) chain.steps.push_back(make_step(t));
    return chain;
}

int ReasoningChain::total_len() const {
    int n = 0;
    for (const auto& s : steps) n += s.token_len;
    return n;
}

ScorerSpec default_keyword_scorer() {
    ScorerSpec spec;
    spec.kind = ScorerKind::Keyword;
    spec.keyword_weights = {
        {"trojan", 5},     {"ransomware", 5}, {"worm", 5},        {"backdoor", 5},
        {"virus", 4},      {"malware", 4},    {"beacon", 3},      {"implant", 3},
        {"encrypted", 3},  {"payload", 2},    {"exploit", 5},     {"injection", 5},
        {"sql", 3},        {"xss", 5},        {"csrf", 5},        {"overflow", 4},
        {"shellcode", 5},  {"rce", 5},        {"scan", 4},        {"probe", 4},
        {"enumeration", 3},{"recon", 4},      {"sweep", 2},       {"exfiltration", 5},
        {"exfil", 5},      {"tunnel", 4},     {"staging", 3},     {"transfer", 2},
        {"flood", 5},      {"amplification", 4}, {"volumetric", 3}, {"syn", 2},
        {"suspicious", 2}, {"anomalous", 2},  {"unusual", 2},     {"lateral", 3},
        {"privilege", 3},  {"escalation", 3}, {"persistence", 3}, {"critical", 2},
    };
    return spec;
}

namespace {

double keyword_score(const std::string& text, const std::map<std::string, double>& weights) {
    std::set<std::string> seen;
    for (const auto& word : tokenize(text)) {
        std::string w = normalize_word(word);
        if (!w.empty()) seen.insert(std::move(w));
    }
    double score = 0.0;
    for (const auto& [keyword, weight] : weights) {
        if (seen.count(to_lower(keyword))) score += weight;
    }
    return score;
}

std::vector<double> external_scores(const ReasoningChain& chain, const NormalizedAlert& context,
                                    const Label& label, const ScorerSpec& scorer,
                                    std::optional<std::string>& aggregation) {
    static std::map<std::string, std::unique_ptr<LineProtocolClient>> clients;
    static std::mutex clients_mutex;
    LineProtocolClient* client = nullptr;
    {
        std::lock_guard<std::mutex> lock(clients_mutex);
        auto& slot = clients[scorer.command];
        if (!slot) slot = std::make_unique<LineProtocolClient>(scorer.command, scorer.timeout_s);
        client = slot.get();
    }

    json request{{"id", context.alert_id}, {"context", context}, {"label", label}};
    json steps = json::array();
    for (const auto& s : chain.steps) steps.push_back(s.text);
    request["steps"] = steps;

    std::string line = client->round_trip(request.dump(), context.alert_id);
    json response = json::parse(line);
    if (!response.contains("scores") || !response.at("scores").is_array())
        throw ExternalScorerFailure("scorer response missing scores array");
    auto scores = response.at("scores").get<std::vector<double>>();
    if (scores.size() != chain.steps.size())
        throw ExternalScorerFailure("scorer returned " + std::to_string(scores.size()) +
                                    " scores for " + std::to_string(chain.steps.size()) + " steps");
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0)
            throw ExternalScorerFailure("scorer returned a non-finite or negative score");
    }
    if (response.contains("aggregation")) aggregation = response.at("aggregation").get<std::string>();
    return scores;
}

}  // namespace

RelevanceVector score_chain(const ReasoningChain& chain, const NormalizedAlert& context,
                            const Label& label, const ScorerSpec& scorer) {
    if (chain.steps.empty()) throw InputError("cannot score an empty chain");
    RelevanceVector rel;
    switch (scorer.kind) {
        case ScorerKind::Keyword: {
            for (const auto& [keyword, weight] : scorer.keyword_weights) {
                if (weight < 0.0)
                    throw ConfigError("keyword weight must be non-negative: " + keyword);
            }
            rel.scorer_id = "keyword";
            rel.scores.reserve(chain.steps.size());
            for (const auto& step : chain.steps)
                rel.scores.push_back(keyword_score(step.text, scorer.keyword_weights));
            break;
        }
        case ScorerKind::Fixture: {
            rel.scorer_id = "fixture";
            auto fixtures = scorer.fixtures;
            if (!scorer.fixture_file.empty()) {
                std::ifstream in(scorer.fixture_file);
                if (!in) throw ConfigError("cannot open scorer fixture file: " + scorer.fixture_file);
                json j = json::parse(in);
                for (const auto& [id, scores] : j.items())
                    fixtures[id] = scores.get<std::vector<double>>();
            }
            auto it = fixtures.find(context.alert_id);
            if (it == fixtures.end())
                throw FixtureMissing("no fixture scores for chain id: " + context.alert_id);
            if (it->second.size() != chain.steps.size())
                throw LengthMismatch("fixture scores for " + context.alert_id +
                                     " do not match chain length");
            rel.scores = it->second;
            break;
        }
        case ScorerKind::External: {
            rel.scorer_id = "external";
            rel.scores = external_scores(chain, context, label, scorer, rel.aggregation);
            break;
        }
    }
    return rel;
}

double information_density(std::span<const int> token_lens, std::span<const double> scores,
                           double epsilon_smooth) {
    if (scores.empty()) return 0.0;
    double total_rel = 0.0;
    double total_len = 0.0;
    for (double s : scores) total_rel += s;
    for (int l : token_lens) total_len += l;
    return total_rel / (total_len + epsilon_smooth);
}

double information_density_subset(const ReasoningChain& chain, const RelevanceVector& rel,
                                  std::span<const int> selected, double epsilon_smooth) {
    if (rel.scores.size() != chain.steps.size())
        throw LengthMismatch("relevance vector does not match chain length");
    if (selected.empty()) return 0.0;
    double total_rel = 0.0;
    double total_len = 0.0;
    for (int idx : selected) {
        total_rel += rel.scores.at(static_cast<std::size_t>(idx));
        total_len += chain.steps.at(static_cast<std::size_t>(idx)).token_len;
    }
    return total_rel / (total_len + epsilon_smooth);
}

}  // namespace triagekit
