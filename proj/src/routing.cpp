#include "triagekit/routing.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "triagekit/errors.hpp"
#include "triagekit/serialization.hpp"
#include "triagekit/subprocess.hpp"
#include "triagekit/text.hpp"

namespace triagekit {

KeywordRouteRules default_route_rules() {
    KeywordRouteRules rules;
    rules.weights[Category::Malware] = {{"trojan", 2},  {"ransomware", 2}, {"worm", 2},
                                        {"backdoor", 2}, {"virus", 2},      {"malware", 2},
                                        {"beacon", 1},   {"implant", 1}};
    rules.weights[Category::Exploitation] = {{"exploit", 2},  {"injection", 2}, {"sql", 1},
                                             {"xss", 2},      {"csrf", 2},      {"overflow", 2},
                                             {"shellcode", 2}, {"rce", 2}};
    rules.weights[Category::Reconnaissance] = {{"scan", 2},        {"probe", 2}, {"sweep", 2},
                                               {"recon", 2},       {"enumeration", 2},
                                               {"fingerprint", 1}};
    rules.weights[Category::Exfiltration] = {{"exfiltration", 2}, {"exfil", 2},   {"tunnel", 2},
                                             {"staging", 1},      {"transfer", 1}, {"upload", 1}};
    rules.weights[Category::DoS] = {{"flood", 2}, {"amplification", 2}, {"volumetric", 2},
                                    {"dos", 2},   {"syn", 1}};
    rules.weights[Category::Other] = {{"suspicious", 1}, {"anomaly", 1}, {"unknown", 1}, {"apt", 1}};
    return rules;
}

void RouterConfig::validate() const {
    if (tau < 0.0 || tau > 1.0) throw ConfigError("tau must be in [0,1]");
    if (max_response_tokens < 1) throw ConfigError("max_response_tokens must be >= 1");
    if (backend == RouterBackend::KeywordRules) {
        for (Category c : kCategories) {
            auto it = rules.weights.find(c);
            if (it == rules.weights.end() || it->second.empty())
                throw ConfigError("keyword route rules need at least one keyword for " + to_string(c));
        }
    }
    if (backend == RouterBackend::External && command.empty())
        throw ConfigError("external router backend needs a command");
}

std::pair<Category, double> classify_keywords(const NormalizedAlert& alert,
                                              const KeywordRouteRules& rules) {
    std::set<std::string> words;
    const std::string blob = alert.text_blob();  // keep alive behind the views
    for (const auto& w : tokenize(blob)) {
        std::string norm = normalize_word(w);
        if (!norm.empty()) words.insert(std::move(norm));
    }

    std::map<Category, double> scores;
    double max_score = 0.0;
    for (const auto& [category, table] : rules.weights) {
        double s = 0.0;
        for (const auto& [keyword, weight] : table)
            if (words.count(to_lower(keyword))) s += weight;
        scores[category] = s;
        max_score = std::max(max_score, s);
    }
    if (max_score == 0.0) return {Category::Other, 1.0 / static_cast<double>(kCategories.size())};

    Category winner = Category::Other;
    double winner_score = -1.0;
    for (Category c : kCategories) {
        double s = scores.count(c) ? scores[c] : 0.0;
        if (s > winner_score || (s == winner_score && to_string(c) < to_string(winner))) {
            winner = c;
            winner_score = s;
        }
    }
    double denom = 0.0;
    for (Category c : kCategories) {
        double s = scores.count(c) ? scores[c] : 0.0;
        denom += std::exp(s - max_score);
    }
    return {winner, std::exp(winner_score - max_score) / denom};
}

nlohmann::json build_cloud_request(const NormalizedAlert& alert,
                                   const std::vector<std::string>& redaction) {
    nlohmann::json doc;
    for (const auto& slot : redaction) {
        std::string name = to_lower(slot);
        if (name == "behavior") doc["behavior"] = alert.behavior.value_or("");
        else if (name == "protocol") doc["protocol"] = alert.protocol.value_or("");
        else if (name == "process") doc["process"] = alert.process.value_or("");
        else if (name == "src_ip") doc["src_ip"] = alert.src_ip.value_or("");
        else if (name == "dst_ip") doc["dst_ip"] = alert.dst_ip.value_or("");
        else if (name == "src_port") doc["src_port"] = alert.src_port.value_or(0);
        else if (name == "dst_port") doc["dst_port"] = alert.dst_port.value_or(0);
        else if (name == "file_hash") doc["file_hash"] = alert.file_hash.value_or("");
        else throw ConfigError("unknown redaction slot: " + slot);
    }
    nlohmann::json hints = nlohmann::json::array();
    for (Category c : kCategories) hints.push_back(to_string(c));
    doc["category_hints"] = hints;
    return doc;
}

Router::Router(RouterConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.backend == RouterBackend::External)
        client_ = std::make_unique<LineProtocolClient>(cfg_.command, cfg_.timeout_s);
}

Router::~Router() = default;

namespace {
std::string canonical_response(Category category, double confidence) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "category: %s confidence: %.2f",
                  to_string(category).c_str(), confidence);
    return buf;
}
}  // namespace

RoutingDecision Router::route(const NormalizedAlert& alert,
                              const std::map<Category, std::string>& domain_experts,
                              const std::string& fallback_expert) const {
    RoutingDecision decision;
    decision.request_payload = build_cloud_request(alert, cfg_.redaction);

    auto started = std::chrono::steady_clock::now();
    std::string response_text;
    try {
        switch (cfg_.backend) {
            case RouterBackend::KeywordRules: {
                auto [category, confidence] = classify_keywords(alert, cfg_.rules);
                decision.k_pred = category;
                decision.p_conf = confidence;
                response_text = canonical_response(category, confidence);
                break;
            }
            case RouterBackend::Fixture: {
                auto it = cfg_.fixtures.find(alert.alert_id);
                if (it == cfg_.fixtures.end())
                    throw FixtureMissing("no route fixture for " + alert.alert_id);
                decision.k_pred = it->second.category;
                decision.p_conf = it->second.confidence;
                response_text = canonical_response(decision.k_pred, decision.p_conf);
                break;
            }
            case RouterBackend::External: {
                nlohmann::json request = decision.request_payload;
                request["id"] = alert.alert_id;
                std::string line = client_->round_trip(request.dump(), alert.alert_id);
                nlohmann::json response = nlohmann::json::parse(line);
                decision.k_pred = parse_category(response.at("category").get<std::string>());
                decision.p_conf = response.at("confidence").get<double>();
                if (!std::isfinite(decision.p_conf) || decision.p_conf < 0.0 || decision.p_conf > 1.0)
                    throw ExternalScorerFailure("router confidence out of range");
                response_text = line;
                break;
            }
        }
    } catch (const std::exception&) {
        // Backend failure is absorbed: degraded route to the fallback expert.
        decision.degraded = true;
        decision.k_pred = Category::Other;
        decision.p_conf = 0.0;
        response_text.clear();
    }

    decision.response_tokens = token_count(response_text);
    if (decision.response_tokens > cfg_.max_response_tokens)
        std::fprintf(stderr, "warning: router response exceeded %d tokens (%d) for alert %s\n",
                     cfg_.max_response_tokens, decision.response_tokens, alert.alert_id.c_str());

    decision.used_fallback = decision.degraded || decision.p_conf < cfg_.tau;
    if (decision.used_fallback) {
        decision.routed_expert = fallback_expert;
    } else {
        auto it = domain_experts.find(decision.k_pred);
        decision.routed_expert = it != domain_experts.end() ? it->second : fallback_expert;
    }

    if (cfg_.simulated_latency_s) {
        decision.latency_s = *cfg_.simulated_latency_s;
    } else {
        decision.latency_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    return decision;
}

}  // namespace triagekit
