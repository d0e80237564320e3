#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "triagekit/ontology.hpp"

namespace triagekit {

enum class RouterBackend { KeywordRules, Fixture, External };

struct KeywordRouteRules {
    std::map<Category, std::map<std::string, double>> weights;  // >= 1 keyword per category
};

KeywordRouteRules default_route_rules();

struct FixtureRoute {
    Category category = Category::Other;
    double confidence = 0.0;
};

struct RouterConfig {
    double tau = 0.6;
    RouterBackend backend = RouterBackend::KeywordRules;
    std::vector<std::string> redaction = {"behavior", "protocol"};  // slots allowed cloud-side
    int max_response_tokens = 4;
    std::optional<double> simulated_latency_s;
    KeywordRouteRules rules = default_route_rules();
    std::map<std::string, FixtureRoute> fixtures;  // alert id -> routed result
    std::string command;                           // external backend
    double timeout_s = 10.0;

    void validate() const;
};

struct RoutingDecision {
    Category k_pred = Category::Other;
    double p_conf = 0.0;
    std::string routed_expert;
    bool used_fallback = false;
    bool degraded = false;            // backend error/unavailable
    nlohmann::json request_payload;   // the redacted document actually sent
    int response_tokens = 0;
    double latency_s = 0.0;
};

class LineProtocolClient;

// Router facade. Keyword and fixture backends are pure; the external
// backend serializes requests through one pooled child process.
class Router {
public:
    explicit Router(RouterConfig cfg);
    ~Router();

    // Classification plus threshold fallback. Backend failure degrades to
    // the fallback expert with p_conf = 0; nothing is thrown.
    RoutingDecision route(const NormalizedAlert& alert,
                          const std::map<Category, std::string>& domain_experts,
                          const std::string& fallback_expert) const;

    const RouterConfig& config() const { return cfg_; }

private:
    RouterConfig cfg_;
    mutable std::unique_ptr<LineProtocolClient> client_;
};

// Score each category over the alert's behavior/process/extra words;
// confidence is the softmax mass at the winner. All-zero scores yield
// (Other, 1/|categories|). Ties go to the lower-named category.
std::pair<Category, double> classify_keywords(const NormalizedAlert& alert,
                                              const KeywordRouteRules& rules);

// The redacted cloud request: exactly the allow-listed slots plus the closed
// category list as hints.
nlohmann::json build_cloud_request(const NormalizedAlert& alert,
                                   const std::vector<std::string>& redaction);

}  // namespace triagekit
