#include "triagekit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "triagekit/errors.hpp"
#include "triagekit/rng.hpp"
#include "triagekit/serialization.hpp"
#include "triagekit/text.hpp"

namespace triagekit {

void SplitSpec::validate() const {
    if (train < 0 || val < 0 || test < 0) throw ConfigError("split ratios must be non-negative");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

void SyntheticSpec::validate() const {
    if (n < 0) throw ConfigError("synthetic n must be non-negative");
    double cat = 0.0, risk = 0.0;
    for (const auto& [c, f] : category_mix) cat += f;
    for (const auto& [r, f] : risk_mix) risk += f;
    if (std::abs(cat - 1.0) > 1e-9) throw ConfigError("category mix must sum to 1");
    if (std::abs(risk - 1.0) > 1e-9) throw ConfigError("risk mix must sum to 1");
}

SyntheticSpec default_synthetic_spec() {
    SyntheticSpec spec;
    spec.category_mix = {{Category::Exploitation, 0.35},
                         {Category::Malware, 0.25},
                         {Category::Reconnaissance, 0.20},
                         {Category::Exfiltration, 0.10},
                         {Category::Other, 0.10}};
    spec.risk_mix = {{RiskLevel::Low, 0.65}, {RiskLevel::Medium, 0.25}, {RiskLevel::High, 0.10}};
    return spec;
}

namespace {

// Largest-remainder apportionment: counts sum to n exactly and each count is
// within 1 of n * fraction. Ties broken by input order.
std::vector<int> largest_remainder(int n, const std::vector<double>& fractions) {
    std::vector<int> counts(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        double exact = n * fractions[i];
        counts[i] = static_cast<int>(std::floor(exact + 1e-12));
        assigned += counts[i];
        remainders.push_back({exact - counts[i], i});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; i < n - assigned; ++i) counts[remainders[static_cast<std::size_t>(i)].second]++;
    return counts;
}

bool single_sentence(const std::string& text) {
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') &&
            std::isspace(static_cast<unsigned char>(text[i + 1])))
            return false;
    }
    return true;
}

struct CategoryTemplates {
    const char* behavior;
    std::vector<const char*> evidence;  // keyword-bearing steps, 8-9 tokens each
    std::vector<const char*> subtypes;
    int dst_port;
    const char* protocol;
};

const std::map<Category, CategoryTemplates>& category_templates() {
    static const std::map<Category, CategoryTemplates> t = {
        {Category::Malware,
         {"trojan beacon with encrypted implant callback traffic",
          {"process {proc} exhibits trojan beacon callbacks to rare host",
           "ransomware style encrypted writes hit shared user directories",
           "backdoor implant persistence found in scheduled task definitions",
           "suspicious payload dropped by {proc} into temp path",
           "lateral movement with privilege escalation artifacts observed here"},
          {"Trojan", "Ransomware", "Worm"},
          445,
          "smb"}},
        {Category::Exploitation,
         {"sql injection exploit attempt against login endpoint",
          {"sql injection probe against login form with quotes",
           "exploit payload targets known overflow in exposed service",
           "xss vector embedded in request parameter draws reflection",
           "shellcode fragment found inside the decoded post body",
           "rce attempt chains crafted headers with template injection"},
          {"SQLInjection", "XSS", "CSRF"},
          443,
          "https"}},
        {Category::Reconnaissance,
         {"port scan probe sweep across the subnet",
          {"sequential port scan touches many closed services quickly",
           "probe requests enumerate exposed admin panels and versions",
           "network sweep maps the subnet with crafted pings",
           "recon fingerprints server banners across many common ports",
           "enumeration of user accounts via timing differences noted"},
          {"PortScan", "Probe", "Fuzzing"},
          22,
          "tcp"}},
        {Category::Exfiltration,
         {"staged exfiltration tunnel transfer to external host",
          {"outbound exfiltration tunnel carries compressed archives at night",
           "staging directory fills with collected documents before transfer",
           "dns tunnel encodes stolen data in long subdomains",
           "large exfil upload to unfamiliar endpoint breaks baseline",
           "exfil batch matches earlier collection job artifacts exactly"},
          {"DataTheft", "Tunneling"},
          53,
          "dns"}},
        {Category::DoS,
         {"syn flood volumetric amplification burst detected",
          {"syn flood saturates the listener queue within seconds",
           "volumetric amplification reflects traffic off open dns resolvers",
           "request flood repeats identical headers at machine rate",
           "connection table exhaustion follows the sudden traffic spike",
           "flood pattern matches a known booter service signature"},
          {"Flood", "Amplification"},
          80,
          "http"}},
        {Category::Other,
         {"suspicious anomaly unknown pattern flagged for review",
          {"suspicious anomalous session deviates from the weekly baseline",
           "unusual privilege change lacks a matching approval ticket",
           "unknown binary executes from a user writable path",
           "apt style staged persistence hints at manual operation",
           "suspicious timing aligns with prior flagged incidents here"},
          {"APT", "Suspicious", "Unknown"},
          8080,
          "tcp"}},
    };
    return t;
}

const std::vector<const char*>& filler_templates() {
    static const std::vector<const char*> fillers = {
        "telemetry window covers the previous fifteen minute interval",
        "no additional context returned by the upstream collector",
        "asset inventory lookup shows a managed workstation owner",
        "duplicate suppression applied before enrichment of this event",
        "time source verified against the primary reference clock",
        "log schema version matches the current parser revision",
        "event forwarded through the regional aggregation relay node",
        "retention policy marks this record for ninety days",
        "adjacent events in the same window look routine",
        "collector heartbeat remained stable during the capture period",
        "parser normalized field names without loss of detail",
        "queue depth stayed below the alerting threshold throughout",
    };
    return fillers;
}

std::string substitute(std::string text, const std::string& proc) {
    if (auto pos = text.find("{proc}"); pos != std::string::npos)
        text.replace(pos, 6, proc);
    return text;
}

const std::vector<LogSource>& synthetic_sources() {
    static const std::vector<LogSource> s = {LogSource::Edr, LogSource::Ids, LogSource::Firewall,
                                             LogSource::CloudApi, LogSource::WebApp};
    return s;
}

}  // namespace

char risk_hash_digit(RiskLevel r) { return static_cast<char>('0' + static_cast<int>(r)); }

std::optional<RiskLevel> risk_from_hash(const std::string& file_hash) {
    if (file_hash.empty()) return std::nullopt;
    char c = file_hash[0];
    if (c < '0' || c > '3') return std::nullopt;
    return static_cast<RiskLevel>(c - '0');
}

std::optional<std::string> subtype_from_process(const std::string& process, const Taxonomy& taxonomy) {
    auto pos = process.find("_payload");
    if (pos == std::string::npos || pos == 0) return std::nullopt;
    return taxonomy.canonical_subtype(process.substr(0, pos));
}

TrainingTuple build_tuple(const NormalizedAlert& alert, const Label& label,
                          const ReasoningChain& full_chain, const RelevanceVector& rel,
                          const TupleBuildConfig& cfg, const FidelityEvaluatorSpec& fid) {
    if (full_chain.steps.empty()) throw InputError("full chain must have at least one step");
    if (cfg.max_bullets < 1) throw ConfigError("max_bullets must be >= 1");

    CompressedChain compressed = compress(full_chain, rel, alert, label, cfg.compression, fid);
    if (compressed.selected.empty())
        throw EmptyReasoning("compression selected no steps for alert " + alert.alert_id);

    // Over-long selections shed their lowest-density steps first; ties shed
    // the later step.
    while (static_cast<int>(compressed.selected.size()) > cfg.max_bullets) {
        const double eps = cfg.compression.epsilon_smooth;
        std::size_t worst = 0;
        double worst_density = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < compressed.selected.size(); ++i) {
            int idx = compressed.selected[i];
            double d = rel.scores[static_cast<std::size_t>(idx)] /
                       (full_chain.steps[static_cast<std::size_t>(idx)].token_len + eps);
            if (d <= worst_density) {
                worst_density = d;
                worst = i;
            }
        }
        compressed.selected.erase(compressed.selected.begin() + static_cast<std::ptrdiff_t>(worst));
        compressed.steps.erase(compressed.steps.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    compressed.density = information_density_subset(full_chain, rel, compressed.selected,
                                                    cfg.compression.epsilon_smooth);
    compressed.fidelity = check_fidelity(alert, label, full_chain, compressed, rel, fid,
                                         cfg.compression.epsilon_fidelity);

    for (const auto& step : compressed.steps) {
        if (!single_sentence(step.text))
            throw InputError("reasoning step is not a single sentence: " + step.text);
    }

    TrainingTuple tuple;
    tuple.alert = alert;
    tuple.compressed = std::move(compressed);
    tuple.label = label;
    tuple.provenance.scorer_id = rel.scorer_id;
    tuple.provenance.cfg_hash = cfg_hash(cfg.compression);
    return tuple;
}

DomainPartition partition(const std::vector<TrainingTuple>& corpus, const PartitionConfig& cfg) {
    DomainPartition out;

    if (cfg.pinned) {
        std::map<Category, std::string> owner;
        for (const auto& [domain, cats] : *cfg.pinned) {
            for (Category c : cats) {
                if (owner.count(c))
                    throw ConfigError("pinned partition assigns " + to_string(c) + " twice");
                owner[c] = domain;
            }
            out.domains[domain];  // declared domains exist even when empty
        }
        for (const auto& t : corpus) {
            auto it = owner.find(t.label.category);
            if (it == owner.end())
                throw ConfigError("pinned partition does not cover category " +
                                  to_string(t.label.category));
            out.domains[it->second].push_back(t.id());
        }
        // a pinned layout without an "other" domain has no catch-all
        auto it = out.domains.find(out.catch_all_id);
        out.catch_all_below_min =
            it != out.domains.end() && static_cast<int>(it->second.size()) < cfg.min_samples;
        return out;
    }

    std::map<Category, std::vector<std::string>> by_category;
    std::map<Category, std::set<std::string>> subtypes_seen;
    for (const auto& t : corpus) {
        by_category[t.label.category].push_back(t.id());
        subtypes_seen[t.label.category].insert(t.label.subtype);
    }

    // The Other category is definitionally catch-all material; every other
    // category below min_samples merges in after it.
    std::vector<std::string> catch_all;
    std::set<std::string> catch_all_subtypes;
    if (auto it = by_category.find(Category::Other); it != by_category.end()) {
        catch_all = it->second;
        catch_all_subtypes = subtypes_seen[Category::Other];
        by_category.erase(it);
    }

    std::vector<Category> pending;  // under-threshold categories to merge
    for (const auto& [cat, ids] : by_category) {
        if (static_cast<int>(ids.size()) < cfg.min_samples) pending.push_back(cat);
    }
    // Merge order: descending subtype co-occurrence with the current
    // catch-all members, ties by category name.
    while (!pending.empty()) {
        auto co_occurrence = [&](Category c) {
            int shared = 0;
            for (const auto& s : subtypes_seen[c])
                if (catch_all_subtypes.count(s)) ++shared;
            return shared;
        };
        std::stable_sort(pending.begin(), pending.end(), [&](Category a, Category b) {
            int ca = co_occurrence(a), cb = co_occurrence(b);
            if (ca != cb) return ca > cb;
            return to_string(a) < to_string(b);
        });
        Category next = pending.front();
        pending.erase(pending.begin());
        auto& ids = by_category[next];
        catch_all.insert(catch_all.end(), ids.begin(), ids.end());
        for (const auto& s : subtypes_seen[next]) catch_all_subtypes.insert(s);
        by_category.erase(next);
    }

    // k_max caps the domain count; smallest qualifying domains demote first.
    int limit = std::max(1, cfg.k_max - 1);  // reserve one slot for the catch-all
    while (static_cast<int>(by_category.size()) > limit) {
        auto smallest = std::min_element(by_category.begin(), by_category.end(),
                                         [](const auto& a, const auto& b) {
                                             if (a.second.size() != b.second.size())
                                                 return a.second.size() < b.second.size();
                                             return to_string(a.first) < to_string(b.first);
                                         });
        catch_all.insert(catch_all.end(), smallest->second.begin(), smallest->second.end());
        by_category.erase(smallest);
    }

    for (const auto& [cat, ids] : by_category) out.domains[to_lower(to_string(cat))] = ids;
    if (!catch_all.empty()) out.domains[out.catch_all_id] = catch_all;
    out.catch_all_below_min = static_cast<int>(catch_all.size()) < cfg.min_samples;
    return out;
}

SplitResult split(const std::vector<TrainingTuple>& domain, const SplitSpec& spec) {
    spec.validate();
    std::map<std::string, std::vector<std::string>> strata;  // (risk|category) -> ids
    for (const auto& t : domain) {
        std::string key = to_string(t.label.risk_level) + "|" + to_string(t.label.category);
        strata[key].push_back(t.id());
    }
    SplitResult out;
    for (auto& [key, ids] : strata) {
        Rng rng(derive_seed(spec.seed, fnv1a64(key)));
        rng.shuffle(ids);
        auto counts = largest_remainder(static_cast<int>(ids.size()), {spec.train, spec.val, spec.test});
        std::size_t cursor = 0;
        for (int i = 0; i < counts[0]; ++i) out.train.push_back(ids[cursor++]);
        for (int i = 0; i < counts[1]; ++i) out.val.push_back(ids[cursor++]);
        for (int i = 0; i < counts[2]; ++i) out.test.push_back(ids[cursor++]);
    }
    return out;
}

std::vector<SyntheticRecord> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto& templates = category_templates();

    // Exact category marginal via largest remainder, in declared mix order.
    std::vector<Category> cats;
    std::vector<double> cat_fracs;
    for (const auto& [c, f] : spec.category_mix) {
        cats.push_back(c);
        cat_fracs.push_back(f);
    }
    auto cat_counts = largest_remainder(spec.n, cat_fracs);
    std::vector<Category> category_of;
    category_of.reserve(static_cast<std::size_t>(spec.n));
    for (std::size_t i = 0; i < cats.size(); ++i)
        category_of.insert(category_of.end(), static_cast<std::size_t>(cat_counts[i]), cats[i]);

    // Exact risk marginal, dealt across the record list by a seeded shuffle.
    std::vector<RiskLevel> risks;
    std::vector<double> risk_fracs;
    for (const auto& [r, f] : spec.risk_mix) {
        risks.push_back(r);
        risk_fracs.push_back(f);
    }
    auto risk_counts = largest_remainder(spec.n, risk_fracs);
    std::vector<RiskLevel> risk_of;
    risk_of.reserve(static_cast<std::size_t>(spec.n));
    for (std::size_t i = 0; i < risks.size(); ++i)
        risk_of.insert(risk_of.end(), static_cast<std::size_t>(risk_counts[i]), risks[i]);
    Rng deal(derive_seed(spec.seed, 0x5ca1ab1e));
    deal.shuffle(risk_of);

    std::vector<SyntheticRecord> corpus;
    corpus.reserve(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i) + 1));
        const Category cat = category_of[static_cast<std::size_t>(i)];
        const RiskLevel risk = risk_of[static_cast<std::size_t>(i)];
        const auto& tpl = templates.at(cat);
        const std::string subtype = tpl.subtypes[rng.below(tpl.subtypes.size())];

        SyntheticRecord rec;
        rec.truth = Label{risk, cat, subtype};

        char id[32];
        std::snprintf(id, sizeof(id), "synth-%06d", i);
        std::string process = to_lower(subtype) + "_payload.bin";
        std::string hash(64, '0');
        hash[0] = risk_hash_digit(risk);
        static const char* hex = "0123456789abcdef";
        for (std::size_t h = 1; h < hash.size(); ++h) hash[h] = hex[rng.below(16)];

        rec.raw.source = synthetic_sources()[rng.below(synthetic_sources().size())];
        rec.raw.received_at_ms = 1704067200000LL + static_cast<std::int64_t>(i) * 1000;
        auto& p = rec.raw.payload;
        p["alert_id"] = id;
        p["src_ip"] = "10." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) +
                      "." + std::to_string(1 + rng.below(254));
        p["dst_ip"] = "172.16." + std::to_string(rng.below(256)) + "." +
                      std::to_string(1 + rng.below(254));
        p["src_port"] = std::to_string(1024 + rng.below(64000));
        p["dst_port"] = std::to_string(tpl.dst_port);
        p["protocol"] = tpl.protocol;
        p["process"] = process;
        p["file_hash"] = hash;
        p["behavior"] = tpl.behavior;
        p["label"] = subtype + ".Gen";

        const int n_steps = static_cast<int>(10 + rng.below(6));
        const int n_evidence = static_cast<int>(4 + rng.below(2));
        std::vector<int> positions(static_cast<std::size_t>(n_steps));
        std::iota(positions.begin(), positions.end(), 0);
        rng.shuffle(positions);

        std::vector<int> evidence_order(tpl.evidence.size());
        std::iota(evidence_order.begin(), evidence_order.end(), 0);
        rng.shuffle(evidence_order);
        std::vector<int> filler_order(filler_templates().size());
        std::iota(filler_order.begin(), filler_order.end(), 0);
        rng.shuffle(filler_order);

        std::vector<std::string> texts(static_cast<std::size_t>(n_steps));
        for (int s = 0; s < n_steps; ++s) {
            int slot = positions[static_cast<std::size_t>(s)];
            if (s < n_evidence) {
                texts[static_cast<std::size_t>(slot)] = substitute(
                    tpl.evidence[static_cast<std::size_t>(evidence_order[static_cast<std::size_t>(s)])],
                    process);
            } else {
                int f = filler_order[static_cast<std::size_t>(s - n_evidence) % filler_order.size()];
                texts[static_cast<std::size_t>(slot)] = filler_templates()[static_cast<std::size_t>(f)];
            }
        }
        rec.chain = make_chain(texts);
        corpus.push_back(std::move(rec));
    }
    return corpus;
}

}  // namespace triagekit
