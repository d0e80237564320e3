#include "triagekit/ontology.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "triagekit/errors.hpp"
#include "triagekit/text.hpp"

namespace triagekit {

namespace {

const std::vector<std::string> kSourceNames = {"edr", "ids", "firewall", "cloud_api", "web_app", "other"};
const std::vector<std::string> kRiskNames = {"Low", "Medium", "High", "Critical"};
const std::vector<std::string> kCategoryNames = {"Malware", "Exploitation", "Reconnaissance",
                                                 "Exfiltration", "DoS", "Other"};

bool parse_port(const std::string& s, int& out) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return false;
    if (v < 0 || v > 65535) return false;
    out = v;
    return true;
}

bool looks_like_ipv4(const std::string& s) {
    int octets = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t start = i;
        int v = 0;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
            v = v * 10 + (s[i] - '0');
            if (v > 255 || i - start >= 3) return false;
            ++i;
        }
        if (i == start) return false;
        ++octets;
        if (i < s.size()) {
            if (s[i] != '.') return false;
            ++i;
            if (i == s.size()) return false;
        }
    }
    return octets == 4;
}

bool looks_like_ipv6(const std::string& s) {
    int colons = 0;
    for (char c : s) {
        if (c == ':') {
            ++colons;
        } else if (!std::isxdigit(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return colons >= 2;
}

bool parse_ip(const std::string& s, std::string& out) {
    if (!looks_like_ipv4(s) && !looks_like_ipv6(s)) return false;
    out = s;
    return true;
}

// First payload key (case-insensitive) matching any alias, in alias order.
const std::string* find_field(const std::map<std::string, std::string>& payload,
                              const std::vector<std::string>& aliases) {
    for (const auto& alias : aliases) {
        for (const auto& [key, value] : payload) {
            if (to_lower(key) == to_lower(alias)) return &value;
        }
    }
    return nullptr;
}

}  // namespace

const std::string& to_string(LogSource s) { return kSourceNames[static_cast<int>(s)]; }
const std::string& to_string(RiskLevel r) { return kRiskNames[static_cast<int>(r)]; }
const std::string& to_string(Category c) { return kCategoryNames[static_cast<int>(c)]; }

LogSource parse_source(const std::string& s) {
    for (std::size_t i = 0; i < kSourceNames.size(); ++i)
        if (to_lower(s) == kSourceNames[i]) return static_cast<LogSource>(i);
    throw InputError("unknown log source: " + s);
}

RiskLevel parse_risk(const std::string& s) {
    for (std::size_t i = 0; i < kRiskNames.size(); ++i)
        if (to_lower(s) == to_lower(kRiskNames[i])) return static_cast<RiskLevel>(i);
    throw InputError("unknown risk level: " + s);
}

Category parse_category(const std::string& s) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
        if (to_lower(s) == to_lower(kCategoryNames[i])) return static_cast<Category>(i);
    throw InputError("unknown threat category: " + s);
}

bool Label::operator<(const Label& o) const {
    if (risk_level != o.risk_level) return risk_level < o.risk_level;
    if (category != o.category) return category < o.category;
    return subtype < o.subtype;
}

int NormalizedAlert::critical_field_count() const {
    int n = 0;
    n += src_ip.has_value();
    n += dst_ip.has_value();
    n += src_port.has_value();
    n += dst_port.has_value();
    n += protocol.has_value();
    n += process.has_value();
    n += file_hash.has_value();
    return n;
}

std::string NormalizedAlert::text_blob() const {
    std::string out;
    auto append = [&out](const std::string& s) {
        if (!out.empty()) out += ' ';
        out += s;
    };
    if (behavior) append(*behavior);
    if (process) append(*process);
    for (const auto& [k, v] : extra) append(v);
    return out;
}

RawLog NormalizedAlert::to_raw_log() const {
    RawLog raw;
    raw.source = LogSource::Other;
    raw.payload["alert_id"] = alert_id;
    if (src_ip) raw.payload["src_ip"] = *src_ip;
    if (dst_ip) raw.payload["dst_ip"] = *dst_ip;
    if (src_port) raw.payload["src_port"] = std::to_string(*src_port);
    if (dst_port) raw.payload["dst_port"] = std::to_string(*dst_port);
    if (protocol) raw.payload["protocol"] = *protocol;
    if (process) raw.payload["process"] = *process;
    if (file_hash) raw.payload["file_hash"] = *file_hash;
    if (behavior) raw.payload["behavior"] = *behavior;
    for (const auto& [k, v] : extra) raw.payload[k] = v;
    if (raw_label) raw.payload["label"] = *raw_label;
    if (degraded_input) raw.payload[kDegradedMarkerKey] = "true";
    return raw;
}

bool Taxonomy::contains(const std::string& subtype) const {
    return subtype_category.count(subtype) > 0;
}

std::optional<Category> Taxonomy::category_of(const std::string& subtype) const {
    auto it = subtype_category.find(subtype);
    if (it == subtype_category.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> Taxonomy::canonical_subtype(const std::string& subtype) const {
    for (const auto& [name, cat] : subtype_category) {
        if (to_lower(name) == to_lower(subtype)) return name;
    }
    return std::nullopt;
}

Taxonomy default_taxonomy() {
    Taxonomy t;
    auto add = [&t](Category c, std::initializer_list<const char*> subtypes) {
        for (const char* s : subtypes) t.subtype_category.emplace(s, c);
    };
    add(Category::Malware, {"Trojan", "Ransomware", "Worm", "Backdoor", "Virus"});
    add(Category::Exploitation, {"SQLInjection", "XSS", "CSRF", "BufferOverflow", "Shellcode", "RCE"});
    add(Category::Reconnaissance, {"PortScan", "Probe", "Fuzzing", "Enumeration"});
    add(Category::Exfiltration, {"DataTheft", "Tunneling", "Staging"});
    add(Category::DoS, {"Flood", "Amplification"});
    add(Category::Other, {"Unknown", "APT", "Suspicious"});
    return t;
}

NormalizeSchema default_schema() {
    NormalizeSchema s;
    s.aliases["src_ip"] = {"src_ip", "src", "source_ip", "srcip"};
    s.aliases["dst_ip"] = {"dst_ip", "dst", "dest_ip", "destination_ip", "dstip"};
    s.aliases["src_port"] = {"src_port", "sport", "source_port"};
    s.aliases["dst_port"] = {"dst_port", "dport", "dest_port", "destination_port"};
    s.aliases["protocol"] = {"protocol", "proto"};
    s.aliases["process"] = {"process", "proc", "process_name", "image"};
    s.aliases["file_hash"] = {"file_hash", "sha256", "sha1", "md5", "hash"};
    s.aliases["behavior"] = {"behavior", "behaviour", "message", "description", "msg"};
    return s;
}

NormalizedAlert normalize(const RawLog& raw, const NormalizeSchema& schema) {
    NormalizedAlert alert;
    bool malformed = false;

    auto aliases_for = [&schema](const char* slot) -> std::vector<std::string> {
        auto it = schema.aliases.find(slot);
        std::vector<std::string> out = it != schema.aliases.end() ? it->second
                                                                  : std::vector<std::string>{};
        // the canonical slot name always maps to itself so re-normalization is stable
        if (std::find(out.begin(), out.end(), slot) == out.end()) out.insert(out.begin(), slot);
        return out;
    };

    auto take_string = [&](const char* slot, std::optional<std::string>& dst) {
        if (const std::string* v = find_field(raw.payload, aliases_for(slot)); v && !v->empty())
            dst = *v;
    };
    auto take_ip = [&](const char* slot, std::optional<std::string>& dst) {
        if (const std::string* v = find_field(raw.payload, aliases_for(slot)); v && !v->empty()) {
            std::string ip;
            if (parse_ip(*v, ip)) dst = ip;
            else malformed = true;
        }
    };
    auto take_port = [&](const char* slot, std::optional<int>& dst) {
        if (const std::string* v = find_field(raw.payload, aliases_for(slot)); v && !v->empty()) {
            int port = 0;
            if (parse_port(*v, port)) dst = port;
            else malformed = true;
        }
    };

    take_ip("src_ip", alert.src_ip);
    take_ip("dst_ip", alert.dst_ip);
    take_port("src_port", alert.src_port);
    take_port("dst_port", alert.dst_port);
    take_string("protocol", alert.protocol);
    take_string("process", alert.process);
    take_string("file_hash", alert.file_hash);
    take_string("behavior", alert.behavior);

    // Everything consumed by a slot, the id/label fields, or the degraded
    // marker is claimed; remaining keys are extras or dropped.
    auto claimed = [&](const std::string& key) {
        std::string k = to_lower(key);
        if (k == to_lower(schema.id_field) || k == to_lower(schema.label_field)) return true;
        if (k == kDegradedMarkerKey || k == "raw_label") return true;
        static const char* slots[] = {"src_ip",   "dst_ip",  "src_port",  "dst_port",
                                      "protocol", "process", "file_hash", "behavior"};
        for (const char* slot : slots) {
            for (const auto& alias : aliases_for(slot))
                if (k == to_lower(alias)) return true;
        }
        return false;
    };

    for (const auto& [key, value] : raw.payload) {
        if (claimed(key)) continue;
        bool declared = std::any_of(schema.extra_fields.begin(), schema.extra_fields.end(),
                                    [&key](const std::string& f) { return to_lower(f) == to_lower(key); });
        if (declared || schema.keep_unlisted_extra) alert.extra[key] = value;
    }

    if (const std::string* v = find_field(raw.payload, {schema.label_field, "raw_label"});
        v && !v->empty())
        alert.raw_label = *v;

    if (const std::string* v = find_field(raw.payload, {schema.id_field}); v && !v->empty()) {
        alert.alert_id = *v;
    } else {
        std::ostringstream blob;
        blob << to_string(raw.source) << '|' << raw.received_at_ms;
        for (const auto& [k, val] : raw.payload) blob << '|' << k << '=' << val;
        std::ostringstream id;
        id << "a" << std::hex << fnv1a64(blob.str());
        alert.alert_id = id.str();
    }

    bool marker = false;
    if (auto it = raw.payload.find(kDegradedMarkerKey); it != raw.payload.end())
        marker = to_lower(it->second) == "true";

    alert.degraded_input = malformed || marker || alert.critical_field_count() == 0;
    return alert;
}

Label map_label(const std::string& raw_label, const LabelMapping& table) {
    for (const auto& entry : table.entries) {
        if (glob_match_ci(entry.pattern, raw_label)) return entry.label;
    }
    if (table.fallback) return *table.fallback;
    throw MissingLabel("no mapping entry matches raw label: " + raw_label);
}

std::vector<std::string> validate_label(const Label& label, const Taxonomy& taxonomy) {
    std::vector<std::string> violations;
    auto owner = taxonomy.category_of(label.subtype);
    if (!owner) {
        violations.push_back("subtype not declared in taxonomy: " + label.subtype);
    } else if (*owner != label.category) {
        violations.push_back("subtype-category mismatch: " + label.subtype + " belongs to " +
                             to_string(*owner) + ", not " + to_string(label.category));
    }
    return violations;
}

}  // namespace triagekit
