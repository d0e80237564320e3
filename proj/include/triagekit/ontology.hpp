#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace triagekit {

enum class LogSource { Edr, Ids, Firewall, CloudApi, WebApp, Other };
enum class RiskLevel { Low, Medium, High, Critical };
enum class Category { Malware, Exploitation, Reconnaissance, Exfiltration, DoS, Other };

inline constexpr std::array<RiskLevel, 4> kRiskLevels = {
    RiskLevel::Low, RiskLevel::Medium, RiskLevel::High, RiskLevel::Critical};
inline constexpr std::array<Category, 6> kCategories = {
    Category::Malware,       Category::Exploitation, Category::Reconnaissance,
    Category::Exfiltration,  Category::DoS,          Category::Other};

const std::string& to_string(LogSource s);
const std::string& to_string(RiskLevel r);
const std::string& to_string(Category c);
LogSource parse_source(const std::string& s);
RiskLevel parse_risk(const std::string& s);
Category parse_category(const std::string& s);

struct RawLog {
    LogSource source = LogSource::Other;
    std::map<std::string, std::string> payload;  // flat field map, non-empty
    std::int64_t received_at_ms = 0;             // UTC epoch milliseconds
};

// The normalized context: only schema-selected fields survive.
struct NormalizedAlert {
    std::string alert_id;
    std::optional<std::string> src_ip;
    std::optional<std::string> dst_ip;
    std::optional<int> src_port;
    std::optional<int> dst_port;
    std::optional<std::string> protocol;
    std::optional<std::string> process;
    std::optional<std::string> file_hash;
    std::optional<std::string> behavior;
    std::map<std::string, std::string> extra;
    std::optional<std::string> raw_label;
    bool degraded_input = false;

    // Count of the seven critical slots currently present
    // (src_ip, dst_ip, src_port, dst_port, protocol, process, file_hash).
    int critical_field_count() const;

    std::string text_blob() const;  // behavior + process + extra, for keyword matching

    // Canonical payload form: feeding this back through normalize() with the
    // same schema reproduces the alert exactly.
    RawLog to_raw_log() const;

    bool operator==(const NormalizedAlert&) const = default;
};

struct Label {
    RiskLevel risk_level = RiskLevel::Low;
    Category category = Category::Other;
    std::string subtype = "Unknown";

    bool operator==(const Label&) const = default;
    bool operator<(const Label& o) const;
};

struct LabelMappingEntry {
    std::string pattern;  // case-insensitive glob on the raw label
    Label label;
};

// First-match-wins table; order is part of the mapping.
struct LabelMapping {
    std::vector<LabelMappingEntry> entries;
    std::optional<Label> fallback;
};

// Closed subtype inventory: subtype -> owning category.
struct Taxonomy {
    std::map<std::string, Category> subtype_category;

    bool contains(const std::string& subtype) const;
    std::optional<Category> category_of(const std::string& subtype) const;
    // Case-insensitive subtype lookup, returns the canonical spelling.
    std::optional<std::string> canonical_subtype(const std::string& subtype) const;
};

Taxonomy default_taxonomy();

// Field-selection config for normalize(). Payload keys are matched
// case-insensitively against per-slot alias lists.
struct NormalizeSchema {
    std::map<std::string, std::vector<std::string>> aliases;  // slot -> payload keys
    std::vector<std::string> extra_fields;  // non-critical keys retained in `extra`
    bool keep_unlisted_extra = false;       // retain unknown keys in `extra`
    std::string id_field = "alert_id";
    std::string label_field = "label";
};

NormalizeSchema default_schema();

// Marker payload key carried by canonical re-serializations and by the
// drop-critical perturbation; normalize() folds it into degraded_input.
inline constexpr const char* kDegradedMarkerKey = "degraded_input";

// Field selection + slot parsing. Malformed ports/IPs degrade (slot absent,
// degraded_input set); the alert is never rejected.
NormalizedAlert normalize(const RawLog& raw, const NormalizeSchema& schema);

Label map_label(const std::string& raw_label, const LabelMapping& table);

std::vector<std::string> validate_label(const Label& label, const Taxonomy& taxonomy);

}  // namespace triagekit
