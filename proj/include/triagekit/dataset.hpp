#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triagekit/compression.hpp"

namespace triagekit {

struct TupleProvenance {
    std::string scorer_id;
    std::string cfg_hash;  // content hash of the compression config
};

struct TrainingTuple {
    NormalizedAlert alert;
    CompressedChain compressed;  // 1..max_bullets single-sentence steps
    Label label;
    TupleProvenance provenance;

    const std::string& id() const { return alert.alert_id; }
};

struct TupleBuildConfig {
    CompressionConfig compression;
    int max_bullets = 5;
};

struct DomainPartition {
    std::map<std::string, std::vector<std::string>> domains;  // domain id -> tuple ids
    std::string catch_all_id = "other";
    bool catch_all_below_min = false;
};

struct PartitionConfig {
    int min_samples = 500;
    int k_max = 8;
    // When present, the partition is pinned: domain id -> categories. Must be
    // disjoint and cover every category seen in the corpus.
    std::optional<std::map<std::string, std::vector<Category>>> pinned;
};

struct SplitSpec {
    double train = 0.7, val = 0.1, test = 0.2;  // ratios, sum to 1
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitResult {
    std::vector<std::string> train, val, test;  // tuple ids
};

struct SyntheticSpec {
    int n = 0;
    std::map<Category, double> category_mix;
    std::map<RiskLevel, double> risk_mix;
    std::uint64_t seed = 0;

    void validate() const;  // mixes must each sum to 1 +- 1e-9
};

// Attack-log shaped mix: Exploitation 35, Malware 25, Reconnaissance 20,
// Exfiltration 10, Other 10; risk Low 65, Medium 25, High 10.
SyntheticSpec default_synthetic_spec();

struct SyntheticRecord {
    RawLog raw;
    Label truth;
    ReasoningChain chain;  // templated 10-15 step verbose chain
};

// Runs compress, trims to max_bullets by dropping the lowest-density
// selected steps, and records provenance. Empty selections are rejected.
TrainingTuple build_tuple(const NormalizedAlert& alert, const Label& label,
                          const ReasoningChain& full_chain, const RelevanceVector& rel,
                          const TupleBuildConfig& cfg, const FidelityEvaluatorSpec& fid);

// One domain per category with count >= min_samples; everything else merges
// into the catch-all. The Other category is definitionally catch-all
// material. Merge order: descending subtype co-occurrence with current
// catch-all members, ties by category name.
DomainPartition partition(const std::vector<TrainingTuple>& corpus, const PartitionConfig& cfg);

// Stratified by (risk_level, category); per-stratum largest-remainder
// allocation keeps every stratum within 1 of the exact ratio.
SplitResult split(const std::vector<TrainingTuple>& domain, const SplitSpec& spec);

// Deterministic synthetic corpus. Category and risk marginals are exact
// largest-remainder counts; every chain is 10-15 keyword-bearing steps whose
// ground truth is recoverable from the process and file-hash fields.
std::vector<SyntheticRecord> generate_synthetic(const SyntheticSpec& spec);

// Hex encoding used by the generator to stamp the risk level into the first
// character of the synthetic file hash; the oracle mock expert decodes it.
char risk_hash_digit(RiskLevel r);
std::optional<RiskLevel> risk_from_hash(const std::string& file_hash);
std::optional<std::string> subtype_from_process(const std::string& process, const Taxonomy& taxonomy);

}  // namespace triagekit
