#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "triagekit/errors.hpp"
#include "triagekit/serialization.hpp"

namespace tk = triagekit;
using tk::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;

struct CommonOpts {
    std::string config_path;
    std::string in_path = "-";
    std::string out_path = "-";
    std::string format = "jsonl";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_seed = true) {
    cmd->add_option("--config", opts.config_path, "pipeline config file (JSON)");
    cmd->add_option("--in", opts.in_path, "input path, - for stdin");
    cmd->add_option("--out", opts.out_path, "output path, - for stdout");
    cmd->add_option("--format", opts.format, "jsonl or pretty")
        ->check(CLI::IsMember({"jsonl", "pretty"}));
    if (with_seed) cmd->add_option("--seed", opts.seed, "seed override");
}

tk::PipelineConfig load_config(const CommonOpts& opts, bool required) {
    tk::PipelineConfig cfg;
    if (opts.config_path.empty()) {
        if (required) throw tk::ConfigError("--config is required for this subcommand");
        cfg.validate();
    } else {
        std::ifstream in(opts.config_path);
        if (!in) throw tk::ConfigError("cannot open config file: " + opts.config_path);
        json parsed = json::parse(in, nullptr, false);
        if (parsed.is_discarded()) throw tk::ConfigError("config file is not valid JSON");
        cfg = parsed.get<tk::PipelineConfig>();
    }
    if (opts.seed) cfg.seed = *opts.seed;
    return cfg;
}

struct IoStreams {
    std::ifstream file_in;
    std::ofstream file_out;
    std::istream* in = nullptr;
    std::ostream* out = nullptr;
};

IoStreams open_io(const CommonOpts& opts) {
    IoStreams io;
    if (opts.in_path == "-") {
        io.in = &std::cin;
    } else {
        io.file_in.open(opts.in_path);
        if (!io.file_in) throw tk::InputError("cannot open input file: " + opts.in_path);
        io.in = &io.file_in;
    }
    if (opts.out_path == "-") {
        io.out = &std::cout;
    } else {
        io.file_out.open(opts.out_path);
        if (!io.file_out) throw tk::InputError("cannot open output file: " + opts.out_path);
        io.out = &io.file_out;
    }
    return io;
}

std::string dump(const json& j, const CommonOpts& opts) {
    return opts.format == "pretty" ? j.dump(2) : j.dump();
}

// Per line: parse, apply; malformed lines warn and skip, they never abort
// a batch. Returns the skip count.
int for_each_jsonl(std::istream& in, const std::function<void(const json&)>& fn) {
    int skipped = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json parsed = json::parse(line, nullptr, false);
        if (parsed.is_discarded()) {
            std::cerr << "warning: skipped malformed JSON on line " << lineno << "\n";
            ++skipped;
            continue;
        }
        try {
            fn(parsed);
        } catch (const std::exception& e) {
            std::cerr << "warning: skipped line " << lineno << ": " << e.what() << "\n";
            ++skipped;
        }
    }
    return skipped;
}

void summary(const char* verb, std::size_t n, int skipped) {
    std::cerr << verb << " " << n << " records";
    if (skipped > 0) std::cerr << ", skipped " << skipped << " malformed lines";
    std::cerr << "\n";
}

int cmd_normalize(const CommonOpts& opts) {
    tk::PipelineConfig cfg = load_config(opts, false);
    IoStreams io = open_io(opts);
    std::size_t n = 0;
    int skipped = for_each_jsonl(*io.in, [&](const json& line) {
        tk::StreamAlert alert = tk::parse_stream_alert(line);
        json out = tk::normalize(alert.raw, cfg.schema);
        *io.out << dump(out, opts) << "\n";
        ++n;
    });
    summary("normalized", n, skipped);
    return kExitOk;
}

struct ChainLine {
    std::string id;
    tk::ReasoningChain chain;
    tk::RelevanceVector rel;
    tk::NormalizedAlert context;
    tk::Label label;
};

ChainLine parse_chain_line(const json& line, const tk::PipelineConfig& cfg) {
    ChainLine parsed;
    parsed.id = line.value("id", "");
    parsed.chain = line.contains("chain") ? line.at("chain").get<tk::ReasoningChain>()
                                          : line.get<tk::ReasoningChain>();
    if (parsed.chain.steps.empty()) throw tk::InputError("chain has no steps");
    if (line.contains("context")) parsed.context = line.at("context").get<tk::NormalizedAlert>();
    if (!parsed.id.empty()) parsed.context.alert_id = parsed.id;
    if (parsed.context.alert_id.empty()) parsed.context.alert_id = parsed.id = "chain";
    if (line.contains("label")) parsed.label = line.at("label").get<tk::Label>();
    if (line.contains("scores")) {
        parsed.rel = line.at("scores").get<tk::RelevanceVector>();
        if (parsed.rel.scores.size() != parsed.chain.steps.size())
            throw tk::LengthMismatch("scores length does not match chain");
    } else {
        parsed.rel = tk::score_chain(parsed.chain, parsed.context, parsed.label, cfg.scorer);
    }
    return parsed;
}

int cmd_compress(const CommonOpts& opts, std::optional<int> budget, bool oracle) {
    tk::PipelineConfig cfg = load_config(opts, false);
    if (budget) cfg.compression.delta_token = *budget;
    IoStreams io = open_io(opts);
    std::size_t n = 0;
    int skipped = for_each_jsonl(*io.in, [&](const json& line) {
        ChainLine parsed = parse_chain_line(line, cfg);
        tk::CompressedChain out =
            oracle ? tk::oracle_optimal(parsed.chain, parsed.rel, cfg.compression)
                   : tk::compress(parsed.chain, parsed.rel, parsed.context, parsed.label,
                                  cfg.compression, cfg.fidelity);
        json doc = out;
        doc["id"] = parsed.id.empty() ? parsed.context.alert_id : parsed.id;
        *io.out << dump(doc, opts) << "\n";
        ++n;
    });
    summary(oracle ? "enumerated" : "compressed", n, skipped);
    return kExitOk;
}

int cmd_dataset_gen(const CommonOpts& opts, std::optional<int> n_override) {
    tk::PipelineConfig cfg = load_config(opts, false);
    tk::SyntheticSpec spec = tk::default_synthetic_spec();
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        json parsed = json::parse(in);
        if (parsed.contains("synthetic")) spec = parsed.at("synthetic").get<tk::SyntheticSpec>();
    }
    spec.seed = cfg.seed;
    if (opts.seed) spec.seed = *opts.seed;
    if (n_override) spec.n = *n_override;
    IoStreams io = open_io(opts);
    auto corpus = tk::generate_synthetic(spec);
    for (const auto& rec : corpus) *io.out << dump(json(rec), opts) << "\n";
    summary("generated", corpus.size(), 0);
    return kExitOk;
}

// Tuple-bearing inputs for partition/split: either TrainingTuple lines or
// dataset-gen records, which are compressed on the fly.
std::vector<tk::TrainingTuple> read_tuples(std::istream& in, const tk::PipelineConfig& cfg,
                                           int& skipped) {
    std::vector<tk::TrainingTuple> tuples;
    tk::TupleBuildConfig build{cfg.compression, 5};
    skipped = for_each_jsonl(in, [&](const json& line) {
        if (line.contains("alert") && line.contains("compressed")) {
            tuples.push_back(line.get<tk::TrainingTuple>());
            return;
        }
        tk::StreamAlert alert = tk::parse_stream_alert(line);
        if (!alert.chain || !alert.truth)
            throw tk::InputError("record carries no chain/truth and is not a tuple");
        tk::NormalizedAlert normalized = tk::normalize(alert.raw, cfg.schema);
        tk::RelevanceVector rel = tk::score_chain(*alert.chain, normalized, *alert.truth, cfg.scorer);
        tuples.push_back(tk::build_tuple(normalized, *alert.truth, *alert.chain, rel, build, cfg.fidelity));
    });
    return tuples;
}

int cmd_partition(const CommonOpts& opts, int min_samples, int k_max) {
    tk::PipelineConfig cfg = load_config(opts, false);
    tk::PartitionConfig pcfg;
    pcfg.min_samples = min_samples;
    pcfg.k_max = k_max;
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        json parsed = json::parse(in);
        if (parsed.contains("partition")) {
            pcfg = parsed.at("partition").get<tk::PartitionConfig>();
            pcfg.min_samples = min_samples;
            pcfg.k_max = k_max;
        }
    }
    IoStreams io = open_io(opts);
    int skipped = 0;
    auto tuples = read_tuples(*io.in, cfg, skipped);
    json out = tk::partition(tuples, pcfg);
    *io.out << (opts.format == "pretty" ? out.dump(2) : out.dump()) << "\n";
    summary("partitioned", tuples.size(), skipped);
    return kExitOk;
}

int cmd_split(const CommonOpts& opts, const std::vector<double>& ratios) {
    tk::PipelineConfig cfg = load_config(opts, false);
    tk::SplitSpec spec;
    if (ratios.size() == 3) {
        spec.train = ratios[0];
        spec.val = ratios[1];
        spec.test = ratios[2];
    } else if (!ratios.empty()) {
        throw tk::ConfigError("--ratios needs exactly three values");
    }
    spec.seed = opts.seed.value_or(cfg.seed);
    spec.validate();
    IoStreams io = open_io(opts);
    int skipped = 0;
    auto tuples = read_tuples(*io.in, cfg, skipped);
    json out = tk::split(tuples, spec);
    *io.out << (opts.format == "pretty" ? out.dump(2) : out.dump()) << "\n";
    summary("split", tuples.size(), skipped);
    return kExitOk;
}

int cmd_route(const CommonOpts& opts) {
    tk::PipelineConfig cfg = load_config(opts, false);
    tk::Router router(cfg.router);
    auto domains = cfg.experts.domain_ids();
    IoStreams io = open_io(opts);
    std::size_t n = 0;
    int skipped = for_each_jsonl(*io.in, [&](const json& line) {
        tk::StreamAlert alert = tk::parse_stream_alert(line);
        tk::NormalizedAlert normalized = tk::normalize(alert.raw, cfg.schema);
        tk::RoutingDecision decision =
            router.route(normalized, domains, cfg.experts.fallback.expert_id);
        json doc = decision;
        doc["alert_id"] = normalized.alert_id;
        *io.out << dump(doc, opts) << "\n";
        ++n;
    });
    summary("routed", n, skipped);
    return kExitOk;
}

int cmd_triage(const CommonOpts& opts, std::optional<int> jobs) {
    tk::PipelineConfig cfg = load_config(opts, true);
    if (jobs) cfg.jobs = *jobs;
    IoStreams io = open_io(opts);
    std::vector<tk::StreamAlert> alerts;
    int skipped = for_each_jsonl(*io.in, [&](const json& line) {
        alerts.push_back(tk::parse_stream_alert(line));
    });
    tk::StreamResult result = tk::run_stream(alerts, cfg);
    for (const auto& record : result.records) *io.out << dump(json(record), opts) << "\n";
    summary("triaged", result.records.size(), skipped);
    if (result.metrics) std::cerr << "metrics: " << json(*result.metrics).dump() << "\n";
    return kExitOk;
}

// Human-readable companion to the JSON report, on stderr so stdout stays
// machine-parseable.
void print_metrics_table(const tk::MetricsReport& report) {
    std::fprintf(stderr, "\n%-14s %10s\n", "metric", "value");
    std::fprintf(stderr, "%-14s %9.2f%%\n", "Acc_Risk", 100.0 * report.acc_risk);
    std::fprintf(stderr, "%-14s %9.2f%%\n", "Acc_Threat", 100.0 * report.acc_threat);
    std::fprintf(stderr, "%-14s %9.2f%%\n", "R_High", 100.0 * report.r_high);
    std::fprintf(stderr, "%-14s %9.2f%%\n", "FPR", 100.0 * report.fpr);
    std::fprintf(stderr, "%-14s %9.4fs\n", "L_Avg", report.l_avg_s);
    if (report.token_cost_rel)
        std::fprintf(stderr, "%-14s %9.2fx\n", "Token cost", *report.token_cost_rel);
    std::fprintf(stderr, "%-14s %10d\n", "n", report.n);
    std::fprintf(stderr, "\nrisk confusion (rows truth, cols predicted)\n%-10s", "");
    for (tk::RiskLevel level : tk::kRiskLevels)
        std::fprintf(stderr, "%10s", tk::to_string(level).c_str());
    std::fprintf(stderr, "\n");
    for (tk::RiskLevel row : tk::kRiskLevels) {
        std::fprintf(stderr, "%-10s", tk::to_string(row).c_str());
        for (tk::RiskLevel col : tk::kRiskLevels)
            std::fprintf(stderr, "%10d",
                         report.risk_confusion[static_cast<std::size_t>(row)]
                                              [static_cast<std::size_t>(col)]);
        std::fprintf(stderr, "\n");
    }
}

int cmd_eval(const CommonOpts& opts, const std::string& truth_path,
             std::optional<double> baseline_tokens) {
    tk::PipelineConfig cfg = load_config(opts, false);
    std::map<std::string, tk::Label> truth;
    if (!truth_path.empty()) {
        std::ifstream in(truth_path);
        if (!in) throw tk::InputError("cannot open truth file: " + truth_path);
        // accepts dataset-gen records, {"alert_id", "truth"/"label"} pairs,
        // or triage records with embedded truth
        for_each_jsonl(in, [&](const json& line) {
            if (line.contains("raw")) {
                tk::StreamAlert alert = tk::parse_stream_alert(line);
                if (!alert.truth) throw tk::InputError("corpus record carries no truth");
                truth[tk::normalize(alert.raw, cfg.schema).alert_id] = *alert.truth;
                return;
            }
            std::string id = line.at("alert_id").get<std::string>();
            const json& label = line.contains("truth") ? line.at("truth") : line.at("label");
            truth[id] = label.get<tk::Label>();
        });
    }
    IoStreams io = open_io(opts);
    std::vector<tk::EvalRecord> records;
    int skipped = for_each_jsonl(*io.in, [&](const json& line) {
        tk::TriageRecord record = line.get<tk::TriageRecord>();
        tk::EvalRecord e;
        e.alert_id = record.alert_id;
        e.predicted = record.soar.at("label").get<tk::Label>();
        e.latency_s = record.soar.at("latency").at("total_s").get<double>();
        e.tokens = record.soar.at("tokens").at("route").get<int>() +
                   record.soar.at("tokens").at("expert").get<int>();
        records.push_back(std::move(e));
        if (record.truth && !truth.count(record.alert_id)) truth[record.alert_id] = *record.truth;
    });
    tk::MetricsReport report = tk::evaluate(records, truth, baseline_tokens);
    json out = report;
    *io.out << (opts.format == "pretty" ? out.dump(2) : out.dump()) << "\n";
    if (opts.format == "pretty") print_metrics_table(report);
    summary("evaluated", records.size(), skipped);
    return kExitOk;
}

int cmd_perturb(const CommonOpts& opts, const std::string& kind, double p, int k) {
    tk::PipelineConfig cfg = load_config(opts, false);
    tk::PerturbationSpec spec;
    spec = json{{"kind", kind}, {"p", p}, {"k", k}, {"seed", opts.seed.value_or(cfg.seed)}}
               .get<tk::PerturbationSpec>();
    IoStreams io = open_io(opts);
    std::size_t n = 0;
    int skipped = for_each_jsonl(*io.in, [&](const json& line) {
        tk::StreamAlert alert = tk::parse_stream_alert(line);
        alert.raw = tk::perturb_one(alert.raw, spec, cfg.schema, n);
        json out = line.contains("raw") || alert.truth || alert.chain
                       ? tk::dump_stream_alert(alert)
                       : json(alert.raw);
        *io.out << dump(out, opts) << "\n";
        ++n;
    });
    summary("perturbed", n, skipped);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"security alert triage pipeline"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* normalize = app.add_subcommand("normalize", "normalize raw logs into alerts");
    add_common(normalize, opts);

    auto* compress = app.add_subcommand("compress", "greedy chain compression");
    add_common(compress, opts);
    std::optional<int> budget;
    compress->add_option("--budget", budget, "token budget override");

    auto* oracle = app.add_subcommand("oracle", "exhaustive optimal compression");
    add_common(oracle, opts);
    oracle->add_option("--budget", budget, "token budget override");

    auto* dataset_gen = app.add_subcommand("dataset-gen", "generate a synthetic corpus");
    add_common(dataset_gen, opts);
    std::optional<int> gen_n;
    dataset_gen->add_option("--n", gen_n, "number of records");

    auto* partition = app.add_subcommand("partition", "partition tuples into expert domains");
    add_common(partition, opts);
    int min_samples = 500;
    int k_max = 8;
    partition->add_option("--min-samples", min_samples, "minimum samples per domain");
    partition->add_option("--k-max", k_max, "maximum number of domains");

    auto* split = app.add_subcommand("split", "stratified train/val/test split");
    add_common(split, opts);
    std::vector<double> ratios;
    split->add_option("--ratios", ratios, "train,val,test ratios")->expected(3)->delimiter(',');

    auto* route = app.add_subcommand("route", "single-alert routing inspection");
    add_common(route, opts);

    auto* triage = app.add_subcommand("triage", "end-to-end triage of an alert stream");
    add_common(triage, opts);
    std::optional<int> jobs;
    triage->add_option("--jobs", jobs, "worker threads");

    auto* eval = app.add_subcommand("eval", "score records against ground truth");
    add_common(eval, opts);
    std::string truth_path;
    std::optional<double> baseline_tokens;
    eval->add_option("--truth", truth_path, "ground truth JSONL");
    eval->add_option("--baseline-tokens", baseline_tokens, "baseline mean tokens per alert");

    auto* perturb = app.add_subcommand("perturb", "data-quality perturbations");
    add_common(perturb, opts);
    std::string kind = "truncate_fields";
    double p = 0.0;
    int k = 0;
    perturb->add_option("--kind", kind, "truncate_fields, drop_critical, or corrupt_tokens");
    perturb->add_option("--p", p, "fraction for truncate/corrupt");
    perturb->add_option("--k", k, "critical slots to drop");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage problems are config errors; --help exits cleanly
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (normalize->parsed()) return cmd_normalize(opts);
        if (compress->parsed()) return cmd_compress(opts, budget, false);
        if (oracle->parsed()) return cmd_compress(opts, budget, true);
        if (dataset_gen->parsed()) return cmd_dataset_gen(opts, gen_n);
        if (partition->parsed()) return cmd_partition(opts, min_samples, k_max);
        if (split->parsed()) return cmd_split(opts, ratios);
        if (route->parsed()) return cmd_route(opts);
        if (triage->parsed()) return cmd_triage(opts, jobs);
        if (eval->parsed()) return cmd_eval(opts, truth_path, baseline_tokens);
        if (perturb->parsed()) return cmd_perturb(opts, kind, p, k);
    } catch (const tk::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: input: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitConfig;
}
