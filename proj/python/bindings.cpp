#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "triagekit/errors.hpp"
#include "triagekit/serialization.hpp"
#include "triagekit/text.hpp"

namespace py = pybind11;
namespace tk = triagekit;
using tk::json;

namespace {

json to_json_value(const py::handle& obj) {
    if (obj.is_none()) return nullptr;
    if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
    if (py::isinstance<py::int_>(obj)) return obj.cast<std::int64_t>();
    if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
    if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
    if (py::isinstance<py::dict>(obj)) {
        json out = json::object();
        for (const auto& item : obj.cast<py::dict>())
            out[item.first.cast<std::string>()] = to_json_value(item.second);
        return out;
    }
    if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
        json out = json::array();
        for (const auto& item : obj.cast<py::sequence>()) out.push_back(to_json_value(item));
        return out;
    }
    throw py::type_error("unsupported value type: " +
                         py::str(obj.get_type()).cast<std::string>());
}

py::object to_py_value(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
        case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const auto& item : j) out.append(to_py_value(item));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [key, value] : j.items()) out[py::str(key)] = to_py_value(value);
            return out;
        }
        default: return py::none();
    }
}

template <typename T>
T from_py(const py::object& obj) {
    return to_json_value(obj).get<T>();
}

tk::PipelineConfig config_from(const py::object& obj) {
    if (obj.is_none()) {
        tk::PipelineConfig cfg;
        cfg.validate();
        return cfg;
    }
    return from_py<tk::PipelineConfig>(obj);
}

tk::ReasoningChain chain_from(const py::object& obj) {
    return from_py<tk::ReasoningChain>(obj);
}

tk::RelevanceVector rel_from(const py::object& obj) {
    return from_py<tk::RelevanceVector>(obj);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Alert triage pipeline core: normalization, chain compression, "
              "routing, experts, metrics.";

    py::register_exception<tk::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<tk::InputError>(m, "InputError", PyExc_ValueError);

    m.def("default_config", [] {
        // materialized defaults as a plain dict for editing in python
        tk::PipelineConfig cfg;
        json scorer{{"kind", "keyword"}};
        json experts{{"fallback", {{"expert_id", "fallback"}, {"kind", "mock_oracle"}}}};
        json domains = json::object();
        for (tk::Category c : tk::kCategories)
            domains[tk::to_string(c)] = {{"expert_id", "expert_" + tk::to_lower(tk::to_string(c))},
                                         {"kind", "mock_oracle"}};
        experts["domains"] = domains;
        json cfg_json{{"seed", 0},
                      {"jobs", 1},
                      {"router", {{"tau", cfg.router.tau}, {"backend", "keyword_rules"}}},
                      {"experts", experts},
                      {"scorer", scorer},
                      {"compression", json(cfg.compression)},
                      {"budgets", {{"delta_t_s", cfg.budgets.delta_t_s},
                                   {"delta_token", cfg.budgets.delta_token}}}};
        return to_py_value(cfg_json);
    });

    m.def(
        "normalize",
        [](const py::object& raw, const py::object& schema) {
            tk::NormalizeSchema s = schema.is_none() ? tk::default_schema()
                                                     : from_py<tk::NormalizeSchema>(schema);
            return to_py_value(json(tk::normalize(from_py<tk::RawLog>(raw), s)));
        },
        py::arg("raw"), py::arg("schema") = py::none());

    m.def(
        "map_label",
        [](const std::string& raw_label, const py::object& table) {
            return to_py_value(json(tk::map_label(raw_label, from_py<tk::LabelMapping>(table))));
        },
        py::arg("raw_label"), py::arg("table"));

    m.def(
        "validate_label",
        [](const py::object& label, const py::object& taxonomy) {
            tk::Taxonomy t = taxonomy.is_none() ? tk::default_taxonomy()
                                                : from_py<tk::Taxonomy>(taxonomy);
            return tk::validate_label(from_py<tk::Label>(label), t);
        },
        py::arg("label"), py::arg("taxonomy") = py::none());

    m.def(
        "score_chain",
        [](const py::object& chain, const py::object& context, const py::object& label,
           const py::object& scorer) {
            tk::NormalizedAlert ctx = context.is_none() ? tk::NormalizedAlert{}
                                                        : from_py<tk::NormalizedAlert>(context);
            tk::Label lbl = label.is_none() ? tk::Label{} : from_py<tk::Label>(label);
            tk::ScorerSpec spec = scorer.is_none() ? tk::default_keyword_scorer()
                                                   : from_py<tk::ScorerSpec>(scorer);
            return to_py_value(json(tk::score_chain(chain_from(chain), ctx, lbl, spec)));
        },
        py::arg("chain"), py::arg("context") = py::none(), py::arg("label") = py::none(),
        py::arg("scorer") = py::none());

    m.def(
        "information_density",
        [](const std::vector<int>& token_lens, const std::vector<double>& scores,
           double epsilon_smooth) {
            return tk::information_density(token_lens, scores, epsilon_smooth);
        },
        py::arg("token_lens"), py::arg("scores"), py::arg("epsilon_smooth") = 1.0);

    m.def(
        "compress",
        [](const py::object& chain, const py::object& rel, const py::object& cfg,
           const py::object& context, const py::object& label) {
            tk::CompressionConfig config =
                cfg.is_none() ? tk::CompressionConfig{} : from_py<tk::CompressionConfig>(cfg);
            tk::NormalizedAlert ctx = context.is_none() ? tk::NormalizedAlert{}
                                                        : from_py<tk::NormalizedAlert>(context);
            tk::Label lbl = label.is_none() ? tk::Label{} : from_py<tk::Label>(label);
            return to_py_value(json(tk::compress(chain_from(chain), rel_from(rel), ctx, lbl,
                                                 config, tk::FidelityEvaluatorSpec{})));
        },
        py::arg("chain"), py::arg("rel"), py::arg("cfg") = py::none(),
        py::arg("context") = py::none(), py::arg("label") = py::none());

    m.def(
        "oracle_optimal",
        [](const py::object& chain, const py::object& rel, const py::object& cfg) {
            tk::CompressionConfig config =
                cfg.is_none() ? tk::CompressionConfig{} : from_py<tk::CompressionConfig>(cfg);
            return to_py_value(json(tk::oracle_optimal(chain_from(chain), rel_from(rel), config)));
        },
        py::arg("chain"), py::arg("rel"), py::arg("cfg") = py::none());

    m.def(
        "check_fidelity",
        [](const py::object& full, const py::object& sub, const py::object& rel,
           double epsilon_fidelity) {
            return to_py_value(json(tk::check_fidelity(
                tk::NormalizedAlert{}, tk::Label{}, chain_from(full),
                from_py<tk::CompressedChain>(sub), rel_from(rel), tk::FidelityEvaluatorSpec{},
                epsilon_fidelity)));
        },
        py::arg("full"), py::arg("sub"), py::arg("rel"), py::arg("epsilon_fidelity") = 0.05);

    m.def(
        "build_tuple",
        [](const py::object& alert, const py::object& label, const py::object& chain,
           const py::object& rel, const py::object& cfg, int max_bullets) {
            tk::TupleBuildConfig build;
            if (!cfg.is_none()) build.compression = from_py<tk::CompressionConfig>(cfg);
            build.max_bullets = max_bullets;
            return to_py_value(json(tk::build_tuple(
                from_py<tk::NormalizedAlert>(alert), from_py<tk::Label>(label), chain_from(chain),
                rel_from(rel), build, tk::FidelityEvaluatorSpec{})));
        },
        py::arg("alert"), py::arg("label"), py::arg("chain"), py::arg("rel"),
        py::arg("cfg") = py::none(), py::arg("max_bullets") = 5);

    m.def(
        "generate_synthetic",
        [](int n, std::uint64_t seed, const py::object& spec) {
            tk::SyntheticSpec s = spec.is_none() ? tk::default_synthetic_spec()
                                                 : from_py<tk::SyntheticSpec>(spec);
            s.n = n;
            s.seed = seed;
            py::list out;
            for (const auto& rec : tk::generate_synthetic(s)) out.append(to_py_value(json(rec)));
            return out;
        },
        py::arg("n"), py::arg("seed") = 0, py::arg("spec") = py::none());

    m.def(
        "partition",
        [](const py::object& corpus, int min_samples, int k_max) {
            auto tuples = from_py<std::vector<tk::TrainingTuple>>(corpus);
            tk::PartitionConfig cfg;
            cfg.min_samples = min_samples;
            cfg.k_max = k_max;
            return to_py_value(json(tk::partition(tuples, cfg)));
        },
        py::arg("corpus"), py::arg("min_samples") = 500, py::arg("k_max") = 8);

    m.def(
        "split",
        [](const py::object& corpus, double train, double val, double test, std::uint64_t seed) {
            auto tuples = from_py<std::vector<tk::TrainingTuple>>(corpus);
            tk::SplitSpec spec;
            spec.train = train;
            spec.val = val;
            spec.test = test;
            spec.seed = seed;
            return to_py_value(json(tk::split(tuples, spec)));
        },
        py::arg("corpus"), py::arg("train") = 0.7, py::arg("val") = 0.1, py::arg("test") = 0.2,
        py::arg("seed") = 0);

    m.def(
        "classify_keywords",
        [](const py::object& alert, const py::object& rules) {
            tk::KeywordRouteRules r = rules.is_none() ? tk::default_route_rules()
                                                      : from_py<tk::KeywordRouteRules>(rules);
            auto [category, confidence] =
                tk::classify_keywords(from_py<tk::NormalizedAlert>(alert), r);
            return py::make_tuple(tk::to_string(category), confidence);
        },
        py::arg("alert"), py::arg("rules") = py::none());

    m.def(
        "route",
        [](const py::object& alert, const py::object& config) {
            tk::PipelineConfig cfg = config_from(config);
            tk::Router router(cfg.router);
            tk::RoutingDecision decision =
                router.route(from_py<tk::NormalizedAlert>(alert), cfg.experts.domain_ids(),
                             cfg.experts.fallback.expert_id);
            return to_py_value(json(decision));
        },
        py::arg("alert"), py::arg("config") = py::none());

    m.def(
        "infer",
        [](const py::object& alert, const py::object& expert, const py::object& taxonomy) {
            tk::Taxonomy t = taxonomy.is_none() ? tk::default_taxonomy()
                                                : from_py<tk::Taxonomy>(taxonomy);
            tk::ExpertSpec spec = from_py<tk::ExpertSpec>(expert);
            return to_py_value(json(tk::infer(from_py<tk::NormalizedAlert>(alert), spec, t)));
        },
        py::arg("alert"), py::arg("expert"), py::arg("taxonomy") = py::none());

    m.def(
        "triage_stream",
        [](const py::object& alerts, const py::object& config) {
            tk::PipelineConfig cfg = config_from(config);
            std::vector<tk::StreamAlert> stream;
            for (const auto& item : alerts.cast<py::sequence>())
                stream.push_back(tk::parse_stream_alert(to_json_value(item)));
            tk::StreamResult result;
            {
                py::gil_scoped_release release;
                result = tk::run_stream(stream, cfg);
            }
            py::list records;
            for (const auto& record : result.records) records.append(to_py_value(json(record)));
            py::object metrics =
                result.metrics ? to_py_value(json(*result.metrics)) : py::object(py::none());
            return py::make_tuple(records, metrics);
        },
        py::arg("alerts"), py::arg("config") = py::none());

    m.def(
        "evaluate",
        [](const py::object& records, const py::object& truth, const py::object& baseline_tokens) {
            std::vector<tk::EvalRecord> evals;
            for (const auto& item : records.cast<py::sequence>()) {
                json j = to_json_value(item);
                tk::EvalRecord e;
                if (j.contains("soar")) {
                    tk::TriageRecord record = j.get<tk::TriageRecord>();
                    e.alert_id = record.alert_id;
                    e.predicted = record.soar.at("label").get<tk::Label>();
                    e.latency_s = record.soar.at("latency").at("total_s").get<double>();
                    e.tokens = record.soar.at("tokens").at("route").get<int>() +
                               record.soar.at("tokens").at("expert").get<int>();
                } else {
                    e.alert_id = j.at("alert_id").get<std::string>();
                    e.predicted = j.at("label").get<tk::Label>();
                    e.latency_s = j.value("latency_s", 0.0);
                    e.tokens = j.value("tokens", 0);
                }
                evals.push_back(std::move(e));
            }
            std::map<std::string, tk::Label> gold;
            for (const auto& [key, value] : to_json_value(truth).items())
                gold[key] = value.get<tk::Label>();
            std::optional<double> baseline;
            if (!baseline_tokens.is_none()) baseline = baseline_tokens.cast<double>();
            return to_py_value(json(tk::evaluate(evals, gold, baseline)));
        },
        py::arg("records"), py::arg("truth"), py::arg("baseline_tokens") = py::none());

    m.def(
        "perturb",
        [](const py::object& alerts, const py::object& spec, const py::object& schema) {
            tk::PerturbationSpec p = from_py<tk::PerturbationSpec>(spec);
            tk::NormalizeSchema s = schema.is_none() ? tk::default_schema()
                                                     : from_py<tk::NormalizeSchema>(schema);
            auto raws = from_py<std::vector<tk::RawLog>>(alerts);
            py::list out;
            for (const auto& raw : tk::perturb(raws, p, s)) out.append(to_py_value(json(raw)));
            return out;
        },
        py::arg("alerts"), py::arg("spec"), py::arg("schema") = py::none());

    m.def("token_count", [](const std::string& text) { return tk::token_count(text); },
          py::arg("text"));
}
