#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "agentcritic/agent.hpp"
#include "agentcritic/cli.hpp"
#include "agentcritic/critic.hpp"
#include "agentcritic/error.hpp"
#include "agentcritic/grounding.hpp"
#include "agentcritic/textlab.hpp"

namespace py = pybind11;
using namespace agentcritic;

namespace {

// Loaded checkpoint plus the network it belongs to; ActionScorer keeps references to both.
class CriticModel {
public:
    explicit CriticModel(const std::string& path) : params_(load_critic(path)), critic_(params_.arch) {
        critic_.check(params_);
    }

    std::vector<double> score(const std::string& task_id, const std::string& description,
                              const std::string& observation, const std::string& inventory,
                              const std::string& free_look, const std::vector<std::string>& actions) const {
        std::vector<ActionText> acts;
        for (const auto& a : actions) acts.emplace_back(a);
        const ActionScorer scorer(critic_, params_);
        return scorer.score(Task{task_id, description}, EnvState{observation, inventory, free_look, 0}, acts);
    }

    double value(const std::string& task_id, const std::string& description, const std::string& observation,
                 const std::string& inventory, const std::string& free_look) const {
        return v_forward(critic_, params_, Task{task_id, description},
                         EnvState{observation, inventory, free_look, 0});
    }

    bool twin_q() const { return params_.q2.has_value(); }

private:
    CriticParams params_;
    Critic critic_;
};

py::dict selection_dict(const Selection& sel) {
    py::list rows;
    for (const auto& s : sel.scored) {
        py::dict r;
        r["p_raw"] = s.p_raw;
        r["p_norm"] = s.p_norm;
        r["q_raw"] = s.q_raw;
        r["q_norm"] = s.q_norm;
        r["combined"] = s.combined;
        rows.append(r);
    }
    py::dict d;
    d["index"] = sel.index;
    d["alpha"] = sel.alpha;
    d["scored"] = rows;
    return d;
}

} // namespace

PYBIND11_MODULE(_agentcritic, m) {
    m.doc() = "critic-guided action rescoring for text agents";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<TransportError>(m, "TransportError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

    m.def("normalize_scores", [](const std::vector<double>& v) { return normalize_scores(v); }, py::arg("values"));
    m.def("alpha_schedule", &alpha_schedule, py::arg("t"), py::arg("b") = 0.6, py::arg("d") = 0.95);
    m.def(
        "select_action",
        [](const std::vector<double>& p, const std::vector<double>& q, std::size_t t, double b, double d,
           std::optional<double> static_alpha) {
            RescoreConfig cfg;
            cfg.b = b;
            cfg.d = d;
            cfg.static_alpha = static_alpha;
            cfg.validate();
            return selection_dict(select_action(p, q, t, cfg));
        },
        py::arg("p"), py::arg("q"), py::arg("t"), py::arg("b") = 0.6, py::arg("d") = 0.95,
        py::arg("static_alpha") = py::none());

    m.def("embed_text", [](const std::string& s, std::size_t dim) { return embed_text(s, dim).vector; }, py::arg("text"),
          py::arg("dim") = kDefaultEmbeddingDim);
    m.def("cosine_similarity",
          [](const std::vector<double>& a, const std::vector<double>& b) { return cosine_similarity(a, b); });
    m.def(
        "map_to_valid",
        [](const std::vector<std::pair<std::string, double>>& cands, const std::vector<std::string>& valid,
           std::size_t k) {
            std::vector<Candidate> cs;
            for (const auto& [text, ll] : cands) cs.push_back(Candidate{ActionText(text), ll});
            std::vector<ActionText> vs;
            for (const auto& v : valid) vs.emplace_back(v);
            const GroundedSet g = map_to_valid(cs, vs, k);
            py::list out;
            for (const auto& a : g.actions) {
                py::dict d;
                d["action"] = a.action.str();
                d["origin"] = std::string(to_string(a.origin));
                d["similarity_sum"] = a.similarity_sum ? py::cast(*a.similarity_sum) : py::none();
                d["log_likelihood"] = a.log_likelihood ? py::cast(*a.log_likelihood) : py::none();
                out.append(d);
            }
            return py::make_tuple(out, g.warnings);
        },
        py::arg("candidates"), py::arg("valid_actions"), py::arg("k") = 5);

    m.def("fixture_names", &textlab::fixture_names);
    m.def("fixture_json", [](const std::string& name) { return textlab::env_spec_to_json(textlab::fixture(name)); });
    m.def("optimal_path_length", [](const std::string& env, const std::string& task, double gamma) {
        return textlab::optimal_path_length(textlab::load_env_spec(env), task, gamma);
    }, py::arg("env"), py::arg("task_id"), py::arg("gamma") = 0.9);

    py::class_<CriticModel>(m, "CriticModel")
        .def(py::init<const std::string&>(), py::arg("path"))
        .def("score", &CriticModel::score, py::arg("task_id"), py::arg("description"), py::arg("observation"),
             py::arg("inventory"), py::arg("free_look"), py::arg("actions"))
        .def("value", &CriticModel::value, py::arg("task_id"), py::arg("description"), py::arg("observation"),
             py::arg("inventory"), py::arg("free_look"))
        .def_property_readonly("twin_q", &CriticModel::twin_q);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full{"agentcritic"};
            full.insert(full.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& a : full) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int rc;
            {
                py::gil_scoped_release release;
                rc = cli::run_cli(int(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(rc, out.str(), err.str());
        },
        py::arg("args"));
}
