#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vimar/cli.hpp"
#include "vimar/config.hpp"
#include "vimar/error.hpp"
#include "vimar/eval.hpp"
#include "vimar/io.hpp"
#include "vimar/pipeline.hpp"
#include "vimar/prm.hpp"

namespace py = pybind11;
using namespace vimar;

namespace {

// Structured values cross the boundary as JSON text; the Python package
// decodes them into dicts.
RunConfig config_from(const std::string& text) { return parse_run_config(nlohmann::json::parse(text)); }

nlohmann::json summary_json(const StrategySummary& s) {
  nlohmann::json j;
  j["strategy"] = s.strategy;
  j["scenes"] = s.scenes;
  j["chair_s"] = s.chair.chair_s;
  j["chair_i"] = s.chair.chair_i;
  j["hallucinated_captions"] = s.chair.counts.hallucinated_captions;
  j["mean_coverage"] = s.mean_coverage;
  j["mean_judge_score"] = s.mean_judge_score;
  j["mean_sentences"] = s.mean_sentences;
  j["mean_value_calls"] = s.mean_value_calls;
  return j;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Value-guided caption decoding on a synthetic scene world.";

  auto base = py::register_exception<Error>(m, "VimarError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());

  m.attr("FEATURE_SPEC_VERSION") = std::string(kFeatureSpecVersion);

  m.def("normalize_config", [](const std::string& text) { return to_json(config_from(text)).dump(); },
        py::arg("config_json"));
  m.def("config_hash", [](const std::string& text) { return config_hash(config_from(text)); }, py::arg("config_json"));

  py::class_<Corpus>(m, "Corpus")
      .def("__len__", [](const Corpus& c) { return c.entries.size(); })
      .def("scene_ids",
           [](const Corpus& c) {
             std::vector<std::string> ids;
             for (const auto& e : c.entries) ids.push_back(e.scene.id);
             return ids;
           })
      .def("entry_json", [](const Corpus& c, std::size_t i) { return to_json(c.entries.at(i), "").dump(); });

  py::class_<ValueParams>(m, "ValueParams")
      .def_readonly("weights", &ValueParams::weights)
      .def_readonly("gamma", &ValueParams::gamma)
      .def_readonly("feature_spec_version", &ValueParams::feature_spec_version)
      .def_property_readonly("final_loss", [](const ValueParams& p) { return p.meta.final_loss; })
      .def_property_readonly("loss_curve", [](const ValueParams& p) { return p.meta.loss_curve; })
      .def_property_readonly("tau", [](const ValueParams& p) { return p.meta.tau; });

  m.def("generate", [](const std::string& cfg) { return run_gen(config_from(cfg)); }, py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "train", [](const std::string& cfg, const Corpus& corpus) { return run_train(config_from(cfg), corpus).params; },
      py::arg("config_json"), py::arg("corpus"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "decode",
      [](const std::string& cfg_text, const Corpus& corpus, const ValueParams* params, const std::string& strategy) {
        const RunConfig cfg = config_from(cfg_text);
        py::gil_scoped_release release;
        const auto out = run_decode(cfg, corpus, params, strategy_from_string(strategy));
        const auto idx = scene_index(corpus);
        nlohmann::json results = nlohmann::json::array();
        for (const auto& r : out.results) results.push_back(to_json(r, config_hash(cfg), false));
        nlohmann::json j;
        j["results"] = std::move(results);
        j["summary"] = summary_json(summarize(out.results, idx, cfg.eval.judge));
        return j.dump();
      },
      py::arg("config_json"), py::arg("corpus"), py::arg("params").none(true), py::arg("strategy"));

  m.def(
      "margin_reward",
      [](double delta, double tau, const std::string& mode) {
        MarginConfig c;
        c.tau = tau;
        c.mode = penalty_mode_from_string(mode);
        return margin_reward(delta, c);
      },
      py::arg("delta"), py::arg("tau") = 0.16, py::arg("mode") = "signed");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "vimar");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
