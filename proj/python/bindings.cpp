#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ttx/action_items.hpp"
#include "ttx/backend.hpp"
#include "ttx/error.hpp"
#include "ttx/exercise.hpp"
#include "ttx/persistence.hpp"
#include "ttx/runner.hpp"
#include "ttx/scoring.hpp"
#include "ttx/tokens.hpp"

namespace py = pybind11;
namespace sc = ttx::scoring;

namespace {

sc::TeamProfile make_team(const std::string& team_id, const std::vector<double>& factors, double scale_max) {
  if (factors.size() != 6) throw ttx::Error(ttx::ErrorCode::validation_error, "expected six factors (S, K, R, C, A, E)");
  sc::TeamProfile p{team_id, factors[0], factors[1], factors[2], factors[3], factors[4], factors[5], scale_max};
  p.validate();
  return p;
}

py::dict upbs_dict(const sc::UpbsResult& r) {
  py::dict d;
  d["alpha"] = r.alpha;
  d["beta"] = r.beta;
  d["p_avg"] = r.p_avg;
  d["mean_abs_delta"] = r.mean_abs_delta;
  d["upbs"] = r.score;
  return d;
}

// Plays a scripted session end to end and returns the transcript as JSON Lines.
py::dict run_scripted(const std::string& script, const std::string& storage, const std::string& responses,
                      const std::string& domain) {
  ttx::BackendConfig cfg;
  cfg.script_path = script;
  auto backend = ttx::MockBackend::load(script);
  ttx::FileStore store(storage);
  ttx::ManualClock clock(ttx::parse_timestamp("2024-01-01T10:00:00.000Z"));
  ttx::RunOptions opts;
  opts.domain = domain;
  std::istringstream in(responses);
  std::ostringstream out;
  const auto result = ttx::run_exercise(opts, store, backend, cfg, clock.as_fn(), in, out);
  std::string transcript;
  for (const auto& e : store.read_events(result.session_id)) transcript += nlohmann::json(e).dump() + "\n";
  py::list items;
  for (const auto& item : result.action_items) items.append(py::str(nlohmann::json(item).dump()));
  py::dict d;
  d["session_id"] = result.session_id;
  d["facilitator_messages"] = result.facilitator_messages;
  d["transcript"] = transcript;
  d["output"] = out.str();
  d["action_items"] = items;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the tabletop exercise orchestrator";

  static py::exception<ttx::Error> error_type(m, "TtxError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ttx::Error& e) {
      PyErr_SetString(error_type.ptr(), (std::string(ttx::to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("preparedness",
        [](const std::vector<double>& factors, double scale_max) {
          return sc::preparedness(make_team("team", factors, scale_max)).value;
        },
        py::arg("factors"), py::arg("scale_max") = 10.0);

  m.def("upbs",
        [](const std::vector<std::vector<double>>& teams, double alpha, double scale_max) {
          std::vector<sc::TeamProfile> profiles;
          for (std::size_t i = 0; i < teams.size(); ++i) profiles.push_back(make_team("t" + std::to_string(i), teams[i], scale_max));
          return upbs_dict(sc::upbs(profiles, alpha));
        },
        py::arg("teams"), py::arg("alpha"), py::arg("scale_max") = 10.0);

  m.def("alpha_grid", &sc::alpha_grid, py::arg("steps"));
  m.def("format_score", &sc::format_score, py::arg("value"), py::arg("decimals") = 3);

  m.def("count_words", [](const std::string& s) { return ttx::count_words(s); });
  m.def("estimate_tokens", [](const std::string& s) { return ttx::estimate_tokens(s); });
  m.def("tokens_for_words", &ttx::tokens_for_words, py::arg("words"));

  m.def("parse_action_items", [](const std::string& text) {
    const auto r = ttx::parse_action_items(text);
    py::list items;
    for (const auto& i : r.items) {
      py::dict d;
      d["finding"] = i.finding;
      d["improvement"] = i.improvement;
      d["measurable_criterion"] = i.measurable_criterion;
      items.append(d);
    }
    return py::make_tuple(items, r.warnings);
  });

  m.def("workflow_edges", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& e : ttx::workflow_edges()) {
      out.emplace_back(std::string(ttx::to_string(e.from)), std::string(ttx::to_string(e.signal)),
                       std::string(ttx::to_string(e.to)));
    }
    return out;
  });

  m.def("run_scripted", &run_scripted, py::arg("script"), py::arg("storage"), py::arg("responses") = "",
        py::arg("domain") = "Active Directory");
}
