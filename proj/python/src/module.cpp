// Copyright 2026 The Credence Market Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "credence/equilibrium.hpp"
#include "credence/human_data.hpp"
#include "credence/llm.hpp"
#include "credence/report.hpp"
#include "credence/session.hpp"

namespace py = pybind11;
using namespace credence;
using nlohmann::json;

namespace {

// Money and Ratio values cross as floats in currency units.
double units(const Ratio& cents) { return ratio_to_double(cents) / 100.0; }

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::list table_rows(const Table& t) {
  std::ostringstream os;
  write_json(os, t, "");
  return to_py(json::parse(os.str())["rows"]);
}

py::dict prediction_dict(const EquilibriumResult& r) {
  py::dict d;
  d["institution"] = std::string(to_string(r.institution));
  d["objective"] = std::string(to_string(r.objective));
  d["transparent"] = r.transparent;
  d["breakdown"] = r.market_breaks_down;
  d["prices"] = r.prices_label();
  d["p_low"] = r.p_low;
  d["p_high"] = r.p_high;
  d["consumer"] = units(r.consumer);
  d["expert"] = units(r.expert);
  d["total"] = units(r.total_income);
  return d;
}

}  // namespace

PYBIND11_MODULE(_credence, m) {
  m.doc() = "Credence goods market engine";

  py::enum_<Institution>(m, "Institution")
      .value("NoInstitution", Institution::NoInstitution)
      .value("Verifiability", Institution::Verifiability)
      .value("Liability", Institution::Liability);
  py::enum_<Objective>(m, "Objective")
      .value("NoObjective", Objective::NoObjective)
      .value("SelfInterested", Objective::SelfInterested)
      .value("InequityAverse", Objective::InequityAverse)
      .value("EfficiencyLoving", Objective::EfficiencyLoving);
  py::enum_<HumanRole>(m, "HumanRole")
      .value("Consumer", HumanRole::Consumer)
      .value("Expert", HumanRole::Expert);

  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<CodecError>(m, "CodecError", PyExc_ValueError);

  m.def("solve_prediction",
        [](Institution inst, Objective obj, bool transparent) {
          return prediction_dict(solve_prediction(MarketParams{}, inst, obj, transparent));
        },
        py::arg("institution"), py::arg("objective") = Objective::SelfInterested,
        py::arg("transparent") = false,
        "Equilibrium prices and per-interaction payoffs with default parameters.");

  m.def("verify_predictions", [] {
    PredictionReport r = verify_predictions(MarketParams{});
    py::list out;
    for (const PredictionCheck& c : r.checks) {
      py::dict d;
      d["cell"] = c.cell;
      d["expected"] = c.expected;
      d["pass"] = c.pass;
      py::list results;
      for (const auto& e : c.results) results.append(prediction_dict(e));
      d["results"] = results;
      out.append(d);
    }
    return out;
  });

  m.def("monopoly_price", [](Institution inst) {
    MonopolyResult r = monopoly_price(MarketParams{}, inst);
    return py::make_tuple(r.prices.low, r.prices.high);
  });

  m.def("expected_consumer_payoff",
        [](Institution inst, int p_low, int p_high, const std::string& belief) {
          BeliefModel b = belief == "skeptical" ? BeliefModel::skeptical() : BeliefModel::standard();
          if (belief != "skeptical" && belief != "standard")
            throw py::value_error("belief must be 'standard' or 'skeptical'");
          return units(expected_consumer_payoff(MarketParams{}, inst, PricePair{p_low, p_high}, b));
        },
        py::arg("institution"), py::arg("p_low"), py::arg("p_high"), py::arg("belief") = "standard");

  m.def("encode_history_row",
        [](std::optional<int> chosen, const std::vector<std::pair<int, int>>& prices) {
          if (prices.size() != kHistoryExperts) throw py::value_error("need four price pairs");
          HistoryRecord r;
          r.chosen = chosen;
          for (std::size_t i = 0; i < kHistoryExperts; ++i)
            r.prices[i] = PricePair{prices[i].first, prices[i].second};
          return encode_history_row(r);
        },
        py::arg("chosen"), py::arg("prices"), "chosen is 0-based, or None for an opt-out.");
  m.def("parse_history_row", [](const std::string& line) {
    HistoryRecord r = parse_history_row(line);
    std::vector<std::pair<int, int>> prices;
    for (const PricePair& p : r.prices) prices.emplace_back(p.low, p.high);
    return py::make_tuple(r.chosen, prices);
  });

  m.def("simulate",
        [](const std::string& scenario_path, std::optional<std::int64_t> reps,
           std::optional<std::uint64_t> seed) {
          ScenarioSpec spec = load_scenario(scenario_path);
          ScenarioRun run;
          {
            py::gil_scoped_release release;
            run = run_scenario(spec, {reps, seed, std::nullopt, false});
          }
          return table_rows(metrics_table(run));
        },
        py::arg("scenario"), py::arg("reps") = py::none(), py::arg("seed") = py::none(),
        "Runs a scenario file; returns one dict per metrics row.");

  m.def("ingest_human_csv", [](const std::string& path) {
    IngestResult r = ingest_human_csv(path);
    py::dict d;
    d["rows"] = r.summary.rows;
    d["accepted"] = r.summary.accepted;
    d["rejected"] = r.summary.rejected.size();
    d["summary"] = r.summary.to_text();
    return d;
  });

  py::class_<SessionService>(m, "SessionService")
      .def(py::init([](const std::string& scenario_path, std::uint64_t seed) {
             ServiceConfig c;
             c.scenario = load_scenario(scenario_path);
             c.seed = seed;
             return std::make_unique<SessionService>(std::move(c));
           }),
           py::arg("scenario"), py::arg("seed") = 1)
      .def("cells", [](const SessionService& s) { return to_py(s.cells()); })
      .def("create", [](SessionService& s, const py::dict& req) { return to_py(s.create(from_py(req))); })
      .def("state", [](const SessionService& s, const std::string& id) { return to_py(s.state(id)); })
      .def("offers", [](SessionService& s, const std::string& id) { return to_py(s.offers(id)); })
      .def("objective_choices",
           [](const SessionService& s, const std::string& id) { return to_py(s.objective_choices(id)); })
      .def("choose", [](SessionService& s, const std::string& id, const std::string& choice) {
             return to_py(s.choose(id, json{{"choice", choice}}));
           })
      .def("submit", [](SessionService& s, const std::string& id, const py::dict& body) {
             return to_py(s.submit(id, ExpertSubmission::from_json(from_py(body))));
           })
      .def("outcome", [](const SessionService& s, const std::string& id) { return to_py(s.outcome(id)); });

  // SessionError carries an HTTP-style status; raised as SessionError(status, payload).
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> session_error;
  session_error.call_once_and_store_result(
      [&m] { return py::exception<SessionError>(m, "SessionError", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SessionError& e) {
      py::tuple args = py::make_tuple(e.status(), to_py(e.to_json()));
      PyErr_SetObject(session_error.get_stored().ptr(), args.ptr());
    }
  });
}
