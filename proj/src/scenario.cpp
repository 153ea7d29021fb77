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

#include "credence/scenario.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "credence/human_data.hpp"

namespace credence {

namespace fs = std::filesystem;

ScenarioError::ScenarioError(std::string file, int line, int column, std::string field,
                             const std::string& problem)
    : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                         ": " + field + ": " + problem),
      field_(std::move(field)),
      line_(line) {}

std::string to_string(ObjectiveRegime r) {
  return r == ObjectiveRegime::FixedSelfInterested ? "FixedSelfInterested" : "ChosenObjective";
}

ObjectiveRegime parse_objective_regime(std::string_view s) {
  if (s == "FixedSelfInterested" || s == "fixed") return ObjectiveRegime::FixedSelfInterested;
  if (s == "ChosenObjective" || s == "chosen") return ObjectiveRegime::ChosenObjective;
  throw std::invalid_argument("unknown objective regime '" + std::string(s) + "'");
}

bool Condition::has_llm_seats() const {
  for (const ExpertSeat& s : experts)
    if (!s.policy) return true;
  return false;
}

MarketSetup ScenarioSpec::setup(const Condition& c, Institution inst) const {
  MarketSetup s;
  s.params = params;
  s.institution = inst;
  s.transparency = transparency;
  for (const ExpertSeat& seat : c.experts) {
    if (!seat.policy)
      throw std::logic_error("condition '" + c.name + "' has an unresolved LLM seat (" +
                             seat.label + "); run it through llm-run");
    s.experts.push_back(seat.policy);
  }
  s.consumers = c.consumers;
  return s;
}

const Condition& ScenarioSpec::condition(const std::string& wanted) const {
  for (const Condition& c : conditions)
    if (c.name == wanted) return c;
  throw std::invalid_argument("scenario '" + name + "' has no condition '" + wanted + "'");
}

namespace {

class Reader {
 public:
  Reader(std::string file, fs::path base) : file_(std::move(file)), base_(std::move(base)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& field,
                         const std::string& problem) const {
    YAML::Mark m = n.Mark();
    int line = m.line >= 0 ? m.line + 1 : 0;
    int col = m.column >= 0 ? m.column + 1 : 0;
    throw ScenarioError(file_, line, col, field, problem);
  }

  void expect_map(const YAML::Node& n, const std::string& field) const {
    if (!n.IsMap()) fail(n, field, "expected a mapping");
  }

  void allow_keys(const YAML::Node& n, const std::string& field,
                  std::initializer_list<const char*> keys) const {
    expect_map(n, field);
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : n) {
      std::string k = kv.first.as<std::string>();
      if (!ok.count(k)) {
        std::string list;
        for (const char* a : keys) list += std::string(list.empty() ? "" : ", ") + a;
        fail(kv.first, join(field, k), "unknown key (allowed: " + list + ")");
      }
    }
  }

  static std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
  }

  std::string str(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a scalar");
    return n.Scalar();
  }

  long long integer(const YAML::Node& n, const std::string& field) const {
    std::string s = str(n, field);
    try {
      std::size_t used = 0;
      long long v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(n, field, "expected an integer, got '" + s + "'");
  }

  double real(const YAML::Node& n, const std::string& field) const {
    std::string s = str(n, field);
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(n, field, "expected a number, got '" + s + "'");
  }

  bool boolean(const YAML::Node& n, const std::string& field) const {
    std::string s = str(n, field);
    if (s == "true" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "no" || s == "off") return false;
    fail(n, field, "expected true or false, got '" + s + "'");
  }

  Money money(const YAML::Node& n, const std::string& field) const {
    std::string s = str(n, field);
    try {
      return Money::parse(s);
    } catch (const std::invalid_argument& e) {
      fail(n, field, e.what());
    }
  }

  Ratio probability(const YAML::Node& n, const std::string& field) const {
    std::string s = str(n, field);
    try {
      return parse_probability(s);
    } catch (const std::invalid_argument& e) {
      fail(n, field, e.what());
    }
  }

  // Wraps a core parser so its message carries the field and line.
  template <typename F>
  auto parsed(const YAML::Node& n, const std::string& field, F parse) const {
    std::string s = str(n, field);
    try {
      return parse(s);
    } catch (const std::invalid_argument& e) {
      fail(n, field, e.what());
    }
  }

  fs::path path(const YAML::Node& n, const std::string& field) const {
    fs::path p = str(n, field);
    return p.is_absolute() ? p : base_ / p;
  }

  const std::string& file() const { return file_; }

 private:
  std::string file_;
  fs::path base_;
};

class Builder {
 public:
  Builder(const Reader& r, ScenarioSpec& spec) : r_(r), spec_(spec) {}

  void named_policies(const YAML::Node& n) {
    r_.expect_map(n, "policies");
    for (const auto& kv : n) named_[kv.first.as<std::string>()] = kv.second;
  }

  std::vector<ExpertSeat> experts(const YAML::Node& n, const std::string& field) {
    std::vector<ExpertSeat> seats;
    if (!n.IsSequence()) r_.fail(n, field, "expected a list of seats");
    for (std::size_t i = 0; i < n.size(); ++i) {
      std::string f = field + "[" + std::to_string(i) + "]";
      int count = seat_count(n[i], f);
      ExpertSeat seat = expert(n[i], f, 0);
      for (int k = 0; k < count; ++k) seats.push_back(seat);
    }
    check_total(n, field, seats.size(), spec_.params.n_experts, "expert");
    return seats;
  }

  std::vector<ConsumerPolicyPtr> consumers(const YAML::Node& n, const std::string& field) {
    std::vector<ConsumerPolicyPtr> out;
    if (!n.IsSequence()) r_.fail(n, field, "expected a list of seats");
    for (std::size_t i = 0; i < n.size(); ++i) {
      std::string f = field + "[" + std::to_string(i) + "]";
      int count = seat_count(n[i], f);
      ConsumerPolicyPtr p = consumer(n[i], f);
      for (int k = 0; k < count; ++k) out.push_back(p);
    }
    check_total(n, field, out.size(), spec_.params.n_consumers, "consumer");
    return out;
  }

 private:
  int seat_count(const YAML::Node& n, const std::string& field) const {
    if (!n.IsMap() || !n["count"]) return 1;
    long long c = r_.integer(n["count"], field + ".count");
    if (c < 1) r_.fail(n["count"], field + ".count", "must be at least 1");
    return static_cast<int>(c);
  }

  void check_total(const YAML::Node& n, const std::string& field, std::size_t got, int want,
                   const char* what) const {
    if (got != static_cast<std::size_t>(want))
      r_.fail(n, field,
              std::to_string(got) + " " + what + " seats given, the market has " +
                  std::to_string(want));
  }

  // Follows `use: name` or a bare string to a named policy.
  YAML::Node resolve(const YAML::Node& n, const std::string& field, std::string& via) const {
    std::string ref;
    if (n.IsScalar()) ref = n.Scalar();
    else if (n.IsMap() && n["use"]) ref = r_.str(n["use"], field + ".use");
    else return n;
    auto it = named_.find(ref);
    if (it == named_.end()) r_.fail(n, field, "no policy named '" + ref + "' under policies");
    via = ref;
    return it->second;
  }

  PricePair prices(const YAML::Node& n, const std::string& field) const {
    if (!n["p_low"] || !n["p_high"]) r_.fail(n, field, "needs p_low and p_high");
    PricePair pp{static_cast<int>(r_.integer(n["p_low"], field + ".p_low")),
                 static_cast<int>(r_.integer(n["p_high"], field + ".p_high"))};
    const MarketParams& p = spec_.params;
    auto grid = "outside the price grid " + std::to_string(p.price_min) + ".." +
                std::to_string(p.price_max);
    if (pp.low < p.price_min || pp.low > p.price_max)
      r_.fail(n["p_low"], field + ".p_low", std::to_string(pp.low) + " is " + grid);
    if (pp.high < p.price_min || pp.high > p.price_max)
      r_.fail(n["p_high"], field + ".p_high", std::to_string(pp.high) + " is " + grid);
    if (pp.low > pp.high)
      r_.fail(n["p_high"], field + ".p_high", "must not be below p_low");
    return pp;
  }

  ExpertAction action(const YAML::Node& n, const std::string& field, ExpertAction dflt) const {
    if (!n) return dflt;
    r_.allow_keys(n, field, {"treatment", "charge"});
    ExpertAction a = dflt;
    if (n["treatment"]) a.treatment = r_.parsed(n["treatment"], field + ".treatment", parse_treatment);
    if (n["charge"]) a.tier = r_.parsed(n["charge"], field + ".charge", parse_tier);
    return a;
  }

  std::shared_ptr<const ReplayPool> pool(const YAML::Node& n, const std::string& field) {
    fs::path p = r_.path(n, field);
    auto it = pools_.find(p.string());
    if (it != pools_.end()) return it->second;
    try {
      auto pool = ingest_human_csv(p.string(), spec_.params).pool;
      pools_[p.string()] = pool;
      return pool;
    } catch (const DataError& e) {
      r_.fail(n, field, e.what());
    }
  }

  ExpertSeat expert(const YAML::Node& raw, const std::string& field, int depth) {
    std::string via;
    YAML::Node n = resolve(raw, field, via);
    std::string f = via.empty() ? field : "policies." + via;
    if (depth > 4) r_.fail(raw, field, "policy references nest too deeply");
    r_.expect_map(n, f);
    if (!n["policy"]) r_.fail(n, f, "missing 'policy'");
    std::string kind = r_.str(n["policy"], f + ".policy");
    ExpertSeat seat;
    seat.label = kind;

    auto keys = [&](std::initializer_list<const char*> extra) {
      std::vector<const char*> k = {"policy", "count", "use"};
      k.insert(k.end(), extra.begin(), extra.end());
      check_keys(n, f, k);
    };

    if (kind == "rational") {
      keys({"objective", "p_low", "p_high"});
      Objective obj = n["objective"] ? r_.parsed(n["objective"], f + ".objective", parse_objective)
                                     : Objective::SelfInterested;
      if (obj == Objective::NoObjective)
        r_.fail(n["objective"], f + ".objective", "a rational expert needs a defined objective");
      std::optional<PricePair> pp;
      if (n["p_low"] || n["p_high"]) pp = prices(n, f);
      seat.policy = make_rational(obj, pp);
      seat.label = "rational:" + std::string(to_string(obj));
    } else if (kind == "scripted") {
      keys({"profile"});
      if (!n["profile"]) r_.fail(n, f, "scripted policy needs 'profile'");
      ScriptedProfile prof = r_.parsed(n["profile"], f + ".profile",
                                       [](const std::string& s) { return scripted_llm_profile(s); });
      seat.policy = make_scripted(prof);
      seat.label = prof.label;
    } else if (kind == "fixed") {
      keys({"p_low", "p_high", "small", "big"});
      PricePair pp = prices(n, f);
      SlotRule rule{action(n["small"], f + ".small", {Treatment::LCT, Tier::Low}),
                    action(n["big"], f + ".big", {Treatment::HCT, Tier::High})};
      seat.policy = make_fixed(pp, rule);
      seat.label = "fixed" + pp.to_string();
    } else if (kind == "mixture") {
      keys({"fraud", "prices"});
      MixtureSpec m = MixtureSpec::human_defaults();
      if (n["fraud"]) {
        const YAML::Node fr = n["fraud"];
        r_.allow_keys(fr, f + ".fraud", {"undertreatment", "overtreatment", "overcharging"});
        auto rate = [&](const char* k, double& out) {
          if (!fr[k]) return;
          out = r_.real(fr[k], f + ".fraud." + k);
          if (out < 0.0 || out > 1.0) r_.fail(fr[k], f + ".fraud." + k, "must lie in [0, 1]");
        };
        rate("undertreatment", m.fraud.undertreatment);
        rate("overtreatment", m.fraud.overtreatment);
        rate("overcharging", m.fraud.overcharging);
      }
      if (n["prices"]) mixture_prices(n["prices"], f + ".prices", m);
      try {
        seat.policy = behavioral_mixture(m, spec_.params);
      } catch (const std::invalid_argument& e) {
        r_.fail(n, f, e.what());
      }
    } else if (kind == "replay") {
      keys({"data"});
      if (!n["data"]) r_.fail(n, f, "replay policy needs 'data'");
      seat.policy = make_replay_expert(pool(n["data"], f + ".data"));
    } else if (kind == "delegation") {
      keys({"human", "rate", "objectives"});
      if (!n["human"] || !n["rate"]) r_.fail(n, f, "delegation needs 'human' and 'rate'");
      ExpertSeat human = expert(n["human"], f + ".human", depth + 1);
      if (!human.policy) r_.fail(n["human"], f + ".human", "the human side cannot be an LLM seat");
      Ratio rate = r_.probability(n["rate"], f + ".rate");
      std::vector<std::pair<Objective, Ratio>> shares;
      if (n["objectives"]) {
        const YAML::Node os = n["objectives"];
        r_.expect_map(os, f + ".objectives");
        Ratio total(0);
        for (const auto& kv : os) {
          std::string k = kv.first.as<std::string>();
          Objective o = r_.parsed(kv.first, f + ".objectives", parse_objective);
          if (spec_.objective_regime == ObjectiveRegime::FixedSelfInterested &&
              o != Objective::SelfInterested)
            r_.fail(kv.first, f + ".objectives." + k,
                    "FixedSelfInterested forbids delegating with objective " +
                        std::string(to_string(o)));
          if (o == Objective::NoObjective)
            r_.fail(kv.first, f + ".objectives." + k, "not one of the four objective prompts");
          Ratio w = r_.probability(kv.second, f + ".objectives." + k);
          shares.emplace_back(o, w);
          total += w;
        }
        if (total != Ratio(1)) r_.fail(os, f + ".objectives", "shares must sum to 1");
      } else if (spec_.objective_regime == ObjectiveRegime::ChosenObjective) {
        shares = {{Objective::SelfInterested, Ratio(2, 5)},
                  {Objective::EfficiencyLoving, Ratio(2, 5)},
                  {Objective::InequityAverse, Ratio(1, 5)}};
      } else {
        shares = {{Objective::SelfInterested, Ratio(1)}};
      }
      seat.policy = make_delegation_mix(human.policy, rate, spec_.objective_regime, shares);
      seat.label = "delegation(" + human.label + ")";
    } else if (kind == "llm") {
      keys({"objective", "training", "training_data"});
      LlmSeat llm;
      if (n["objective"]) llm.objective = r_.parsed(n["objective"], f + ".objective", parse_objective);
      if (n["training"])
        llm.training = r_.parsed(n["training"], f + ".training", parse_training_source);
      if (n["training_data"]) {
        if (!llm.training)
          r_.fail(n["training_data"], f + ".training_data", "set 'training' as well");
        llm.training_data = r_.path(n["training_data"], f + ".training_data").string();
      } else if (llm.training) {
        r_.fail(n, f, "'training' needs 'training_data'");
      }
      seat.llm = llm;
      seat.label = "llm:" + std::string(to_string(llm.objective));
    } else {
      r_.fail(n["policy"], f + ".policy",
              "unknown expert policy '" + kind +
                  "' (rational, scripted, fixed, mixture, replay, delegation, llm)");
    }
    if (!via.empty()) seat.label = via;
    return seat;
  }

  void mixture_prices(const YAML::Node& n, const std::string& field, MixtureSpec& m) const {
    r_.expect_map(n, field);
    for (const auto& kv : n) {
      std::string k = kv.first.as<std::string>();
      Institution inst = r_.parsed(kv.first, field, parse_institution);
      std::string f = field + "." + k;
      if (!kv.second.IsSequence() || kv.second.size() == 0)
        r_.fail(kv.second, f, "expected a list of [p_low, p_high, weight]");
      std::vector<std::pair<PricePair, double>> dist;
      double total = 0.0;
      for (std::size_t i = 0; i < kv.second.size(); ++i) {
        const YAML::Node e = kv.second[i];
        std::string ef = f + "[" + std::to_string(i) + "]";
        if (!e.IsSequence() || e.size() != 3) r_.fail(e, ef, "expected [p_low, p_high, weight]");
        PricePair pp{static_cast<int>(r_.integer(e[0], ef)), static_cast<int>(r_.integer(e[1], ef))};
        if (!is_valid(spec_.params, pp)) r_.fail(e, ef, pp.to_string() + " is not a valid price pair");
        double w = r_.real(e[2], ef);
        if (w < 0.0) r_.fail(e[2], ef, "negative weight");
        dist.emplace_back(pp, w);
        total += w;
      }
      if (total <= 0.0) r_.fail(kv.second, f, "weights sum to zero");
      // Weights may be given as percentages; they are renormalized.
      for (auto& d : dist) d.second /= total;
      m.price_distribution[static_cast<std::size_t>(inst)] = std::move(dist);
    }
  }

  ConsumerPolicyPtr consumer(const YAML::Node& raw, const std::string& field) {
    std::string via;
    YAML::Node n = resolve(raw, field, via);
    std::string f = via.empty() ? field : "policies." + via;
    r_.expect_map(n, f);
    if (!n["policy"]) r_.fail(n, f, "missing 'policy'");
    std::string kind = r_.str(n["policy"], f + ".policy");
    TieBreak tie = TieBreak::LowestIndex;
    if (n["tie_break"]) {
      std::string t = r_.str(n["tie_break"], f + ".tie_break");
      if (t == "uniform") tie = TieBreak::UniformRandom;
      else if (t != "lowest") r_.fail(n["tie_break"], f + ".tie_break", "lowest or uniform");
    }
    auto belief = [&]() {
      if (!n["belief"]) return BeliefModel::standard();
      std::string b = r_.str(n["belief"], f + ".belief");
      if (b == "standard") return BeliefModel::standard();
      if (b == "skeptical") return BeliefModel::skeptical();
      r_.fail(n["belief"], f + ".belief", "standard or skeptical");
    };
    if (kind == "threshold") {
      check_keys(n, f, {"policy", "count", "use", "belief", "tie_break"});
      return make_threshold(belief(), tie);
    }
    if (kind == "trust") {
      check_keys(n, f, {"policy", "count", "use", "belief", "tie_break", "rates"});
      std::array<Ratio, 3> rates = human_trust_rates();
      if (n["rates"]) {
        const YAML::Node rs = n["rates"];
        if (!rs.IsSequence() || rs.size() != 3)
          r_.fail(rs, f + ".rates", "expected [NoInstitution, Verifiability, Liability]");
        for (std::size_t i = 0; i < 3; ++i)
          rates[i] = r_.probability(rs[i], f + ".rates[" + std::to_string(i) + "]");
      }
      return make_trust(rates, belief(), tie);
    }
    if (kind == "transparency-aware") {
      check_keys(n, f, {"policy", "count", "use", "tie_break"});
      return make_transparency_aware(tie);
    }
    if (kind == "replay") {
      check_keys(n, f, {"policy", "count", "use", "data"});
      if (!n["data"]) r_.fail(n, f, "replay policy needs 'data'");
      return make_replay_consumer(pool(n["data"], f + ".data"));
    }
    r_.fail(n["policy"], f + ".policy",
            "unknown consumer policy '" + kind + "' (threshold, trust, transparency-aware, replay)");
  }

  void check_keys(const YAML::Node& n, const std::string& f,
                  const std::vector<const char*>& keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : n) {
      std::string k = kv.first.as<std::string>();
      if (!ok.count(k)) r_.fail(kv.first, f + "." + k, "unknown key for this policy");
    }
  }

  const Reader& r_;
  ScenarioSpec& spec_;
  std::map<std::string, YAML::Node> named_;
  std::map<std::string, std::shared_ptr<const ReplayPool>> pools_;
};

void read_params(const Reader& r, const YAML::Node& n, MarketParams& p) {
  r.allow_keys(n, "params",
               {"value", "outside_option", "prob_big", "cost_low", "cost_high", "price_min",
                "price_max", "n_experts", "n_consumers"});
  if (n["value"]) p.value_solved = r.money(n["value"], "params.value");
  if (n["outside_option"]) p.outside_option = r.money(n["outside_option"], "params.outside_option");
  if (n["prob_big"]) p.prob_big = r.probability(n["prob_big"], "params.prob_big");
  if (n["cost_low"]) p.cost_low = r.money(n["cost_low"], "params.cost_low");
  if (n["cost_high"]) p.cost_high = r.money(n["cost_high"], "params.cost_high");
  if (n["price_min"]) p.price_min = static_cast<int>(r.integer(n["price_min"], "params.price_min"));
  if (n["price_max"]) p.price_max = static_cast<int>(r.integer(n["price_max"], "params.price_max"));
  if (n["n_experts"]) p.n_experts = static_cast<int>(r.integer(n["n_experts"], "params.n_experts"));
  if (n["n_consumers"])
    p.n_consumers = static_cast<int>(r.integer(n["n_consumers"], "params.n_consumers"));
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(n, "params", e.what());
  }
}

void read_output(const Reader& r, const YAML::Node& n, OutputSpec& o) {
  r.allow_keys(n, "output", {"dir", "formats", "digests", "surplus", "efficiency"});
  if (n["dir"]) o.dir = r.path(n["dir"], "output.dir");
  if (n["formats"]) {
    const YAML::Node fs = n["formats"];
    if (!fs.IsSequence()) r.fail(fs, "output.formats", "expected a list");
    o.csv = o.json = false;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      std::string f = r.str(fs[i], "output.formats");
      if (f == "csv") o.csv = true;
      else if (f == "json") o.json = true;
      else r.fail(fs[i], "output.formats", "csv or json, got '" + f + "'");
    }
  }
  if (n["digests"]) o.digests = r.boolean(n["digests"], "output.digests");
  if (n["surplus"]) o.surplus = r.parsed(n["surplus"], "output.surplus", parse_surplus_mode);
  if (n["efficiency"])
    o.efficiency = r.parsed(n["efficiency"], "output.efficiency", parse_efficiency_mode);
}

void read_llm(const Reader& r, const YAML::Node& n, LlmSettings& l) {
  r.allow_keys(n, "llm",
               {"model", "framing", "templates", "temperature", "max_parse_retries", "parallel",
                "transcript"});
  if (n["model"]) l.model = r.str(n["model"], "llm.model");
  if (n["framing"]) l.framing = r.parsed(n["framing"], "llm.framing", parse_role_framing);
  if (n["templates"]) l.templates = r.path(n["templates"], "llm.templates");
  if (n["temperature"]) l.temperature = r.real(n["temperature"], "llm.temperature");
  if (n["max_parse_retries"])
    l.max_parse_retries = static_cast<int>(r.integer(n["max_parse_retries"], "llm.max_parse_retries"));
  if (n["parallel"]) {
    l.parallel = static_cast<int>(r.integer(n["parallel"], "llm.parallel"));
    if (l.parallel < 1) r.fail(n["parallel"], "llm.parallel", "must be at least 1");
  }
  if (n["transcript"]) l.transcript = r.path(n["transcript"], "llm.transcript");
}

ScenarioSpec build(const YAML::Node& root, const Reader& r) {
  ScenarioSpec spec;
  r.allow_keys(root, "",
               {"name", "params", "institution", "institutions", "transparency",
                "objective_regime", "policies", "experts", "consumers", "conditions",
                "replications", "seed", "threads", "output", "llm"});
  spec.name = root["name"] ? r.str(root["name"], "name") : "scenario";
  if (root["params"]) read_params(r, root["params"], spec.params);

  if (root["institution"] && root["institutions"])
    r.fail(root["institutions"], "institutions", "give either institution or institutions");
  if (root["institution"]) {
    spec.institutions = {r.parsed(root["institution"], "institution", parse_institution)};
  } else if (root["institutions"]) {
    const YAML::Node is = root["institutions"];
    if (!is.IsSequence() || is.size() == 0) r.fail(is, "institutions", "expected a non-empty list");
    for (std::size_t i = 0; i < is.size(); ++i)
      spec.institutions.push_back(r.parsed(is[i], "institutions", parse_institution));
  } else {
    spec.institutions = {Institution::NoInstitution, Institution::Verifiability,
                         Institution::Liability};
  }

  if (root["transparency"]) spec.transparency = r.boolean(root["transparency"], "transparency");
  if (root["objective_regime"])
    spec.objective_regime =
        r.parsed(root["objective_regime"], "objective_regime", parse_objective_regime);
  if (root["replications"]) {
    spec.n_reps = r.integer(root["replications"], "replications");
    if (spec.n_reps < 1) r.fail(root["replications"], "replications", "must be at least 1");
  }
  if (root["seed"]) {
    long long s = r.integer(root["seed"], "seed");
    if (s < 0) r.fail(root["seed"], "seed", "must be non-negative");
    spec.seed = static_cast<std::uint64_t>(s);
  }
  if (root["threads"]) spec.threads = static_cast<unsigned>(r.integer(root["threads"], "threads"));
  if (root["output"]) read_output(r, root["output"], spec.output);
  if (root["llm"]) read_llm(r, root["llm"], spec.llm);

  Builder b(r, spec);
  if (root["policies"]) b.named_policies(root["policies"]);

  std::optional<std::vector<ExpertSeat>> base_experts;
  std::optional<std::vector<ConsumerPolicyPtr>> base_consumers;
  if (root["experts"]) base_experts = b.experts(root["experts"], "experts");
  if (root["consumers"]) base_consumers = b.consumers(root["consumers"], "consumers");

  if (root["conditions"]) {
    const YAML::Node cs = root["conditions"];
    if (!cs.IsSequence() || cs.size() == 0) r.fail(cs, "conditions", "expected a non-empty list");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      std::string f = "conditions[" + std::to_string(i) + "]";
      r.allow_keys(cs[i], f, {"name", "experts", "consumers"});
      Condition c;
      c.name = cs[i]["name"] ? r.str(cs[i]["name"], f + ".name") : "condition" + std::to_string(i + 1);
      if (!seen.insert(c.name).second) r.fail(cs[i], f + ".name", "duplicate condition name");
      if (cs[i]["experts"]) c.experts = b.experts(cs[i]["experts"], f + ".experts");
      else if (base_experts) c.experts = *base_experts;
      else r.fail(cs[i], f, "no experts here and none at the top level");
      if (cs[i]["consumers"]) c.consumers = b.consumers(cs[i]["consumers"], f + ".consumers");
      else if (base_consumers) c.consumers = *base_consumers;
      else r.fail(cs[i], f, "no consumers here and none at the top level");
      spec.conditions.push_back(std::move(c));
    }
  } else {
    if (!base_experts) r.fail(root, "experts", "missing");
    if (!base_consumers) r.fail(root, "consumers", "missing");
    spec.conditions.push_back({spec.name, *base_experts, *base_consumers});
  }
  return spec;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& yaml, const std::string& name,
                            const fs::path& base_dir) {
  Reader r(name, base_dir);
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(name, e.mark.line + 1, e.mark.column + 1, "<syntax>", e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(name, 1, 1, "<root>", "expected a mapping");
  return build(root, r);
}

ScenarioSpec load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ScenarioSpec spec = parse_scenario(buf.str(), path.string(), path.parent_path());
  spec.source = path;
  return spec;
}

}  // namespace credence
