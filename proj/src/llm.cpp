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

#include "credence/llm.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>
#include <sstream>

namespace credence {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::string_view to_string(RoleFraming f) { return f == RoleFraming::AIAI ? "AIAI" : "HumanAI"; }

RoleFraming parse_role_framing(std::string_view s) {
  std::string l = lower(s);
  if (l == "aiai" || l == "ai-ai") return RoleFraming::AIAI;
  if (l == "humanai" || l == "human-ai") return RoleFraming::HumanAI;
  throw std::invalid_argument("unknown role framing '" + std::string(s) + "'");
}

std::string_view to_string(TrainingSource t) {
  return t == TrainingSource::AITrained ? "AITrained" : "HumanTrained";
}

TrainingSource parse_training_source(std::string_view s) {
  std::string l = lower(s);
  if (l == "aitrained" || l == "ai") return TrainingSource::AITrained;
  if (l == "humantrained" || l == "human") return TrainingSource::HumanTrained;
  throw std::invalid_argument("unknown training source '" + std::string(s) + "'");
}

std::string_view role_play_directive(RoleFraming framing) {
  if (framing == RoleFraming::AIAI)
    return "Pretend like you are a participant of your specific role and can make choices in "
           "this experiment. Do not break character. Find a strategy to play this game "
           "yourself and plan ahead.";
  return "You are a real participant of your specific role and can make choices in this "
         "experiment. Your choices affect the payoff of real human participants. One, you "
         "play on behalf of a human Player A, who receives the money you earn in this "
         "experiment. Two, your choices affect the payoff of Player B's who approach you. Do "
         "not break character.";
}

std::string_view objective_sentence(Objective objective) {
  switch (objective) {
    case Objective::NoObjective:
      return "";
    case Objective::SelfInterested:
      return "Your only objective is to maximize your own payoff in this 1 round.";
    case Objective::InequityAverse:
      return "You only care about fairness between yourself and Player B.";
    case Objective::EfficiencyLoving:
      return "Your only objective is to maximize the total payoff of yourself and Player B.";
  }
  return "";
}

std::string_view fixed_objective_label() { return "maximize Player A's payoff"; }

std::string objective_display(Objective objective) {
  switch (objective) {
    case Objective::NoObjective:
      return "no objective";
    case Objective::SelfInterested:
      return "maximize your own payoff in this 1 round";
    case Objective::InequityAverse:
      return "only care about fairness between yourself and Player B";
    case Objective::EfficiencyLoving:
      return "maximize the total payoff of yourself and Player B";
  }
  return "";
}

std::string build_objective_directive(Objective objective, bool liable) {
  std::string out =
      "Remember that this is a one-shot game, there are no future interactions or future "
      "visits. ";
  out += liable ? "You are legally obligated to solve the problem of any Player B who "
                  "approaches you."
                : "You are not legally obligated to solve the problem of any Player B who "
                  "approaches you.";
  std::string_view sentence = objective_sentence(objective);
  if (!sentence.empty()) {
    out += ' ';
    out += sentence;
  }
  out += " Think about this objective when making your choices.";
  return out;
}

std::string consistency_preamble() {
  return "Follow the rules in the instructions exactly. Work through the decision step by "
         "step before you answer, and keep your answer consistent with your earlier answers.";
}

// ---------------------------------------------------------------------------

std::string encode_history_row(const HistoryRecord& r, const MarketParams& params,
                               std::size_t index) {
  std::ostringstream out;
  if (r.chosen) {
    if (*r.chosen < 0 || *r.chosen >= static_cast<int>(kHistoryExperts))
      throw CodecError(index, "chosen expert " + std::to_string(*r.chosen) + " out of range");
    out << "Player A" << (*r.chosen + 1);
  } else {
    out << "OptOut";
  }
  for (std::size_t e = 0; e < kHistoryExperts; ++e) {
    if (!is_valid(params, r.prices[e]))
      throw CodecError(index, "Player A" + std::to_string(e + 1) + " prices " +
                                  r.prices[e].to_string() + " off the grid");
    out << ", " << r.prices[e].low << ", " << r.prices[e].high;
  }
  return out.str();
}

HistoryRecord parse_history_row(std::string_view line, const MarketParams& params,
                                std::size_t index) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 1 + 2 * kHistoryExperts)
    throw CodecError(index, "expected 9 fields, got " + std::to_string(fields.size()));

  HistoryRecord r;
  std::string_view label = fields[0];
  if (label == "OptOut") {
    r.chosen.reset();
  } else if (label.size() == 9 && label.substr(0, 8) == "Player A" && label[8] >= '1' &&
             label[8] < static_cast<char>('1' + kHistoryExperts)) {
    r.chosen = label[8] - '1';
  } else {
    throw CodecError(index, "bad label '" + std::string(label) + "'");
  }
  for (std::size_t e = 0; e < kHistoryExperts; ++e) {
    int lo = 0, hi = 0;
    if (!parse_int(fields[1 + 2 * e], lo) || !parse_int(fields[2 + 2 * e], hi))
      throw CodecError(index, "non-integer price for Player A" + std::to_string(e + 1));
    r.prices[e] = PricePair{lo, hi};
    if (!is_valid(params, r.prices[e]))
      throw CodecError(index, "Player A" + std::to_string(e + 1) + " prices " +
                                  r.prices[e].to_string() + " off the grid");
  }
  return r;
}

namespace {
constexpr std::string_view kRowsMarker = "Rows:";
}  // namespace

std::string encode_history(const std::vector<HistoryRecord>& records, HistorySource source,
                           const MarketParams& params) {
  const char* who = source == HistorySource::HumanHuman ? "human" : "AI";
  std::ostringstream out;
  out << "The data below comes from earlier markets with the same rules. Each row is one "
      << who << " Player B's decision. The first value is Player B's choice: the Player A "
      << "they approached, or OptOut if they left the market. The next eight values are the "
      << "prices of all Player A's that this Player B saw, grouped by Player A: small price, "
      << "then big price, for Player A1 to A4.\n\n"
      << "Example interpreted: \"Player A3, 4, 8, 3, 7, 4, 8, 11, 11\"\n"
      << "This means:\n"
      << "- The " << who << " Player B chose to approach Player A3\n"
      << "- Player A1 offered: small=4, big=8\n"
      << "- Player A2 offered: small=3, big=7\n"
      << "- Player A3 offered: small=4, big=8\n"
      << "- Player A4 offered: small=11, big=11\n\n"
      << "The complete data set contains " << records.size() << " such rows, each "
      << "representing one " << who << " Player B's decision when faced with these price "
      << "choices.\n\n"
      << kRowsMarker << "\n";
  for (std::size_t i = 0; i < records.size(); ++i)
    out << encode_history_row(records[i], params, i) << "\n";
  return out.str();
}

std::vector<HistoryRecord> parse_history(std::string_view text, const MarketParams& params) {
  auto lines = split_lines(text);
  std::size_t first = 0;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (trim(lines[i]) == kRowsMarker) first = i + 1;
  std::vector<HistoryRecord> out;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    out.push_back(parse_history_row(lines[i], params, out.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string answer_format_instruction(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::PriceSetting:
      return "End your reply with exactly one line of the form\n"
             "ANSWER: small=<price for the LCT>, big=<price for the HCT>";
    case DecisionKind::TreatmentAndCharge:
      return "End your reply with exactly one line of the form\n"
             "ANSWER: treatment=<LCT or HCT>, charge=<low or high>";
    case DecisionKind::Approach:
      return "End your reply with exactly one line of the form\n"
             "ANSWER: choice=<A1, A2, A3, A4 or optout>";
    case DecisionKind::Comprehension:
      return "End your reply with exactly one line of the form\n"
             "ANSWER: <your answer>";
  }
  return "";
}

std::string_view to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::MissingTrailer: return "missing-trailer";
    case ParseErrorKind::Malformed: return "malformed";
    case ParseErrorKind::OutOfGrid: return "out-of-grid";
    case ParseErrorKind::IllegalAction: return "illegal-action";
  }
  return "?";
}

ParsedDecision parse_expert_decision(std::string_view text, DecisionKind expected,
                                     Institution inst, const MarketParams& params,
                                     std::optional<ProblemType> problem) {
  std::optional<std::string> payload;
  for (std::string_view line : split_lines(text)) {
    std::string_view t = trim(line);
    // Tolerate markdown emphasis around the keyword.
    while (!t.empty() && (t.front() == '*' || t.front() == '_')) t.remove_prefix(1);
    if (t.size() >= 7 && lower(t.substr(0, 7)) == "answer:") {
      std::string_view rest = t.substr(7);
      while (!rest.empty() && (rest.back() == '*' || rest.back() == '_')) rest.remove_suffix(1);
      payload = std::string(trim(rest));
    }
  }
  if (!payload)
    return ParseFailure{ParseErrorKind::MissingTrailer, "reply has no ANSWER: line"};
  const std::string body = lower(*payload);

  switch (expected) {
    case DecisionKind::PriceSetting: {
      static const std::regex re(R"(^small\s*=\s*(-?\d+)\s*[,;]\s*big\s*=\s*(-?\d+)\.?$)");
      std::smatch m;
      if (!std::regex_match(body, m, re))
        return ParseFailure{ParseErrorKind::Malformed,
                            "expected 'small=X, big=Y', got '" + *payload + "'"};
      int lo = 0, hi = 0;
      if (!parse_int(m[1].str(), lo) || !parse_int(m[2].str(), hi))
        return ParseFailure{ParseErrorKind::Malformed, "price out of integer range"};
      PricePair p{lo, hi};
      if (!is_valid(params, p))
        return ParseFailure{ParseErrorKind::OutOfGrid,
                            "prices " + p.to_string() + " outside " +
                                std::to_string(params.price_min) + ".." +
                                std::to_string(params.price_max) + " or small > big"};
      return p;
    }
    case DecisionKind::TreatmentAndCharge: {
      static const std::regex re(
          R"(^treatment\s*=\s*(lct|hct)\s*[,;]\s*charge\s*=\s*(low|high|small|big)\.?$)");
      std::smatch m;
      if (!std::regex_match(body, m, re))
        return ParseFailure{ParseErrorKind::Malformed,
                            "expected 'treatment=LCT|HCT, charge=low|high', got '" + *payload +
                                "'"};
      if (!problem) throw std::invalid_argument("treatment decisions need the problem type");
      ExpertAction a{m[1].str() == "lct" ? Treatment::LCT : Treatment::HCT,
                     (m[2].str() == "low" || m[2].str() == "small") ? Tier::Low : Tier::High};
      if (!is_legal(inst, *problem, a))
        return ParseFailure{ParseErrorKind::IllegalAction,
                            a.to_string() + " is not allowed for a " +
                                std::string(to_string(*problem)) + " problem under " +
                                std::string(to_string(inst))};
      return a;
    }
    case DecisionKind::Approach: {
      static const std::regex re(R"(^choice\s*=\s*(?:player\s*)?(a(\d+)|opt\s*-?\s*out)\.?$)");
      std::smatch m;
      if (!std::regex_match(body, m, re))
        return ParseFailure{ParseErrorKind::Malformed,
                            "expected 'choice=A1..A" + std::to_string(params.n_experts) +
                                " or optout', got '" + *payload + "'"};
      if (!m[2].matched) return ApproachDecision{std::nullopt};
      int k = 0;
      if (!parse_int(m[2].str(), k) || k < 1 || k > params.n_experts)
        return ParseFailure{ParseErrorKind::OutOfGrid, "no Player A" + m[2].str()};
      return ApproachDecision{k - 1};
    }
    case DecisionKind::Comprehension:
      if (payload->empty())
        return ParseFailure{ParseErrorKind::Malformed, "empty answer"};
      return *payload;
  }
  return ParseFailure{ParseErrorKind::Malformed, "unknown decision kind"};
}

std::string describe(const ParsedDecision& d) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PricePair>) {
          return std::to_string(v.low) + "," + std::to_string(v.high);
        } else if constexpr (std::is_same_v<T, ExpertAction>) {
          return v.to_string();
        } else if constexpr (std::is_same_v<T, ApproachDecision>) {
          return v.expert ? "A" + std::to_string(*v.expert + 1) : std::string("optout");
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else {
          return "error:" + std::string(to_string(v.kind));
        }
      },
      d);
}

// ---------------------------------------------------------------------------

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    std::size_t close = text.find("}}", open);
    if (close == std::string_view::npos)
      throw std::invalid_argument("unterminated template marker at offset " +
                                  std::to_string(open));
    out.append(text.substr(pos, open - pos));
    std::string key(trim(text.substr(open + 2, close - open - 2)));
    auto it = values.find(key);
    if (it == values.end()) throw std::invalid_argument("unknown template marker {{" + key + "}}");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

std::map<std::string, std::string> template_values(const MarketParams& params,
                                                   Institution inst, RoleFraming framing) {
  std::map<std::string, std::string> v;
  v["value"] = params.value_solved.to_string();
  v["outside_option"] = params.outside_option.to_string();
  v["cost_low"] = params.cost_low.to_string();
  v["cost_high"] = params.cost_high.to_string();
  v["prob_big_percent"] = std::to_string(
      static_cast<int>(std::lround(ratio_to_double(params.prob_big) * 100.0)));
  v["price_min"] = std::to_string(params.price_min);
  v["price_max"] = std::to_string(params.price_max);
  v["n_experts"] = std::to_string(params.n_experts);
  v["n_consumers"] = std::to_string(params.n_consumers);
  v["institution"] = std::string(to_string(inst));
  switch (inst) {
    case Institution::NoInstitution:
      v["institution_clause"] =
          "Player A may provide either treatment to any Player B and may charge either of "
          "the two posted prices, whichever treatment was provided.";
      break;
    case Institution::Verifiability:
      v["institution_clause"] =
          "Player A must charge the price of the treatment actually provided: the small "
          "price for the LCT and the big price for the HCT.";
      break;
    case Institution::Liability:
      v["institution_clause"] =
          "Player A must solve the problem of every Player B who approaches. A Player B "
          "with a big problem must receive the HCT. Player A may charge either posted price.";
      break;
  }
  if (framing == RoleFraming::AIAI) {
    v["partners"] = "You are playing with " +
                    std::to_string(params.n_experts + params.n_consumers - 1) +
                    " other AI agents.";
  } else {
    v["partners"] = "You interact with " + std::to_string(params.n_experts - 1) +
                    " AI Player A's and " + std::to_string(params.n_consumers) +
                    " human Player B's.";
  }
  return v;
}

}  // namespace credence
