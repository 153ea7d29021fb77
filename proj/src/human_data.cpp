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

#include "credence/human_data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/tokenizer.hpp>

namespace credence {
namespace {

constexpr std::size_t idx(Institution i) { return static_cast<std::size_t>(i); }

// Row-level rejection; caught per row.
struct RowError {
  std::string reason;
};

class Row {
 public:
  Row(const std::vector<std::string>& fields, const std::map<std::string, std::size_t>& cols)
      : fields_(fields), cols_(cols) {}

  std::string get(const char* column) const {
    std::string v = fields_[cols_.at(column)];
    boost::algorithm::trim(v);
    return v;
  }

  std::string required(const char* column) const {
    std::string v = get(column);
    if (v.empty()) throw RowError{std::string(column) + " is empty"};
    return v;
  }

  int integer(const char* column) const {
    std::string v = required(column);
    try {
      std::size_t used = 0;
      int x = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw RowError{std::string(column) + " is not an integer: '" + v + "'"};
    }
  }

  template <typename F>
  auto parsed(const char* column, F parse) const {
    std::string v = required(column);
    try {
      return parse(v);
    } catch (const std::invalid_argument&) {
      throw RowError{std::string(column) + " has unknown value '" + v + "'"};
    }
  }

 private:
  const std::vector<std::string>& fields_;
  const std::map<std::string, std::size_t>& cols_;
};

Tier parse_charge(std::string_view s) {
  std::string k = boost::algorithm::to_lower_copy(std::string(s));
  if (k == "low" || k == "small") return Tier::Low;
  if (k == "high" || k == "big") return Tier::High;
  throw std::invalid_argument(std::string(s));
}

bool parse_flag(const std::string& v) {
  std::string k = boost::algorithm::to_lower_copy(v);
  if (k.empty() || k == "0" || k == "false" || k == "no") return false;
  if (k == "1" || k == "true" || k == "yes") return true;
  throw RowError{"delegated has unknown value '" + v + "'"};
}

std::optional<std::size_t> parse_approach(const std::string& v, int n_experts) {
  std::string k = boost::algorithm::to_lower_copy(v);
  boost::algorithm::erase_all(k, " ");
  boost::algorithm::erase_all(k, "-");
  if (k == "optout") return std::nullopt;
  if (k.size() >= 2 && k[0] == 'a') {
    try {
      int n = std::stoi(k.substr(1));
      if (n >= 1 && n <= n_experts && std::to_string(n) == k.substr(1))
        return static_cast<std::size_t>(n - 1);
    } catch (const std::exception&) {
    }
  }
  throw RowError{"approach_choice must be A1..A" + std::to_string(n_experts) +
                 " or optout, got '" + v + "'"};
}

ExpertAction row_action(const Row& row, const char* treatment, const char* charge,
                        Institution inst, ProblemType problem) {
  ExpertAction a{row.parsed(treatment, parse_treatment), row.parsed(charge, parse_charge)};
  if (!is_legal(inst, problem, a))
    throw RowError{a.to_string() + " on a " + std::string(to_string(problem)) +
                   " problem is illegal under " + std::string(to_string(inst))};
  return a;
}

void summarize(IngestSummary& s, const ReplayPool& pool) {
  std::array<std::map<PricePair, std::int64_t>, 3> counts;
  std::array<std::array<std::int64_t, 3>, 3> fraud{};
  std::array<std::int64_t, 3> lct{};
  for (const ExpertRecord& r : pool.experts) {
    auto i = idx(r.institution);
    InstitutionSummary& is = s.by_institution[i];
    ++is.experts;
    if (r.delegated) ++is.delegated;
    ++counts[i][r.prices];
    for (ProblemType p : {ProblemType::Small, ProblemType::Big}) {
      ExpertAction a = r.rule.for_problem(p);
      FraudSet f = classify_fraud(p, a);
      for (FraudKind k : f.kinds()) ++fraud[i][static_cast<std::size_t>(k)];
      if (a.treatment == Treatment::LCT) ++lct[i];
    }
  }
  for (const ConsumerRecord& r : pool.consumers) {
    InstitutionSummary& is = s.by_institution[idx(r.institution)];
    ++is.consumers;
    if (r.approach) ++is.approached;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    InstitutionSummary& is = s.by_institution[i];
    for (const auto& [pp, n] : counts[i])
      is.price_pairs.push_back({pp, n, static_cast<double>(n) / is.experts});
    std::stable_sort(is.price_pairs.begin(), is.price_pairs.end(),
                     [](const PriceFrequency& a, const PriceFrequency& b) {
                       return a.count > b.count;
                     });
    // Undertreatment per big decision, overtreatment per small decision,
    // overcharging per LCT decision.
    auto share = [](std::int64_t n, std::int64_t d) {
      return d == 0 ? 0.0 : static_cast<double>(n) / d;
    };
    is.fraud_share = {share(fraud[i][0], is.experts), share(fraud[i][1], is.experts),
                      share(fraud[i][2], lct[i])};
  }
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  using Sep = boost::escaped_list_separator<char>;
  boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
  std::vector<std::string> out(tok.begin(), tok.end());
  if (out.empty()) out.emplace_back();
  return out;
}

IngestResult ingest_human_csv(const std::string& path, const MarketParams& params) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ingest_human_csv(in, path, params);
}

IngestResult ingest_human_csv(std::istream& in, const std::string& name,
                              const MarketParams& params) {
  auto pool = std::make_shared<ReplayPool>();
  pool->name = name;
  IngestResult result;

  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> cols;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (boost::algorithm::trim_copy(line).empty()) continue;

    std::vector<std::string> fields;
    try {
      fields = split_csv_line(line);
    } catch (const boost::escaped_list_error& e) {
      if (cols.empty()) throw DataError(name + ": malformed header: " + e.what());
      ++result.summary.rows;
      result.summary.rejected.push_back({line_no, "", std::string("malformed CSV: ") + e.what()});
      continue;
    }

    if (cols.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i)
        cols[boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(fields[i]))] = i;
      for (const char* c : kHumanCsvColumns)
        if (!cols.count(c)) throw DataError(name + ": header lacks column '" + c + "'");
      continue;
    }

    ++result.summary.rows;
    Row row(fields, cols);
    std::string subject;
    try {
      if (fields.size() != cols.size())
        throw RowError{"expected " + std::to_string(cols.size()) + " fields, found " +
                       std::to_string(fields.size())};
      subject = row.required("subject_id");
      Institution inst = row.parsed("institution", parse_institution);
      std::string role = boost::algorithm::to_lower_copy(row.required("role"));
      if (role == "expert") {
        ExpertRecord r;
        r.subject_id = subject;
        r.institution = inst;
        r.prices = {row.integer("p_low"), row.integer("p_high")};
        if (!is_valid(params, r.prices))
          throw RowError{"price pair " + r.prices.to_string() + " is off the grid " +
                         std::to_string(params.price_min) + ".." +
                         std::to_string(params.price_max) + " or has p_low > p_high"};
        r.rule.small = row_action(row, "action_small_treatment", "action_small_charge", inst,
                                  ProblemType::Small);
        r.rule.big = row_action(row, "action_big_treatment", "action_big_charge", inst,
                                ProblemType::Big);
        r.delegated = parse_flag(row.get("delegated"));
        if (!row.get("chosen_objective").empty()) {
          if (!r.delegated) throw RowError{"chosen_objective is set but delegated is false"};
          r.chosen_objective = row.parsed("chosen_objective", parse_objective);
        }
        pool->experts.push_back(std::move(r));
      } else if (role == "consumer") {
        ConsumerRecord r;
        r.subject_id = subject;
        r.institution = inst;
        r.approach = parse_approach(row.required("approach_choice"), params.n_experts);
        pool->consumers.push_back(std::move(r));
      } else {
        throw RowError{"role must be expert or consumer, got '" + role + "'"};
      }
      ++result.summary.accepted;
    } catch (const RowError& e) {
      result.summary.rejected.push_back({line_no, subject, e.reason});
    }
  }

  if (result.summary.accepted == 0) {
    std::string msg = name + ": no records";
    if (!result.summary.rejected.empty())
      msg += " (" + std::to_string(result.summary.rejected.size()) + " rows rejected; first: line " +
             std::to_string(result.summary.rejected.front().line) + ": " +
             result.summary.rejected.front().reason + ")";
    throw DataError(msg);
  }
  summarize(result.summary, *pool);
  result.pool = std::move(pool);
  return result;
}

std::string IngestSummary::to_text() const {
  std::ostringstream os;
  os << rows << " rows, " << accepted << " accepted, " << rejected.size() << " rejected\n";
  for (Institution inst : {Institution::NoInstitution, Institution::Verifiability,
                           Institution::Liability}) {
    const InstitutionSummary& s = in(inst);
    if (s.experts == 0 && s.consumers == 0) continue;
    os << to_string(inst) << ": " << s.experts << " experts, " << s.consumers
       << " consumers";
    if (s.consumers > 0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", s.approach_share());
      os << ", approach share " << buf;
    }
    os << "\n";
    for (std::size_t k = 0; k < s.price_pairs.size() && k < 9; ++k) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "  %-9s %5.2f%%\n", s.price_pairs[k].prices.to_string().c_str(),
                    100.0 * s.price_pairs[k].share);
      os << buf;
    }
  }
  for (const RejectedRow& r : rejected)
    os << "rejected line " << r.line << (r.subject_id.empty() ? "" : " (" + r.subject_id + ")")
       << ": " << r.reason << "\n";
  return os.str();
}

}  // namespace credence
