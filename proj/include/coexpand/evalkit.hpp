// Copyright 2026 The coexpand Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Ranked-list evaluation: AP@k, MAP@k, query and ground-truth files.

#ifndef COEXPAND_EVALKIT_HPP_
#define COEXPAND_EVALKIT_HPP_

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "coexpand/common.hpp"

namespace coexpand {

enum class RecallBase {
  kTruthMinusSeeds,  // |truth \ seeds|
  kCapped,           // min(|truth \ seeds|, k)
};

// AP@k = sum_{i<=k} P(i) * dr(i). Seeds are dropped from the ranking and from
// the recall base first. An empty recall base yields 0.
template <class T>
double ap_at_k(std::span<const T> ranked, const std::set<T>& truth, const std::set<T>& seeds,
               std::size_t k, RecallBase base = RecallBase::kTruthMinusSeeds) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::size_t base_size = 0;
  for (const auto& t : truth) base_size += seeds.count(t) ? 0 : 1;
  if (base == RecallBase::kCapped) base_size = std::min(base_size, k);
  if (base_size == 0) return 0.0;

  // Sum the precisions and divide by the base once, so that a perfect
  // ranking scores exactly 1.
  double precision_sum = 0.0;
  std::size_t position = 0, correct = 0;
  for (const auto& item : ranked) {
    if (seeds.count(item)) continue;
    if (++position > k) break;
    if (truth.count(item)) {
      ++correct;
      precision_sum += static_cast<double>(correct) / static_cast<double>(position);
    }
  }
  return precision_sum / static_cast<double>(base_size);
}

template <class T>
double ap_at_k(const std::vector<T>& ranked, const std::set<T>& truth, std::size_t k,
               RecallBase base = RecallBase::kTruthMinusSeeds) {
  return ap_at_k(std::span<const T>(ranked), truth, std::set<T>{}, k, base);
}

inline double mean(std::span<const double> values) {
  if (values.empty()) throw ConfigError("map_at_k needs at least one run");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

template <class T>
struct EvalRun {
  std::vector<T> ranked;
  std::set<T> truth;
  std::set<T> seeds;
};

template <class T>
double map_at_k(std::span<const EvalRun<T>> runs, std::size_t k,
                RecallBase base = RecallBase::kTruthMinusSeeds) {
  std::vector<double> aps;
  for (const auto& r : runs) {
    aps.push_back(ap_at_k(std::span<const T>(r.ranked), r.truth, r.seeds, k, base));
  }
  return mean(aps);
}

// ---------------------------------------------------------------------------
// Files.

struct Query {
  std::string id;
  std::string class_name;
  std::vector<std::string> seeds;
};

using GroundTruth = std::map<std::string, std::set<std::string>>;

namespace detail {

template <class Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "record is not an object");
    fn(j, line_no);
  }
}

inline std::vector<std::string> string_array(const nlohmann::json& j, const char* key,
                                             std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw ParseError(line_no, std::string("missing array field '") + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ParseError(line_no, std::string("'") + key + "' holds a non-string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline std::string string_field(const nlohmann::json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(line_no, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace detail

// {"id": "q1", "class": "country", "seeds": ["a", "b", "c"]}; id defaults to
// "q<line>".
inline std::vector<Query> read_queries(std::istream& in) {
  std::vector<Query> out;
  std::set<std::string> ids;
  detail::for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line_no) {
    Query q;
    q.id = j.contains("id") ? detail::string_field(j, "id", line_no)
                            : "q" + std::to_string(line_no);
    q.class_name = detail::string_field(j, "class", line_no);
    q.seeds = detail::string_array(j, "seeds", line_no);
    if (q.seeds.empty()) throw ParseError(line_no, "query has no seeds");
    if (!ids.insert(q.id).second) throw ParseError(line_no, "duplicate query id '" + q.id + "'");
    out.push_back(std::move(q));
  });
  return out;
}

// {"class": "country", "entities": ["a", "b", ...]}
inline GroundTruth read_ground_truth(std::istream& in) {
  GroundTruth out;
  detail::for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line_no) {
    const auto name = detail::string_field(j, "class", line_no);
    const auto entities = detail::string_array(j, "entities", line_no);
    if (entities.empty()) throw ParseError(line_no, "class '" + name + "' has no entities");
    auto& set = out[name];
    set.insert(entities.begin(), entities.end());
  });
  return out;
}

inline std::vector<Query> load_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open query file '" + path + "'");
  return read_queries(in);
}

inline GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground-truth file '" + path + "'");
  return read_ground_truth(in);
}

// ---------------------------------------------------------------------------
// Reports.

struct QueryScore {
  std::string id;
  std::string class_name;
  std::vector<double> ap;  // one per cutoff
};

struct EvalReport {
  std::vector<std::size_t> cutoffs;
  std::vector<QueryScore> queries;
  std::vector<double> map;  // one per cutoff
};

inline EvalReport evaluate(std::span<const Query> queries,
                           const std::map<std::string, std::vector<std::string>>& rankings,
                           const GroundTruth& truth, std::vector<std::size_t> cutoffs,
                           RecallBase base = RecallBase::kTruthMinusSeeds) {
  if (queries.empty()) throw DataError("no queries to evaluate");
  if (cutoffs.empty()) throw ConfigError("empty cutoff list");
  EvalReport report;
  report.cutoffs = std::move(cutoffs);
  report.map.assign(report.cutoffs.size(), 0.0);
  for (const auto& q : queries) {
    const auto t = truth.find(q.class_name);
    if (t == truth.end()) throw DataError("no ground truth for class '" + q.class_name + "'");
    const auto r = rankings.find(q.id);
    if (r == rankings.end()) throw DataError("no ranking for query '" + q.id + "'");
    const std::set<std::string> seeds(q.seeds.begin(), q.seeds.end());
    QueryScore score{q.id, q.class_name, {}};
    for (std::size_t i = 0; i < report.cutoffs.size(); ++i) {
      const double ap = ap_at_k(std::span<const std::string>(r->second), t->second, seeds,
                                report.cutoffs[i], base);
      score.ap.push_back(ap);
      report.map[i] += ap;
    }
    report.queries.push_back(std::move(score));
  }
  for (double& m : report.map) m /= static_cast<double>(queries.size());
  return report;
}

inline void write_report_text(const EvalReport& report, std::ostream& out) {
  out << "query\tclass";
  for (auto k : report.cutoffs) out << "\tAP@" << k;
  out << '\n';
  for (const auto& q : report.queries) {
    out << q.id << '\t' << q.class_name;
    for (double ap : q.ap) out << '\t' << format_double(ap);
    out << '\n';
  }
  out << "MAP\t-";
  for (double m : report.map) out << '\t' << format_double(m);
  out << '\n';
}

inline void write_report_json(const EvalReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["cutoffs"] = report.cutoffs;
  auto queries = nlohmann::ordered_json::array();
  for (const auto& q : report.queries) {
    nlohmann::ordered_json jq;
    jq["id"] = q.id;
    jq["class"] = q.class_name;
    nlohmann::ordered_json ap;
    for (std::size_t i = 0; i < report.cutoffs.size(); ++i) {
      ap[std::to_string(report.cutoffs[i])] = q.ap[i];
    }
    jq["ap"] = std::move(ap);
    queries.push_back(std::move(jq));
  }
  j["queries"] = std::move(queries);
  nlohmann::ordered_json map;
  for (std::size_t i = 0; i < report.cutoffs.size(); ++i) {
    map[std::to_string(report.cutoffs[i])] = report.map[i];
  }
  j["map"] = std::move(map);
  out << j.dump(2) << '\n';
}

}  // namespace coexpand

#endif  // COEXPAND_EVALKIT_HPP_
