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

// Pipeline configuration with a flat `key = value` text form.
//
//   # comment
//   t = 5
//   lambda = 1.5
//
// Unknown keys and malformed values are rejected with the offending line.

#ifndef COEXPAND_CONFIG_HPP_
#define COEXPAND_CONFIG_HPP_

#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <type_traits>

#include "coexpand/coexpan.hpp"
#include "coexpand/common.hpp"
#include "coexpand/context_index.hpp"
#include "coexpand/embedding.hpp"
#include "coexpand/evalkit.hpp"

namespace coexpand {

struct Config {
  std::uint64_t seed = 1;
  int threads = 1;
  TrainConfig train;
  IndexConfig index;
  ExpandConfig expand;
  RecallBase recall_base = RecallBase::kTruthMinusSeeds;

  // Pushes the shared seed and thread count into the module configs.
  void propagate() {
    train.seed = seed;
    expand.seed = seed;
    expand.threads = threads;
  }

  void validate() const {
    if (threads < 1) throw ConfigError("threads must be >= 1");
    train.validate();
    index.validate();
    expand.validate();
  }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

struct ConfigKey {
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

inline std::map<std::string, ConfigKey> config_keys() {
  std::map<std::string, ConfigKey> keys;
  auto add_int = [&](const char* name, auto member_of) {
    keys[name] = {
        [member_of](Config& c, const std::string& v) {
          auto& field = member_of(c);
          field = parse_integer<std::remove_reference_t<decltype(field)>>(v);
        },
        [member_of](const Config& c) {
          return std::to_string(member_of(const_cast<Config&>(c)));
        }};
  };
  auto add_double = [&](const char* name, auto member_of) {
    keys[name] = {[member_of](Config& c, const std::string& v) { member_of(c) = parse_double(v); },
                  [member_of](const Config& c) {
                    return format_double(member_of(const_cast<Config&>(c)));
                  }};
  };
  auto add_bool = [&](const char* name, auto member_of) {
    keys[name] = {[member_of](Config& c, const std::string& v) { member_of(c) = parse_bool(v); },
                  [member_of](const Config& c) {
                    return std::string(member_of(const_cast<Config&>(c)) ? "true" : "false");
                  }};
  };

  add_int("seed", [](Config& c) -> std::uint64_t& { return c.seed; });
  add_int("threads", [](Config& c) -> int& { return c.threads; });

  add_int("dim", [](Config& c) -> int& { return c.train.dim; });
  add_int("window", [](Config& c) -> int& { return c.train.window; });
  add_int("negatives", [](Config& c) -> int& { return c.train.negatives; });
  add_int("epochs", [](Config& c) -> int& { return c.train.epochs; });
  add_double("learning_rate", [](Config& c) -> double& { return c.train.learning_rate; });
  add_double("lambda", [](Config& c) -> double& { return c.train.lambda; });
  add_int("min_count", [](Config& c) -> int& { return c.train.min_count; });

  add_int("radius", [](Config& c) -> int& { return c.index.radius; });
  add_bool("flex", [](Config& c) -> bool& { return c.index.flex; });
  add_double("gamma", [](Config& c) -> double& { return c.index.gamma; });
  add_double("k_gen", [](Config& c) -> double& { return c.index.k_gen; });

  add_int("t", [](Config& c) -> int& { return c.expand.per_iteration; });
  add_int("T", [](Config& c) -> int& { return c.expand.max_iterations; });
  add_int("Q", [](Config& c) -> std::size_t& { return c.expand.feature_pool; });
  add_bool("no_aux", [](Config& c) -> bool& { return c.expand.no_aux; });
  add_bool("freeze_aux", [](Config& c) -> bool& { return c.expand.freeze_aux; });
  add_int("k_related", [](Config& c) -> std::size_t& { return c.expand.aux.related; });
  add_int("nn", [](Config& c) -> std::size_t& { return c.expand.aux.neighbors; });
  add_int("aux_cap", [](Config& c) -> std::size_t& { return c.expand.aux.max_sets; });

  keys["cross_penalty"] = {
      [](Config& c, const std::string& v) {
        if (v == "all") {
          c.expand.cross_penalty = CrossPenalty::kAllSetPairs;
        } else if (v == "aux") {
          c.expand.cross_penalty = CrossPenalty::kAuxiliaryPairsOnly;
        } else {
          throw ConfigError("cross_penalty must be 'all' or 'aux', got '" + v + "'");
        }
      },
      [](const Config& c) {
        return std::string(c.expand.cross_penalty == CrossPenalty::kAllSetPairs ? "all" : "aux");
      }};
  keys["recall_base"] = {
      [](Config& c, const std::string& v) {
        if (v == "truth") {
          c.recall_base = RecallBase::kTruthMinusSeeds;
        } else if (v == "capped") {
          c.recall_base = RecallBase::kCapped;
        } else {
          throw ConfigError("recall_base must be 'truth' or 'capped', got '" + v + "'");
        }
      },
      [](const Config& c) {
        return std::string(c.recall_base == RecallBase::kCapped ? "capped" : "truth");
      }};
  return keys;
}

}  // namespace detail

inline void set_config_value(Config& config, const std::string& key, const std::string& value) {
  static const auto keys = detail::config_keys();
  const auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(config, value);
  } catch (const Error& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

inline void read_config(std::istream& in, Config& config) {
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(config, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void load_config(const std::string& path, Config& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  read_config(in, config);
}

// Every key, sorted, in the same form read_config accepts.
inline void write_config(const Config& config, std::ostream& out) {
  static const auto keys = detail::config_keys();
  for (const auto& [name, key] : keys) out << name << " = " << key.get(config) << '\n';
}

}  // namespace coexpand

#endif  // COEXPAND_CONFIG_HPP_
