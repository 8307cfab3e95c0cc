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

// Skip-gram context features around entity mentions.
//
// A skip-gram of radius W is stored as 2W token ids: the W tokens left of the
// mention (farthest first) followed by the W tokens right of it (nearest
// first). The mention span itself is the implicit slot between the halves.
// Positions past a document edge hold kBoundaryToken.
//
// The flexible transform looks for the most independent way of cutting a
// skip-gram into a prefix and a suffix (minimum PMI). When that split is
// independent enough the slot-adjacent halves replace the original pattern,
// with the cut-away positions wildcarded, unless a half matches far more
// occurrences than the original did.

#ifndef COEXPAND_CONTEXT_INDEX_HPP_
#define COEXPAND_CONTEXT_INDEX_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coexpand/common.hpp"
#include "coexpand/corpus.hpp"

namespace coexpand {

inline constexpr TokenId kBoundaryToken = -1;
inline constexpr TokenId kWildcardToken = -2;
inline constexpr std::string_view kBoundaryText = "<B>";

using Pattern = std::vector<TokenId>;

struct PatternHash {
  std::size_t operator()(const Pattern& p) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (TokenId t : p) h = splitmix64(h ^ static_cast<std::uint32_t>(t));
    return static_cast<std::size_t>(h);
  }
};

inline bool has_wildcard(const Pattern& p) {
  return std::find(p.begin(), p.end(), kWildcardToken) != p.end();
}

// Human-readable form, e.g. "former President __ * * *".
inline std::string describe_pattern(const Pattern& p, const Vocabulary& vocab) {
  const std::size_t radius = p.size() / 2;
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == radius) out += "__ ";
    if (p[i] == kBoundaryToken) {
      out += kBoundaryText;
    } else if (p[i] == kWildcardToken) {
      out += '*';
    } else {
      out += vocab.token(p[i]);
    }
    if (i + 1 < p.size()) out += ' ';
  }
  return out;
}

struct ExtractedSkipGram {
  EntityId entity = 0;
  Pattern pattern;
};

// One skip-gram per mention, in corpus order.
inline std::vector<ExtractedSkipGram> extract_skipgrams(const Corpus& corpus,
                                                        int radius) {
  if (radius < 1) throw ConfigError("skip-gram radius must be >= 1");
  const auto w = static_cast<std::ptrdiff_t>(radius);
  std::vector<ExtractedSkipGram> out;
  out.reserve(corpus.mention_count());
  for (const auto& doc : corpus.documents) {
    const auto n = static_cast<std::ptrdiff_t>(doc.tokens.size());
    for (const auto& m : doc.mentions) {
      Pattern p;
      p.reserve(static_cast<std::size_t>(2 * w));
      for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(m.start) - w;
           i < static_cast<std::ptrdiff_t>(m.start); ++i) {
        p.push_back(i < 0 ? kBoundaryToken : doc.tokens[static_cast<std::size_t>(i)]);
      }
      for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(m.end);
           i < static_cast<std::ptrdiff_t>(m.end) + w; ++i) {
        p.push_back(i >= n ? kBoundaryToken : doc.tokens[static_cast<std::size_t>(i)]);
      }
      out.push_back({m.entity, std::move(p)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits. A split point k in [1, 2W) cuts a skip-gram into the prefix of k
// positions and the suffix of 2W - k positions; each half keeps its own
// tokens and wildcards the rest. A half is valid when it still holds a token
// adjacent to the slot.

inline Pattern left_half(const Pattern& l, std::size_t k) {
  Pattern h(l.size(), kWildcardToken);
  std::copy(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(k), h.begin());
  return h;
}

inline Pattern right_half(const Pattern& l, std::size_t k) {
  Pattern h(l.size(), kWildcardToken);
  std::copy(l.begin() + static_cast<std::ptrdiff_t>(k), l.end(),
            h.begin() + static_cast<std::ptrdiff_t>(k));
  return h;
}

inline bool left_half_valid(std::size_t k, std::size_t radius) { return k >= radius; }
inline bool right_half_valid(std::size_t k, std::size_t radius) { return k <= radius; }

// Occurrence statistics over all extracted skip-grams (token occurrences, not
// types), including the counts of every prefix/suffix half pattern.
class SkipGramStats {
 public:
  SkipGramStats() = default;

  static SkipGramStats from_extracted(std::span<const ExtractedSkipGram> grams,
                                      int radius) {
    std::vector<std::pair<Pattern, std::uint64_t>> counts;
    std::unordered_map<Pattern, std::size_t, PatternHash> slot;
    for (const auto& g : grams) {
      auto [it, inserted] = slot.emplace(g.pattern, counts.size());
      if (inserted) counts.emplace_back(g.pattern, 0);
      ++counts[it->second].second;
    }
    return from_counts(radius, counts);
  }

  // `counts` lists raw (wildcard-free) skip-gram types with occurrence counts.
  static SkipGramStats from_counts(
      int radius, std::span<const std::pair<Pattern, std::uint64_t>> counts) {
    SkipGramStats s;
    s.radius_ = static_cast<std::size_t>(radius);
    for (const auto& [pattern, c] : counts) {
      if (pattern.size() != 2 * s.radius_) {
        throw InvariantError("skip-gram length does not match radius");
      }
      s.raw_[pattern] += c;
      s.total_ += c;
      for (std::size_t k = 1; k < pattern.size(); ++k) {
        s.halves_[left_half(pattern, k)] += c;
        s.halves_[right_half(pattern, k)] += c;
      }
    }
    return s;
  }

  std::size_t radius() const { return radius_; }
  std::uint64_t total() const { return total_; }

  // Occurrences matching `p`, where wildcards match any token.
  std::uint64_t count(const Pattern& p) const {
    const auto& map = has_wildcard(p) ? halves_ : raw_;
    auto it = map.find(p);
    return it == map.end() ? 0 : it->second;
  }

  double probability(const Pattern& p) const {
    return total_ == 0 ? 0.0
                       : static_cast<double>(count(p)) / static_cast<double>(total_);
  }

 private:
  std::size_t radius_ = 0;
  std::uint64_t total_ = 0;
  std::unordered_map<Pattern, std::uint64_t, PatternHash> raw_;
  std::unordered_map<Pattern, std::uint64_t, PatternHash> halves_;
};

// log(P(l) / (P(left) P(right))); +inf when either half has probability 0.
inline double pmi(double p_joint, double p_left, double p_right) {
  if (p_left <= 0.0 || p_right <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(p_joint / (p_left * p_right));
}

inline double pmi_split(const SkipGramStats& stats, const Pattern& l,
                        std::size_t split) {
  if (split == 0 || split >= l.size()) {
    throw ConfigError("split point must lie in [1, " + std::to_string(l.size()) + ")");
  }
  return pmi(stats.probability(l), stats.probability(left_half(l, split)),
             stats.probability(right_half(l, split)));
}

struct FlexDecision {
  bool transformed = false;
  std::size_t split = 0;  // chosen split point, 0 when none was evaluated
  double pmi = std::numeric_limits<double>::infinity();
  std::vector<Pattern> features;  // the pattern itself when not transformed
};

inline FlexDecision flex_transform(const SkipGramStats& stats, const Pattern& l,
                                   double gamma, double k_gen) {
  FlexDecision d;
  d.features = {l};
  if (l.size() < 2 || has_wildcard(l)) return d;
  for (std::size_t k = 1; k < l.size(); ++k) {
    const double v = pmi_split(stats, l, k);
    if (v < d.pmi) {
      d.pmi = v;
      d.split = k;
    }
  }
  if (d.split == 0 || !(d.pmi < gamma)) return d;

  const double base = static_cast<double>(stats.count(l));
  const std::size_t radius = l.size() / 2;
  std::vector<Pattern> emitted;
  auto consider = [&](Pattern half) {
    const double ratio = base > 0.0 ? static_cast<double>(stats.count(half)) / base
                                    : std::numeric_limits<double>::infinity();
    if (ratio <= k_gen) emitted.push_back(std::move(half));
  };
  if (left_half_valid(d.split, radius)) consider(left_half(l, d.split));
  if (right_half_valid(d.split, radius)) consider(right_half(l, d.split));
  if (emitted.empty()) return d;
  d.transformed = true;
  d.features = std::move(emitted);
  return d;
}

// ---------------------------------------------------------------------------
// Sparse matrices.

class FeatureDictionary {
 public:
  FeatureId intern(const Pattern& p) {
    auto [it, inserted] = ids_.emplace(p, static_cast<FeatureId>(patterns_.size()));
    if (inserted) patterns_.push_back(p);
    return it->second;
  }
  std::optional<FeatureId> find(const Pattern& p) const {
    auto it = ids_.find(p);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const Pattern& pattern(FeatureId id) const { return patterns_.at(id); }
  std::size_t size() const { return patterns_.size(); }

 private:
  std::vector<Pattern> patterns_;
  std::unordered_map<Pattern, FeatureId, PatternHash> ids_;
};

template <class T>
using SparseRow = std::vector<std::pair<FeatureId, T>>;  // sorted by feature

template <class T>
T sparse_lookup(const SparseRow<T>& row, FeatureId f) {
  auto it = std::lower_bound(row.begin(), row.end(), f,
                             [](const auto& cell, FeatureId x) { return cell.first < x; });
  return (it != row.end() && it->first == f) ? it->second : T{};
}

struct CooccurrenceMatrix {
  FeatureDictionary features;
  std::vector<SparseRow<std::uint64_t>> rows;  // one per entity

  std::size_t num_entities() const { return rows.size(); }
  std::size_t num_features() const { return features.size(); }

  std::uint64_t count(EntityId e, FeatureId f) const { return sparse_lookup(rows.at(e), f); }

  std::vector<std::uint64_t> column_sums() const {
    std::vector<std::uint64_t> sums(features.size(), 0);
    for (const auto& row : rows) {
      for (const auto& [f, c] : row) sums[f] += c;
    }
    return sums;
  }
};

struct FeatureWeights {
  std::vector<SparseRow<double>> rows;  // one per entity

  std::size_t num_entities() const { return rows.size(); }
  double weight(EntityId e, FeatureId f) const { return sparse_lookup(rows.at(e), f); }
  const SparseRow<double>& row(EntityId e) const { return rows.at(e); }
};

// Features emitted for one mention.
struct MentionFeatures {
  EntityId entity = 0;
  std::vector<Pattern> features;
};

// Sums emissions per (entity, feature). Feature ids follow first appearance.
inline CooccurrenceMatrix aggregate(std::span<const MentionFeatures> emissions,
                                    std::size_t num_entities) {
  CooccurrenceMatrix m;
  std::vector<std::unordered_map<FeatureId, std::uint64_t>> cells(num_entities);
  for (const auto& em : emissions) {
    if (em.entity >= num_entities) throw InvariantError("entity id out of range");
    for (const auto& p : em.features) ++cells[em.entity][m.features.intern(p)];
  }
  m.rows.resize(num_entities);
  for (std::size_t e = 0; e < num_entities; ++e) {
    m.rows[e].assign(cells[e].begin(), cells[e].end());
    std::sort(m.rows[e].begin(), m.rows[e].end());
  }
  return m;
}

// f(e,c) = log(1 + count) * log(N) / log(1 + column sum), N = number of rows.
inline FeatureWeights tfidf(const CooccurrenceMatrix& m) {
  FeatureWeights w;
  w.rows.resize(m.num_entities());
  if (m.num_entities() == 0) return w;
  if (m.num_entities() < 2) throw ConfigError("tfidf needs at least 2 entities");
  const double log_n = std::log(static_cast<double>(m.num_entities()));
  const auto sums = m.column_sums();
  for (std::size_t e = 0; e < m.num_entities(); ++e) {
    auto& out = w.rows[e];
    out.reserve(m.rows[e].size());
    for (const auto& [f, c] : m.rows[e]) {
      const double value = std::log1p(static_cast<double>(c)) * log_n /
                           std::log1p(static_cast<double>(sums[f]));
      out.emplace_back(f, value);
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// The index.

struct IndexConfig {
  int radius = 3;
  bool flex = true;
  double gamma = 1.0;
  double k_gen = 100.0;

  void validate() const {
    if (radius < 1) throw ConfigError("radius must be >= 1");
    if (!(k_gen > 0.0)) throw ConfigError("k_gen must be > 0");
  }
};

struct ContextIndex {
  IndexConfig config;
  CooccurrenceMatrix matrix;
  FeatureWeights weights;

  std::size_t num_entities() const { return matrix.num_entities(); }
  std::size_t num_features() const { return matrix.num_features(); }
};

// Per-mention features, using one decision per distinct skip-gram type.
inline std::vector<MentionFeatures> transform_mentions(
    std::span<const ExtractedSkipGram> grams, const IndexConfig& cfg) {
  std::vector<MentionFeatures> out;
  out.reserve(grams.size());
  if (!cfg.flex) {
    for (const auto& g : grams) out.push_back({g.entity, {g.pattern}});
    return out;
  }
  const auto stats = SkipGramStats::from_extracted(grams, cfg.radius);
  std::unordered_map<Pattern, std::vector<Pattern>, PatternHash> decided;
  for (const auto& g : grams) {
    auto it = decided.find(g.pattern);
    if (it == decided.end()) {
      it = decided.emplace(g.pattern,
                           flex_transform(stats, g.pattern, cfg.gamma, cfg.k_gen).features)
               .first;
    }
    out.push_back({g.entity, it->second});
  }
  return out;
}

inline ContextIndex build_context_index(const Corpus& corpus, const IndexConfig& cfg) {
  cfg.validate();
  ContextIndex index;
  index.config = cfg;
  const auto grams = extract_skipgrams(corpus, cfg.radius);
  const auto emissions = transform_mentions(grams, cfg);
  index.matrix = aggregate(emissions, corpus.catalog.size());
  index.weights = tfidf(index.matrix);
  return index;
}

// ---------------------------------------------------------------------------
// Text serialization. Weights use shortest round-trip formatting, so
// write -> read -> write is byte-identical.

inline constexpr std::string_view kIndexMagic = "coexpand-index";
inline constexpr int kIndexFormatVersion = 1;

inline void write_index(const ContextIndex& index, std::ostream& out) {
  const auto& c = index.config;
  out << kIndexMagic << ' ' << kIndexFormatVersion << '\n';
  out << "radius " << c.radius << '\n';
  out << "flex " << (c.flex ? 1 : 0) << '\n';
  out << "gamma " << format_double(c.gamma) << '\n';
  out << "k_gen " << format_double(c.k_gen) << '\n';
  out << "entities " << index.num_entities() << '\n';
  out << "features " << index.num_features() << '\n';
  for (FeatureId f = 0; f < index.num_features(); ++f) {
    const auto& p = index.matrix.features.pattern(f);
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " " : "") << p[i];
    out << '\n';
  }
  std::size_t cells = 0;
  for (const auto& row : index.matrix.rows) cells += row.size();
  out << "cells " << cells << '\n';
  for (std::size_t e = 0; e < index.num_entities(); ++e) {
    const auto& counts = index.matrix.rows[e];
    const auto& weights = index.weights.rows[e];
    for (std::size_t i = 0; i < counts.size(); ++i) {
      out << e << ' ' << counts[i].first << ' ' << counts[i].second << ' '
          << format_double(weights[i].second) << '\n';
    }
  }
}

inline ContextIndex read_index(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of index");
    ++line_no;
    return split_whitespace(line);
  };
  auto keyed = [&](std::string_view key) -> std::string {
    auto f = next();
    if (f.size() != 2 || f[0] != key) {
      throw ParseError(line_no, "expected '" + std::string(key) + " <value>'");
    }
    return std::string(f[1]);
  };
  ContextIndex index;
  try {
    auto header = next();
    if (header.size() != 2 || header[0] != kIndexMagic) {
      throw ParseError(line_no, "not an index file");
    }
    if (parse_integer<int>(header[1]) != kIndexFormatVersion) {
      throw ParseError(line_no, "unsupported index format version");
    }
    auto& c = index.config;
    c.radius = parse_integer<int>(keyed("radius"));
    c.flex = parse_integer<int>(keyed("flex")) != 0;
    c.gamma = parse_double(keyed("gamma"));
    c.k_gen = parse_double(keyed("k_gen"));
    const auto n_entities = parse_integer<std::size_t>(keyed("entities"));
    const auto n_features = parse_integer<std::size_t>(keyed("features"));
    const auto width = static_cast<std::size_t>(2 * c.radius);
    for (std::size_t f = 0; f < n_features; ++f) {
      auto fields = next();
      if (fields.size() != width) throw ParseError(line_no, "bad feature width");
      Pattern p;
      for (auto t : fields) p.push_back(parse_integer<TokenId>(t));
      if (index.matrix.features.intern(p) != f) {
        throw ParseError(line_no, "duplicate feature pattern");
      }
    }
    const auto n_cells = parse_integer<std::size_t>(keyed("cells"));
    index.matrix.rows.resize(n_entities);
    index.weights.rows.resize(n_entities);
    for (std::size_t i = 0; i < n_cells; ++i) {
      auto fields = next();
      if (fields.size() != 4) throw ParseError(line_no, "bad cell line");
      const auto e = parse_integer<std::size_t>(fields[0]);
      const auto f = parse_integer<FeatureId>(fields[1]);
      if (e >= n_entities || f >= n_features) throw ParseError(line_no, "cell out of range");
      auto& row = index.matrix.rows[e];
      if (!row.empty() && row.back().first >= f) {
        throw ParseError(line_no, "cells must be sorted by entity then feature");
      }
      row.emplace_back(f, parse_integer<std::uint64_t>(fields[2]));
      index.weights.rows[e].emplace_back(f, parse_double(fields[3]));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw ParseError(line_no, e.what());
  }
  return index;
}

inline ContextIndex load_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open index file '" + path + "'");
  return read_index(in);
}

}  // namespace coexpand

#endif  // COEXPAND_CONTEXT_INDEX_HPP_
