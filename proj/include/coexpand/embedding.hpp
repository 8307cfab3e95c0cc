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

// Static word/entity embeddings trained on a joint objective: skip-gram local
// context prediction plus a lambda-weighted word-predicts-document term. Both
// softmax terms are approximated with negative sampling.
//
// Every catalog entity becomes one vocabulary item (its name with spaces
// replaced by '_'); its mention spans are collapsed to that item in the
// training stream. Words enter the vocabulary when their corpus frequency is
// at least `min_count`.

#ifndef COEXPAND_EMBEDDING_HPP_
#define COEXPAND_EMBEDDING_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "coexpand/common.hpp"
#include "coexpand/corpus.hpp"

namespace coexpand {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  void append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ConfigError("cosine: dimension mismatch (" + std::to_string(x.size()) +
                      " vs " + std::to_string(y.size()) + ")");
  }
  const double nx = std::sqrt(dot(x, x));
  const double ny = std::sqrt(dot(y, y));
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

inline std::string entity_token(std::string_view entity_name) {
  std::string out(entity_name);
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

struct TrainConfig {
  int dim = 100;
  int window = 5;  // h
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  double lambda = 1.5;  // weight of the global (document) term
  int min_count = 5;
  std::uint64_t seed = 1;

  void validate() const {
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (negatives < 0) throw ConfigError("negatives must be >= 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
  }
};

struct EmbeddingTable {
  int dim = 0;
  std::vector<std::string> items;
  std::vector<std::optional<EntityId>> item_entity;
  std::vector<std::optional<std::size_t>> entity_item;  // indexed by EntityId
  Matrix input;   // v_w
  Matrix output;  // u_w; empty when loaded from file
  Matrix docs;    // u_d; empty when loaded from file

  std::size_t size() const { return items.size(); }

  std::span<const double> vector(std::size_t item) const { return input.row(item); }

  std::size_t item_of(EntityId entity) const {
    if (entity >= entity_item.size() || !entity_item[entity]) {
      throw NotFoundError("entity id " + std::to_string(entity) +
                          " has no embedding");
    }
    return *entity_item[entity];
  }

  std::span<const double> entity_vector(EntityId entity) const {
    return input.row(item_of(entity));
  }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

// ---------------------------------------------------------------------------
// Negative-sampling term.
//
// For an input vector v and targets u_k with labels y_k in {0, 1} the sampled
// loss is  weight * sum_k softplus(-(2 y_k - 1) v.u_k),  i.e.
// -log s(v.u+) - sum log s(-v.u-).

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct SampledTarget {
  std::span<const double> vector;
  bool positive = false;
};

struct SampledGradient {
  double loss = 0.0;
  std::vector<double> d_input;
  std::vector<std::vector<double>> d_targets;
};

inline SampledGradient sampled_loss_gradient(std::span<const double> v,
                                             std::span<const SampledTarget> targets,
                                             double weight) {
  SampledGradient g;
  g.d_input.assign(v.size(), 0.0);
  for (const auto& t : targets) {
    const double x = dot(v, t.vector);
    const double label = t.positive ? 1.0 : 0.0;
    g.loss += weight * softplus(t.positive ? -x : x);
    const double coef = weight * (sigmoid(x) - label);
    std::vector<double> du(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      g.d_input[i] += coef * t.vector[i];
      du[i] = coef * v[i];
    }
    g.d_targets.push_back(std::move(du));
  }
  return g;
}

inline double sampled_loss(std::span<const double> v,
                           std::span<const SampledTarget> targets, double weight) {
  double loss = 0.0;
  for (const auto& t : targets) {
    const double x = dot(v, t.vector);
    loss += weight * softplus(t.positive ? -x : x);
  }
  return loss;
}

namespace detail {

// One in-place SGD step on the sampled term. Target rows see the input vector
// as it was before the step; the input moves once, after all targets.
inline void negative_sampling_step(std::span<double> v,
                                   std::span<double> positive,
                                   std::span<const std::span<double>> negatives,
                                   double weight, double lr,
                                   std::vector<double>& scratch) {
  scratch.assign(v.size(), 0.0);
  auto apply = [&](std::span<double> u, double label) {
    const double coef = weight * (sigmoid(dot(v, u)) - label);
    for (std::size_t i = 0; i < v.size(); ++i) {
      scratch[i] += coef * u[i];
      u[i] -= lr * coef * v[i];
    }
  };
  apply(positive, 1.0);
  for (auto u : negatives) apply(u, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * scratch[i];
}

// Sampler over a discrete distribution given by non-negative weights.
class CumulativeSampler {
 public:
  explicit CumulativeSampler(std::span<const double> weights) {
    cumulative_.reserve(weights.size());
    double acc = 0.0;
    for (double w : weights) {
      acc += w;
      cumulative_.push_back(acc);
    }
  }
  bool empty() const { return cumulative_.empty() || cumulative_.back() <= 0.0; }
  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

struct TrainingStream {
  std::vector<std::vector<std::uint32_t>> docs;  // item indices per document
  std::vector<std::uint64_t> counts;             // per item
  std::size_t positions = 0;
};

inline void build_vocabulary(const Corpus& corpus, int min_count,
                             EmbeddingTable& table,
                             std::vector<std::optional<std::size_t>>& token_item) {
  const auto& catalog = corpus.catalog;
  std::unordered_map<std::string, EntityId> by_token;
  for (EntityId e = 0; e < catalog.size(); ++e) {
    auto tok = entity_token(catalog.name(e));
    auto [it, inserted] = by_token.emplace(tok, e);
    if (!inserted) {
      throw DataError("entities '" + catalog.name(it->second) + "' and '" +
                      catalog.name(e) + "' share the embedding token '" + tok +
                      "'");
    }
    table.items.push_back(std::move(tok));
    table.item_entity.emplace_back(e);
    table.entity_item.emplace_back(static_cast<std::size_t>(e));
  }
  const auto& vocab = corpus.vocabulary;
  token_item.assign(vocab.size(), std::nullopt);
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    const auto id = static_cast<TokenId>(t);
    if (vocab.frequency(id) < static_cast<std::uint64_t>(min_count)) continue;
    if (by_token.count(vocab.token(id))) continue;  // entity owns the string
    token_item[t] = table.items.size();
    table.items.push_back(vocab.token(id));
    table.item_entity.emplace_back(std::nullopt);
  }
}

inline TrainingStream build_stream(
    const Corpus& corpus, const EmbeddingTable& table,
    const std::vector<std::optional<std::size_t>>& token_item) {
  TrainingStream s;
  s.counts.assign(table.items.size(), 0);
  s.docs.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    std::vector<std::uint32_t> seq;
    std::size_t m = 0;
    for (std::uint32_t i = 0; i < doc.tokens.size();) {
      if (m < doc.mentions.size() && doc.mentions[m].start == i) {
        seq.push_back(static_cast<std::uint32_t>(*table.entity_item[doc.mentions[m].entity]));
        i = doc.mentions[m].end;
        ++m;
        continue;
      }
      if (auto item = token_item[static_cast<std::size_t>(doc.tokens[i])]) {
        seq.push_back(static_cast<std::uint32_t>(*item));
      }
      ++i;
    }
    for (auto it : seq) ++s.counts[it];
    s.positions += seq.size();
    s.docs.push_back(std::move(seq));
  }
  return s;
}

}  // namespace detail

// Trains the joint objective. Single-threaded and deterministic in the seed.
inline EmbeddingTable train_joint(const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.documents.empty() || corpus.vocabulary.empty()) {
    throw DataError("cannot train embeddings on an empty corpus");
  }
  EmbeddingTable table;
  table.dim = cfg.dim;
  std::vector<std::optional<std::size_t>> token_item;
  detail::build_vocabulary(corpus, cfg.min_count, table, token_item);
  if (table.items.empty()) {
    throw DataError("training vocabulary is empty (min_count too high?)");
  }
  const auto stream = detail::build_stream(corpus, table, token_item);

  const auto dim = static_cast<std::size_t>(cfg.dim);
  table.input = Matrix(table.items.size(), dim);
  table.output = Matrix(table.items.size(), dim);
  table.docs = Matrix(corpus.documents.size(), dim);
  Rng init_rng(fork_seed(cfg.seed, "embedding/init"));
  for (std::size_t r = 0; r < table.input.rows(); ++r) {
    for (double& x : table.input.row(r)) x = (init_rng.uniform() - 0.5) / cfg.dim;
  }

  std::vector<double> noise(stream.counts.size());
  for (std::size_t i = 0; i < noise.size(); ++i) {
    noise[i] = std::pow(static_cast<double>(stream.counts[i]), 0.75);
  }
  const detail::CumulativeSampler word_noise(noise);
  Rng word_rng(fork_seed(cfg.seed, "embedding/word-negatives"));
  Rng doc_rng(fork_seed(cfg.seed, "embedding/doc-negatives"));

  const double total = static_cast<double>(cfg.epochs) *
                       static_cast<double>(std::max<std::size_t>(stream.positions, 1));
  double processed = 0.0;
  std::vector<double> scratch;
  std::vector<std::span<double>> negatives;
  const auto n_docs = corpus.documents.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t d = 0; d < stream.docs.size(); ++d) {
      const auto& seq = stream.docs[d];
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const double lr =
            cfg.learning_rate * (1.0 - (1.0 - 1e-4) * (processed / total));
        processed += 1.0;
        auto v = table.input.row(seq[i]);

        const std::size_t lo = i >= static_cast<std::size_t>(cfg.window)
                                   ? i - static_cast<std::size_t>(cfg.window)
                                   : 0;
        const std::size_t hi = std::min(seq.size(), i + static_cast<std::size_t>(cfg.window) + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          const auto context = seq[j];
          negatives.clear();
          for (int k = 0; k < cfg.negatives && !word_noise.empty(); ++k) {
            const auto neg = word_noise.sample(word_rng);
            if (neg == context) continue;
            negatives.push_back(table.output.row(neg));
          }
          detail::negative_sampling_step(v, table.output.row(context), negatives,
                                         1.0, lr, scratch);
        }

        if (cfg.lambda > 0.0) {
          negatives.clear();
          for (int k = 0; k < cfg.negatives && n_docs > 1; ++k) {
            const auto neg = doc_rng.below(n_docs);
            if (neg == d) continue;
            negatives.push_back(table.docs.row(neg));
          }
          detail::negative_sampling_step(v, table.docs.row(d), negatives,
                                         cfg.lambda, lr, scratch);
        }
      }
    }
  }
  for (double x : table.input.data()) {
    if (!std::isfinite(x)) throw InvariantError("non-finite embedding component");
  }
  return table;
}

// ---------------------------------------------------------------------------
// Retrieval.

enum class TermFilter { kAll, kEntities };

struct RelatedTerm {
  std::size_t item = 0;
  double cosine = 0.0;
};

// Top-k items by cosine to `query`, admitting only items for which `keep`
// returns true. Ties go to the smaller item index.
template <class Keep>
std::vector<RelatedTerm> nearest_items(const EmbeddingTable& table,
                                       std::span<const double> query,
                                       std::size_t k, Keep&& keep) {
  std::vector<RelatedTerm> scored;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!keep(i)) continue;
    scored.push_back({i, cosine(query, table.vector(i))});
  }
  auto better = [](const RelatedTerm& a, const RelatedTerm& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.item < b.item;
  };
  const auto n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                    scored.end(), better);
  scored.resize(n);
  return scored;
}

inline std::vector<RelatedTerm> related_terms(const EmbeddingTable& table,
                                              EntityId entity, std::size_t k,
                                              std::span<const EntityId> exclude,
                                              TermFilter filter = TermFilter::kAll) {
  if (k == 0) throw ConfigError("related_terms: k must be >= 1");
  const auto self = table.item_of(entity);
  std::unordered_set<std::size_t> excluded{self};
  for (EntityId e : exclude) {
    if (e < table.entity_item.size() && table.entity_item[e]) {
      excluded.insert(*table.entity_item[e]);
    }
  }
  return nearest_items(table, table.vector(self), k, [&](std::size_t i) {
    if (excluded.count(i)) return false;
    return filter == TermFilter::kAll || table.item_entity[i].has_value();
  });
}

// ---------------------------------------------------------------------------
// Embedding files: header "count dim", then one line per item with the item
// string followed by dim decimals.

struct VectorRecord {
  std::string name;
  std::vector<double> values;
};

inline void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dim << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.items[i];
    for (double x : table.vector(i)) out << ' ' << format_double(x);
    out << '\n';
  }
}

inline std::vector<VectorRecord> read_vector_records(std::istream& in,
                                                     int* dim_out = nullptr) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing 'count dim' header");
  const auto header = split_whitespace(line);
  if (header.size() != 2) throw ParseError(1, "header must be 'count dim'");
  std::size_t count = 0;
  int dim = 0;
  try {
    count = parse_integer<std::size_t>(header[0]);
    dim = parse_integer<int>(header[1]);
  } catch (const DataError& e) {
    throw ParseError(1, e.what());
  }
  if (dim < 1) throw ParseError(1, "dimension must be >= 1");
  std::vector<VectorRecord> records;
  records.reserve(count);
  std::size_t line_no = 1;
  while (records.size() < count && std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.size() < static_cast<std::size_t>(dim) + 1) {
      throw ParseError(line_no, "expected a name and " + std::to_string(dim) +
                                    " values");
    }
    const std::size_t name_fields = fields.size() - static_cast<std::size_t>(dim);
    VectorRecord r;
    for (std::size_t i = 0; i < name_fields; ++i) {
      if (i) r.name += ' ';
      r.name += fields[i];
    }
    try {
      for (std::size_t i = name_fields; i < fields.size(); ++i) {
        r.values.push_back(parse_double(fields[i]));
      }
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
    records.push_back(std::move(r));
  }
  if (records.size() != count) {
    throw DataError("vector file ends after " + std::to_string(records.size()) +
                    " of " + std::to_string(count) + " records");
  }
  if (dim_out) *dim_out = dim;
  return records;
}

// Rebuilds a retrieval-only table (input vectors) from a file written by
// write_embeddings. Items whose string matches a catalog entity (verbatim or
// in its '_'-joined form) are bound to that entity.
inline EmbeddingTable table_from_records(std::span<const VectorRecord> records,
                                         int dim, const EntityCatalog& catalog) {
  std::unordered_map<std::string, EntityId> by_token;
  for (EntityId e = 0; e < catalog.size(); ++e) by_token.emplace(entity_token(catalog.name(e)), e);
  EmbeddingTable table;
  table.dim = dim;
  table.entity_item.assign(catalog.size(), std::nullopt);
  for (const auto& r : records) {
    const auto i = table.items.size();
    table.items.push_back(r.name);
    std::optional<EntityId> entity;
    if (auto it = by_token.find(entity_token(r.name)); it != by_token.end()) {
      entity = it->second;
      if (!table.entity_item[*entity]) table.entity_item[*entity] = i;
    }
    table.item_entity.push_back(entity);
    table.input.append_row(r.values);
  }
  return table;
}

inline EmbeddingTable load_embeddings(const std::string& path,
                                      const EntityCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");
  int dim = 0;
  auto records = read_vector_records(in, &dim);
  return table_from_records(records, dim, catalog);
}

// ---------------------------------------------------------------------------
// Per-entity centroid vectors used for clustering distances and the embedding
// scoring channel.

class CentroidProvider {
 public:
  enum class Mode { kTrainedStatic, kExternalFile };

  static CentroidProvider from_table(const EmbeddingTable& table,
                                     const EntityCatalog& catalog) {
    CentroidProvider p;
    p.mode_ = Mode::kTrainedStatic;
    p.dim_ = table.dim;
    std::string missing;
    for (EntityId e = 0; e < catalog.size(); ++e) {
      if (e < table.entity_item.size() && table.entity_item[e]) {
        p.vectors_.append_row(table.vector(*table.entity_item[e]));
      } else {
        if (!missing.empty()) missing += ", ";
        missing += catalog.name(e);
        p.vectors_.append_row(std::vector<double>(static_cast<std::size_t>(table.dim)));
      }
    }
    if (!missing.empty()) throw NotFoundError("no embedding for entities: " + missing);
    return p;
  }

  static CentroidProvider from_records(std::span<const VectorRecord> records,
                                       int dim, const EntityCatalog& catalog) {
    std::unordered_map<std::string, const VectorRecord*> by_name;
    for (const auto& r : records) {
      by_name.emplace(r.name, &r);
      by_name.emplace(entity_token(r.name), &r);
    }
    CentroidProvider p;
    p.mode_ = Mode::kExternalFile;
    p.dim_ = dim;
    std::string missing;
    for (EntityId e = 0; e < catalog.size(); ++e) {
      auto it = by_name.find(catalog.name(e));
      if (it == by_name.end()) it = by_name.find(entity_token(catalog.name(e)));
      if (it == by_name.end()) {
        if (!missing.empty()) missing += ", ";
        missing += catalog.name(e);
        continue;
      }
      p.vectors_.append_row(it->second->values);
    }
    if (!missing.empty()) {
      throw NotFoundError("centroid file lacks entities: " + missing);
    }
    return p;
  }

  static CentroidProvider load(const std::string& path,
                               const EntityCatalog& catalog) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open centroid file '" + path + "'");
    int dim = 0;
    auto records = read_vector_records(in, &dim);
    return from_records(records, dim, catalog);
  }

  Mode mode() const { return mode_; }
  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.rows(); }
  std::span<const double> centroid(EntityId e) const {
    if (e >= vectors_.rows()) {
      throw NotFoundError("no centroid for entity id " + std::to_string(e));
    }
    return vectors_.row(e);
  }

 private:
  Mode mode_ = Mode::kTrainedStatic;
  int dim_ = 0;
  Matrix vectors_;
};

inline std::span<const double> entity_centroid(const CentroidProvider& provider,
                                               EntityId entity) {
  return provider.centroid(entity);
}

}  // namespace coexpand

#endif  // COEXPAND_EMBEDDING_HPP_
