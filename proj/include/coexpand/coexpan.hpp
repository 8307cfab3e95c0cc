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

// Multi-set co-expansion.
//
// Each iteration selects a pool of context features that keeps every set
// cohesive while separating the sets from each other, scores candidates
// against every set on two channels (context-feature weighted Jaccard and
// centroid cosine), drops candidates that look more like another set, and
// admits the top candidates per set by the sum of reciprocal channel ranks.

#ifndef COEXPAND_COEXPAN_HPP_
#define COEXPAND_COEXPAN_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coexpand/auxgen.hpp"
#include "coexpand/common.hpp"
#include "coexpand/context_index.hpp"
#include "coexpand/corpus.hpp"
#include "coexpand/embedding.hpp"

namespace coexpand {

// ---------------------------------------------------------------------------
// Context similarity.

// sum min(a_i, b_i) / sum max(a_i, b_i); 0 when the denominator is 0.
template <class A, class B>
double weighted_jaccard(const A& a, const B& b) {
  double num = 0.0, den = 0.0;
  auto ia = std::begin(a);
  auto ib = std::begin(b);
  for (; ia != std::end(a); ++ia, ++ib) {
    num += std::min(*ia, *ib);
    den += std::max(*ia, *ib);
  }
  return den > 0.0 ? num / den : 0.0;
}

inline double sim_context(EntityId e1, EntityId e2, std::span<const FeatureId> features,
                          const FeatureWeights& weights) {
  double num = 0.0, den = 0.0;
  for (FeatureId f : features) {
    const double a = weights.weight(e1, f);
    const double b = weights.weight(e2, f);
    num += std::min(a, b);
    den += std::max(a, b);
  }
  return den > 0.0 ? num / den : 0.0;
}

// Dense views of entity weight rows restricted to one feature pool.
class ProjectedWeights {
 public:
  ProjectedWeights(std::span<const FeatureId> features, const FeatureWeights& weights)
      : weights_(weights), width_(features.size()) {
    for (std::size_t i = 0; i < features.size(); ++i) slot_.emplace(features[i], i);
  }

  std::span<const double> row(EntityId e) {
    auto it = cache_.find(e);
    if (it == cache_.end()) {
      std::vector<double> dense(width_, 0.0);
      for (const auto& [f, w] : weights_.row(e)) {
        if (auto s = slot_.find(f); s != slot_.end()) dense[s->second] = w;
      }
      it = cache_.emplace(e, std::move(dense)).first;
    }
    return it->second;
  }

 private:
  const FeatureWeights& weights_;
  std::size_t width_;
  std::unordered_map<FeatureId, std::size_t> slot_;
  std::unordered_map<EntityId, std::vector<double>> cache_;
};

// ---------------------------------------------------------------------------
// Contrastive feature selection.
//
// Objective over sets X_0 (target), X_1..X_n:
//   sum_k  mean_{pairs within X_k} Sim(.,.|F)
//   - sum_{k<k'} mean_{x in X_k, y in X_k'} Sim(x, y|F)
// The cross sum runs over every pair of distinct sets, or only over pairs of
// auxiliary sets with kAuxiliaryPairsOnly.

enum class CrossPenalty { kAllSetPairs, kAuxiliaryPairsOnly };

// kFixedSize always takes the best increment, positive or not, until q
// features are chosen or candidates run out. kOnNoGain stops at the first
// step whose best increment is not positive.
enum class FeatureStop { kFixedSize, kOnNoGain };

namespace detail {

struct ObjectivePair {
  std::size_t a = 0;  // member slots
  std::size_t b = 0;
  double coef = 0.0;
};

struct ObjectiveLayout {
  std::vector<EntityId> members;
  std::vector<ObjectivePair> pairs;
};

inline ObjectiveLayout objective_layout(std::span<const std::vector<EntityId>> sets,
                                        CrossPenalty mode) {
  ObjectiveLayout layout;
  std::vector<std::size_t> offset;
  for (const auto& s : sets) {
    offset.push_back(layout.members.size());
    layout.members.insert(layout.members.end(), s.begin(), s.end());
  }
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto n = sets[k].size();
    if (n < 2) continue;
    const double coef = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        layout.pairs.push_back({offset[k] + i, offset[k] + j, coef});
      }
    }
  }
  const std::size_t first = mode == CrossPenalty::kAllSetPairs ? 0 : 1;
  for (std::size_t k = first; k < sets.size(); ++k) {
    for (std::size_t l = k + 1; l < sets.size(); ++l) {
      if (sets[k].empty() || sets[l].empty()) continue;
      const double coef = -1.0 / (static_cast<double>(sets[k].size()) *
                                  static_cast<double>(sets[l].size()));
      for (std::size_t i = 0; i < sets[k].size(); ++i) {
        for (std::size_t j = 0; j < sets[l].size(); ++j) {
          layout.pairs.push_back({offset[k] + i, offset[l] + j, coef});
        }
      }
    }
  }
  return layout;
}

}  // namespace detail

// Evaluates the objective for a fixed feature set.
inline double contrastive_objective(std::span<const std::vector<EntityId>> sets,
                                    std::span<const FeatureId> features,
                                    const FeatureWeights& weights,
                                    CrossPenalty mode = CrossPenalty::kAllSetPairs) {
  const auto layout = detail::objective_layout(sets, mode);
  double value = 0.0;
  for (const auto& p : layout.pairs) {
    value += p.coef * sim_context(layout.members[p.a], layout.members[p.b], features, weights);
  }
  return value;
}

// Greedy maximization: up to q features, each step adding the feature with
// the largest gain (ties to the smaller feature id). Candidates are the
// features carried by at least one set member.
//
// A single-member target with no other pairs has no cohesion signal; it
// falls back to the member's q heaviest features.
inline std::vector<FeatureId> select_features(std::span<const std::vector<EntityId>> sets,
                                              std::size_t q, const FeatureWeights& weights,
                                              CrossPenalty mode = CrossPenalty::kAllSetPairs,
                                              FeatureStop stop = FeatureStop::kFixedSize) {
  if (sets.empty() || sets.front().empty()) {
    throw ConfigError("select_features: target set is empty");
  }
  if (q == 0) return {};
  const auto layout = detail::objective_layout(sets, mode);
  const auto& members = layout.members;

  if (sets.front().size() == 1) {
    auto row = weights.row(sets.front().front());
    std::stable_sort(row.begin(), row.end(), [](const auto& x, const auto& y) {
      return x.second > y.second;
    });
    std::vector<FeatureId> out;
    for (std::size_t i = 0; i < row.size() && out.size() < q; ++i) out.push_back(row[i].first);
    return out;
  }

  // Sparse columns: for each candidate feature, (member slot, weight).
  std::unordered_map<FeatureId, std::vector<std::pair<std::size_t, double>>> column_of;
  for (std::size_t m = 0; m < members.size(); ++m) {
    for (const auto& [f, w] : weights.row(members[m])) {
      if (w > 0.0) column_of[f].emplace_back(m, w);
    }
  }
  std::vector<FeatureId> candidates;
  candidates.reserve(column_of.size());
  for (const auto& [f, col] : column_of) candidates.push_back(f);
  std::sort(candidates.begin(), candidates.end());

  std::vector<std::vector<std::size_t>> pairs_of(members.size());
  for (std::size_t p = 0; p < layout.pairs.size(); ++p) {
    pairs_of[layout.pairs[p].a].push_back(p);
    pairs_of[layout.pairs[p].b].push_back(p);
  }
  std::vector<double> min_sum(layout.pairs.size(), 0.0), max_sum(layout.pairs.size(), 0.0);
  std::vector<double> scratch(members.size(), 0.0);
  std::vector<std::size_t> touched_mark(layout.pairs.size(), SIZE_MAX);

  auto ratio = [](double mn, double mx) { return mx > 0.0 ? mn / mx : 0.0; };

  // Gain of adding feature `f`, optionally committing it.
  auto evaluate = [&](FeatureId f, std::size_t stamp, bool commit) {
    const auto& col = column_of.at(f);
    for (const auto& [m, w] : col) scratch[m] = w;
    double gain = 0.0;
    for (const auto& [m, w] : col) {
      for (std::size_t p : pairs_of[m]) {
        if (touched_mark[p] == stamp) continue;
        touched_mark[p] = stamp;
        const auto& pair = layout.pairs[p];
        const double wa = scratch[pair.a], wb = scratch[pair.b];
        const double mn = min_sum[p] + std::min(wa, wb);
        const double mx = max_sum[p] + std::max(wa, wb);
        gain += pair.coef * (ratio(mn, mx) - ratio(min_sum[p], max_sum[p]));
        if (commit) {
          min_sum[p] = mn;
          max_sum[p] = mx;
        }
      }
    }
    for (const auto& [m, w] : col) scratch[m] = 0.0;
    return gain;
  };

  std::vector<FeatureId> selected;
  std::vector<bool> used(candidates.size(), false);
  std::size_t stamp = 0;
  while (selected.size() < q) {
    double best_gain = -std::numeric_limits<double>::infinity();
    std::size_t best = SIZE_MAX;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      const double g = evaluate(candidates[i], stamp++, false);
      if (g > best_gain) {
        best_gain = g;
        best = i;
      }
    }
    if (best == SIZE_MAX) break;
    if (stop == FeatureStop::kOnNoGain && !(best_gain > 0.0)) break;
    evaluate(candidates[best], stamp++, true);
    used[best] = true;
    selected.push_back(candidates[best]);
  }
  return selected;
}

// ---------------------------------------------------------------------------
// Scoring and ranking.

struct ChannelScores {
  double sg = 0.0;
  double emb = 0.0;
};

// Means over the set's members other than the candidate itself.
inline ChannelScores score_channels(EntityId candidate, std::span<const EntityId> set,
                                    ProjectedWeights& projected,
                                    const CentroidProvider& centroids) {
  ChannelScores s;
  std::size_t n = 0;
  const auto own = projected.row(candidate);
  const auto own_vec = centroids.centroid(candidate);
  for (EntityId x : set) {
    if (x == candidate) continue;
    s.sg += weighted_jaccard(own, projected.row(x));
    s.emb += cosine(own_vec, centroids.centroid(x));
    ++n;
  }
  if (n > 0) {
    s.sg /= static_cast<double>(n);
    s.emb /= static_cast<double>(n);
  }
  return s;
}

inline ChannelScores score_channels(EntityId candidate, std::span<const EntityId> set,
                                    std::span<const FeatureId> features,
                                    const FeatureWeights& weights,
                                    const CentroidProvider& centroids) {
  ProjectedWeights projected(features, weights);
  return score_channels(candidate, set, projected, centroids);
}

struct ChannelSurvivors {
  std::vector<EntityId> sg;
  std::vector<EntityId> emb;
};

// scores[c][k] holds candidate c's scores against set k. A candidate leaves a
// channel for set `own` when some other set scores it strictly higher there.
inline ChannelSurvivors filter_dominated(std::span<const EntityId> candidates,
                                         const std::vector<std::vector<ChannelScores>>& scores,
                                         std::size_t own) {
  ChannelSurvivors out;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& row = scores[c];
    double best_sg = -std::numeric_limits<double>::infinity();
    double best_emb = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k == own) continue;
      best_sg = std::max(best_sg, row[k].sg);
      best_emb = std::max(best_emb, row[k].emb);
    }
    if (!(row[own].sg < best_sg)) out.sg.push_back(candidates[c]);
    if (!(row[own].emb < best_emb)) out.emb.push_back(candidates[c]);
  }
  return out;
}

struct RankedEntry {
  EntityId entity = 0;
  double score = 0.0;
  std::size_t r_sg = 0;   // 0 when absent from the channel
  std::size_t r_emb = 0;
};

using RankedList = std::vector<RankedEntry>;

// Orders entities by descending score, ties to the smaller id.
inline std::vector<EntityId> rank_by(std::vector<EntityId> entities,
                                     const std::unordered_map<EntityId, double>& score) {
  std::sort(entities.begin(), entities.end(), [&](EntityId a, EntityId b) {
    const double sa = score.at(a), sb = score.at(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return entities;
}

// Sum of reciprocal ranks over the channels an entity appears in.
inline RankedList mrr_rank(std::span<const EntityId> sg_ranking,
                           std::span<const EntityId> emb_ranking) {
  std::unordered_map<EntityId, RankedEntry> by_entity;
  std::vector<EntityId> order;
  auto add = [&](std::span<const EntityId> ranking, bool sg) {
    for (std::size_t r = 0; r < ranking.size(); ++r) {
      auto [it, inserted] = by_entity.try_emplace(ranking[r]);
      if (inserted) {
        it->second.entity = ranking[r];
        order.push_back(ranking[r]);
      }
      it->second.score += 1.0 / static_cast<double>(r + 1);
      (sg ? it->second.r_sg : it->second.r_emb) = r + 1;
    }
  };
  add(sg_ranking, true);
  add(emb_ranking, false);
  RankedList out;
  out.reserve(order.size());
  for (EntityId e : order) out.push_back(by_entity.at(e));
  std::sort(out.begin(), out.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Expansion.

struct ExpansionContext {
  const EntityCatalog& catalog;
  const FeatureWeights& weights;
  const EmbeddingTable& table;        // static vectors: retrieval, aux centers
  const CentroidProvider& centroids;  // clustering and the embedding channel
};

struct ExpandConfig {
  int per_iteration = 5;     // t
  int max_iterations = 10;   // T
  std::size_t feature_pool = 200;  // Q
  bool no_aux = false;
  bool freeze_aux = false;
  CrossPenalty cross_penalty = CrossPenalty::kAllSetPairs;
  FeatureStop feature_stop = FeatureStop::kFixedSize;
  AuxConfig aux;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const {
    if (per_iteration < 1) throw ConfigError("t must be >= 1");
    if (max_iterations < 0) throw ConfigError("T must be >= 0");
    if (feature_pool < 1) throw ConfigError("Q must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    aux.validate();
  }
};

struct Admission {
  EntityId entity = 0;
  int iteration = 0;
  double mrr = 0.0;
  std::size_t r_sg = 0;
  std::size_t r_emb = 0;

  friend bool operator==(const Admission&, const Admission&) = default;
};

struct SetStep {
  std::size_t set_index = 0;
  std::vector<Admission> admitted;

  friend bool operator==(const SetStep&, const SetStep&) = default;
};

struct IterationTrace {
  int iteration = 0;
  std::size_t num_features = 0;
  std::size_t pool_size = 0;
  AuxiliarySets auxiliary;  // sets used this iteration (before expansion)
  std::vector<SetStep> steps;

  friend bool operator==(const IterationTrace&, const IterationTrace&) = default;
};

struct ExpansionResult {
  std::vector<EntityId> seeds;
  std::vector<Admission> admitted;  // target admissions in order
  std::vector<std::vector<EntityId>> sets;  // final X_0..X_N
  std::vector<IterationTrace> trace;

  friend bool operator==(const ExpansionResult&, const ExpansionResult&) = default;
};

namespace detail {

inline void check_seeds(std::span<const EntityId> seeds, const EntityCatalog& catalog) {
  if (seeds.empty()) throw ConfigError("query has no seeds");
  std::string missing;
  for (EntityId e : seeds) {
    if (!catalog.contains(e)) missing += (missing.empty() ? "" : ", ") + std::to_string(e);
  }
  if (!missing.empty()) throw NotFoundError("unknown seed entity ids: " + missing);
}

// Entities carrying at least one feature of the pool, minus `exclude`.
inline std::vector<EntityId> candidate_pool(std::span<const FeatureId> features,
                                            const FeatureWeights& weights,
                                            const std::unordered_set<EntityId>& exclude) {
  std::unordered_set<FeatureId> pool(features.begin(), features.end());
  std::vector<EntityId> out;
  for (EntityId e = 0; e < weights.num_entities(); ++e) {
    if (exclude.count(e)) continue;
    for (const auto& [f, w] : weights.row(e)) {
      if (w > 0.0 && pool.count(f)) {
        out.push_back(e);
        break;
      }
    }
  }
  return out;
}

// Runs body(i) for i in [0, n), split across up to `threads` workers.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::vector<std::vector<ChannelScores>> score_all(
    std::span<const EntityId> candidates, std::span<const std::vector<EntityId>> sets,
    std::span<const FeatureId> features, const ExpansionContext& ctx, int threads) {
  std::vector<std::vector<ChannelScores>> scores(candidates.size(),
                                                 std::vector<ChannelScores>(sets.size()));
  // ProjectedWeights caches lazily, so warm it for every entity up front and
  // share it read-only.
  ProjectedWeights projected(features, ctx.weights);
  for (EntityId c : candidates) projected.row(c);
  for (const auto& s : sets) {
    for (EntityId e : s) projected.row(e);
  }
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    for (std::size_t k = 0; k < sets.size(); ++k) {
      scores[i][k] = score_channels(candidates[i], sets[k], projected, ctx.centroids);
    }
  });
  return scores;
}

inline RankedList rank_for_set(std::span<const EntityId> candidates,
                               const std::vector<std::vector<ChannelScores>>& scores,
                               std::size_t own,
                               const std::unordered_set<EntityId>& taken) {
  std::vector<EntityId> open;
  std::vector<std::vector<ChannelScores>> open_scores;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (taken.count(candidates[c])) continue;
    open.push_back(candidates[c]);
    open_scores.push_back(scores[c]);
  }
  const auto survivors = filter_dominated(open, open_scores, own);
  std::unordered_map<EntityId, double> sg, emb;
  for (std::size_t c = 0; c < open.size(); ++c) {
    sg[open[c]] = open_scores[c][own].sg;
    emb[open[c]] = open_scores[c][own].emb;
  }
  return mrr_rank(rank_by(survivors.sg, sg), rank_by(survivors.emb, emb));
}

// Uniform subsample without replacement, original order kept.
inline std::vector<EntityId> subsample(const std::vector<EntityId>& set, std::size_t size,
                                       Rng& rng) {
  if (set.size() <= size) return set;
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < size; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  }
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  std::vector<EntityId> out;
  for (auto i : idx) out.push_back(set[i]);
  return out;
}

}  // namespace detail

// Expansion of one set with no auxiliary sets.
inline ExpansionResult single_expand(std::span<const EntityId> seeds,
                                     const ExpansionContext& ctx, const ExpandConfig& cfg) {
  cfg.validate();
  detail::check_seeds(seeds, ctx.catalog);
  ExpansionResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  std::vector<EntityId> set = result.seeds;
  std::unordered_set<EntityId> members(set.begin(), set.end());

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    IterationTrace trace;
    trace.iteration = iter;
    const std::vector<std::vector<EntityId>> sets{set};
    const auto features = select_features(sets, cfg.feature_pool, ctx.weights, cfg.cross_penalty,
                                          cfg.feature_stop);
    trace.num_features = features.size();
    if (features.empty()) {
      result.trace.push_back(std::move(trace));
      break;
    }
    const auto pool = detail::candidate_pool(features, ctx.weights, members);
    trace.pool_size = pool.size();

    ProjectedWeights projected(features, ctx.weights);
    std::unordered_map<EntityId, double> sg, emb;
    for (EntityId c : pool) {
      const auto s = score_channels(c, set, projected, ctx.centroids);
      sg[c] = s.sg;
      emb[c] = s.emb;
    }
    const auto ranked = mrr_rank(rank_by(pool, sg), rank_by(pool, emb));
    SetStep step;
    for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(cfg.per_iteration); ++i) {
      const auto& r = ranked[i];
      step.admitted.push_back({r.entity, iter, r.score, r.r_sg, r.r_emb});
      set.push_back(r.entity);
      members.insert(r.entity);
      result.admitted.push_back(step.admitted.back());
    }
    trace.steps.push_back(std::move(step));
    result.trace.push_back(std::move(trace));
    if (ranked.empty()) break;
  }
  result.sets = {set};
  return result;
}

// Group expander backed by one round of single-set expansion.
inline GroupExpander make_group_expander(const ExpansionContext& ctx, const ExpandConfig& cfg) {
  ExpandConfig one = cfg;
  one.max_iterations = 1;
  one.no_aux = true;
  return [&ctx, one](std::span<const EntityId> group) {
    std::vector<EntityId> out;
    for (const auto& a : single_expand(group, ctx, one).admitted) out.push_back(a.entity);
    return out;
  };
}

inline ExpansionResult co_expand(std::span<const EntityId> seeds, const ExpansionContext& ctx,
                                 const ExpandConfig& cfg) {
  cfg.validate();
  detail::check_seeds(seeds, ctx.catalog);
  if (!cfg.no_aux && seeds.size() < 2) {
    throw ConfigError("co-expansion with auxiliary sets needs >= 2 seeds");
  }
  ExpansionResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  std::vector<std::vector<EntityId>> sets{result.seeds};
  Rng balance_rng(fork_seed(cfg.seed, "coexpan/balance"));
  const auto expander = make_group_expander(ctx, cfg);

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    IterationTrace trace;
    trace.iteration = iter;

    if (!cfg.no_aux && (!cfg.freeze_aux || iter == 1)) {
      const AuxContext aux_ctx{ctx.table, ctx.centroids};
      trace.auxiliary = generate(sets[0], aux_ctx, cfg.aux, expander);
      sets.resize(1);
      for (const auto& s : trace.auxiliary.sets) sets.push_back(s);
    } else if (!cfg.no_aux) {
      trace.auxiliary.sets.assign(sets.begin() + 1, sets.end());
    }

    std::vector<std::vector<EntityId>> balanced{sets[0]};
    for (std::size_t k = 1; k < sets.size(); ++k) {
      balanced.push_back(detail::subsample(sets[k], sets[0].size(), balance_rng));
    }

    const auto features = select_features(balanced, cfg.feature_pool, ctx.weights,
                                          cfg.cross_penalty, cfg.feature_stop);
    trace.num_features = features.size();
    if (features.empty()) {
      result.trace.push_back(std::move(trace));
      break;
    }
    std::unordered_set<EntityId> members;
    for (const auto& s : sets) members.insert(s.begin(), s.end());
    const auto pool = detail::candidate_pool(features, ctx.weights, members);
    trace.pool_size = pool.size();
    const auto scores = detail::score_all(pool, balanced, features, ctx, cfg.threads);

    bool target_exhausted = false;
    std::unordered_set<EntityId> taken;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const auto ranked = detail::rank_for_set(pool, scores, k, taken);
      if (k == 0 && ranked.empty()) target_exhausted = true;
      SetStep step;
      step.set_index = k;
      for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(cfg.per_iteration); ++i) {
        const auto& r = ranked[i];
        step.admitted.push_back({r.entity, iter, r.score, r.r_sg, r.r_emb});
        sets[k].push_back(r.entity);
        taken.insert(r.entity);
        if (k == 0) result.admitted.push_back(step.admitted.back());
      }
      trace.steps.push_back(std::move(step));
    }
    result.trace.push_back(std::move(trace));
    if (target_exhausted) break;
  }
  result.sets = std::move(sets);
  return result;
}

}  // namespace coexpand

#endif  // COEXPAND_COEXPAN_HPP_
