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

// Auxiliary ("rival") set generation.
//
// For every member of the target set the nearest entities in the static
// embedding space are clustered bottom-up together with the target members
// themselves; clustering stops right before a target member would join a
// cluster of related entities, so the surviving clusters are of other types.
// Clusters found for different target members are then merged when one,
// translated by the offset between the two target members, lands on the
// other. Merged clusters become the auxiliary sets.

#ifndef COEXPAND_AUXGEN_HPP_
#define COEXPAND_AUXGEN_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coexpand/common.hpp"
#include "coexpand/embedding.hpp"

namespace coexpand {

struct AuxConfig {
  std::size_t related = 10;   // related entities retrieved per target member
  std::size_t neighbors = 15; // pseudo-group size in try_merge
  std::size_t max_sets = 5;   // largest-first cap on the output

  void validate() const {
    if (related < 1) throw ConfigError("k_related must be >= 1");
    if (neighbors < 1) throw ConfigError("nn must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Complete-linkage agglomerative clustering with a seed-contact stop.

struct HacMerge {
  std::vector<std::size_t> left;   // point indices, sorted
  std::vector<std::size_t> right;  // point indices, sorted
  double distance = 0.0;
};

struct HacResult {
  std::vector<HacMerge> merges;                    // in execution order
  std::vector<std::vector<std::size_t>> clusters;  // final, by smallest member
  bool stopped_at_seed = false;
};

// Clusters points given their pairwise distances. At each step the two
// clusters with the smallest complete-linkage distance merge; ties go to the
// pair whose smallest members are lexicographically smallest. Merging halts
// before the first merge that would put a seed point and a non-seed point
// into the same cluster.
inline HacResult complete_linkage_seed_stop(
    const std::vector<std::vector<double>>& distance,
    const std::vector<bool>& is_seed) {
  const std::size_t n = distance.size();
  if (is_seed.size() != n) throw InvariantError("seed mask size mismatch");
  // Slot i holds the cluster whose smallest member is i.
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<bool> active(n, true), has_seed(n), has_term(n);
  std::vector<std::vector<double>> d = distance;
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = {i};
    has_seed[i] = is_seed[i];
    has_term[i] = !is_seed[i];
  }

  HacResult result;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = n, best_b = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        if (d[a][b] < best || best_a == n) {
          best = d[a][b];
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a == n) break;
    const bool seed = has_seed[best_a] || has_seed[best_b];
    const bool term = has_term[best_a] || has_term[best_b];
    if (seed && term) {
      result.stopped_at_seed = true;
      break;
    }
    result.merges.push_back({members[best_a], members[best_b], best});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == best_a || k == best_b) continue;
      d[best_a][k] = d[k][best_a] = std::max(d[best_a][k], d[best_b][k]);
    }
    auto& into = members[best_a];
    into.insert(into.end(), members[best_b].begin(), members[best_b].end());
    std::sort(into.begin(), into.end());
    has_seed[best_a] = seed;
    has_term[best_a] = term;
    active[best_b] = false;
    members[best_b].clear();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) result.clusters.push_back(members[i]);
  }
  return result;
}

inline double euclidean(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("euclidean: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

struct InitialGroup {
  EntityId seed = 0;
  std::size_t index = 0;  // i in g_e^i
  std::vector<EntityId> members;
};

// Clusters `related` together with `seeds` on centroid distances and returns
// the seed-free clusters of at least two related entities.
inline std::vector<InitialGroup> hac_with_seed_stop(
    EntityId seed, std::span<const EntityId> related,
    std::span<const EntityId> seeds, const CentroidProvider& centroids) {
  if (related.empty()) return {};
  std::vector<EntityId> points(related.begin(), related.end());
  points.insert(points.end(), seeds.begin(), seeds.end());
  std::vector<bool> is_seed(points.size(), false);
  std::fill(is_seed.begin() + static_cast<std::ptrdiff_t>(related.size()),
            is_seed.end(), true);
  std::vector<std::span<const double>> vecs;
  for (EntityId e : points) vecs.push_back(centroids.centroid(e));
  std::vector<std::vector<double>> dist(points.size(),
                                        std::vector<double>(points.size(), 0.0));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      dist[i][j] = dist[j][i] = euclidean(vecs[i], vecs[j]);
    }
  }
  const auto hac = complete_linkage_seed_stop(dist, is_seed);
  std::vector<InitialGroup> groups;
  for (const auto& cluster : hac.clusters) {
    if (cluster.size() < 2) continue;
    if (std::any_of(cluster.begin(), cluster.end(),
                    [&](std::size_t i) { return is_seed[i]; })) {
      continue;
    }
    InitialGroup g;
    g.seed = seed;
    g.index = groups.size();
    for (std::size_t i : cluster) g.members.push_back(points[i]);
    groups.push_back(std::move(g));
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Cross-seed merging.

// Expands a group by single-set expansion; returns the newly admitted
// entities only.
using GroupExpander = std::function<std::vector<EntityId>(std::span<const EntityId>)>;

inline std::vector<EntityId> expand_group(std::span<const EntityId> group,
                                          const GroupExpander& expander) {
  std::vector<EntityId> out(group.begin(), group.end());
  if (!expander) return out;
  std::unordered_set<EntityId> seen(group.begin(), group.end());
  for (EntityId e : expander(group)) {
    if (seen.insert(e).second) out.push_back(e);
  }
  return out;
}

inline std::vector<double> group_center(std::span<const EntityId> group,
                                        const EmbeddingTable& table) {
  if (group.empty()) throw ConfigError("group_center: empty group");
  std::vector<double> center(static_cast<std::size_t>(table.dim), 0.0);
  for (EntityId e : group) {
    const auto v = table.entity_vector(e);
    for (std::size_t i = 0; i < center.size(); ++i) center[i] += v[i];
  }
  for (double& x : center) x /= static_cast<double>(group.size());
  return center;
}

// v_to - v_from + center.
inline std::vector<double> parallel_translate(std::span<const double> center,
                                              EntityId from, EntityId to,
                                              const EmbeddingTable& table) {
  const auto a = table.entity_vector(from);
  const auto b = table.entity_vector(to);
  std::vector<double> out(center.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] - a[i] + center[i];
  return out;
}

struct GroupProbe {
  EntityId seed = 0;
  std::span<const EntityId> members;
  std::span<const EntityId> expanded;  // members plus expansion
};

struct MergeDecision {
  bool merged = false;
  std::size_t overlap = 0;
  double threshold = 0.0;
  std::vector<EntityId> pseudo_group;
};

// Translates gi's expanded center from gi.seed to gj.seed, takes the nearest
// entities there (cosine, static vectors, excluding the target set and gi's
// members) and merges when enough of them fall in gj's expanded group.
inline MergeDecision try_merge(const GroupProbe& gi, const GroupProbe& gj,
                               std::span<const EntityId> target,
                               const EmbeddingTable& table, std::size_t neighbors) {
  MergeDecision d;
  d.threshold = std::sqrt(static_cast<double>(std::min(gi.expanded.size(), gj.expanded.size())));
  const auto center = group_center(gi.expanded, table);
  const auto probe = parallel_translate(center, gi.seed, gj.seed, table);
  std::unordered_set<EntityId> excluded(target.begin(), target.end());
  excluded.insert(gi.members.begin(), gi.members.end());
  const auto nearest = nearest_items(table, probe, neighbors, [&](std::size_t item) {
    const auto& e = table.item_entity[item];
    return e.has_value() && !excluded.count(*e);
  });
  const std::unordered_set<EntityId> other(gj.expanded.begin(), gj.expanded.end());
  for (const auto& n : nearest) {
    const EntityId e = *table.item_entity[n.item];
    d.pseudo_group.push_back(e);
    if (other.count(e)) ++d.overlap;
  }
  d.merged = static_cast<double>(d.overlap) >= d.threshold;
  return d;
}

struct AuxiliarySets {
  std::vector<std::vector<EntityId>> sets;
  // (seed, group index) of the initial groups merged into each set.
  std::vector<std::vector<std::pair<EntityId, std::size_t>>> provenance;

  bool empty() const { return sets.empty(); }

  friend bool operator==(const AuxiliarySets&, const AuxiliarySets&) = default;
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

struct AuxContext {
  const EmbeddingTable& table;
  const CentroidProvider& centroids;
};

inline AuxiliarySets generate(std::span<const EntityId> target, const AuxContext& ctx,
                              const AuxConfig& cfg, const GroupExpander& expander) {
  cfg.validate();
  if (target.size() < 2) throw ConfigError("auxiliary generation needs >= 2 target members");

  std::vector<InitialGroup> groups;
  for (EntityId e : target) {
    std::vector<EntityId> related;
    for (const auto& r : related_terms(ctx.table, e, cfg.related, target, TermFilter::kEntities)) {
      related.push_back(*ctx.table.item_entity[r.item]);
    }
    for (auto& g : hac_with_seed_stop(e, related, target, ctx.centroids)) {
      groups.push_back(std::move(g));
    }
  }

  std::vector<std::vector<EntityId>> expanded;
  expanded.reserve(groups.size());
  for (const auto& g : groups) expanded.push_back(expand_group(g.members, expander));

  detail::UnionFind uf(groups.size());
  std::vector<bool> merged(groups.size(), false);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (groups[i].seed == groups[j].seed) continue;
      const GroupProbe gi{groups[i].seed, groups[i].members, expanded[i]};
      const GroupProbe gj{groups[j].seed, groups[j].members, expanded[j]};
      if (try_merge(gi, gj, target, ctx.table, cfg.neighbors).merged) {
        uf.unite(i, j);
        merged[i] = merged[j] = true;
      }
    }
  }

  // Components in order of their first group.
  std::vector<std::size_t> component_of(groups.size(), SIZE_MAX);
  std::vector<std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!merged[i]) continue;
    const auto root = uf.find(i);
    if (component_of[root] == SIZE_MAX) {
      component_of[root] = components.size();
      components.emplace_back();
    }
    components[component_of[root]].push_back(i);
  }

  // Each entity goes to exactly one set: the one whose expanded center is
  // cosine-nearest, ties to the smaller set index.
  std::vector<std::vector<double>> centers;
  std::unordered_map<EntityId, std::vector<std::size_t>> claims;
  for (std::size_t c = 0; c < components.size(); ++c) {
    std::vector<EntityId> pool;
    std::unordered_set<EntityId> seen;
    for (auto gi : components[c]) {
      for (EntityId e : expanded[gi]) {
        if (seen.insert(e).second) pool.push_back(e);
      }
      for (EntityId e : groups[gi].members) {
        auto& owners = claims[e];
        if (owners.empty() || owners.back() != c) owners.push_back(c);
      }
    }
    centers.push_back(group_center(pool, ctx.table));
  }
  const std::unordered_set<EntityId> target_set(target.begin(), target.end());
  std::vector<std::vector<EntityId>> members(components.size());
  for (const auto& [e, owners] : claims) {
    if (target_set.count(e)) continue;
    std::size_t best = owners.front();
    if (owners.size() > 1) {
      double best_cos = -std::numeric_limits<double>::infinity();
      for (auto c : owners) {
        const double cs = cosine(ctx.table.entity_vector(e), centers[c]);
        if (cs > best_cos) {
          best_cos = cs;
          best = c;
        }
      }
    }
    members[best].push_back(e);
  }

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < components.size(); ++c) {
    std::sort(members[c].begin(), members[c].end());
    if (members[c].size() >= 2) order.push_back(c);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return members[a].size() > members[b].size();
  });
  if (order.size() > cfg.max_sets) order.resize(cfg.max_sets);

  AuxiliarySets out;
  for (auto c : order) {
    out.sets.push_back(std::move(members[c]));
    std::vector<std::pair<EntityId, std::size_t>> prov;
    for (auto gi : components[c]) prov.emplace_back(groups[gi].seed, groups[gi].index);
    out.provenance.push_back(std::move(prov));
  }
  return out;
}

}  // namespace coexpand

#endif  // COEXPAND_AUXGEN_HPP_
