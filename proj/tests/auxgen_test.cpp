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

#include "coexpand/auxgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "testkit.hpp"

namespace coexpand {
namespace {

using testkit::brute_force_hac;
using testkit::merge_cities;
using testkit::parallelogram;
using testkit::Points;
using Space = testkit::VectorSpace;

// ---------------------------------------------------------------------------
// Clustering.

TEST(HacTest, OneDimensionalExample) {
  // seed 0.0; related 10.0, 10.5, 30.0
  const Space s({{10.0}, {10.5}, {30.0}, {0.0}});
  const std::vector<EntityId> related{0, 1, 2}, seeds{3};
  const auto groups = hac_with_seed_stop(3, related, seeds, s.centroids);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].members, (std::vector<EntityId>{0, 1}));
  EXPECT_EQ(groups[0].seed, 3u);
}

// With the outlier at 20.0 the pair's complete-linkage distance to it (10.0)
// is below the distance to the seed (10.5), so the outlier joins first.
TEST(HacTest, OutlierJoinsBeforeSeedContact) {
  const Space s({{10.0}, {10.5}, {20.0}, {0.0}});
  const std::vector<EntityId> related{0, 1, 2}, seeds{3};
  const auto groups = hac_with_seed_stop(3, related, seeds, s.centroids);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].members, (std::vector<EntityId>{0, 1, 2}));
}

TEST(HacTest, SeedNearerThanAnyPair) {
  // Related words on a circle of radius 1 around the seed, pairwise >= sqrt(3).
  const double r3 = std::sqrt(3.0) / 2;
  const Space s({{1, 0}, {-0.5, r3}, {-0.5, -r3}, {0, 0}});
  const std::vector<EntityId> related{0, 1, 2}, seeds{3};
  EXPECT_TRUE(hac_with_seed_stop(3, related, seeds, s.centroids).empty());
}

TEST(HacTest, TwoSeparatedPairs) {
  const Space s({{10, 0}, {10.2, 0}, {-10, 0}, {-10.2, 0}, {0, 0}});
  const std::vector<EntityId> related{0, 1, 2, 3}, seeds{4};
  const auto groups = hac_with_seed_stop(4, related, seeds, s.centroids);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].members, (std::vector<EntityId>{0, 1}));
  EXPECT_EQ(groups[1].members, (std::vector<EntityId>{2, 3}));
  EXPECT_EQ(groups[1].index, 1u);
}

TEST(HacTest, MissingCentroid) {
  const Space s(Points{{0.0}, {1.0}});
  const std::vector<EntityId> related{0, 7}, seeds{1};
  EXPECT_THROW(hac_with_seed_stop(1, related, seeds, s.centroids), NotFoundError);
}

TEST(HacTest, MatchesBruteForce) {
  Rng rng(fork_seed(5, "hac-oracle"));
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const bool integral = trial % 2 == 0;  // integer distances exercise ties
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        d[i][j] = d[j][i] = integral ? static_cast<double>(1 + rng.below(5)) : rng.uniform();
      }
    }
    std::vector<bool> seed(n);
    for (std::size_t i = 0; i < n; ++i) seed[i] = rng.below(3) == 0;
    const auto got = complete_linkage_seed_stop(d, seed);
    const auto want = brute_force_hac(d, seed);
    ASSERT_EQ(got.stopped_at_seed, want.stopped_at_seed) << "trial " << trial;
    ASSERT_EQ(got.merges.size(), want.merges.size()) << "trial " << trial;
    for (std::size_t m = 0; m < got.merges.size(); ++m) {
      EXPECT_EQ(got.merges[m].left, want.merges[m].left) << "trial " << trial;
      EXPECT_EQ(got.merges[m].right, want.merges[m].right) << "trial " << trial;
      EXPECT_EQ(got.merges[m].distance, want.merges[m].distance);
    }
    EXPECT_EQ(got.clusters, want.clusters) << "trial " << trial;
  }
}

TEST(HacTest, NeverReturnsSeeds) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Points pts(12, std::vector<double>(3));
    for (auto& p : pts) {
      for (auto& x : p) x = rng.uniform(-1, 1);
    }
    const Space s(pts);
    const std::vector<EntityId> related{0, 1, 2, 3, 4, 5, 6, 7, 8}, seeds{9, 10, 11};
    for (const auto& g : hac_with_seed_stop(9, related, seeds, s.centroids)) {
      EXPECT_GE(g.members.size(), 2u);
      for (auto e : g.members) EXPECT_LT(e, 9u);
    }
  }
}

// ---------------------------------------------------------------------------
// Geometry helpers.

TEST(GroupCenterTest, Mean) {
  const Space s({{1, 0}, {0, 1}, {4, 4}});
  EXPECT_EQ(group_center(std::vector<EntityId>{2}, s.table), (std::vector<double>{4, 4}));
  EXPECT_EQ(group_center(std::vector<EntityId>{0, 1}, s.table), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(group_center(std::vector<EntityId>{0, 1, 2}, s.table),
            group_center(std::vector<EntityId>{2, 0, 1}, s.table));
  EXPECT_THROW(group_center(std::vector<EntityId>{}, s.table), ConfigError);
  EXPECT_THROW(group_center(std::vector<EntityId>{9}, s.table), NotFoundError);
}

TEST(ParallelTranslateTest, Arithmetic) {
  const Space s({{0, 0}, {10, 0}});
  const std::vector<double> center{0, 5};
  EXPECT_EQ(parallel_translate(center, 0, 1, s.table), (std::vector<double>{10, 5}));
  EXPECT_EQ(parallel_translate(center, 1, 1, s.table), center);
  const auto there = parallel_translate(center, 1, 0, s.table);
  EXPECT_EQ(parallel_translate(there, 0, 1, s.table), center);
}

TEST(ExpandGroupTest, AppendsNewEntitiesOnly) {
  const std::vector<EntityId> g{4, 2};
  EXPECT_EQ(expand_group(g, nullptr), g);
  const GroupExpander none = [](std::span<const EntityId>) { return std::vector<EntityId>{}; };
  EXPECT_EQ(expand_group(g, none), g);
  const GroupExpander some = [](std::span<const EntityId>) {
    return std::vector<EntityId>{7, 2, 9, 7};
  };
  EXPECT_EQ(expand_group(g, some), (std::vector<EntityId>{4, 2, 7, 9}));
}

TEST(TryMergeTest, ParallelogramMerges) {
  const Space s(parallelogram(false));
  const auto d = merge_cities(s);
  EXPECT_TRUE(d.merged);
  EXPECT_EQ(d.overlap, 2u);
  EXPECT_DOUBLE_EQ(d.threshold, std::sqrt(2.0));
  EXPECT_EQ(d.pseudo_group.size(), 15u);
  for (auto e : d.pseudo_group) {
    EXPECT_NE(e, 0u);
    EXPECT_NE(e, 1u);
    EXPECT_NE(e, 2u);
    EXPECT_NE(e, 3u);
  }
}

TEST(TryMergeTest, MirroredDoesNotMerge) {
  const Space s(parallelogram(true));
  const auto d = merge_cities(s);
  EXPECT_FALSE(d.merged);
  EXPECT_EQ(d.overlap, 0u);
}

TEST(TryMergeTest, ScalingLeavesDecisionUnchanged) {
  for (bool mirrored : {false, true}) {
    const Space a(parallelogram(mirrored));
    const Space b(parallelogram(mirrored), 3.7);
    const auto da = merge_cities(a), db = merge_cities(b);
    EXPECT_EQ(da.merged, db.merged);
    EXPECT_EQ(da.pseudo_group, db.pseudo_group);
  }
}

// ---------------------------------------------------------------------------
// End to end.

// Ids: 0 germany, 1 australia, 2-3 german cities, 4-5 australian cities,
// then two unrelated entities pointing away from everything.
Points two_seed_world() {
  return {{0, 5}, {10, 5}, {-0.1, 6}, {0.1, 6}, {9.9, 6}, {10.1, 6}, {-3, -4}, {-4, -3}};
}

TEST(GenerateTest, ParallelGroupsFormOneSet) {
  const Space s(two_seed_world());
  AuxConfig cfg;
  cfg.related = 2;
  const std::vector<EntityId> target{0, 1};
  const auto aux = generate(target, {s.table, s.centroids}, cfg, nullptr);
  ASSERT_EQ(aux.sets.size(), 1u);
  EXPECT_EQ(aux.sets[0], (std::vector<EntityId>{2, 3, 4, 5}));
  const std::vector<std::pair<EntityId, std::size_t>> prov{{0, 0}, {1, 0}};
  EXPECT_EQ(aux.provenance[0], prov);
}

TEST(GenerateTest, NoGroupsNoSets) {
  const Space s(two_seed_world());
  AuxConfig cfg;
  cfg.related = 1;
  const std::vector<EntityId> target{0, 1};
  EXPECT_TRUE(generate(target, {s.table, s.centroids}, cfg, nullptr).empty());
}

TEST(GenerateTest, NeedsTwoTargets) {
  const Space s(two_seed_world());
  const std::vector<EntityId> target{0};
  EXPECT_THROW(generate(target, {s.table, s.centroids}, AuxConfig{}, nullptr), ConfigError);
}

Points random_points(Rng& rng, std::size_t n, std::size_t dim) {
  Points pts(n, std::vector<double>(dim));
  // A few clusters so that groups and merges actually happen.
  Points centers(4, std::vector<double>(dim));
  for (auto& c : centers) {
    for (auto& x : c) x = rng.uniform(-3, 3);
  }
  for (auto& p : pts) {
    const auto& c = centers[rng.below(centers.size())];
    for (std::size_t i = 0; i < dim; ++i) p[i] = c[i] + rng.uniform(-0.6, 0.6);
  }
  return pts;
}

TEST(GeneratePropertyTest, DisjointAndSymmetricMerging) {
  Rng rng(23);
  std::size_t nonempty = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Space s(random_points(rng, 40, 3));
    std::vector<EntityId> target{0, 1, 2, 3};
    AuxConfig cfg;
    cfg.related = 8;
    cfg.neighbors = 6;
    cfg.max_sets = 100;
    const auto aux = generate(target, {s.table, s.centroids}, cfg, nullptr);
    nonempty += aux.empty() ? 0 : 1;
    std::set<EntityId> seen(target.begin(), target.end());
    for (const auto& set : aux.sets) {
      EXPECT_GE(set.size(), 2u);
      for (auto e : set) EXPECT_TRUE(seen.insert(e).second) << "entity " << e << " repeated";
    }

    // Every successful try_merge, in either direction, ends in one set.
    std::vector<InitialGroup> groups;
    for (auto e : target) {
      std::vector<EntityId> related;
      for (const auto& r : related_terms(s.table, e, cfg.related, target, TermFilter::kEntities)) {
        related.push_back(*s.table.item_entity[r.item]);
      }
      for (auto& g : hac_with_seed_stop(e, related, target, s.centroids)) groups.push_back(g);
    }
    std::map<std::pair<EntityId, std::size_t>, std::size_t> set_of;
    for (std::size_t k = 0; k < aux.provenance.size(); ++k) {
      for (const auto& p : aux.provenance[k]) set_of[p] = k;
    }
    for (const auto& gi : groups) {
      for (const auto& gj : groups) {
        if (gi.seed == gj.seed) continue;
        const GroupProbe pi{gi.seed, gi.members, gi.members};
        const GroupProbe pj{gj.seed, gj.members, gj.members};
        if (!try_merge(pi, pj, target, s.table, cfg.neighbors).merged) continue;
        const auto a = set_of.find({gi.seed, gi.index});
        const auto b = set_of.find({gj.seed, gj.index});
        ASSERT_EQ(a == set_of.end(), b == set_of.end());
        if (a != set_of.end()) {
          EXPECT_EQ(a->second, b->second);
        }
      }
    }
  }
  EXPECT_GT(nonempty, 0u);
}

TEST(GeneratePropertyTest, CapKeepsLargestSets) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Space s(random_points(rng, 40, 3));
    const std::vector<EntityId> target{0, 1, 2, 3};
    AuxConfig cfg;
    cfg.related = 8;
    cfg.neighbors = 6;
    cfg.max_sets = 100;
    const auto all = generate(target, {s.table, s.centroids}, cfg, nullptr);
    cfg.max_sets = 1;
    const auto capped = generate(target, {s.table, s.centroids}, cfg, nullptr);
    ASSERT_LE(capped.sets.size(), 1u);
    if (!all.empty()) {
      ASSERT_EQ(capped.sets.size(), 1u);
      EXPECT_EQ(capped.sets[0], all.sets[0]);
      for (const auto& set : all.sets) EXPECT_LE(set.size(), all.sets[0].size());
    }
  }
}

TEST(GeneratePropertyTest, UniformScalingInvariant) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_points(rng, 40, 3);
    const Space a(pts), b(pts, 4.0);
    const std::vector<EntityId> target{0, 1, 2};
    AuxConfig cfg;
    cfg.related = 8;
    cfg.neighbors = 6;
    EXPECT_EQ(generate(target, {a.table, a.centroids}, cfg, nullptr),
              generate(target, {b.table, b.centroids}, cfg, nullptr));
  }
}

}  // namespace
}  // namespace coexpand
