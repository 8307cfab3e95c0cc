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

#include "coexpand/context_index.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "testkit.hpp"

namespace coexpand {
namespace {

using testkit::president_corpus;

using Tokens = std::vector<std::string>;

Corpus one_doc(const Tokens& tokens, std::vector<RawMention> mentions) {
  CorpusBuilder b;
  b.add("d", tokens, std::move(mentions));
  return std::move(b).finish();
}

Pattern tokens_of(const Corpus& c, const Tokens& words) {
  Pattern p;
  for (const auto& w : words) {
    if (w == "<B>") {
      p.push_back(kBoundaryToken);
    } else if (w == "*") {
      p.push_back(kWildcardToken);
    } else {
      p.push_back(*c.vocabulary.find(w));
    }
  }
  return p;
}

TEST(ExtractTest, WindowAroundMention) {
  const auto c = one_doc({"a", "b", "c", "E", "d", "e", "f"}, {{"E", 3, 4}});
  const auto g = extract_skipgrams(c, 3);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].pattern, tokens_of(c, {"a", "b", "c", "d", "e", "f"}));
}

TEST(ExtractTest, BoundaryFill) {
  const auto c = one_doc({"E", "d", "e", "f"}, {{"E", 0, 1}});
  const auto g = extract_skipgrams(c, 3);
  EXPECT_EQ(g[0].pattern, tokens_of(c, {"<B>", "<B>", "<B>", "d", "e", "f"}));
}

TEST(ExtractTest, MultiTokenSpanIsOneSlot) {
  const auto c = one_doc({"a", "b", "c", "d", "e"}, {{"c d", 2, 4}});
  const auto g = extract_skipgrams(c, 1);
  EXPECT_EQ(g[0].pattern, tokens_of(c, {"b", "e"}));
}

TEST(ExtractTest, OnePerMention) {
  CorpusBuilder b;
  b.add("x", Tokens{"A", "and", "B", "and", "C"}, {{"A", 0, 1}, {"B", 2, 3}, {"C", 4, 5}});
  b.add("y", Tokens{"no", "entities"}, {});
  b.add("z", Tokens{"A"}, {{"A", 0, 1}});
  const auto c = std::move(b).finish();
  EXPECT_EQ(extract_skipgrams(c, 2).size(), c.mention_count());
  EXPECT_THROW(extract_skipgrams(c, 0), ConfigError);
}

TEST(PmiTest, HandValues) {
  EXPECT_NEAR(pmi(0.001, 0.01, 0.1), 0.0, 1e-12);
  EXPECT_NEAR(pmi(0.2, 0.2, 0.2), -std::log(0.2), 1e-12);
  EXPECT_TRUE(std::isinf(pmi(0.1, 0.0, 0.5)));
}

TEST(PmiTest, SplitOutOfRange) {
  const Pattern l{1, 2};
  const std::vector<std::pair<Pattern, std::uint64_t>> counts{{l, 1}};
  const auto s = SkipGramStats::from_counts(1, counts);
  EXPECT_THROW(pmi_split(s, l, 0), ConfigError);
  EXPECT_THROW(pmi_split(s, l, 2), ConfigError);
}

// "hospital in __ has been": three breakdowns, and the valid halves are the
// right half of split 1, both halves of split 2, and the left half of split 3.
TEST(SplitTest, HospitalBreakdowns) {
  const std::size_t radius = 2;
  std::vector<std::string> valid;
  for (std::size_t k = 1; k < 2 * radius; ++k) {
    if (left_half_valid(k, radius)) valid.push_back("left" + std::to_string(k));
    if (right_half_valid(k, radius)) valid.push_back("right" + std::to_string(k));
  }
  EXPECT_EQ(valid, (std::vector<std::string>{"right1", "left2", "right2", "left3"}));

  const Pattern l{10, 11, 12, 13};
  EXPECT_EQ(left_half(l, 2), (Pattern{10, 11, kWildcardToken, kWildcardToken}));
  EXPECT_EQ(right_half(l, 2), (Pattern{kWildcardToken, kWildcardToken, 12, 13}));
  EXPECT_EQ(right_half(l, 1), (Pattern{kWildcardToken, 11, 12, 13}));
  EXPECT_EQ(left_half(l, 3), (Pattern{10, 11, 12, kWildcardToken}));
}

// Tokens: 10 hospital, 11 in, 12 has, 13 been.
TEST(FlexTest, HospitalKeepsSpecificHalf) {
  const Pattern l{10, 11, 12, 13};
  const std::vector<std::pair<Pattern, std::uint64_t>> counts{
      {l, 1}, {{10, 11, 20, 21}, 5}, {{30, 31, 12, 13}, 500}};
  const auto s = SkipGramStats::from_counts(2, counts);
  EXPECT_EQ(s.total(), 506u);
  EXPECT_EQ(s.count({10, 11, kWildcardToken, kWildcardToken}), 6u);
  EXPECT_EQ(s.count({kWildcardToken, kWildcardToken, 12, 13}), 501u);
  const auto d = flex_transform(s, l, 1.0, 100.0);
  EXPECT_TRUE(d.transformed);
  EXPECT_EQ(d.split, 2u);
  EXPECT_NEAR(d.pmi, std::log(506.0 / (6.0 * 501.0)), 1e-12);
  ASSERT_EQ(d.features.size(), 1u);
  EXPECT_EQ(d.features[0], (Pattern{10, 11, kWildcardToken, kWildcardToken}));

  // With a looser guard both halves survive.
  const auto both = flex_transform(s, l, 1.0, 1000.0);
  ASSERT_EQ(both.features.size(), 2u);
  EXPECT_EQ(both.features[1], (Pattern{kWildcardToken, kWildcardToken, 12, 13}));
}

// Tokens: 1 president, 2 and, 3 said, 4 unrelated left word.
TEST(FlexTest, OnlyPresidentSideSurvives) {
  const Pattern l{1, 2};
  const std::vector<std::pair<Pattern, std::uint64_t>> counts{
      {l, 2}, {{1, 3}, 3}, {{4, 2}, 300}};
  const auto s = SkipGramStats::from_counts(1, counts);
  const auto d = flex_transform(s, l, 1.0, 100.0);
  EXPECT_TRUE(d.transformed);
  ASSERT_EQ(d.features.size(), 1u);
  EXPECT_EQ(d.features[0], (Pattern{1, kWildcardToken}));
}

TEST(FlexTest, IsolatedPatternUnchanged) {
  const Pattern l{1, 2};
  const std::vector<std::pair<Pattern, std::uint64_t>> counts{{l, 1}, {{3, 4}, 100}};
  const auto s = SkipGramStats::from_counts(1, counts);
  const auto d = flex_transform(s, l, 1.0, 100.0);
  EXPECT_FALSE(d.transformed);
  EXPECT_GT(d.pmi, 1.0);
  EXPECT_EQ(d.features, std::vector<Pattern>{l});
}

TEST(FlexTest, IdempotentOnFlexgrams) {
  const Pattern l{1, 2};
  const std::vector<std::pair<Pattern, std::uint64_t>> counts{
      {l, 2}, {{1, 3}, 3}, {{4, 2}, 300}};
  const auto s = SkipGramStats::from_counts(1, counts);
  const auto first = flex_transform(s, l, 1.0, 1000.0);
  for (const auto& f : first.features) {
    const auto again = flex_transform(s, f, 1.0, 1000.0);
    EXPECT_FALSE(again.transformed);
    EXPECT_EQ(again.features, std::vector<Pattern>{f});
  }
}

TEST(AggregateTest, PresidentColumn) {
  for (std::size_t filler : {0, 40}) {
    const auto c = president_corpus(filler);
    IndexConfig cfg;
    cfg.radius = 1;
    const auto index = build_context_index(c, cfg);
    const auto f = index.matrix.features.find(tokens_of(c, {"president", "*"}));
    ASSERT_TRUE(f.has_value());
    EXPECT_EQ(index.matrix.count(*c.catalog.find("bill clinton"), *f), 75u);
    EXPECT_EQ(index.matrix.count(*c.catalog.find("hu jintao"), *f), 20u);
    EXPECT_EQ(index.matrix.count(*c.catalog.find("gorbachev"), *f), 7u);
  }
}

TEST(AggregateTest, UntransformedCellIsRawCount) {
  const std::vector<MentionFeatures> em{{0, {{1, 2}}}, {0, {{1, 2}}}, {1, {{3, 4}}}};
  const auto m = aggregate(em, 2);
  EXPECT_EQ(m.count(0, 0), 2u);
  EXPECT_EQ(m.count(1, 1), 1u);
  EXPECT_EQ(m.features.pattern(1), (Pattern{3, 4}));
  EXPECT_EQ(m.count(0, 1), 0u);
}

Corpus random_corpus(std::uint64_t seed) {
  Rng rng(seed);
  CorpusBuilder b;
  for (int d = 0; d < 60; ++d) {
    Tokens t;
    std::vector<RawMention> m;
    for (std::uint32_t i = 0; i < 10; ++i) {
      if (rng.below(3) == 0) {
        t.push_back("E" + std::to_string(rng.below(8)));
        m.push_back({t.back(), i, i + 1});
      } else {
        t.push_back("w" + std::to_string(rng.below(6)));
      }
    }
    b.add("d" + std::to_string(d), t, m);
  }
  return std::move(b).finish();
}

TEST(IndexPropertyTest, MassConservation) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = random_corpus(seed);
    for (bool flex : {false, true}) {
      IndexConfig cfg;
      cfg.radius = 1;
      cfg.flex = flex;
      const auto grams = extract_skipgrams(c, cfg.radius);
      const auto emitted = transform_mentions(grams, cfg);
      std::vector<std::uint64_t> expected(c.catalog.size(), 0);
      for (const auto& e : emitted) {
        EXPECT_GE(e.features.size(), 1u);
        EXPECT_LE(e.features.size(), 2u);
        if (!flex) {
          EXPECT_EQ(e.features.size(), 1u);
        }
        expected[e.entity] += e.features.size();
      }
      const auto index = build_context_index(c, cfg);
      for (EntityId e = 0; e < c.catalog.size(); ++e) {
        std::uint64_t mass = 0;
        for (const auto& [f, n] : index.matrix.rows[e]) mass += n;
        EXPECT_EQ(mass, expected[e]);
      }
    }
  }
}

TEST(IndexPropertyTest, WeightPositiveExactlyOnSupport) {
  const auto c = random_corpus(9);
  const auto index = build_context_index(c, IndexConfig{});
  for (EntityId e = 0; e < index.num_entities(); ++e) {
    const auto& counts = index.matrix.rows[e];
    const auto& weights = index.weights.rows[e];
    ASSERT_EQ(counts.size(), weights.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      EXPECT_EQ(counts[i].first, weights[i].first);
      EXPECT_GE(counts[i].second, 1u);
      EXPECT_GT(weights[i].second, 0.0);
      EXPECT_TRUE(std::isfinite(weights[i].second));
    }
  }
}

CooccurrenceMatrix single_cell_matrix(std::size_t n) {
  CooccurrenceMatrix m;
  m.features.intern({1, 2});
  m.features.intern({3, 4});
  m.rows.resize(n);
  m.rows[0] = {{0, 1}};
  m.rows[1] = {{1, 3}};
  m.rows[2] = {{1, 1}};
  return m;
}

TEST(TfidfTest, HandValue) {
  const auto w = tfidf(single_cell_matrix(10));
  EXPECT_NEAR(w.weight(0, 0), std::log(10.0), 1e-12);
  EXPECT_EQ(w.weight(0, 1), 0.0);
  EXPECT_NEAR(w.weight(1, 1), std::log(4.0) * std::log(10.0) / std::log(5.0), 1e-12);
}

TEST(TfidfTest, ScalesWithEntityCount) {
  const auto small = tfidf(single_cell_matrix(10));
  const auto large = tfidf(single_cell_matrix(20));
  const double factor = std::log(20.0) / std::log(10.0);
  EXPECT_NEAR(large.weight(0, 0), small.weight(0, 0) * factor, 1e-12);
  EXPECT_NEAR(large.weight(1, 1), small.weight(1, 1) * factor, 1e-12);
}

TEST(TfidfTest, Degenerate) {
  EXPECT_TRUE(tfidf(CooccurrenceMatrix{}).rows.empty());
  CooccurrenceMatrix one;
  one.rows.resize(1);
  EXPECT_THROW(tfidf(one), ConfigError);
}

TEST(IndexFileTest, RoundTrip) {
  const auto c = random_corpus(3);
  const auto index = build_context_index(c, IndexConfig{});
  std::stringstream first;
  write_index(index, first);
  const auto loaded = read_index(first);
  EXPECT_EQ(loaded.matrix.rows, index.matrix.rows);
  EXPECT_EQ(loaded.weights.rows, index.weights.rows);
  EXPECT_EQ(loaded.config.radius, index.config.radius);
  std::stringstream second;
  write_index(loaded, second);
  EXPECT_EQ(first.str(), second.str());
}

TEST(IndexFileTest, Rejects) {
  std::istringstream wrong("something 1\n");
  EXPECT_THROW(read_index(wrong), ParseError);
  std::istringstream version("coexpand-index 9\n");
  EXPECT_THROW(read_index(version), ParseError);
  std::istringstream truncated("coexpand-index 1\nradius 1\n");
  EXPECT_THROW(read_index(truncated), ParseError);
}

}  // namespace
}  // namespace coexpand
