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

#include "coexpand/corpus.hpp"

#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace coexpand {
namespace {

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_corpus(in);
}

TEST(CorpusTest, MinimalDocument) {
  const auto c = parse(
      R"({"doc_id":"d1","tokens":["a","b","c"],"mentions":[{"entity":"e1","start":1,"end":2}]})"
      "\n");
  ASSERT_EQ(c.documents.size(), 1u);
  EXPECT_EQ(c.vocabulary.size(), 3u);
  EXPECT_EQ(c.catalog.size(), 1u);
  const auto occ = entity_occurrences(c.catalog, 0);
  ASSERT_EQ(occ.size(), 1u);
  EXPECT_EQ(occ[0], (Occurrence{0, 1, 2}));
  EXPECT_EQ(c.catalog.name(0), "e1");
}

TEST(CorpusTest, EmptyInputIsValid) {
  const auto c = parse("");
  EXPECT_TRUE(c.documents.empty());
  EXPECT_TRUE(c.vocabulary.empty());
  EXPECT_EQ(c.catalog.size(), 0u);
}

TEST(CorpusTest, BlankAndCommentLinesSkipped) {
  const auto c = parse("\n# header\n{\"doc_id\":\"d\",\"tokens\":[\"x\"],\"mentions\":[]}\n\n");
  EXPECT_EQ(c.documents.size(), 1u);
}

TEST(CorpusTest, MentionPastEndNamesDocument) {
  try {
    parse(R"({"doc_id":"doc-7","tokens":["a"],"mentions":[{"entity":"e","start":0,"end":2}]})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("doc-7"), std::string::npos);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(CorpusTest, OverlapNamesDocument) {
  try {
    parse(R"({"doc_id":"ov","tokens":["a","b","c"],"mentions":[)"
          R"({"entity":"e","start":0,"end":2},{"entity":"f","start":1,"end":3}]})");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'ov'"), std::string::npos);
  }
}

TEST(CorpusTest, EmptySpanRejected) {
  EXPECT_THROW(
      parse(R"({"doc_id":"d","tokens":["a"],"mentions":[{"entity":"e","start":0,"end":0}]})"),
      DataError);
}

TEST(CorpusTest, MalformedLineCarriesLineNumber) {
  try {
    parse("{\"doc_id\":\"d\",\"tokens\":[],\"mentions\":[]}\n{not json\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse(R"({"doc_id":"d","tokens":[1],"mentions":[]})"), ParseError);
  EXPECT_THROW(parse(R"({"tokens":[],"mentions":[]})"), ParseError);
  EXPECT_THROW(parse(R"({"doc_id":"d","tokens":["a"],"mentions":[{"entity":"e","start":-1,"end":1}]})"),
               ParseError);
}

TEST(CorpusTest, MentionsSortedByStart) {
  const auto c = parse(R"({"doc_id":"d","tokens":["a","b","c"],"mentions":[)"
                       R"({"entity":"y","start":2,"end":3},{"entity":"x","start":0,"end":1}]})");
  ASSERT_EQ(c.documents[0].mentions.size(), 2u);
  EXPECT_EQ(c.documents[0].mentions[0].start, 0u);
  EXPECT_EQ(c.documents[0].mentions[1].start, 2u);
}

TEST(CorpusTest, OccurrencesInCorpusOrder) {
  const auto c = parse(
      R"({"doc_id":"d0","tokens":["e","x","e"],"mentions":[{"entity":"E","start":0,"end":1},{"entity":"E","start":2,"end":3}]})"
      "\n"
      R"({"doc_id":"d1","tokens":["q"],"mentions":[]})"
      "\n"
      R"({"doc_id":"d2","tokens":["x","e"],"mentions":[{"entity":"E","start":1,"end":2}]})"
      "\n");
  const auto occ = entity_occurrences(c.catalog, 0);
  ASSERT_EQ(occ.size(), 3u);
  EXPECT_EQ(occ[0], (Occurrence{0, 0, 1}));
  EXPECT_EQ(occ[1], (Occurrence{0, 2, 3}));
  EXPECT_EQ(occ[2], (Occurrence{2, 1, 2}));
  EXPECT_EQ(c.catalog.total_occurrences(), c.mention_count());
  EXPECT_THROW(entity_occurrences(c.catalog, 1), NotFoundError);
}

TEST(CorpusTest, MultiTokenMention) {
  const auto c = parse(
      R"({"doc_id":"d","tokens":["in","new","york","city"],"mentions":[{"entity":"new york","start":1,"end":3}]})");
  EXPECT_EQ(c.catalog.find("new york"), std::optional<EntityId>(0));
  EXPECT_EQ(c.vocabulary.frequency(*c.vocabulary.find("new")), 1u);
}

TEST(CorpusTest, RoundTripKeepsIds) {
  std::string text;
  for (int d = 0; d < 20; ++d) {
    text += "{\"doc_id\":\"d" + std::to_string(d) + "\",\"tokens\":[";
    for (int t = 0; t < 6; ++t) {
      text += std::string(t ? "," : "") + "\"w" + std::to_string((d * 7 + t * 3) % 11) + "\"";
    }
    text += "],\"mentions\":[{\"entity\":\"E" + std::to_string(d % 4) +
            "\",\"start\":1,\"end\":2},{\"entity\":\"E" + std::to_string((d + 1) % 5) +
            "\",\"start\":3,\"end\":5}]}\n";
  }
  const auto a = parse(text);
  std::ostringstream out;
  write_corpus(a, out);
  const auto b = parse(out.str());
  ASSERT_EQ(a.vocabulary.size(), b.vocabulary.size());
  for (std::size_t t = 0; t < a.vocabulary.size(); ++t) {
    const auto id = static_cast<TokenId>(t);
    EXPECT_EQ(a.vocabulary.token(id), b.vocabulary.token(id));
    EXPECT_EQ(a.vocabulary.frequency(id), b.vocabulary.frequency(id));
  }
  ASSERT_EQ(a.catalog.size(), b.catalog.size());
  std::size_t total = 0;
  for (EntityId e = 0; e < a.catalog.size(); ++e) {
    EXPECT_EQ(a.catalog.name(e), b.catalog.name(e));
    const auto oa = a.catalog.occurrences(e);
    const auto ob = b.catalog.occurrences(e);
    EXPECT_TRUE(std::equal(oa.begin(), oa.end(), ob.begin(), ob.end()));
    total += oa.size();
  }
  EXPECT_EQ(total, a.mention_count());
  std::ostringstream again;
  write_corpus(b, again);
  EXPECT_EQ(out.str(), again.str());
}

TEST(CorpusTest, ResolveListsEveryUnknownName) {
  const auto c = parse(R"({"doc_id":"d","tokens":["a","b"],"mentions":[{"entity":"A","start":0,"end":1}]})");
  const std::vector<std::string> ok{"A"};
  EXPECT_EQ(resolve_entities(c.catalog, ok), std::vector<EntityId>{0});
  const std::vector<std::string> bad{"A", "zz", "yy"};
  try {
    resolve_entities(c.catalog, bad);
    FAIL();
  } catch (const NotFoundError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("'zz'"), std::string::npos);
    EXPECT_NE(what.find("'yy'"), std::string::npos);
  }
}

}  // namespace
}  // namespace coexpand
