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

// Annotated corpus: documents, token vocabulary and the entity catalog.
//
// Input is one JSON document record per line:
//
//   {"doc_id": "d1", "tokens": ["a", "b", "c"],
//    "mentions": [{"entity": "e1", "start": 1, "end": 2}]}
//
// Mention spans are half-open token ranges. Token and entity ids are dense
// and assigned in first-seen order during a single pass over the file.

#ifndef COEXPAND_CORPUS_HPP_
#define COEXPAND_CORPUS_HPP_

#include <algorithm>
#include <fstream>
#include <optional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "coexpand/common.hpp"

namespace coexpand {

struct Mention {
  EntityId entity = 0;
  std::uint32_t start = 0;
  std::uint32_t end = 0;  // exclusive

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Document {
  std::string doc_id;
  std::vector<TokenId> tokens;
  std::vector<Mention> mentions;  // sorted by start, non-overlapping
};

class Vocabulary {
 public:
  TokenId intern(std::string_view token) {
    auto it = ids_.find(std::string(token));
    if (it != ids_.end()) {
      ++frequency_[static_cast<std::size_t>(it->second)];
      return it->second;
    }
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.emplace_back(token);
    frequency_.push_back(1);
    ids_.emplace(tokens_.back(), id);
    return id;
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  const std::string& token(TokenId id) const {
    return tokens_.at(static_cast<std::size_t>(id));
  }
  std::uint64_t frequency(TokenId id) const {
    return frequency_.at(static_cast<std::size_t>(id));
  }
  std::optional<TokenId> find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequency_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct Occurrence {
  std::uint32_t doc = 0;  // index into Corpus::documents
  std::uint32_t start = 0;
  std::uint32_t end = 0;

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

class EntityCatalog {
 public:
  EntityId intern(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<EntityId>(names_.size());
    names_.emplace_back(name);
    occurrences_.emplace_back();
    ids_.emplace(names_.back(), id);
    return id;
  }

  void add_occurrence(EntityId entity, Occurrence occurrence) {
    occurrences_.at(entity).push_back(occurrence);
    ++total_;
  }

  std::size_t size() const { return names_.size(); }
  bool contains(EntityId id) const { return id < names_.size(); }
  const std::string& name(EntityId id) const { return names_.at(id); }
  std::optional<EntityId> find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  std::span<const Occurrence> occurrences(EntityId id) const {
    return occurrences_.at(id);
  }
  std::size_t total_occurrences() const { return total_; }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<Occurrence>> occurrences_;
  std::unordered_map<std::string, EntityId> ids_;
  std::size_t total_ = 0;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  EntityCatalog catalog;

  std::size_t mention_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.mentions.size();
    return n;
  }
};

// Mention given by entity string, before id assignment.
struct RawMention {
  std::string entity;
  std::uint32_t start = 0;
  std::uint32_t end = 0;
};

// Appends documents to a corpus, validating spans and maintaining the
// vocabulary and catalog incrementally.
class CorpusBuilder {
 public:
  void add(std::string doc_id, std::span<const std::string> tokens,
           std::vector<RawMention> mentions) {
    std::stable_sort(mentions.begin(), mentions.end(),
                     [](const RawMention& a, const RawMention& b) {
                       return a.start < b.start;
                     });
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      const auto& m = mentions[i];
      if (m.start >= m.end) {
        throw DataError("document '" + doc_id + "': empty mention span [" +
                        std::to_string(m.start) + ", " +
                        std::to_string(m.end) + ")");
      }
      if (m.end > tokens.size()) {
        throw DataError("document '" + doc_id + "': mention end " +
                        std::to_string(m.end) + " exceeds token count " +
                        std::to_string(tokens.size()));
      }
      if (m.entity.empty()) {
        throw DataError("document '" + doc_id + "': empty entity name");
      }
      if (i > 0 && mentions[i - 1].end > m.start) {
        throw DataError("document '" + doc_id + "': overlapping mentions at " +
                        std::to_string(m.start));
      }
    }

    Document doc;
    doc.doc_id = std::move(doc_id);
    doc.tokens.reserve(tokens.size());
    for (const auto& t : tokens) doc.tokens.push_back(corpus_.vocabulary.intern(t));
    const auto doc_index = static_cast<std::uint32_t>(corpus_.documents.size());
    for (const auto& m : mentions) {
      const EntityId id = corpus_.catalog.intern(m.entity);
      corpus_.catalog.add_occurrence(id, {doc_index, m.start, m.end});
      doc.mentions.push_back({id, m.start, m.end});
    }
    corpus_.documents.push_back(std::move(doc));
  }

  Corpus finish() && { return std::move(corpus_); }

 private:
  Corpus corpus_;
};

namespace detail {

inline void parse_document_line(CorpusBuilder& builder, std::string_view line,
                                std::size_t line_no) {
  using nlohmann::json;
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) throw ParseError(line_no, "record is not an object");
  const auto doc_id = record.find("doc_id");
  const auto tokens = record.find("tokens");
  const auto mentions = record.find("mentions");
  if (doc_id == record.end() || !doc_id->is_string()) {
    throw ParseError(line_no, "missing string field 'doc_id'");
  }
  if (tokens == record.end() || !tokens->is_array()) {
    throw ParseError(line_no, "missing array field 'tokens'");
  }
  if (mentions == record.end() || !mentions->is_array()) {
    throw ParseError(line_no, "missing array field 'mentions'");
  }
  std::vector<std::string> token_strings;
  token_strings.reserve(tokens->size());
  for (const auto& t : *tokens) {
    if (!t.is_string()) throw ParseError(line_no, "token is not a string");
    token_strings.push_back(t.get<std::string>());
  }
  std::vector<RawMention> raw;
  for (const auto& m : *mentions) {
    if (!m.is_object() || !m.contains("entity") || !m["entity"].is_string() ||
        !m.contains("start") || !m["start"].is_number_unsigned() ||
        !m.contains("end") || !m["end"].is_number_unsigned()) {
      throw ParseError(line_no,
                       "mention needs string 'entity' and non-negative "
                       "integer 'start'/'end'");
    }
    raw.push_back({m["entity"].get<std::string>(), m["start"].get<std::uint32_t>(),
                   m["end"].get<std::uint32_t>()});
  }
  builder.add(doc_id->get<std::string>(), token_strings, std::move(raw));
}

}  // namespace detail

// Reads line-delimited document records. Blank lines and lines starting with
// '#' are skipped.
inline Corpus read_corpus(std::istream& in) {
  CorpusBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') continue;
    try {
      detail::parse_document_line(builder, line, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return std::move(builder).finish();
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return read_corpus(in);
}

// Canonical form: one record per line in load order with fields in the
// documented order. Reloading yields identical ids.
inline void write_corpus(const Corpus& corpus, std::ostream& out) {
  using nlohmann::ordered_json;
  for (const auto& doc : corpus.documents) {
    ordered_json record;
    record["doc_id"] = doc.doc_id;
    auto tokens = ordered_json::array();
    for (TokenId t : doc.tokens) tokens.push_back(corpus.vocabulary.token(t));
    record["tokens"] = std::move(tokens);
    auto mentions = ordered_json::array();
    for (const auto& m : doc.mentions) {
      ordered_json jm;
      jm["entity"] = corpus.catalog.name(m.entity);
      jm["start"] = m.start;
      jm["end"] = m.end;
      mentions.push_back(std::move(jm));
    }
    record["mentions"] = std::move(mentions);
    out << record.dump() << '\n';
  }
}

inline std::span<const Occurrence> entity_occurrences(
    const EntityCatalog& catalog, EntityId entity) {
  if (!catalog.contains(entity)) {
    throw NotFoundError("unknown entity id " + std::to_string(entity));
  }
  return catalog.occurrences(entity);
}

// Resolves entity strings, reporting every unknown name at once.
inline std::vector<EntityId> resolve_entities(
    const EntityCatalog& catalog, std::span<const std::string> names) {
  std::vector<EntityId> ids;
  std::string missing;
  for (const auto& n : names) {
    if (auto id = catalog.find(n)) {
      ids.push_back(*id);
    } else {
      if (!missing.empty()) missing += ", ";
      missing += "'" + n + "'";
    }
  }
  if (!missing.empty()) throw NotFoundError("unknown entities: " + missing);
  return ids;
}

}  // namespace coexpand

#endif  // COEXPAND_CORPUS_HPP_
