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

// Command line pipeline:
//
//   coexpand preprocess  --corpus docs.jsonl --out corpus.bundle
//   coexpand train-embed --bundle corpus.bundle --out vectors.txt
//   coexpand index       --bundle corpus.bundle --out context.index
//   coexpand expand      --bundle corpus.bundle --index context.index
//                        --embeddings vectors.txt --queries queries.jsonl
//                        --out-dir runs/
//   coexpand eval        --rankings runs/ --queries queries.jsonl
//                        --truth truth.jsonl --out report
//
// Settings resolve as built-in defaults, then --config file, then flags.
// Exit codes: 0 ok, 1 usage or configuration, 2 data, 3 internal.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "coexpand/coexpand.hpp"

namespace fs = std::filesystem;
using namespace coexpand;

namespace {

constexpr std::string_view kBundleHeader = "# coexpand-bundle 1";

struct Settings {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  Config resolve() const {
    Config c;
    if (!config_path.empty()) load_config(config_path, c);
    for (const auto& [k, v] : overrides) set_config_value(c, k, v);
    c.propagate();
    c.validate();
    return c;
  }
};

// Registers `--flag VALUE` as an override of config key `key`.
void key_option(CLI::App* app, Settings& s, const std::string& flag, const std::string& key,
                const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&s, key](const std::string& v) { s.overrides.emplace_back(key, v); }, help);
}

void key_flag(CLI::App* app, Settings& s, const std::string& flag, const std::string& key,
              const std::string& value, const std::string& help) {
  app->add_flag_callback(flag, [&s, key, value] { s.overrides.emplace_back(key, value); }, help);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void echo_config(const Config& c, const fs::path& path) {
  auto out = open_output(path);
  write_config(c, out);
}

fs::path sibling(const fs::path& output, const std::string& suffix) {
  return fs::path(output.string() + suffix);
}

Corpus load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open bundle '" + path + "'");
  std::string first;
  std::getline(in, first);
  if (first != kBundleHeader) throw DataError("'" + path + "' is not a corpus bundle");
  in.seekg(0);
  return read_corpus(in);
}

void write_bundle(const Corpus& corpus, const fs::path& path) {
  auto out = open_output(path);
  out << kBundleHeader << '\n';
  write_corpus(corpus, out);
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const Settings& s, const std::string& corpus_path, const std::string& out) {
  const auto config = s.resolve();
  const auto corpus = load_corpus(corpus_path);
  write_bundle(corpus, out);
  echo_config(config, sibling(out, ".config"));
  std::cout << "documents " << corpus.documents.size() << '\n'
            << "vocabulary " << corpus.vocabulary.size() << '\n'
            << "entities " << corpus.catalog.size() << '\n'
            << "mentions " << corpus.mention_count() << '\n';
  return 0;
}

int cmd_train_embed(const Settings& s, const std::string& bundle, const std::string& out) {
  const auto config = s.resolve();
  if (config.threads > 1) {
    std::cerr << "warning: embedding training is single-threaded; threads = "
              << config.threads << " is ignored here\n";
  }
  const auto corpus = load_bundle(bundle);
  const auto table = train_joint(corpus, config.train);
  auto f = open_output(out);
  write_embeddings(table, f);
  echo_config(config, sibling(out, ".config"));
  std::cout << "items " << table.size() << '\n' << "dim " << table.dim << '\n';
  return 0;
}

int cmd_index(const Settings& s, const std::string& bundle, const std::string& out) {
  const auto config = s.resolve();
  const auto corpus = load_bundle(bundle);
  if (corpus.mention_count() == 0) std::cerr << "warning: corpus has no entity mentions\n";
  const auto index = build_context_index(corpus, config.index);
  auto f = open_output(out);
  write_index(index, f);
  echo_config(config, sibling(out, ".config"));
  std::cout << "entities " << index.num_entities() << '\n'
            << "features " << index.num_features() << '\n';
  return 0;
}

nlohmann::ordered_json admission_json(const Admission& a, const EntityCatalog& catalog) {
  nlohmann::ordered_json j;
  j["entity"] = catalog.name(a.entity);
  j["mrr"] = a.mrr;
  j["r_sg"] = a.r_sg;
  j["r_emb"] = a.r_emb;
  return j;
}

void write_run(const fs::path& dir, const Query& q, const ExpansionResult& result,
               const EntityCatalog& catalog) {
  {
    auto out = open_output(dir / (q.id + ".ranking.tsv"));
    out << "# rank\tentity\tscore\titeration\n";
    for (std::size_t i = 0; i < result.admitted.size(); ++i) {
      const auto& a = result.admitted[i];
      out << i + 1 << '\t' << catalog.name(a.entity) << '\t' << format_double(a.mrr) << '\t'
          << a.iteration << '\n';
    }
  }
  auto trace = open_output(dir / (q.id + ".trace.jsonl"));
  auto aux = open_output(dir / (q.id + ".aux.jsonl"));
  for (const auto& it : result.trace) {
    for (const auto& step : it.steps) {
      nlohmann::ordered_json j;
      j["iteration"] = it.iteration;
      j["set_index"] = step.set_index;
      j["num_features"] = it.num_features;
      j["pool_size"] = it.pool_size;
      auto admitted = nlohmann::ordered_json::array();
      for (const auto& a : step.admitted) admitted.push_back(admission_json(a, catalog));
      j["admitted"] = std::move(admitted);
      trace << j.dump() << '\n';
    }
    if (it.steps.empty()) {
      nlohmann::ordered_json j;
      j["iteration"] = it.iteration;
      j["num_features"] = it.num_features;
      j["pool_size"] = it.pool_size;
      j["stopped"] = true;
      trace << j.dump() << '\n';
    }
    for (std::size_t k = 0; k < it.auxiliary.sets.size(); ++k) {
      nlohmann::ordered_json j;
      j["iteration"] = it.iteration;
      j["set_index"] = k + 1;
      auto members = nlohmann::ordered_json::array();
      for (EntityId e : it.auxiliary.sets[k]) members.push_back(catalog.name(e));
      j["members"] = std::move(members);
      auto prov = nlohmann::ordered_json::array();
      if (k < it.auxiliary.provenance.size()) {
        for (const auto& [seed, group] : it.auxiliary.provenance[k]) {
          prov.push_back({{"seed", catalog.name(seed)}, {"group", group}});
        }
      }
      j["provenance"] = std::move(prov);
      aux << j.dump() << '\n';
    }
  }
}

int cmd_expand(const Settings& s, const std::string& bundle, const std::string& index_path,
               const std::string& embeddings, const std::string& queries_path,
               const std::string& out_dir, const std::string& centroid_path, bool no_flex) {
  const auto config = s.resolve();
  const auto corpus = load_bundle(bundle);
  auto index = load_index(index_path);
  if (index.num_entities() != corpus.catalog.size()) {
    throw DataError("index and bundle disagree on the entity count");
  }
  if (no_flex && index.config.flex) {
    IndexConfig raw = index.config;
    raw.flex = false;
    index = build_context_index(corpus, raw);
  }
  const auto table = load_embeddings(embeddings, corpus.catalog);
  const auto centroids = centroid_path.empty()
                             ? CentroidProvider::from_table(table, corpus.catalog)
                             : CentroidProvider::load(centroid_path, corpus.catalog);
  const auto queries = load_queries(queries_path);

  const ExpansionContext ctx{corpus.catalog, index.weights, table, centroids};
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (const auto& q : queries) {
    const auto seeds = resolve_entities(corpus.catalog, q.seeds);
    const auto result = co_expand(seeds, ctx, config.expand);
    write_run(dir, q, result, corpus.catalog);
    std::cout << q.id << '\t' << result.admitted.size() << " admitted in "
              << result.trace.size() << " iterations\n";
  }
  auto echoed = config;
  echoed.index.flex = index.config.flex;
  echo_config(echoed, dir / "expand.config");
  return 0;
}

std::vector<std::string> read_ranking(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ranking '" + path.string() + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string rank, entity;
    if (!std::getline(fields, rank, '\t') || !std::getline(fields, entity, '\t')) {
      throw ParseError(line_no, "ranking line needs rank and entity columns");
    }
    out.push_back(entity);
  }
  return out;
}

std::vector<std::size_t> parse_cutoffs(const std::string& list) {
  std::vector<std::size_t> out;
  std::istringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(parse_integer<std::size_t>(item));
    } catch (const DataError&) {
      throw ConfigError("bad cutoff '" + item + "'");
    }
    if (out.back() < 1) throw ConfigError("cutoffs must be >= 1");
  }
  if (out.empty()) throw ConfigError("empty cutoff list");
  return out;
}

int cmd_eval(const Settings& s, const std::string& rankings_dir, const std::string& queries_path,
             const std::string& truth_path, const std::string& cutoffs, const std::string& out) {
  const auto config = s.resolve();
  const fs::path dir(rankings_dir);
  if (!fs::is_directory(dir)) throw DataError("'" + rankings_dir + "' is not a directory");
  std::map<std::string, std::vector<std::string>> rankings;
  const std::string suffix = ".ranking.tsv";
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      rankings[name.substr(0, name.size() - suffix.size())] = read_ranking(entry.path());
    }
  }
  if (rankings.empty()) throw DataError("no ranking files in '" + rankings_dir + "'");
  const auto queries = load_queries(queries_path);
  const auto truth = load_ground_truth(truth_path);
  const auto report = evaluate(queries, rankings, truth, parse_cutoffs(cutoffs), config.recall_base);
  write_report_text(report, std::cout);
  if (!out.empty()) {
    {
      auto f = open_output(sibling(out, ".txt"));
      write_report_text(report, f);
    }
    auto f = open_output(sibling(out, ".json"));
    write_report_json(report, f);
    echo_config(config, sibling(out, ".config"));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity set co-expansion with auxiliary sets"};
  app.require_subcommand(1);
  Settings settings;
  app.add_option("--config", settings.config_path, "Flat key = value config file")
      ->check(CLI::ExistingFile);
  key_option(&app, settings, "--seed", "seed", "Root random seed");
  key_option(&app, settings, "--threads", "threads", "Threads for candidate scoring");

  std::string corpus_path, bundle, out, index_path, embeddings, queries, out_dir, centroids;
  std::string rankings, truth, cutoffs = "10,20,50";
  bool no_flex = false;

  auto* pre = app.add_subcommand("preprocess", "Validate a corpus and write a bundle");
  pre->add_option("--corpus", corpus_path, "Line-delimited JSON documents")->required();
  pre->add_option("--out", out, "Bundle path")->required();

  auto* train = app.add_subcommand("train-embed", "Train joint word/entity embeddings");
  train->add_option("--bundle", bundle)->required();
  train->add_option("--out", out, "Embedding file")->required();
  key_option(train, settings, "--lambda", "lambda", "Weight of the document term");
  key_option(train, settings, "--dim", "dim", "Vector dimension");
  key_option(train, settings, "--window", "window", "Context window h");
  key_option(train, settings, "--negatives", "negatives", "Negative samples");
  key_option(train, settings, "--epochs", "epochs", "Passes over the corpus");
  key_option(train, settings, "--lr", "learning_rate", "Initial learning rate");
  key_option(train, settings, "--min-count", "min_count", "Minimum word frequency");

  auto* index = app.add_subcommand("index", "Build the context feature index");
  index->add_option("--bundle", bundle)->required();
  index->add_option("--out", out, "Index file")->required();
  key_option(index, settings, "--gamma", "gamma", "PMI threshold");
  key_option(index, settings, "--k-gen", "k_gen", "Generality ratio bound");
  key_option(index, settings, "--radius", "radius", "Skip-gram radius W");
  key_flag(index, settings, "--no-flex", "flex", "false", "Keep raw skip-grams");

  auto* expand = app.add_subcommand("expand", "Expand every query");
  expand->add_option("--bundle", bundle)->required();
  expand->add_option("--index", index_path)->required();
  expand->add_option("--embeddings", embeddings)->required();
  expand->add_option("--queries", queries)->required();
  expand->add_option("--out-dir", out_dir)->required();
  expand->add_option("--centroids", centroids, "External per-entity centroid vectors");
  expand->add_flag("--no-flex", no_flex, "Use raw skip-grams");
  key_flag(expand, settings, "--no-aux", "no_aux", "true", "Single-set expansion");
  key_flag(expand, settings, "--freeze-aux", "freeze_aux", "true",
           "Generate auxiliary sets once");
  key_option(expand, settings, "--t", "t", "Entities admitted per set per iteration");
  key_option(expand, settings, "--T", "T", "Maximum iterations");
  key_option(expand, settings, "--Q", "Q", "Feature pool size");
  key_option(expand, settings, "--k-related", "k_related", "Related entities per seed");
  key_option(expand, settings, "--nn", "nn", "Pseudo-group size");

  auto* eval = app.add_subcommand("eval", "Score rankings against ground truth");
  eval->add_option("--rankings", rankings, "Directory of <id>.ranking.tsv")->required();
  eval->add_option("--queries", queries)->required();
  eval->add_option("--truth", truth)->required();
  eval->add_option("--k", cutoffs, "Comma-separated cutoffs");
  eval->add_option("--out", out, "Report prefix (.txt, .json)");
  key_option(eval, settings, "--recall-base", "recall_base", "truth or capped");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*pre) return cmd_preprocess(settings, corpus_path, out);
    if (*train) return cmd_train_embed(settings, bundle, out);
    if (*index) return cmd_index(settings, bundle, out);
    if (*expand) {
      return cmd_expand(settings, bundle, index_path, embeddings, queries, out_dir, centroids,
                        no_flex);
    }
    if (*eval) return cmd_eval(settings, rankings, queries, truth, cutoffs, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kInvariant);
  }
  return 1;
}
