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

// Writes the planted three-class corpus with its query and ground truth:
//
//   make_fixture --out-dir fixture/
//     fixture/corpus.jsonl  fixture/queries.jsonl  fixture/truth.jsonl

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "coexpand/testing/planted_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the planted-structure fixture"};
  std::string out_dir;
  coexpand::testing::PlantedConfig cfg;
  app.add_option("--out-dir", out_dir)->required();
  app.add_option("--documents", cfg.documents);
  app.add_option("--seeds", cfg.num_seeds);
  app.add_option("--held-out-templates", cfg.held_out_templates);
  app.add_option("--seed", cfg.seed);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto pc = coexpand::testing::make_planted_corpus(cfg);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::ofstream corpus(dir / "corpus.jsonl", std::ios::binary);
    std::ofstream queries(dir / "queries.jsonl", std::ios::binary);
    std::ofstream truth(dir / "truth.jsonl", std::ios::binary);
    pc.write_documents(corpus);
    pc.write_query(queries, cfg.num_seeds);
    pc.write_truth(truth);
    if (!corpus || !queries || !truth) throw coexpand::DataError("cannot write fixture files");
    std::cout << pc.documents.size() << " documents written to " << out_dir << '\n';
  } catch (const coexpand::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  }
  return 0;
}
