// Writes a weight bundle, random prompts and the corresponding decoder
// outputs for the cross-language parity check, or re-exports a bundle.
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "oracles.hpp"
#include "reachzono/surrogate.hpp"

using namespace reachzono;
namespace fs = std::filesystem;

namespace {

int write_fixture(const fs::path& dir) {
  const TokenizerConfig cfg{2, 8, 9.0, 5};
  const WeightBundle wb = random_weight_bundle(Architecture::for_tokenizer(cfg), 21);
  wb.save(dir / "bundle");
  const Transformer model(wb);
  std::mt19937_64 rng(22);
  json cases = json::array();
  for (int i = 0; i < 100; ++i) {
    std::vector<Zonotope> ctx;
    std::vector<int> steps;
    for (int k = 0; k < cfg.n_o; ++k) {
      ctx.push_back(oracle::random_zonotope(rng, 2, 1 + static_cast<Index>(rng() % 8), 2.0));
      steps.push_back(i % 5 + k);
    }
    const TokenSequence seq = tokenize(ctx, steps, cfg);
    cases.push_back({{"tokens", matrix_to_json(seq.tokens)},
                     {"outputs", matrix_to_json(model.forward_embedded(model.embed(seq)))}});
  }
  write_json(dir / "cases.json", {{"cases", cases}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    if (argc == 3 && std::string(argv[1]) == "write") return write_fixture(argv[2]);
    if (argc == 4 && std::string(argv[1]) == "reexport") {
      WeightBundle::load(argv[2]).save(argv[3]);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::fprintf(stderr, "usage: parity_fixture write <dir> | reexport <in> <out>\n");
  return 1;
}
