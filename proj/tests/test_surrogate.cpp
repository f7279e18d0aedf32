#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "reachzono/surrogate.hpp"

using namespace reachzono;
namespace fs = std::filesystem;

namespace {

TokenizerConfig small_cfg() { return TokenizerConfig{2, 4, 10.0, 3}; }

Architecture small_arch() { return Architecture::for_tokenizer(small_cfg(), 16, 4, 2, 32); }

std::vector<Zonotope> random_context(std::mt19937_64& rng, int count, Index gens) {
  std::vector<Zonotope> out;
  for (int i = 0; i < count; ++i) out.push_back(oracle::random_zonotope(rng, 2, gens));
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("reachzono_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("tokenizer layout") {
  std::mt19937_64 rng(51);
  const TokenizerConfig cfg{2, 8, 9.0, 5};
  const auto ctx = random_context(rng, 5, 3);
  const std::vector<int> steps{0, 1, 2, 3, 4};
  const TokenSequence seq = tokenize(ctx, steps, cfg);
  CHECK(seq.size() == 45);
  CHECK(seq.tokens.cols() == 3);
  CHECK(seq.roles.size() == 45);
  CHECK(seq.roles[0] == TokenRole::kCenter);
  CHECK(seq.roles[9] == TokenRole::kCenter);
  CHECK(seq.roles[1] == TokenRole::kGenerator);
  CHECK(seq.steps[44] == 4);
  CHECK(seq.tokens(18, 2) == doctest::Approx(2.0 / 9.0));
  for (int i = 0; i < 5; ++i) {
    const Zonotope back = detokenize(seq.tokens.block(9 * i, 0, 9, 3), 2);
    CHECK(back == pad_generators(ctx[static_cast<size_t>(i)], 8));
    CHECK(drop_zero_generators(back) == ctx[static_cast<size_t>(i)]);
  }
}

TEST_CASE("tokenizer edge cases") {
  std::mt19937_64 rng(52);
  const TokenizerConfig cfg{2, 4, 1.0, 1};
  const std::vector<int> step{0};
  const std::vector<Zonotope> zero{Zonotope::origin(2)};
  const TokenSequence z = tokenize(zero, step, cfg);
  CHECK(z.tokens.isZero());

  const std::vector<Zonotope> big{oracle::random_zonotope(rng, 2, 11)};
  const Zonotope reduced = detokenize(tokenize(big, step, cfg).tokens, 2);
  CHECK(reduced.num_generators() == 4);
  for (int d = 0; d < 32; ++d) {
    const Vector dir = oracle::random_unit(rng, 2);
    CHECK(support(reduced, dir) >= support(big[0], dir) - 1e-12);
  }

  const std::vector<Zonotope> wrong{Zonotope::origin(3)};
  CHECK_THROWS_AS(tokenize(wrong, step, cfg), DimensionError);
  CHECK_THROWS_AS(tokenize(zero, std::vector<int>{0, 1}, cfg), DimensionError);
  CHECK_THROWS(TokenizerConfig({2, 3, 1.0, 1}).validate());
  CHECK_THROWS(TokenizerConfig({2, 4, 0.0, 1}).validate());
}

TEST_CASE("weight bundle layout and manifest") {
  const Architecture arch = small_arch();
  CHECK(arch.pos_len == 3 * 5 + 5);
  const WeightBundle wb(arch);
  const auto layout = WeightBundle::layout(arch);
  CHECK(layout.front().first == "embed.weight");
  CHECK(layout.front().second == std::vector<Index>{16, 3});
  CHECK(layout.back().first == "head.bias");
  CHECK(wb.tensor("layers.1.attn.in_proj.weight").shape == std::vector<Index>{48, 16});
  CHECK(wb.tensor("query").shape == std::vector<Index>{5, 16});
  CHECK_THROWS(wb.tensor("layers.2.ln1.weight"));

  const json m = wb.manifest();
  CHECK(m.at("format") == "reachzono-weight-bundle");
  CHECK(m.at("architecture").at("K_g") == 4);
  size_t offset = 0, count = 0;
  for (const auto& t : m.at("tensors")) {
    CHECK(t.at("offset").get<size_t>() == offset);
    size_t numel = 1;
    for (const auto& d : t.at("shape")) numel *= d.get<size_t>();
    offset += 4 * numel;
    ++count;
  }
  CHECK(count == layout.size());
  CHECK(m.at("total_bytes").get<size_t>() == offset);
  CHECK(wb.weights_bytes().size() == offset);

  Architecture bad = arch;
  bad.d_model = 18;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("weight bundle save and load are byte-identical") {
  const WeightBundle wb = random_weight_bundle(small_arch(), 9);
  const fs::path dir = scratch_dir("bundle");
  wb.save(dir);
  const WeightBundle back = WeightBundle::load(dir);
  CHECK(back.architecture() == wb.architecture());
  CHECK(back.weights_bytes() == wb.weights_bytes());
  CHECK(back.manifest() == wb.manifest());
  const std::string first = read_text(dir / "weights.bin");
  back.save(dir);
  CHECK(read_text(dir / "weights.bin") == first);
  CHECK(random_weight_bundle(small_arch(), 9).weights_bytes() == first);
  CHECK(random_weight_bundle(small_arch(), 10).weights_bytes() != first);

  const std::string bytes = wb.weights_bytes();
  CHECK_THROWS(WeightBundle::from_parts(wb.manifest(), bytes.substr(0, bytes.size() - 4)));
  json renamed = wb.manifest();
  renamed["tensors"][0]["name"] = "embedding";
  CHECK_THROWS(WeightBundle::from_parts(renamed, bytes));
  json reshaped = wb.manifest();
  reshaped["tensors"][1]["shape"] = {7};
  CHECK_THROWS(WeightBundle::from_parts(reshaped, bytes));
  json versioned = wb.manifest();
  versioned["version"] = 99;
  CHECK_THROWS(WeightBundle::from_parts(versioned, bytes));
  fs::remove_all(dir);
}

TEST_CASE("zero weights output the head bias") {
  WeightBundle wb(small_arch());
  Tensor& bias = wb.tensor("head.bias");
  bias.data = {0.25f, -1.5f};
  std::mt19937_64 rng(53);
  const auto ctx = random_context(rng, 3, 2);
  const Matrix out = forward(wb, tokenize(ctx, std::vector<int>{0, 1, 2}, small_cfg()));
  REQUIRE(out.rows() == 5);
  REQUIRE(out.cols() == 2);
  for (Index r = 0; r < 5; ++r) {
    CHECK(out(r, 0) == 0.25);
    CHECK(out(r, 1) == -1.5);
  }
}

TEST_CASE("attention is causal") {
  const Transformer model(random_weight_bundle(small_arch(), 3));
  std::mt19937_64 rng(54);
  const auto ctx = random_context(rng, 3, 4);
  const Matrix x = model.embed(tokenize(ctx, std::vector<int>{0, 1, 2}, small_cfg()));
  const Matrix base = model.forward_embedded(x);
  for (Index i = 0; i < x.rows(); ++i) {
    Matrix y = x;
    y.row(i) += oracle::random_vector(rng, x.cols(), 3.0).transpose();
    const Matrix out = model.forward_embedded(y);
    CHECK(out.topRows(i) == base.topRows(i));
    CHECK(out.row(i) != base.row(i));
  }
}

TEST_CASE("prediction shape and determinism") {
  const TokenizerConfig cfg = small_cfg();
  const Transformer model(random_weight_bundle(small_arch(), 4));
  std::mt19937_64 rng(55);
  const auto ctx = random_context(rng, 3, 3);
  const std::vector<int> steps{0, 1, 2};
  const Zonotope a = predict_next(model, ctx, steps, cfg);
  CHECK(a.dim() == 2);
  CHECK(a.num_generators() == 4);
  CHECK(all_finite(a));
  CHECK(predict_next(model, ctx, steps, cfg) == a);
  CHECK(predict_next(model, ctx, std::vector<int>{5, 6, 7}, cfg) != a);

  TokenizerConfig other = cfg;
  other.n_o = 2;
  CHECK_THROWS_AS(predict_next(model, std::span(ctx).first(2), std::vector<int>{0, 1}, other),
                  DimensionError);
}

TEST_CASE("autoregressive rollout slides the context window") {
  const TokenizerConfig cfg = small_cfg();
  const Transformer model(random_weight_bundle(small_arch(), 5));
  std::mt19937_64 rng(56);
  const auto init = random_context(rng, 3, 2);
  const auto raw = autoregress(model, init, 6, cfg);
  REQUIRE(raw.size() == 4);

  std::vector<Zonotope> window(init.begin(), init.end());
  for (int k = 3; k <= 6; ++k) {
    const std::vector<int> steps{k - 3, k - 2, k - 1};
    const Zonotope expect = predict_next(model, window, steps, cfg);
    CHECK(expect == raw[static_cast<size_t>(k - 3)]);
    window.erase(window.begin());
    window.push_back(expect);
  }

  std::vector<int> seen;
  const auto fed = autoregress(model, init, 6, cfg, [&](int k, const Zonotope& z) {
    seen.push_back(k);
    return minkowski_sum(z, Zonotope::box(Vector::Zero(2), Vector::Constant(2, 0.5)));
  });
  CHECK(seen == std::vector<int>{3, 4, 5, 6});
  CHECK(fed[0] == raw[0]);
  CHECK(fed[1] != raw[1]);
  CHECK_THROWS_AS(autoregress(model, std::span(init).first(2), 6, cfg), DimensionError);
}
