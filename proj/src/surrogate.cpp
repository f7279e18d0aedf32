#include "reachzono/surrogate.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <random>

namespace reachzono {

void TokenizerConfig::validate() const {
  if (ny < 1) throw std::invalid_argument("tokenizer: n_y must be >= 1");
  if (k_g < ny || k_g % ny != 0) {
    throw std::invalid_argument("tokenizer: K_g = " + std::to_string(k_g) +
                                " must be a positive multiple of n_y = " + std::to_string(ny));
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("tokenizer: T_max must be > 0");
  if (n_o < 1) throw std::invalid_argument("tokenizer: n_o must be >= 1");
}

TokenSequence tokenize(std::span<const Zonotope> zonos, std::span<const int> steps,
                       const TokenizerConfig& cfg) {
  cfg.validate();
  if (zonos.size() != steps.size()) {
    throw DimensionError("tokenize: " + std::to_string(zonos.size()) + " zonotopes vs " +
                         std::to_string(steps.size()) + " step indices");
  }
  TokenSequence seq;
  const Index block = cfg.block_size();
  seq.tokens = Matrix::Zero(static_cast<Index>(zonos.size()) * block, cfg.token_dim());
  for (size_t i = 0; i < zonos.size(); ++i) {
    const Zonotope& raw = zonos[i];
    if (raw.dim() != cfg.ny) {
      throw DimensionError("tokenize: zonotope of dimension " + std::to_string(raw.dim()) +
                           " for n_y = " + std::to_string(cfg.ny));
    }
    Zonotope z = raw.num_generators() > cfg.k_g
                     ? reduce(raw, static_cast<int>(cfg.k_g / cfg.ny))
                     : raw;
    if (z.num_generators() > cfg.k_g) {
      throw DimensionError("tokenize: " + std::to_string(z.num_generators()) +
                           " generators after reduction exceed K_g = " + std::to_string(cfg.k_g));
    }
    z = pad_generators(z, cfg.k_g);
    const double time = static_cast<double>(steps[i]) / cfg.t_max;
    const Index row0 = static_cast<Index>(i) * block;
    seq.tokens.block(row0, 0, 1, cfg.ny) = z.center().transpose();
    seq.tokens.block(row0 + 1, 0, cfg.k_g, cfg.ny) = z.generators().transpose();
    seq.tokens.block(row0, cfg.ny, block, 1).setConstant(time);
    seq.roles.push_back(TokenRole::kCenter);
    seq.roles.insert(seq.roles.end(), static_cast<size_t>(cfg.k_g), TokenRole::kGenerator);
    seq.steps.insert(seq.steps.end(), static_cast<size_t>(block), steps[i]);
  }
  return seq;
}

Zonotope detokenize(const Matrix& block, Index ny) {
  if (block.rows() < 1 || block.cols() < ny) {
    throw DimensionError("detokenize: token block " + shape_str(block.rows(), block.cols()) +
                         " for n_y = " + std::to_string(ny));
  }
  return Zonotope(block.block(0, 0, 1, ny).transpose(),
                  block.block(1, 0, block.rows() - 1, ny).transpose());
}

Architecture Architecture::for_tokenizer(const TokenizerConfig& cfg, int d_model, int n_heads,
                                         int n_layers, int d_ff) {
  Architecture a;
  a.d_model = d_model;
  a.n_heads = n_heads;
  a.n_layers = n_layers;
  a.d_ff = d_ff;
  a.k_g = static_cast<int>(cfg.k_g);
  a.n_y = static_cast<int>(cfg.ny);
  a.n_o = cfg.n_o;
  a.pos_len = (cfg.n_o + 1) * static_cast<int>(cfg.block_size());
  return a;
}

void Architecture::validate() const {
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
    throw std::invalid_argument("architecture: d_model = " + std::to_string(d_model) +
                                " must be a positive multiple of n_heads = " +
                                std::to_string(n_heads));
  }
  if (n_layers < 0 || d_ff < 1 || k_g < 1 || n_y < 1 || n_o < 1) {
    throw std::invalid_argument("architecture: nonpositive size field");
  }
  if (pos_len < prompt_len() + block_size()) {
    throw std::invalid_argument("architecture: pos_len = " + std::to_string(pos_len) +
                                " shorter than prompt plus query (" +
                                std::to_string(prompt_len() + block_size()) + ")");
  }
  if (norm != "pre" || activation != "gelu_erf" || positional != "learned_absolute") {
    throw std::invalid_argument("architecture: unsupported variant norm=" + norm +
                                " activation=" + activation + " positional=" + positional);
  }
}

std::vector<std::pair<std::string, std::vector<Index>>> WeightBundle::layout(
    const Architecture& a) {
  const Index d = a.d_model;
  std::vector<std::pair<std::string, std::vector<Index>>> out = {
      {"embed.weight", {d, a.token_dim()}},
      {"embed.bias", {d}},
      {"pos_embed", {a.pos_len, d}},
      {"query", {a.block_size(), d}},
  };
  for (int l = 0; l < a.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    out.push_back({p + "ln1.weight", {d}});
    out.push_back({p + "ln1.bias", {d}});
    out.push_back({p + "attn.in_proj.weight", {3 * d, d}});
    out.push_back({p + "attn.in_proj.bias", {3 * d}});
    out.push_back({p + "attn.out_proj.weight", {d, d}});
    out.push_back({p + "attn.out_proj.bias", {d}});
    out.push_back({p + "ln2.weight", {d}});
    out.push_back({p + "ln2.bias", {d}});
    out.push_back({p + "ff.fc1.weight", {a.d_ff, d}});
    out.push_back({p + "ff.fc1.bias", {a.d_ff}});
    out.push_back({p + "ff.fc2.weight", {d, a.d_ff}});
    out.push_back({p + "ff.fc2.bias", {d}});
  }
  out.push_back({"ln_f.weight", {d}});
  out.push_back({"ln_f.bias", {d}});
  out.push_back({"head.weight", {a.n_y, d}});
  out.push_back({"head.bias", {a.n_y}});
  return out;
}

WeightBundle::WeightBundle(Architecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  for (auto& [name, shape] : layout(arch_)) {
    Index count = 1;
    for (Index s : shape) count *= s;
    index_[name] = tensors_.size();
    tensors_.push_back(Tensor{name, shape, std::vector<float>(static_cast<size_t>(count), 0.0f)});
  }
}

const Tensor& WeightBundle::tensor(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("weight bundle has no tensor '" + name + "'");
  return tensors_[it->second];
}

Tensor& WeightBundle::tensor(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("weight bundle has no tensor '" + name + "'");
  return tensors_[it->second];
}

json WeightBundle::manifest() const {
  json table = json::array();
  size_t offset = 0;
  for (const auto& t : tensors_) {
    table.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
    offset += t.data.size() * sizeof(float);
  }
  return json{{"format", "reachzono-weight-bundle"},
              {"version", kFormatVersion},
              {"architecture",
               {{"d_model", arch_.d_model},
                {"n_heads", arch_.n_heads},
                {"n_layers", arch_.n_layers},
                {"d_ff", arch_.d_ff},
                {"K_g", arch_.k_g},
                {"n_y", arch_.n_y},
                {"n_o", arch_.n_o},
                {"pos_len", arch_.pos_len},
                {"token_dim", arch_.token_dim()},
                {"norm", arch_.norm},
                {"activation", arch_.activation},
                {"positional", arch_.positional},
                {"layer_norm_eps", arch_.layer_norm_eps}}},
              {"dtype", "float32"},
              {"byte_order", "little"},
              {"total_bytes", offset},
              {"tensors", table}};
}

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

}  // namespace

std::string WeightBundle::weights_bytes() const {
  std::string out;
  for (const auto& t : tensors_) {
    for (float f : t.data) {
      const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(f));
      char buf[4];
      std::memcpy(buf, &bits, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

void WeightBundle::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_json(dir / "manifest.json", manifest(), 1);
  write_text(dir / "weights.bin", weights_bytes());
}

WeightBundle WeightBundle::load(const std::filesystem::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  return from_parts(manifest, read_text(dir / "weights.bin"));
}

WeightBundle WeightBundle::from_parts(const json& manifest, const std::string& weights) {
  if (manifest.value("format", "") != "reachzono-weight-bundle") {
    throw std::invalid_argument("weight manifest: unknown format");
  }
  if (manifest.at("version").get<int>() != kFormatVersion) {
    throw std::invalid_argument("weight manifest: unsupported version " +
                                manifest.at("version").dump());
  }
  const json& a = manifest.at("architecture");
  Architecture arch;
  arch.d_model = a.at("d_model").get<int>();
  arch.n_heads = a.at("n_heads").get<int>();
  arch.n_layers = a.at("n_layers").get<int>();
  arch.d_ff = a.at("d_ff").get<int>();
  arch.k_g = a.at("K_g").get<int>();
  arch.n_y = a.at("n_y").get<int>();
  arch.n_o = a.at("n_o").get<int>();
  arch.pos_len = a.at("pos_len").get<int>();
  arch.norm = a.at("norm").get<std::string>();
  arch.activation = a.at("activation").get<std::string>();
  arch.positional = a.at("positional").get<std::string>();
  arch.layer_norm_eps = a.at("layer_norm_eps").get<double>();
  if (a.contains("token_dim") && a.at("token_dim").get<int>() != arch.token_dim()) {
    throw std::invalid_argument("weight manifest: token_dim inconsistent with n_y");
  }

  WeightBundle wb(arch);
  const json& table = manifest.at("tensors");
  if (table.size() != wb.tensors_.size()) {
    throw std::invalid_argument("weight manifest: " + std::to_string(table.size()) +
                                " tensors, architecture expects " +
                                std::to_string(wb.tensors_.size()));
  }
  for (size_t i = 0; i < table.size(); ++i) {
    Tensor& t = wb.tensors_[i];
    const json& e = table[i];
    if (e.at("name").get<std::string>() != t.name) {
      throw std::invalid_argument("weight manifest: tensor " + std::to_string(i) + " is '" +
                                  e.at("name").get<std::string>() + "', expected '" + t.name +
                                  "'");
    }
    if (e.at("shape").get<std::vector<Index>>() != t.shape) {
      throw std::invalid_argument("weight manifest: shape mismatch for '" + t.name + "'");
    }
    const size_t offset = e.at("offset").get<size_t>();
    const size_t bytes = t.data.size() * sizeof(float);
    if (offset + bytes > weights.size()) {
      throw std::invalid_argument("weights.bin too short for tensor '" + t.name + "'");
    }
    for (size_t k = 0; k < t.data.size(); ++k) {
      std::uint32_t bits;
      std::memcpy(&bits, weights.data() + offset + 4 * k, 4);
      t.data[k] = std::bit_cast<float>(to_little(bits));
    }
  }
  return wb;
}

WeightBundle random_weight_bundle(const Architecture& arch, std::uint64_t seed) {
  WeightBundle wb(arch);
  std::mt19937_64 rng(seed);
  for (const auto& [name, shape] : WeightBundle::layout(arch)) {
    Tensor& t = wb.tensor(name);
    const bool is_norm_weight = name.ends_with("ln1.weight") || name.ends_with("ln2.weight") ||
                                name == "ln_f.weight";
    if (is_norm_weight) {
      std::fill(t.data.begin(), t.data.end(), 1.0f);
      continue;
    }
    double scale;
    if (shape.size() == 2 && name != "pos_embed" && name != "query") {
      scale = 1.0 / std::sqrt(static_cast<double>(shape[1]));
    } else if (name.ends_with(".bias")) {
      scale = 0.02;
    } else {
      scale = 0.1;
    }
    for (float& f : t.data) f = static_cast<float>(scale * uniform_pm1(rng));
  }
  return wb;
}

namespace {

Matrix to_matrix(const Tensor& t) {
  const Index rows = t.shape.at(0);
  const Index cols = t.shape.size() > 1 ? t.shape[1] : 1;
  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      t.data.data(), rows, cols);
  return m.cast<double>();
}

Vector to_vector(const Tensor& t) {
  Eigen::Map<const Eigen::VectorXf> v(t.data.data(), static_cast<Index>(t.data.size()));
  return v.cast<double>();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

Transformer::Transformer(const WeightBundle& wb) : arch_(wb.architecture()) {
  arch_.validate();
  embed_w = to_matrix(wb.tensor("embed.weight"));
  embed_b = to_vector(wb.tensor("embed.bias"));
  pos_ = to_matrix(wb.tensor("pos_embed"));
  query_ = to_matrix(wb.tensor("query"));
  for (int l = 0; l < arch_.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    Layer layer;
    layer.ln1_w = to_vector(wb.tensor(p + "ln1.weight"));
    layer.ln1_b = to_vector(wb.tensor(p + "ln1.bias"));
    layer.in_proj_w = to_matrix(wb.tensor(p + "attn.in_proj.weight"));
    layer.in_proj_b = to_vector(wb.tensor(p + "attn.in_proj.bias"));
    layer.out_proj_w = to_matrix(wb.tensor(p + "attn.out_proj.weight"));
    layer.out_proj_b = to_vector(wb.tensor(p + "attn.out_proj.bias"));
    layer.ln2_w = to_vector(wb.tensor(p + "ln2.weight"));
    layer.ln2_b = to_vector(wb.tensor(p + "ln2.bias"));
    layer.fc1_w = to_matrix(wb.tensor(p + "ff.fc1.weight"));
    layer.fc1_b = to_vector(wb.tensor(p + "ff.fc1.bias"));
    layer.fc2_w = to_matrix(wb.tensor(p + "ff.fc2.weight"));
    layer.fc2_b = to_vector(wb.tensor(p + "ff.fc2.bias"));
    layers_.push_back(std::move(layer));
  }
  lnf_w_ = to_vector(wb.tensor("ln_f.weight"));
  lnf_b_ = to_vector(wb.tensor("ln_f.bias"));
  head_w_ = to_matrix(wb.tensor("head.weight"));
  head_b_ = to_vector(wb.tensor("head.bias"));
}

Matrix Transformer::layer_norm(const Matrix& x, const Vector& w, const Vector& b) const {
  Matrix out(x.rows(), x.cols());
  const double d = static_cast<double>(x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mean).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + arch_.layer_norm_eps);
    out.row(i) = ((x.row(i).array() - mean) * inv).matrix().cwiseProduct(w.transpose()) +
                 b.transpose();
  }
  return out;
}

Matrix Transformer::attention(const Matrix& x, const Layer& layer) const {
  const Index s = x.rows();
  const Index d = arch_.d_model;
  const Index hd = d / arch_.n_heads;
  const Matrix qkv = (x * layer.in_proj_w.transpose()).rowwise() + layer.in_proj_b.transpose();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Matrix ctx = Matrix::Zero(s, d);
  Vector w(s);
  for (Index h = 0; h < arch_.n_heads; ++h) {
    const auto q = qkv.middleCols(h * hd, hd);
    const auto k = qkv.middleCols(d + h * hd, hd);
    const auto v = qkv.middleCols(2 * d + h * hd, hd);
    for (Index i = 0; i < s; ++i) {
      // Causal: position i attends to 0..i only.
      double mx = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j <= i; ++j) {
        w(j) = scale * q.row(i).dot(k.row(j));
        mx = std::max(mx, w(j));
      }
      double denom = 0.0;
      for (Index j = 0; j <= i; ++j) {
        w(j) = std::exp(w(j) - mx);
        denom += w(j);
      }
      for (Index j = 0; j <= i; ++j) ctx.block(i, h * hd, 1, hd) += (w(j) / denom) * v.row(j);
    }
  }
  return (ctx * layer.out_proj_w.transpose()).rowwise() + layer.out_proj_b.transpose();
}

Matrix Transformer::embed(const TokenSequence& prompt) const {
  if (prompt.size() != arch_.prompt_len() || prompt.tokens.cols() != arch_.token_dim()) {
    throw DimensionError("transformer: prompt " +
                         shape_str(prompt.tokens.rows(), prompt.tokens.cols()) +
                         " for manifest expecting " +
                         shape_str(arch_.prompt_len(), arch_.token_dim()));
  }
  Matrix x(arch_.prompt_len() + arch_.block_size(), arch_.d_model);
  x.topRows(arch_.prompt_len()) =
      (prompt.tokens * embed_w.transpose()).rowwise() + embed_b.transpose();
  x.bottomRows(arch_.block_size()) = query_;
  return x;
}

Matrix Transformer::forward_embedded(const Matrix& inputs) const {
  if (inputs.cols() != arch_.d_model || inputs.rows() > arch_.pos_len) {
    throw DimensionError("transformer: embedded input " + shape_str(inputs.rows(), inputs.cols()) +
                         " exceeds positional table " + shape_str(arch_.pos_len, arch_.d_model));
  }
  Matrix x = inputs + pos_.topRows(inputs.rows());
  for (const Layer& layer : layers_) {
    x += attention(layer_norm(x, layer.ln1_w, layer.ln1_b), layer);
    Matrix h = (layer_norm(x, layer.ln2_w, layer.ln2_b) * layer.fc1_w.transpose()).rowwise() +
               layer.fc1_b.transpose();
    h = h.unaryExpr([](double v) { return gelu(v); });
    x += (h * layer.fc2_w.transpose()).rowwise() + layer.fc2_b.transpose();
  }
  return (layer_norm(x, lnf_w_, lnf_b_) * head_w_.transpose()).rowwise() + head_b_.transpose();
}

Matrix Transformer::forward(const TokenSequence& prompt) const {
  const Matrix all = forward_embedded(embed(prompt));
  return all.bottomRows(arch_.block_size());
}

Matrix forward(const WeightBundle& wb, const TokenSequence& prompt) {
  return Transformer(wb).forward(prompt);
}

Zonotope predict_next(const Transformer& model, std::span<const Zonotope> context,
                      std::span<const int> steps, const TokenizerConfig& cfg) {
  const Architecture& a = model.architecture();
  if (a.k_g != cfg.k_g || a.n_y != cfg.ny || a.n_o != cfg.n_o) {
    throw DimensionError("predict_next: manifest (K_g=" + std::to_string(a.k_g) +
                         ", n_y=" + std::to_string(a.n_y) + ", n_o=" + std::to_string(a.n_o) +
                         ") does not match tokenizer (K_g=" + std::to_string(cfg.k_g) +
                         ", n_y=" + std::to_string(cfg.ny) + ", n_o=" + std::to_string(cfg.n_o) +
                         ")");
  }
  return detokenize(model.forward(tokenize(context, steps, cfg)), cfg.ny);
}

std::vector<Zonotope> autoregress(const Transformer& model, std::span<const Zonotope> init_context,
                                  int horizon, const TokenizerConfig& cfg,
                                  const FeedbackFn& feedback) {
  if (static_cast<int>(init_context.size()) != cfg.n_o) {
    throw DimensionError("autoregress: context of " + std::to_string(init_context.size()) +
                         " zonotopes for n_o = " + std::to_string(cfg.n_o));
  }
  std::deque<Zonotope> window(init_context.begin(), init_context.end());
  std::vector<Zonotope> out;
  std::vector<int> steps(static_cast<size_t>(cfg.n_o));
  for (int k = cfg.n_o; k <= horizon; ++k) {
    for (int i = 0; i < cfg.n_o; ++i) steps[static_cast<size_t>(i)] = k - cfg.n_o + i;
    const std::vector<Zonotope> ctx(window.begin(), window.end());
    Zonotope pred = predict_next(model, ctx, steps, cfg);
    window.pop_front();
    window.push_back(feedback ? feedback(k, pred) : pred);
    out.push_back(std::move(pred));
  }
  return out;
}

}  // namespace reachzono
