#ifndef REACHZONO_SURROGATE_HPP_
#define REACHZONO_SURROGATE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "reachzono/io.hpp"
#include "reachzono/setalg.hpp"

namespace reachzono {

struct TokenizerConfig {
  Index ny = 2;
  Index k_g = 8;        // generators per zonotope, a multiple of ny
  double t_max = 1.0;   // time normalization
  int n_o = 5;          // context length in zonotopes

  Index block_size() const { return 1 + k_g; }
  Index token_dim() const { return ny + 1; }
  void validate() const;
};

enum class TokenRole : unsigned char { kCenter, kGenerator };

/// One row per token: [vector part (ny) | step / t_max].
struct TokenSequence {
  Matrix tokens;
  std::vector<TokenRole> roles;
  std::vector<int> steps;

  Index size() const { return tokens.rows(); }
};

/// Each zonotope is reduced (if needed) and zero-padded to exactly k_g
/// generators, then emitted as one center token followed by k_g generator tokens.
TokenSequence tokenize(std::span<const Zonotope> zonos, std::span<const int> steps,
                       const TokenizerConfig& cfg);

/// Inverse of tokenize for one (1 + k_g)-row block; only the first ny
/// columns are read.
Zonotope detokenize(const Matrix& block, Index ny);

struct Architecture {
  int d_model = 128;
  int n_heads = 8;
  int n_layers = 4;
  int d_ff = 512;
  int k_g = 8;
  int n_y = 2;
  int n_o = 5;
  int pos_len = 54;  // n_o (1 + k_g) prompt tokens + (1 + k_g) query tokens
  std::string norm = "pre";
  std::string activation = "gelu_erf";
  std::string positional = "learned_absolute";
  double layer_norm_eps = 1e-5;

  int block_size() const { return 1 + k_g; }
  int prompt_len() const { return n_o * block_size(); }
  int token_dim() const { return n_y + 1; }

  /// Architecture sized for a tokenizer, with the given width/depth.
  static Architecture for_tokenizer(const TokenizerConfig& cfg, int d_model = 128,
                                    int n_heads = 8, int n_layers = 4, int d_ff = 512);
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

struct Tensor {
  std::string name;
  std::vector<Index> shape;
  std::vector<float> data;
};

/// Transformer parameters plus architecture manifest. On disk this is the
/// pair manifest.json (architecture + tensor table of name, shape and byte
/// offset) and weights.bin (little-endian float32, row-major, tensors
/// concatenated in table order).
class WeightBundle {
 public:
  static constexpr int kFormatVersion = 1;

  WeightBundle() = default;
  explicit WeightBundle(Architecture arch);  // all tensors zero

  const Architecture& architecture() const { return arch_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  const Tensor& tensor(const std::string& name) const;
  Tensor& tensor(const std::string& name);

  /// Tensor table in canonical order for an architecture.
  static std::vector<std::pair<std::string, std::vector<Index>>> layout(const Architecture& arch);

  json manifest() const;
  std::string weights_bytes() const;

  void save(const std::filesystem::path& dir) const;
  static WeightBundle load(const std::filesystem::path& dir);
  static WeightBundle from_parts(const json& manifest, const std::string& weights);

 private:
  Architecture arch_;
  std::vector<Tensor> tensors_;
  std::map<std::string, size_t> index_;
};

/// Fixed-seed random parameters (uniform, scaled by 1/sqrt(fan_in); layer
/// norms at identity). For smoke and structural checks only.
WeightBundle random_weight_bundle(const Architecture& arch, std::uint64_t seed);

/// Decoder-only transformer over [embedded prompt; learned queries] with a
/// causal mask, pre-layer-norm blocks, learned absolute positions and an
/// erf GELU feed-forward.
class Transformer {
 public:
  explicit Transformer(const WeightBundle& wb);

  const Architecture& architecture() const { return arch_; }

  /// Input rows for the decoder stack: token embeddings of the prompt
  /// followed by the learned query tokens (positions not yet added).
  Matrix embed(const TokenSequence& prompt) const;

  /// Runs the stack on already-embedded rows; returns the head output for
  /// every position (rows x n_y).
  Matrix forward_embedded(const Matrix& inputs) const;

  /// Predicted (1 + k_g) x n_y token block.
  Matrix forward(const TokenSequence& prompt) const;

 private:
  struct Layer {
    Vector ln1_w, ln1_b, ln2_w, ln2_b;
    Matrix in_proj_w;  // 3d x d
    Vector in_proj_b;
    Matrix out_proj_w;
    Vector out_proj_b;
    Matrix fc1_w, fc2_w;
    Vector fc1_b, fc2_b;
  };

  Matrix layer_norm(const Matrix& x, const Vector& w, const Vector& b) const;
  Matrix attention(const Matrix& x, const Layer& layer) const;

  Architecture arch_;
  Matrix embed_w;  // d x (ny + 1)
  Vector embed_b;
  Matrix pos_;     // pos_len x d
  Matrix query_;   // (1 + k_g) x d
  std::vector<Layer> layers_;
  Vector lnf_w_, lnf_b_;
  Matrix head_w_;  // ny x d
  Vector head_b_;
};

Matrix forward(const WeightBundle& wb, const TokenSequence& prompt);

/// tokenize -> forward -> detokenize. Context steps are the time indices of
/// the context zonotopes.
Zonotope predict_next(const Transformer& model, std::span<const Zonotope> context,
                      std::span<const int> steps, const TokenizerConfig& cfg);

enum class FeedbackMode { kRaw, kInflated };

/// Maps the raw prediction at a step to the zonotope fed back into the
/// context (identity in raw mode).
using FeedbackFn = std::function<Zonotope(int step, const Zonotope& raw)>;

/// Sliding-window rollout from a context of n_o zonotopes at steps
/// 0..n_o-1; returns raw predictions for steps n_o..horizon.
std::vector<Zonotope> autoregress(const Transformer& model, std::span<const Zonotope> init_context,
                                  int horizon, const TokenizerConfig& cfg,
                                  const FeedbackFn& feedback = nullptr);

}  // namespace reachzono

#endif  // REACHZONO_SURROGATE_HPP_
