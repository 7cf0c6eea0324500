#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sddlab/autodiff.hpp"
#include "sddlab/param_set.hpp"
#include "sddlab/tensor.hpp"

namespace sddlab::vit {

enum class Activation { Gelu, Relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct ViTConfig {
  std::size_t image_size = 8;   // square inputs, pixels per side
  std::size_t channels = 3;
  std::size_t patch_size = 4;
  std::size_t embed_dim = 64;
  std::size_t num_heads = 4;
  std::size_t depth = 4;
  std::size_t mlp_ratio = 2;
  std::size_t num_classes = 10;
  Activation activation = Activation::Gelu;
  double norm_eps = 1e-5;

  // Throws ConfigError on an inconsistent configuration.
  void validate() const;

  std::size_t num_patches() const {
    return (image_size / patch_size) * (image_size / patch_size);
  }
  std::size_t num_tokens() const { return num_patches() + 1; }
  std::size_t patch_dim() const { return channels * patch_size * patch_size; }
  std::size_t head_dim() const { return embed_dim / num_heads; }
  std::size_t mlp_hidden() const { return mlp_ratio * embed_dim; }

  friend bool operator==(const ViTConfig&, const ViTConfig&) = default;
};

// Closed-form parameter count: patch projection, class token, positional
// table, per-block attention/MLP/norms, final norm and head.
std::size_t parameter_count(const ViTConfig& config);

// Truncated-normal (std 0.02, cut at two std) weights and embeddings, zero
// biases, unit/zero norm scales/shifts. Projection, attention, MLP and head
// weight matrices are flagged prunable.
template <typename T>
ParamSet<T> init_params(const ViTConfig& config, std::uint64_t seed);

// image [C x H x W] -> [(H/p)*(W/p) x C*p*p]; patches in row-major grid
// order, each patch flattened channel-major then row-major.
template <typename T>
Tensor<T> patchify(const Tensor<T>& image, std::size_t patch_size);

// Same as patchify for a batch [B x C x H x W] -> [B*P x C*p*p].
template <typename T>
Tensor<T> patchify_batch(const Tensor<T>& batch, std::size_t patch_size);

// Single-head scaled dot-product attention, softmax(q k^T / sqrt(d_h)) v,
// composed from primitive tape ops.
template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v);

// Parameters of the model bound as tape leaves, index-aligned with the
// ParamSet they were created from.
template <typename T>
struct BoundParams {
  const ParamSet<T>* params = nullptr;
  std::vector<Var<T>> vars;

  Var<T> operator()(const std::string& name) const { return vars[params->index_of(name)]; }
};

template <typename T>
BoundParams<T> bind(Tape<T>& tape, const ParamSet<T>& params, bool requires_grad);

// Pre-norm encoder block `index` over x [batch*tokens x d]:
// x + W_o·MHSA(LN1(x)), then + MLP(LN2(.)).
template <typename T>
Var<T> encoder_block(const ViTConfig& config, const BoundParams<T>& p, std::size_t index,
                     Var<T> x, std::size_t batch);

// Full forward pass on a tape; batch is [B x C x H x W], result [B x K].
template <typename T>
Var<T> vit_logits(Tape<T>& tape, const ViTConfig& config, const BoundParams<T>& p,
                  const Tensor<T>& batch);

// Gradient-free convenience wrapper around vit_logits.
template <typename T>
Tensor<T> vit_forward(const ViTConfig& config, const ParamSet<T>& params, const Tensor<T>& batch);

}  // namespace sddlab::vit
