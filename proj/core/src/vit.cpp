#include "sddlab/vit.hpp"

#include <cmath>
#include <random>

namespace sddlab::vit {

std::string to_string(Activation a) { return a == Activation::Gelu ? "gelu" : "relu"; }

Activation activation_from_string(const std::string& name) {
  if (name == "gelu") return Activation::Gelu;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + name + "' (expected gelu or relu)");
}

void ViTConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model: " + msg); };
  if (image_size == 0 || channels == 0 || patch_size == 0 || embed_dim == 0 ||
      num_heads == 0 || depth == 0 || mlp_ratio == 0) {
    fail("all extents must be positive");
  }
  if (num_classes < 2) fail("num_classes must be at least 2");
  if (image_size % patch_size != 0) {
    fail("image_size " + std::to_string(image_size) + " is not divisible by patch_size " +
         std::to_string(patch_size));
  }
  if (embed_dim % num_heads != 0) {
    fail("embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
         std::to_string(num_heads));
  }
  if (!(norm_eps >= 0.0)) fail("norm_eps must be non-negative");
}

std::size_t parameter_count(const ViTConfig& c) {
  const std::size_t d = c.embed_dim;
  const std::size_t h = c.mlp_hidden();
  const std::size_t embed = c.patch_dim() * d + d + d + c.num_tokens() * d;
  const std::size_t block = 2 * d + 4 * (d * d + d) + 2 * d + (d * h + h) + (h * d + d);
  const std::size_t head = 2 * d + d * c.num_classes + c.num_classes;
  return embed + c.depth * block + head;
}

template <typename T>
ParamSet<T> init_params(const ViTConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto trunc_normal = [&](Shape shape) {
    Tensor<T> t(std::move(shape));
    for (T& v : t.values()) {
      double z = normal(rng);
      while (std::abs(z) > 2.0) z = normal(rng);
      v = static_cast<T>(0.02 * z);
    }
    return t;
  };
  auto zeros = [](std::size_t n) { return Tensor<T>(Shape{n}); };
  auto ones = [](std::size_t n) { return Tensor<T>::full(Shape{n}, T(1)); };

  const std::size_t d = c.embed_dim;
  const std::size_t h = c.mlp_hidden();
  ParamSet<T> p;
  p.add("patch_embed.weight", trunc_normal({c.patch_dim(), d}), true);
  p.add("patch_embed.bias", zeros(d), false);
  p.add("cls_token", trunc_normal({1, d}), false);
  p.add("pos_embed", trunc_normal({c.num_tokens(), d}), false);
  for (std::size_t b = 0; b < c.depth; ++b) {
    const std::string pre = "blocks." + std::to_string(b) + ".";
    p.add(pre + "norm1.gamma", ones(d), false);
    p.add(pre + "norm1.beta", zeros(d), false);
    for (const char* proj : {"q", "k", "v", "out"}) {
      p.add(pre + "attn." + proj + ".weight", trunc_normal({d, d}), true);
      p.add(pre + "attn." + proj + ".bias", zeros(d), false);
    }
    p.add(pre + "norm2.gamma", ones(d), false);
    p.add(pre + "norm2.beta", zeros(d), false);
    p.add(pre + "mlp.fc1.weight", trunc_normal({d, h}), true);
    p.add(pre + "mlp.fc1.bias", zeros(h), false);
    p.add(pre + "mlp.fc2.weight", trunc_normal({h, d}), true);
    p.add(pre + "mlp.fc2.bias", zeros(d), false);
  }
  p.add("norm.gamma", ones(d), false);
  p.add("norm.beta", zeros(d), false);
  p.add("head.weight", trunc_normal({d, c.num_classes}), true);
  p.add("head.bias", zeros(c.num_classes), false);
  return p;
}

template <typename T>
Tensor<T> patchify(const Tensor<T>& image, std::size_t patch_size) {
  if (image.rank() != 3) {
    throw DimensionError("patchify: expected [C x H x W], got " + shape_string(image.shape()));
  }
  Tensor<T> batch = image.reshaped({1, image.extent(0), image.extent(1), image.extent(2)});
  return patchify_batch(batch, patch_size);
}

template <typename T>
Tensor<T> patchify_batch(const Tensor<T>& batch, std::size_t patch_size) {
  if (batch.rank() != 4) {
    throw DimensionError("patchify: expected [B x C x H x W], got " +
                         shape_string(batch.shape()));
  }
  const std::size_t n = batch.extent(0);
  const std::size_t channels = batch.extent(1);
  const std::size_t height = batch.extent(2);
  const std::size_t width = batch.extent(3);
  if (patch_size == 0 || height % patch_size != 0 || width % patch_size != 0) {
    throw ConfigError("patchify: image " + std::to_string(height) + "x" +
                      std::to_string(width) + " is not divisible into " +
                      std::to_string(patch_size) + "-pixel patches");
  }
  const std::size_t gh = height / patch_size;
  const std::size_t gw = width / patch_size;
  const std::size_t dim = channels * patch_size * patch_size;
  Tensor<T> out({n * gh * gw, dim});
  T* dst = out.data();
  for (std::size_t b = 0; b < n; ++b) {
    const T* img = batch.data() + b * channels * height * width;
    for (std::size_t py = 0; py < gh; ++py) {
      for (std::size_t px = 0; px < gw; ++px) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
          for (std::size_t y = 0; y < patch_size; ++y) {
            const T* src =
                img + ch * height * width + (py * patch_size + y) * width + px * patch_size;
            for (std::size_t x = 0; x < patch_size; ++x) *dst++ = src[x];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v) {
  const auto& qs = q.shape();
  if (qs.size() != 2 || k.shape() != qs || v.shape() != qs) {
    throw DimensionError("attention: q, k, v must share one [n x d_h] shape");
  }
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(qs[1]));
  auto scores = scale(matmul(q, transpose(k)), inv_sqrt);
  return matmul(softmax(scores, 1), v);
}

template <typename T>
BoundParams<T> bind(Tape<T>& tape, const ParamSet<T>& params, bool requires_grad) {
  BoundParams<T> out;
  out.params = &params;
  out.vars.reserve(params.size());
  for (const auto& p : params) out.vars.push_back(tape.leaf(p.value, requires_grad));
  return out;
}

namespace {

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  return add_row_vector(matmul(x, weight), bias);
}

}  // namespace

template <typename T>
Var<T> encoder_block(const ViTConfig& c, const BoundParams<T>& p, std::size_t index, Var<T> x,
                     std::size_t batch) {
  const std::string pre = "blocks." + std::to_string(index) + ".";
  const T eps = static_cast<T>(c.norm_eps);

  auto h = layer_norm(x, p(pre + "norm1.gamma"), p(pre + "norm1.beta"), eps);
  auto q = linear(h, p(pre + "attn.q.weight"), p(pre + "attn.q.bias"));
  auto k = linear(h, p(pre + "attn.k.weight"), p(pre + "attn.k.bias"));
  auto v = linear(h, p(pre + "attn.v.weight"), p(pre + "attn.v.bias"));
  auto a = multi_head_attention(q, k, v, batch, c.num_heads);
  x = add(x, linear(a, p(pre + "attn.out.weight"), p(pre + "attn.out.bias")));

  h = layer_norm(x, p(pre + "norm2.gamma"), p(pre + "norm2.beta"), eps);
  h = linear(h, p(pre + "mlp.fc1.weight"), p(pre + "mlp.fc1.bias"));
  h = c.activation == Activation::Gelu ? gelu(h) : relu(h);
  h = linear(h, p(pre + "mlp.fc2.weight"), p(pre + "mlp.fc2.bias"));
  return add(x, h);
}

template <typename T>
Var<T> vit_logits(Tape<T>& tape, const ViTConfig& c, const BoundParams<T>& p,
                  const Tensor<T>& batch) {
  if (batch.rank() != 4 || batch.extent(1) != c.channels || batch.extent(2) != c.image_size ||
      batch.extent(3) != c.image_size) {
    throw DimensionError("vit: batch " + shape_string(batch.shape()) + " does not match [B x " +
                         std::to_string(c.channels) + " x " + std::to_string(c.image_size) +
                         " x " + std::to_string(c.image_size) + "]");
  }
  const std::size_t n = batch.extent(0);
  auto patches = tape.constant(patchify_batch(batch, c.patch_size));
  auto x = linear(patches, p("patch_embed.weight"), p("patch_embed.bias"));
  x = prepend_token(x, p("cls_token"), n);
  x = add_tiled(x, p("pos_embed"));
  for (std::size_t b = 0; b < c.depth; ++b) x = encoder_block(c, p, b, x, n);
  x = layer_norm(x, p("norm.gamma"), p("norm.beta"), static_cast<T>(c.norm_eps));
  auto cls = select_rows(x, c.num_tokens(), 0);
  return linear(cls, p("head.weight"), p("head.bias"));
}

template <typename T>
Tensor<T> vit_forward(const ViTConfig& c, const ParamSet<T>& params, const Tensor<T>& batch) {
  Tape<T> tape;
  auto bound = bind(tape, params, false);
  Tensor<T> out = vit_logits(tape, c, bound, batch).value();
  out.set_tape_id(std::nullopt);
  return out;
}

#define SDDLAB_INSTANTIATE_VIT(T)                                                           \
  template ParamSet<T> init_params<T>(const ViTConfig&, std::uint64_t);                     \
  template Tensor<T> patchify<T>(const Tensor<T>&, std::size_t);                            \
  template Tensor<T> patchify_batch<T>(const Tensor<T>&, std::size_t);                      \
  template Var<T> attention<T>(Var<T>, Var<T>, Var<T>);                                    \
  template BoundParams<T> bind<T>(Tape<T>&, const ParamSet<T>&, bool);                      \
  template Var<T> encoder_block<T>(const ViTConfig&, const BoundParams<T>&, std::size_t,    \
                                   Var<T>, std::size_t);                                    \
  template Var<T> vit_logits<T>(Tape<T>&, const ViTConfig&, const BoundParams<T>&,          \
                                const Tensor<T>&);                                          \
  template Tensor<T> vit_forward<T>(const ViTConfig&, const ParamSet<T>&, const Tensor<T>&);

SDDLAB_INSTANTIATE_VIT(float)
SDDLAB_INSTANTIATE_VIT(double)

#undef SDDLAB_INSTANTIATE_VIT

}  // namespace sddlab::vit
