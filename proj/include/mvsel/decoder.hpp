#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsel/ndcore.hpp"
#include "mvsel/rng.hpp"

namespace mvsel {

enum class Activation { elu, identity };

struct LayerSpec {
  Index in_width = 0;
  Index out_width = 0;
  Activation activation = Activation::elu;
  bool group_norm = false;

  bool operator==(const LayerSpec&) const = default;
};

// K -> hidden... -> output; hidden layers use ELU, the output layer is affine.
inline std::vector<LayerSpec> make_architecture(Index latent_dim, const std::vector<Index>& hidden_widths,
                                                Index output_width, bool group_norm = false) {
  std::vector<LayerSpec> spec;
  Index in = latent_dim;
  for (Index w : hidden_widths) {
    spec.push_back({in, w, Activation::elu, group_norm});
    in = w;
  }
  spec.push_back({in, output_width, Activation::identity, false});
  return spec;
}

inline void validate_architecture(const std::vector<LayerSpec>& spec) {
  if (spec.empty()) throw std::invalid_argument("decoder: architecture has no layers");
  for (std::size_t l = 0; l < spec.size(); ++l) {
    const auto& s = spec[l];
    if (s.in_width < 1 || s.out_width < 1)
      throw std::invalid_argument("decoder: layer " + std::to_string(l) + " has a non-positive width");
    if (l + 1 < spec.size() && spec[l + 1].in_width != s.out_width)
      throw std::invalid_argument("decoder: layer " + std::to_string(l) + " outputs " + std::to_string(s.out_width) +
                                  " units but layer " + std::to_string(l + 1) + " expects " +
                                  std::to_string(spec[l + 1].in_width));
    if (s.group_norm && l + 1 == spec.size())
      throw std::invalid_argument("decoder: group normalization is only allowed on hidden layers");
    if (s.group_norm && s.out_width < 2)
      throw std::invalid_argument("decoder: group normalization needs a layer width of at least 2");
  }
}

template <typename Scalar>
struct Layer {
  LayerSpec spec;
  MatrixX<Scalar> W;     // in_width x out_width
  RowVectorX<Scalar> b;  // broadcast over samples
  RowVectorX<Scalar> gamma;  // group-norm scale/shift, empty unless spec.group_norm
  RowVectorX<Scalar> beta;
};

template <typename Scalar>
struct DecoderNetworkT {
  int view_id = 0;
  std::vector<Layer<Scalar>> layers;

  Index input_width() const { return layers.front().spec.in_width; }
  Index output_width() const { return layers.back().spec.out_width; }

  std::vector<LayerSpec> architecture() const {
    std::vector<LayerSpec> out;
    for (const auto& l : layers) out.push_back(l.spec);
    return out;
  }

  // FNV-1a over the raw parameter bytes; used to detect stale forward caches.
  std::uint64_t parameter_stamp() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](const Scalar* data, Index count) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(data);
      for (std::size_t k = 0; k < static_cast<std::size_t>(count) * sizeof(Scalar); ++k) {
        h ^= bytes[k];
        h *= 0x100000001B3ULL;
      }
    };
    for (const auto& l : layers) {
      mix(l.W.data(), l.W.size());
      mix(l.b.data(), l.b.size());
      mix(l.gamma.data(), l.gamma.size());
      mix(l.beta.data(), l.beta.size());
    }
    return h;
  }

  bool operator==(const DecoderNetworkT& o) const {
    if (view_id != o.view_id || layers.size() != o.layers.size()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& a = layers[l];
      const auto& b = o.layers[l];
      if (!(a.spec == b.spec) || a.W != b.W || a.b != b.b || a.gamma != b.gamma || a.beta != b.beta) return false;
    }
    return true;
  }
};

using DecoderNetwork = DecoderNetworkT<double>;

// W and b entries ~ U(-1/sqrt(in_width), 1/sqrt(in_width)); group-norm gamma = 1, beta = 0.
template <typename Scalar = double>
DecoderNetworkT<Scalar> init_network(const std::vector<LayerSpec>& spec, Rng& rng, int view_id = 0) {
  validate_architecture(spec);
  DecoderNetworkT<Scalar> net;
  net.view_id = view_id;
  for (const auto& s : spec) {
    Layer<Scalar> layer;
    layer.spec = s;
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in_width));
    layer.W.resize(s.in_width, s.out_width);
    for (Index i = 0; i < s.in_width; ++i)
      for (Index j = 0; j < s.out_width; ++j) layer.W(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    layer.b.resize(s.out_width);
    for (Index j = 0; j < s.out_width; ++j) layer.b(j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    if (s.group_norm) {
      layer.gamma = RowVectorX<Scalar>::Ones(s.out_width);
      layer.beta = RowVectorX<Scalar>::Zero(s.out_width);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

// ------------------------------------------------------- group normalization

inline constexpr double kGroupNormEps = 1e-5;

// One group spanning the whole layer: each row is normalized to mean 0 and
// (biased) variance 1, then scaled by gamma and shifted by beta.
template <typename Scalar>
struct GroupNormCache {
  MatrixX<Scalar> normalized;
  VectorX<Scalar> inv_std;
};

template <typename Scalar>
MatrixX<Scalar> group_norm_forward(const MatrixX<Scalar>& h, const RowVectorX<Scalar>& gamma,
                                   const RowVectorX<Scalar>& beta, GroupNormCache<Scalar>* cache = nullptr) {
  if (h.cols() < 2) throw std::invalid_argument("group_norm: layer width must be at least 2");
  if (gamma.size() != h.cols() || beta.size() != h.cols())
    throw std::invalid_argument("group_norm: gamma/beta width mismatch");
  const Index width = h.cols();
  MatrixX<Scalar> xhat(h.rows(), width);
  VectorX<Scalar> inv_std(h.rows());
  for (Index i = 0; i < h.rows(); ++i) {
    const Scalar mu = h.row(i).mean();
    const RowVectorX<Scalar> c = h.row(i).array() - mu;
    const Scalar var = c.squaredNorm() / Scalar(width);
    inv_std(i) = Scalar(1) / std::sqrt(var + Scalar(kGroupNormEps));
    xhat.row(i) = c * inv_std(i);
  }
  MatrixX<Scalar> out = (xhat.array().rowwise() * gamma.array()).matrix().rowwise() + beta;
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <typename Scalar>
struct GroupNormGradient {
  MatrixX<Scalar> dh;
  RowVectorX<Scalar> dgamma;
  RowVectorX<Scalar> dbeta;
};

template <typename Scalar>
GroupNormGradient<Scalar> group_norm_backward(const MatrixX<Scalar>& upstream, const RowVectorX<Scalar>& gamma,
                                              const GroupNormCache<Scalar>& cache) {
  const Index width = upstream.cols();
  GroupNormGradient<Scalar> g;
  g.dgamma = (upstream.array() * cache.normalized.array()).colwise().sum();
  g.dbeta = upstream.colwise().sum();
  const MatrixX<Scalar> dxhat = (upstream.array().rowwise() * gamma.array()).matrix();
  g.dh.resize(upstream.rows(), width);
  for (Index i = 0; i < upstream.rows(); ++i) {
    const Scalar mean_d = dxhat.row(i).mean();
    const Scalar mean_dx = dxhat.row(i).dot(cache.normalized.row(i)) / Scalar(width);
    g.dh.row(i) = cache.inv_std(i) * (dxhat.row(i).array() - mean_d - cache.normalized.row(i).array() * mean_dx).matrix();
  }
  return g;
}

// -------------------------------------------------------- forward / backward

template <typename Scalar>
struct ForwardCache {
  std::vector<MatrixX<Scalar>> inputs;      // h_{l-1}; inputs[0] is Z
  std::vector<MatrixX<Scalar>> activation_in;  // argument of the activation
  std::vector<GroupNormCache<Scalar>> norms;
  std::uint64_t parameter_stamp = 0;
};

template <typename Scalar>
MatrixX<Scalar> forward(const DecoderNetworkT<Scalar>& net, const MatrixX<Scalar>& z,
                        ForwardCache<Scalar>* cache = nullptr) {
  if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (z.cols() != net.input_width())
    throw std::invalid_argument("forward: latent code has " + std::to_string(z.cols()) + " columns, network expects " +
                                std::to_string(net.input_width()));
  if (cache) {
    cache->inputs.clear();
    cache->activation_in.clear();
    cache->norms.assign(net.layers.size(), {});
    cache->parameter_stamp = net.parameter_stamp();
  }
  MatrixX<Scalar> h = z;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    MatrixX<Scalar> a = (h * layer.W).rowwise() + layer.b;
    MatrixX<Scalar> out = layer.spec.activation == Activation::elu ? MatrixX<Scalar>(elu(a)) : a;
    // Normalization follows the activation.
    if (layer.spec.group_norm) out = group_norm_forward(out, layer.gamma, layer.beta, cache ? &cache->norms[l] : nullptr);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->activation_in.push_back(std::move(a));
    }
    h = std::move(out);
  }
  return h;
}

template <typename Scalar>
struct LayerGradient {
  MatrixX<Scalar> dW;
  RowVectorX<Scalar> db;
  RowVectorX<Scalar> dgamma;
  RowVectorX<Scalar> dbeta;
};

template <typename Scalar>
struct GradientBundleT {
  std::vector<LayerGradient<Scalar>> layers;
  MatrixX<Scalar> dZ;
};

using GradientBundle = GradientBundleT<double>;

enum class GradientParts { all, parameters, latent };

template <typename Scalar>
GradientBundleT<Scalar> backward(const DecoderNetworkT<Scalar>& net, const MatrixX<Scalar>& z,
                                 const MatrixX<Scalar>& upstream, const ForwardCache<Scalar>& cache,
                                 GradientParts parts = GradientParts::all) {
  const std::size_t depth = net.layers.size();
  if (cache.inputs.size() != depth || cache.activation_in.size() != depth || cache.norms.size() != depth)
    throw std::invalid_argument("backward: cache does not match the network depth");
  if (cache.inputs.front().rows() != z.rows() || cache.inputs.front().cols() != z.cols() || cache.inputs.front() != z)
    throw std::invalid_argument("backward: cache was produced from a different latent code");
  if (cache.parameter_stamp != net.parameter_stamp())
    throw std::invalid_argument("backward: cache is stale (network parameters changed since forward)");
  if (upstream.rows() != z.rows() || upstream.cols() != net.output_width())
    throw std::invalid_argument("backward: upstream gradient is " + shape_string(upstream) + ", expected " +
                                std::to_string(z.rows()) + "x" + std::to_string(net.output_width()));

  const bool want_params = parts != GradientParts::latent;
  const bool want_latent = parts != GradientParts::parameters;

  GradientBundleT<Scalar> grads;
  grads.layers.resize(depth);
  MatrixX<Scalar> delta = upstream;  // d loss / d layer output
  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = net.layers[k];
    auto& g = grads.layers[k];
    if (layer.spec.group_norm) {
      auto gn = group_norm_backward(delta, layer.gamma, cache.norms[k]);
      if (want_params) {
        g.dgamma = std::move(gn.dgamma);
        g.dbeta = std::move(gn.dbeta);
      }
      delta = std::move(gn.dh);
    }
    if (layer.spec.activation == Activation::elu) delta.array() *= elu_derivative(cache.activation_in[k]).array();
    if (want_params) {
      g.dW.noalias() = cache.inputs[k].transpose() * delta;
      g.db = delta.colwise().sum();
    }
    if (k > 0 || want_latent) {
      MatrixX<Scalar> next;
      next.noalias() = delta * layer.W.transpose();
      delta = std::move(next);
    }
  }
  if (want_latent) grads.dZ = std::move(delta);
  return grads;
}

}  // namespace mvsel
