#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gaa/autodiff.hpp"
#include "gaa/graph.hpp"
#include "gaa/tensor.hpp"

// Graph attentional autoencoder: two GAT layers, supermodule pooling and a
// linear projection to a pathway-aligned embedding z; a GAT decoder that
// reconstructs the augmented features from z; and an MLP classifier on z.
//
// Layouts are node-major: node feature matrices are N x width, z is D x 1.
namespace gaa {

enum class PoolAggregator { sum, mean, max };

std::string to_string(PoolAggregator a);
PoolAggregator parse_aggregator(std::string_view s);

struct ModelConfig {
  std::size_t in_width = 9;  // augmented feature width F'
  std::size_t heads = 4;     // first-layer attention heads
  std::size_t head_width = 16;
  std::size_t gat2_width = 16;  // C
  std::size_t decoder_width = 16;
  std::size_t mlp_hidden = 64;
  PoolAggregator pool = PoolAggregator::mean;
  double leaky_slope = 0.2;
  double elu_alpha = 1.0;

  void validate() const;
};

// A GAT layer: per head k a projection weight[k] (out x in) and an attention
// vector attention[k] (2*out x 1), first half for the receiving node.
template <class T>
struct GatLayerT {
  std::vector<T> weight;
  std::vector<T> attention;
};

template <class T>
struct EncoderT {
  GatLayerT<T> gat1;
  GatLayerT<T> gat2;  // single head
  T pool_w;           // C x 1
  T pool_b;           // D x 1
};

template <class T>
struct DecoderT {
  T lift_w;  // N x D
  T lift_b;  // N x 1
  GatLayerT<T> gat;  // single head, 1 -> decoder_width
  T out_w;   // F' x decoder_width
};

template <class T>
struct MlpT {
  T w1;  // hidden x D
  T b1;  // hidden x 1
  T w2;  // 2 x hidden
  T b2;  // 2 x 1
};

template <class T>
struct ModelT {
  EncoderT<T> enc;
  DecoderT<T> dec;
  MlpT<T> mlp;
};

using GatLayerParams = GatLayerT<Tensor>;
using EncoderParams = EncoderT<Tensor>;
using DecoderParams = DecoderT<Tensor>;
using MlpParams = MlpT<Tensor>;
using ModelParams = ModelT<Tensor>;

// Calls fn(name, tensor) for every trainable tensor in a fixed order.
template <class G, class Fn>
void visit_gat(const std::string& prefix, G& g, Fn&& fn) {
  for (std::size_t k = 0; k < g.weight.size(); ++k) {
    fn(prefix + ".head" + std::to_string(k) + ".W", g.weight[k]);
    fn(prefix + ".head" + std::to_string(k) + ".a", g.attention[k]);
  }
}

template <class M, class Fn>
void visit_params(M& m, Fn&& fn) {
  visit_gat("enc.gat1", m.enc.gat1, fn);
  visit_gat("enc.gat2", m.enc.gat2, fn);
  fn(std::string("enc.pool_w"), m.enc.pool_w);
  fn(std::string("enc.pool_b"), m.enc.pool_b);
  fn(std::string("dec.W1"), m.dec.lift_w);
  fn(std::string("dec.b1"), m.dec.lift_b);
  visit_gat("dec.gat", m.dec.gat, fn);
  fn(std::string("dec.W2"), m.dec.out_w);
  fn(std::string("mlp.W1"), m.mlp.w1);
  fn(std::string("mlp.b1"), m.mlp.b1);
  fn(std::string("mlp.W2"), m.mlp.w2);
  fn(std::string("mlp.b2"), m.mlp.b2);
}

// Glorot-uniform weights, zero biases.
ModelParams init_params(const ModelConfig& cfg, std::size_t n_nodes, std::size_t n_modules, std::uint64_t seed);

// Throws InputError if any tensor shape disagrees with cfg / sizes.
void check_shapes(const ModelParams& p, const ModelConfig& cfg, std::size_t n_nodes, std::size_t n_modules);

std::size_t parameter_count(const ModelParams& p);

// Index structures derived once from the graph and supermodules.
struct GraphContext {
  std::size_t n_nodes = 0;
  std::size_t n_modules = 0;
  // Attention edges j -> i including self-loops, sorted by (dst, src).
  std::vector<std::uint32_t> edge_src;
  std::vector<std::uint32_t> edge_dst;
  ad::SegmentIndex by_dst;
  // Module member rows, flattened module by module.
  std::vector<std::uint32_t> pool_rows;
  ad::SegmentIndex by_module;

  static GraphContext build(const SharedGraph& graph, const SupermoduleMap& modules);
  std::size_t n_attention_edges() const { return edge_src.size(); }
};

// Tape-level forward pieces.
ModelT<ad::Var> record_params(ad::Tape& tape, const ModelParams& p, bool trainable);

struct GatOutput {
  ad::Var out;                     // N x (heads * width), after ELU
  std::vector<ad::Var> attention;  // per head, E x 1 aligned with the context edges
};

GatOutput gat_layer(const GatLayerT<ad::Var>& layer, ad::Var h, const GraphContext& ctx, const ModelConfig& cfg);
ad::Var sup_pool(ad::Var h, const GraphContext& ctx, PoolAggregator aggregator);
ad::Var encode(const EncoderT<ad::Var>& enc, ad::Var xg, const GraphContext& ctx, const ModelConfig& cfg);
ad::Var decode(const DecoderT<ad::Var>& dec, ad::Var z, const GraphContext& ctx, const ModelConfig& cfg);
ad::Var classify_logits(const MlpT<ad::Var>& mlp, ad::Var z, const ModelConfig& cfg);  // 1 x 2

struct ForwardPass {
  ad::Var z;       // D x 1
  ad::Var recon;   // N x F'
  ad::Var logits;  // 1 x 2
  ad::Var probs;   // 1 x 2
};

ForwardPass forward(const ModelT<ad::Var>& m, ad::Var xg, const GraphContext& ctx, const ModelConfig& cfg);

struct LossTerms {
  ad::Var classification;  // weighted cross-entropy
  ad::Var reconstruction;  // ||recon - xg||_F
  ad::Var total;           // classification + gamma * reconstruction
};

LossTerms gaa_loss(const ForwardPass& fp, ad::Var xg, int label, const std::array<double, 2>& class_weights,
                   double gamma);

// Tensor-level conveniences (build a throwaway tape).
Tensor gat_layer(const GatLayerParams& layer, const Tensor& h, const GraphContext& ctx, const ModelConfig& cfg);
Tensor sup_pool(const Tensor& h, const GraphContext& ctx, PoolAggregator aggregator);
Tensor encode(const EncoderParams& enc, const Tensor& xg, const GraphContext& ctx, const ModelConfig& cfg);
Tensor decode(const DecoderParams& dec, const Tensor& z, const GraphContext& ctx, const ModelConfig& cfg);
std::array<double, 2> classify(const MlpParams& mlp, const Tensor& z, const ModelConfig& cfg);

struct Prediction {
  Tensor z;
  std::array<double, 2> probs;
};
Prediction predict(const ModelParams& p, const Tensor& xg, const GraphContext& ctx, const ModelConfig& cfg);

}  // namespace gaa
