#include "gaa/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gaa/errors.hpp"

namespace gaa {

using ad::Tape;
using ad::Var;

std::string to_string(PoolAggregator a) {
  switch (a) {
    case PoolAggregator::sum:
      return "sum";
    case PoolAggregator::mean:
      return "mean";
    case PoolAggregator::max:
      return "max";
  }
  return "mean";
}

PoolAggregator parse_aggregator(std::string_view s) {
  if (s == "sum") return PoolAggregator::sum;
  if (s == "mean") return PoolAggregator::mean;
  if (s == "max") return PoolAggregator::max;
  throw InputError("unknown pooling aggregator '" + std::string(s) + "' (expected sum, mean or max)");
}

void ModelConfig::validate() const {
  if (in_width == 0 || heads == 0 || head_width == 0 || gat2_width == 0 || decoder_width == 0 || mlp_hidden == 0)
    throw InputError("model config: all widths and the head count must be positive");
  if (!(leaky_slope >= 0.0) || !(elu_alpha > 0.0)) throw InputError("model config: invalid activation parameters");
}

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

GatLayerParams init_gat(std::size_t heads, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  GatLayerParams g;
  for (std::size_t k = 0; k < heads; ++k) {
    g.weight.push_back(glorot(out, in, in, out, rng));
    g.attention.push_back(glorot(2 * out, 1, 2 * out, 1, rng));
  }
  return g;
}

void expect_shape(const Tensor& t, std::size_t r, std::size_t c, const std::string& name) {
  if (t.rows() != r || t.cols() != c)
    throw InputError("parameter " + name + " has shape " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                     ", expected " + std::to_string(r) + "x" + std::to_string(c));
}

void check_gat(const GatLayerParams& g, std::size_t heads, std::size_t in, std::size_t out, const std::string& name) {
  if (g.weight.size() != heads || g.attention.size() != heads)
    throw InputError("parameter group " + name + " has " + std::to_string(g.weight.size()) + " heads, expected " +
                     std::to_string(heads));
  for (std::size_t k = 0; k < heads; ++k) {
    expect_shape(g.weight[k], out, in, name + ".W");
    expect_shape(g.attention[k], 2 * out, 1, name + ".a");
  }
}

GatLayerT<Var> record_gat(Tape& tape, const GatLayerParams& g, bool trainable) {
  GatLayerT<Var> out;
  for (std::size_t k = 0; k < g.weight.size(); ++k) {
    out.weight.push_back(trainable ? tape.parameter(g.weight[k]) : tape.constant(g.weight[k]));
    out.attention.push_back(trainable ? tape.parameter(g.attention[k]) : tape.constant(g.attention[k]));
  }
  return out;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::size_t n_nodes, std::size_t n_modules, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.enc.gat1 = init_gat(cfg.heads, cfg.in_width, cfg.head_width, rng);
  p.enc.gat2 = init_gat(1, cfg.heads * cfg.head_width, cfg.gat2_width, rng);
  p.enc.pool_w = glorot(cfg.gat2_width, 1, cfg.gat2_width, 1, rng);
  p.enc.pool_b = Tensor(n_modules, 1);
  p.dec.lift_w = glorot(n_nodes, n_modules, n_modules, n_nodes, rng);
  p.dec.lift_b = Tensor(n_nodes, 1);
  p.dec.gat = init_gat(1, 1, cfg.decoder_width, rng);
  p.dec.out_w = glorot(cfg.in_width, cfg.decoder_width, cfg.decoder_width, cfg.in_width, rng);
  p.mlp.w1 = glorot(cfg.mlp_hidden, n_modules, n_modules, cfg.mlp_hidden, rng);
  p.mlp.b1 = Tensor(cfg.mlp_hidden, 1);
  p.mlp.w2 = glorot(2, cfg.mlp_hidden, cfg.mlp_hidden, 2, rng);
  p.mlp.b2 = Tensor(2, 1);
  return p;
}

void check_shapes(const ModelParams& p, const ModelConfig& cfg, std::size_t n_nodes, std::size_t n_modules) {
  check_gat(p.enc.gat1, cfg.heads, cfg.in_width, cfg.head_width, "enc.gat1");
  check_gat(p.enc.gat2, 1, cfg.heads * cfg.head_width, cfg.gat2_width, "enc.gat2");
  expect_shape(p.enc.pool_w, cfg.gat2_width, 1, "enc.pool_w");
  expect_shape(p.enc.pool_b, n_modules, 1, "enc.pool_b");
  expect_shape(p.dec.lift_w, n_nodes, n_modules, "dec.W1");
  expect_shape(p.dec.lift_b, n_nodes, 1, "dec.b1");
  check_gat(p.dec.gat, 1, 1, cfg.decoder_width, "dec.gat");
  expect_shape(p.dec.out_w, cfg.in_width, cfg.decoder_width, "dec.W2");
  expect_shape(p.mlp.w1, cfg.mlp_hidden, n_modules, "mlp.W1");
  expect_shape(p.mlp.b1, cfg.mlp_hidden, 1, "mlp.b1");
  expect_shape(p.mlp.w2, 2, cfg.mlp_hidden, "mlp.W2");
  expect_shape(p.mlp.b2, 2, 1, "mlp.b2");
}

std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  visit_params(p, [&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

GraphContext GraphContext::build(const SharedGraph& graph, const SupermoduleMap& modules) {
  GraphContext ctx;
  ctx.n_nodes = graph.n_nodes();
  ctx.n_modules = modules.n_modules();
  for (NodeIndex i = 0; i < graph.n_nodes(); ++i) {
    // Neighborhood of i is N(i) plus i itself, in ascending source order.
    const auto nbrs = graph.neighbors(i);
    bool self_done = false;
    for (auto j : nbrs) {
      if (!self_done && i < j) {
        ctx.edge_src.push_back(i);
        ctx.edge_dst.push_back(i);
        self_done = true;
      }
      ctx.edge_src.push_back(j);
      ctx.edge_dst.push_back(i);
    }
    if (!self_done) {
      ctx.edge_src.push_back(i);
      ctx.edge_dst.push_back(i);
    }
  }
  ctx.by_dst = ad::SegmentIndex::from_sorted_ids(ctx.edge_dst, ctx.n_nodes);

  std::vector<std::uint32_t> module_of_row;
  for (std::size_t m = 0; m < modules.n_modules(); ++m) {
    if (modules.members[m].empty()) throw InputError("supermodule '" + modules.names[m] + "' is empty");
    for (auto i : modules.members[m]) {
      if (i >= ctx.n_nodes) throw InputError("supermodule member out of range");
      ctx.pool_rows.push_back(i);
      module_of_row.push_back(static_cast<std::uint32_t>(m));
    }
  }
  ctx.by_module = ad::SegmentIndex::from_sorted_ids(module_of_row, ctx.n_modules);
  return ctx;
}

ModelT<Var> record_params(Tape& tape, const ModelParams& p, bool trainable) {
  auto rec = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  ModelT<Var> v;
  v.enc.gat1 = record_gat(tape, p.enc.gat1, trainable);
  v.enc.gat2 = record_gat(tape, p.enc.gat2, trainable);
  v.enc.pool_w = rec(p.enc.pool_w);
  v.enc.pool_b = rec(p.enc.pool_b);
  v.dec.lift_w = rec(p.dec.lift_w);
  v.dec.lift_b = rec(p.dec.lift_b);
  v.dec.gat = record_gat(tape, p.dec.gat, trainable);
  v.dec.out_w = rec(p.dec.out_w);
  v.mlp.w1 = rec(p.mlp.w1);
  v.mlp.b1 = rec(p.mlp.b1);
  v.mlp.w2 = rec(p.mlp.w2);
  v.mlp.b2 = rec(p.mlp.b2);
  return v;
}

GatOutput gat_layer(const GatLayerT<Var>& layer, Var h, const GraphContext& ctx, const ModelConfig& cfg) {
  if (h.rows() != ctx.n_nodes) throw InputError("gat_layer: input rows do not match n_nodes");
  GatOutput out;
  std::vector<Var> heads;
  for (std::size_t k = 0; k < layer.weight.size(); ++k) {
    const std::size_t width = layer.weight[k].rows();
    const Var wh = ad::matmul(h, ad::transpose(layer.weight[k]));  // N x width
    const Var a_dst = ad::slice_rows(layer.attention[k], 0, width);
    const Var a_src = ad::slice_rows(layer.attention[k], width, 2 * width);
    const Var s_dst = ad::matmul(wh, a_dst);
    const Var s_src = ad::matmul(wh, a_src);
    const Var logits =
        ad::leaky_relu(ad::add(ad::row_select(s_dst, ctx.edge_dst), ad::row_select(s_src, ctx.edge_src)),
                       cfg.leaky_slope);
    const Var att = ad::segment_softmax(logits, ctx.by_dst);
    heads.push_back(ad::edge_aggregate(wh, att, ctx.edge_src, ctx.by_dst));
    out.attention.push_back(att);
  }
  const Var merged = heads.size() == 1 ? heads[0] : ad::concat_cols(heads);
  out.out = ad::elu(merged, cfg.elu_alpha);
  return out;
}

Var sup_pool(Var h, const GraphContext& ctx, PoolAggregator aggregator) {
  if (h.rows() != ctx.n_nodes) throw InputError("sup_pool: input rows do not match n_nodes");
  const Var rows = ad::row_select(h, ctx.pool_rows);
  switch (aggregator) {
    case PoolAggregator::sum:
      return ad::segment_sum(rows, ctx.by_module);
    case PoolAggregator::max:
      return ad::segment_max(rows, ctx.by_module);
    case PoolAggregator::mean:
      break;
  }
  return ad::segment_mean(rows, ctx.by_module);
}

Var encode(const EncoderT<Var>& enc, Var xg, const GraphContext& ctx, const ModelConfig& cfg) {
  const Var h1 = gat_layer(enc.gat1, xg, ctx, cfg).out;
  const Var h2 = gat_layer(enc.gat2, h1, ctx, cfg).out;
  const Var pooled = sup_pool(h2, ctx, cfg.pool);  // D x C
  return ad::add(ad::matmul(pooled, enc.pool_w), enc.pool_b);
}

Var decode(const DecoderT<Var>& dec, Var z, const GraphContext& ctx, const ModelConfig& cfg) {
  if (z.rows() != ctx.n_modules || z.cols() != 1) throw InputError("decode: z must be D x 1");
  const Var lifted = ad::add(ad::matmul(dec.lift_w, z), dec.lift_b);  // N x 1
  const Var h = gat_layer(dec.gat, lifted, ctx, cfg).out;              // N x decoder_width
  return ad::matmul(h, ad::transpose(dec.out_w));                     // N x F'
}

Var classify_logits(const MlpT<Var>& mlp, Var z, const ModelConfig& cfg) {
  const Var hidden = ad::elu(ad::add(ad::matmul(mlp.w1, z), mlp.b1), cfg.elu_alpha);
  return ad::transpose(ad::add(ad::matmul(mlp.w2, hidden), mlp.b2));
}

ForwardPass forward(const ModelT<Var>& m, Var xg, const GraphContext& ctx, const ModelConfig& cfg) {
  if (xg.rows() != ctx.n_nodes || xg.cols() != cfg.in_width)
    throw InputError("forward: features are " + std::to_string(xg.rows()) + "x" + std::to_string(xg.cols()) +
                     ", model expects " + std::to_string(ctx.n_nodes) + "x" + std::to_string(cfg.in_width));
  ForwardPass fp;
  fp.z = encode(m.enc, xg, ctx, cfg);
  fp.recon = decode(m.dec, fp.z, ctx, cfg);
  fp.logits = classify_logits(m.mlp, fp.z, cfg);
  fp.probs = ad::softmax_rows(fp.logits);
  return fp;
}

LossTerms gaa_loss(const ForwardPass& fp, Var xg, int label, const std::array<double, 2>& class_weights,
                   double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("loss: gamma must lie in [0, 1]");
  LossTerms l;
  const int labels[1] = {label};
  l.classification = ad::cross_entropy_weighted(fp.logits, labels, class_weights);
  l.reconstruction = ad::l2_loss(fp.recon, xg);
  l.total = ad::add(l.classification, ad::scale(l.reconstruction, gamma));
  return l;
}

Tensor gat_layer(const GatLayerParams& layer, const Tensor& h, const GraphContext& ctx, const ModelConfig& cfg) {
  Tape tape;
  const auto vars = record_gat(tape, layer, false);
  return gat_layer(vars, tape.constant(h), ctx, cfg).out.value();
}

Tensor sup_pool(const Tensor& h, const GraphContext& ctx, PoolAggregator aggregator) {
  Tape tape;
  return sup_pool(tape.constant(h), ctx, aggregator).value();
}

Tensor encode(const EncoderParams& enc, const Tensor& xg, const GraphContext& ctx, const ModelConfig& cfg) {
  Tape tape;
  EncoderT<Var> v{record_gat(tape, enc.gat1, false), record_gat(tape, enc.gat2, false), tape.constant(enc.pool_w),
                  tape.constant(enc.pool_b)};
  return encode(v, tape.constant(xg), ctx, cfg).value();
}

Tensor decode(const DecoderParams& dec, const Tensor& z, const GraphContext& ctx, const ModelConfig& cfg) {
  Tape tape;
  DecoderT<Var> v{tape.constant(dec.lift_w), tape.constant(dec.lift_b), record_gat(tape, dec.gat, false),
                  tape.constant(dec.out_w)};
  return decode(v, tape.constant(z), ctx, cfg).value();
}

std::array<double, 2> classify(const MlpParams& mlp, const Tensor& z, const ModelConfig& cfg) {
  Tape tape;
  MlpT<Var> v{tape.constant(mlp.w1), tape.constant(mlp.b1), tape.constant(mlp.w2), tape.constant(mlp.b2)};
  const auto& p = ad::softmax_rows(classify_logits(v, tape.constant(z), cfg)).value();
  return {p[0], p[1]};
}

Prediction predict(const ModelParams& p, const Tensor& xg, const GraphContext& ctx, const ModelConfig& cfg) {
  Tape tape;
  const auto vars = record_params(tape, p, false);
  const Var xv = tape.constant(xg);
  if (xg.rows() != ctx.n_nodes || xg.cols() != cfg.in_width) throw InputError("predict: feature shape mismatch");
  const Var z = encode(vars.enc, xv, ctx, cfg);
  const auto& probs = ad::softmax_rows(classify_logits(vars.mlp, z, cfg)).value();
  return Prediction{z.value(), {probs[0], probs[1]}};
}

}  // namespace gaa
