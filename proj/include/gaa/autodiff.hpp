#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gaa/sparse.hpp"
#include "gaa/tensor.hpp"

// Define-by-run reverse-mode differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. Index structures
// passed to ops (segments, row indices, sparse operands) are referenced, not
// copied, and must outlive the tape.
namespace gaa::ad {

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Contiguous row ranges: segment k spans rows [offsets[k], offsets[k+1]).
class SegmentIndex {
 public:
  SegmentIndex() = default;
  explicit SegmentIndex(std::vector<std::uint32_t> offsets);
  // From a non-decreasing per-row segment id; every segment must be non-empty.
  static SegmentIndex from_sorted_ids(std::span<const std::uint32_t> ids, std::size_t n_segments);

  std::size_t n_segments() const { return offsets_.size() - 1; }
  std::size_t n_rows() const { return offsets_.back(); }
  std::uint32_t begin(std::size_t k) const { return offsets_[k]; }
  std::uint32_t end(std::size_t k) const { return offsets_[k + 1]; }

 private:
  std::vector<std::uint32_t> offsets_{0};
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  // Records an op output. `backward` receives the tape and the output id and
  // must add into input gradients via accumulate().
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Tensor& g);
  // Mutable gradient buffer, allocated on demand; only for ids that require grad.
  Tensor& grad_buffer(std::size_t id);

  // Seeds d(loss)/d(loss) = 1 and runs every backward rule in reverse order.
  // The loss must be 1x1. A tape may be differentiated once.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until first accumulation
    bool requires_grad = false;
    BackwardFn backward;
  };
  Var push(Tensor value, bool requires_grad, BackwardFn backward);

  std::vector<Node> nodes_;
  bool differentiated_ = false;
};

// Linear algebra.
Var matmul(Var a, Var b);
Var transpose(Var a);
// Sparse (fixed) operand times dense: (r x c) * (c x k).
Var spmm(const CsrMatrix& a, Var h);

// Elementwise and shape ops.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var broadcast_add_bias(Var x, Var bias);  // x (n x c) + bias (1 x c) on every row
Var scale_rows(Var x, Var w);             // x (n x c) * w (n x 1), row by row
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var row_select(Var x, std::span<const std::uint32_t> rows);
Var sum(Var x);  // 1 x 1

// Activations.
Var leaky_relu(Var x, double negative_slope);
Var elu(Var x, double alpha = 1.0);
Var softmax_rows(Var x);

// Segment reductions: (rows x c) -> (n_segments x c).
Var segment_sum(Var x, const SegmentIndex& seg);
Var segment_mean(Var x, const SegmentIndex& seg);
Var segment_max(Var x, const SegmentIndex& seg);
// Softmax of an (E x 1) column within each segment.
Var segment_softmax(Var logits, const SegmentIndex& seg);
// Row k of the result is sum over e in segment k of w[e] * h[src[e]]; w is E x 1.
// Equals segment_sum(scale_rows(row_select(h, src), w), seg) without the E-row temporaries.
Var edge_aggregate(Var h, Var w, std::span<const std::uint32_t> src, const SegmentIndex& seg);

// Losses, all 1 x 1.
// Mean over rows of -w[y] log softmax(logits)[y]; labels index columns.
Var cross_entropy_weighted(Var logits, std::span<const int> labels, std::span<const double> class_weights);
// Frobenius norm ||a - b||; the subgradient at a == b is zero.
Var l2_loss(Var a, Var b);

}  // namespace gaa::ad
