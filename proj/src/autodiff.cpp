#include "gaa/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

#include <Eigen/Core>

#include "gaa/errors.hpp"

namespace gaa::ad {

namespace {

[[noreturn]] void fail(const char* op, const std::string& what) { throw InputError(std::string(op) + ": " + what); }

// Message is either a literal or a callable building it, so the hot path stays allocation-free.
template <class M>
void require(bool ok, const char* op, M&& what) {
  if (ok) return;
  if constexpr (std::is_invocable_v<M>)
    fail(op, what());
  else
    fail(op, what);
}

std::string shape(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
Eigen::Map<RowMajor> view(Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

// c += a * b
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) { view(c).noalias() += view(a) * view(b); }
// c += a * b^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) { view(c).noalias() += view(a) * view(b).transpose(); }
// c += a^T * b
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) { view(c).noalias() += view(a).transpose() * view(b); }

}  // namespace

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

SegmentIndex::SegmentIndex(std::vector<std::uint32_t> offsets) : offsets_(std::move(offsets)) {
  if (offsets_.empty() || offsets_.front() != 0) throw InputError("segment offsets must start at 0");
  for (std::size_t k = 1; k < offsets_.size(); ++k)
    if (offsets_[k] <= offsets_[k - 1]) throw InputError("segment offsets must describe non-empty segments");
}

SegmentIndex SegmentIndex::from_sorted_ids(std::span<const std::uint32_t> ids, std::size_t n_segments) {
  std::vector<std::uint32_t> offsets(n_segments + 1, 0);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= n_segments) throw InputError("segment id out of range");
    if (r > 0 && ids[r] < ids[r - 1]) throw InputError("segment ids must be non-decreasing");
    ++offsets[ids[r] + 1];
  }
  for (std::size_t k = 1; k <= n_segments; ++k) offsets[k] += offsets[k - 1];
  return SegmentIndex(std::move(offsets));
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward) {
#ifdef GAA_CHECK_FINITE
  if (!value.all_finite()) throw NumericalError("autodiff: non-finite value recorded at node " + std::to_string(nodes_.size()));
#endif
  if (differentiated_) throw InputError("autodiff: tape already differentiated");
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(backward)});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }
Var Tape::parameter(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool rg = false;
  for (const auto& v : inputs) {
    if (v.tape != this) throw InputError("autodiff: input recorded on a different tape");
    rg = rg || nodes_[v.id].requires_grad;
  }
  return push(std::move(value), rg, rg ? std::move(backward) : nullptr);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

const Tensor& Tape::grad(std::size_t id) const {
  const auto& n = nodes_.at(id);
  if (!differentiated_ || !n.requires_grad) throw InputError("autodiff: no gradient for node " + std::to_string(id));
  return n.grad;
}

Tensor& Tape::grad_buffer(std::size_t id) { return nodes_[id].grad; }

void Tape::accumulate(std::size_t id, const Tensor& g) {
  auto& n = nodes_[id];
  if (!n.requires_grad) return;
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw InputError("backward: loss belongs to a different tape");
  if (differentiated_) throw InputError("backward: tape already differentiated; rebuild it for another pass");
  const auto& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw InputError("backward: loss must be 1x1, got " + shape(lv));
  differentiated_ = true;
  for (auto& n : nodes_)
    if (n.requires_grad) n.grad = Tensor(n.value.rows(), n.value.cols());
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    if (nodes_[id].backward) nodes_[id].backward(*this, id);
  }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require(av.cols() == bv.rows(), "matmul", [&] { return "inner dimensions differ (" + shape(av) + " * " + shape(bv) + ")"; });
  Tensor out(av.rows(), bv.cols());
  gemm_nn(av, bv, out);
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a.id)) gemm_nt(g, t.value(b.id), t.grad_buffer(a.id));
    if (t.requires_grad(b.id)) gemm_tn(t.value(a.id), g, t.grad_buffer(b.id));
  });
}

Var transpose(Var a) {
  const auto& av = a.value();
  Tensor out(av.cols(), av.rows());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(j, i) = av(i, j);
  return a.tape->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(j, i);
  });
}

Var spmm(const CsrMatrix& a, Var h) {
  const auto& hv = h.value();
  require(a.cols() == hv.rows(), "spmm", [&] { return "sparse operand has " + std::to_string(a.cols()) + " columns, dense has " +
                                           std::to_string(hv.rows()) + " rows"; });
  Tensor out(a.rows(), hv.cols());
  a.multiply_dense(hv.data(), hv.cols(), out.data());
  return h.tape->record(std::move(out), {h}, [&a, h](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    a.multiply_transpose_add(g.data(), g.cols(), t.grad_buffer(h.id).data());
  });
}

Var add(Var a, Var b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require(av.same_shape(bv), "add", [&] { return shape(av) + " vs " + shape(bv); });
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var sub(Var a, Var b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require(av.same_shape(bv), "sub", [&] { return shape(av) + " vs " + shape(bv); });
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    t.accumulate(a.id, g);
    if (t.requires_grad(b.id)) {
      auto& gb = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return a.tape->record(std::move(out), {a}, [a, s](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var broadcast_add_bias(Var x, Var bias) {
  const auto& xv = x.value();
  const auto& bv = bias.value();
  require(bv.rows() == 1 && bv.cols() == xv.cols(), "broadcast_add_bias", [&] { return "bias " + shape(bv) + " for " + shape(xv); });
  Tensor out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv[j];
  return x.tape->record(std::move(out), {x, bias}, [x, bias](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    t.accumulate(x.id, g);
    if (t.requires_grad(bias.id)) {
      auto& gb = t.grad_buffer(bias.id);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(i, j);
    }
  });
}

Var scale_rows(Var x, Var w) {
  const auto& xv = x.value();
  const auto& wv = w.value();
  require(wv.cols() == 1 && wv.rows() == xv.rows(), "scale_rows", [&] { return "weights " + shape(wv) + " for " + shape(xv); });
  Tensor out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= wv[i];
  return x.tape->record(std::move(out), {x, w}, [x, w](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& xv = t.value(x.id);
    const auto& wv = t.value(w.id);
    const bool gx = t.requires_grad(x.id), gw = t.requires_grad(w.id);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) {
        if (gx) t.grad_buffer(x.id)(i, j) += g(i, j) * wv[i];
        acc += g(i, j) * xv(i, j);
      }
      if (gw) t.grad_buffer(w.id)[i] += acc;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", "row counts differ");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& pv = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
    off += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), inputs, [inputs](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    std::size_t off = 0;
    for (const auto& p : inputs) {
      const std::size_t c = t.value(p.id).cols();
      if (t.requires_grad(p.id)) {
        auto& gp = t.grad_buffer(p.id);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) gp(i, j) += g(i, off + j);
      }
      off += c;
    }
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  const auto& xv = x.value();
  require(begin <= end && end <= xv.rows(), "slice_rows", [&] { return "range out of bounds for " + shape(xv); });
  const std::size_t c = xv.cols();
  Tensor out(end - begin, c, std::vector<double>(xv.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                                                 xv.data().begin() + static_cast<std::ptrdiff_t>(end * c)));
  return x.tape->record(std::move(out), {x}, [x, begin, c](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * c + i] += g[i];
  });
}

Var row_select(Var x, std::span<const std::uint32_t> rows) {
  const auto& xv = x.value();
  const std::size_t c = xv.cols();
  Tensor out(rows.size(), c);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < xv.rows(), "row_select", "row index out of range");
    std::copy_n(xv.row(rows[r]).data(), c, out.row(r).data());
  }
  return x.tape->record(std::move(out), {x}, [x, rows](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    const std::size_t c = g.cols();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double* dst = gx.row(rows[r]).data();
      const double* src = g.row(r).data();
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape->record(Tensor(1, 1, s), {x}, [x](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var leaky_relu(Var x, double negative_slope) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] *= negative_slope;
  return x.tape->record(std::move(out), {x}, [x, negative_slope](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& xv = t.value(x.id);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] < 0.0 ? negative_slope * g[i] : g[i];
  });
}

Var elu(Var x, double alpha) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] = alpha * std::expm1(out[i]);
  return x.tape->record(std::move(out), {x}, [x, alpha](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& xv = t.value(x.id);
    const auto& yv = t.value(self);
    auto& gx = t.grad_buffer(x.id);
    // For x < 0, d/dx alpha (e^x - 1) = y + alpha.
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] < 0.0 ? (yv[i] + alpha) * g[i] : g[i];
  });
}

Var softmax_rows(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (auto& v : r) z += (v = std::exp(v - m));
    for (auto& v : r) v /= z;
  }
  return x.tape->record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var segment_sum(Var x, const SegmentIndex& seg) {
  const auto& xv = x.value();
  require(seg.n_rows() == xv.rows(), "segment_sum", "segment rows do not match input rows");
  const std::size_t c = xv.cols();
  Tensor out(seg.n_segments(), c);
  for (std::size_t k = 0; k < seg.n_segments(); ++k) {
    double* o = out.row(k).data();
    for (auto r = seg.begin(k); r < seg.end(k); ++r) {
      const double* in = xv.row(r).data();
      for (std::size_t j = 0; j < c; ++j) o[j] += in[j];
    }
  }
  return x.tape->record(std::move(out), {x}, [x, &seg](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    const std::size_t c = g.cols();
    for (std::size_t k = 0; k < seg.n_segments(); ++k) {
      const double* gk = g.row(k).data();
      for (auto r = seg.begin(k); r < seg.end(k); ++r) {
        double* dst = gx.row(r).data();
        for (std::size_t j = 0; j < c; ++j) dst[j] += gk[j];
      }
    }
  });
}

Var segment_mean(Var x, const SegmentIndex& seg) {
  const auto& xv = x.value();
  require(seg.n_rows() == xv.rows(), "segment_mean", "segment rows do not match input rows");
  const std::size_t c = xv.cols();
  Tensor out(seg.n_segments(), c);
  for (std::size_t k = 0; k < seg.n_segments(); ++k) {
    double* o = out.row(k).data();
    for (auto r = seg.begin(k); r < seg.end(k); ++r) {
      const double* in = xv.row(r).data();
      for (std::size_t j = 0; j < c; ++j) o[j] += in[j];
    }
    const double inv = 1.0 / static_cast<double>(seg.end(k) - seg.begin(k));
    for (std::size_t j = 0; j < c; ++j) o[j] *= inv;
  }
  return x.tape->record(std::move(out), {x}, [x, &seg](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    const std::size_t c = g.cols();
    for (std::size_t k = 0; k < seg.n_segments(); ++k) {
      const double inv = 1.0 / static_cast<double>(seg.end(k) - seg.begin(k));
      const double* gk = g.row(k).data();
      for (auto r = seg.begin(k); r < seg.end(k); ++r) {
        double* dst = gx.row(r).data();
        for (std::size_t j = 0; j < c; ++j) dst[j] += gk[j] * inv;
      }
    }
  });
}

Var segment_max(Var x, const SegmentIndex& seg) {
  const auto& xv = x.value();
  require(seg.n_rows() == xv.rows(), "segment_max", "segment rows do not match input rows");
  const std::size_t c = xv.cols();
  Tensor out(seg.n_segments(), c);
  // Gradient flows to the first row attaining the maximum.
  std::vector<std::uint32_t> argmax(seg.n_segments() * c);
  for (std::size_t k = 0; k < seg.n_segments(); ++k)
    for (std::size_t j = 0; j < c; ++j) {
      std::uint32_t best = seg.begin(k);
      for (auto r = seg.begin(k) + 1; r < seg.end(k); ++r)
        if (xv(r, j) > xv(best, j)) best = r;
      argmax[k * c + j] = best;
      out(k, j) = xv(best, j);
    }
  return x.tape->record(std::move(out), {x}, [x, argmax = std::move(argmax), c](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t k = 0; k < g.rows(); ++k)
      for (std::size_t j = 0; j < c; ++j) gx(argmax[k * c + j], j) += g(k, j);
  });
}

Var segment_softmax(Var logits, const SegmentIndex& seg) {
  const auto& lv = logits.value();
  require(lv.cols() == 1, "segment_softmax", [&] { return "logits must be a column, got " + shape(lv); });
  require(seg.n_rows() == lv.rows(), "segment_softmax", "segment rows do not match logits");
  Tensor out(lv.rows(), 1);
  for (std::size_t k = 0; k < seg.n_segments(); ++k) {
    double m = -std::numeric_limits<double>::infinity();
    for (auto r = seg.begin(k); r < seg.end(k); ++r) m = std::max(m, lv[r]);
    double z = 0.0;
    for (auto r = seg.begin(k); r < seg.end(k); ++r) z += (out[r] = std::exp(lv[r] - m));
    for (auto r = seg.begin(k); r < seg.end(k); ++r) out[r] /= z;
  }
  return logits.tape->record(std::move(out), {logits}, [logits, &seg](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& gl = t.grad_buffer(logits.id);
    for (std::size_t k = 0; k < seg.n_segments(); ++k) {
      double dot = 0.0;
      for (auto r = seg.begin(k); r < seg.end(k); ++r) dot += g[r] * y[r];
      for (auto r = seg.begin(k); r < seg.end(k); ++r) gl[r] += y[r] * (g[r] - dot);
    }
  });
}

Var edge_aggregate(Var h, Var w, std::span<const std::uint32_t> src, const SegmentIndex& seg) {
  const auto& hv = h.value();
  const auto& wv = w.value();
  require(wv.cols() == 1 && wv.rows() == src.size() && seg.n_rows() == src.size(), "edge_aggregate",
          [&] { return "weights " + shape(wv) + " for " + std::to_string(src.size()) + " edges"; });
  for (auto j : src) require(j < hv.rows(), "edge_aggregate", "source row out of range");
  const std::size_t c = hv.cols();
  Tensor out(seg.n_segments(), c);
  for (std::size_t k = 0; k < seg.n_segments(); ++k) {
    double* o = out.row(k).data();
    for (auto e = seg.begin(k); e < seg.end(k); ++e) {
      const double we = wv[e];
      const double* in = hv.row(src[e]).data();
      for (std::size_t j = 0; j < c; ++j) o[j] += we * in[j];
    }
  }
  return h.tape->record(std::move(out), {h, w}, [h, w, src, &seg](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& hv = t.value(h.id);
    const auto& wv = t.value(w.id);
    const bool gh = t.requires_grad(h.id), gw = t.requires_grad(w.id);
    const std::size_t c = g.cols();
    for (std::size_t k = 0; k < seg.n_segments(); ++k) {
      const double* gk = g.row(k).data();
      for (auto e = seg.begin(k); e < seg.end(k); ++e) {
        if (gh) {
          double* dst = t.grad_buffer(h.id).row(src[e]).data();
          for (std::size_t j = 0; j < c; ++j) dst[j] += wv[e] * gk[j];
        }
        if (gw) {
          const double* in = hv.row(src[e]).data();
          double acc = 0.0;
          for (std::size_t j = 0; j < c; ++j) acc += gk[j] * in[j];
          t.grad_buffer(w.id)[e] += acc;
        }
      }
    }
  });
}

Var cross_entropy_weighted(Var logits, std::span<const int> labels, std::span<const double> class_weights) {
  const auto& lv = logits.value();
  require(labels.size() == lv.rows(), "cross_entropy_weighted", "one label per logits row required");
  require(class_weights.size() == lv.cols(), "cross_entropy_weighted", "one weight per class required");
  const std::size_t n = lv.rows(), c = lv.cols();
  Tensor probs(n, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < c, "cross_entropy_weighted", "label out of range");
    const auto r = lv.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (probs(i, j) = std::exp(r[j] - m));
    for (std::size_t j = 0; j < c; ++j) probs(i, j) /= z;
    const auto y = static_cast<std::size_t>(labels[i]);
    loss += class_weights[y] * (std::log(z) - (r[y] - m));
  }
  loss /= static_cast<double>(n);
  std::vector<int> ys(labels.begin(), labels.end());
  std::vector<double> ws(class_weights.begin(), class_weights.end());
  return logits.tape->record(
      Tensor(1, 1, loss), {logits},
      [logits, probs = std::move(probs), ys = std::move(ys), ws = std::move(ws)](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / static_cast<double>(ys.size());
        auto& gl = t.grad_buffer(logits.id);
        for (std::size_t i = 0; i < probs.rows(); ++i) {
          const auto y = static_cast<std::size_t>(ys[i]);
          const double w = ws[y] * g;
          for (std::size_t j = 0; j < probs.cols(); ++j) gl(i, j) += w * (probs(i, j) - (j == y ? 1.0 : 0.0));
        }
      });
}

Var l2_loss(Var a, Var b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require(av.same_shape(bv), "l2_loss", [&] { return shape(av) + " vs " + shape(bv); });
  double ss = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) ss += (av[i] - bv[i]) * (av[i] - bv[i]);
  const double norm = std::sqrt(ss);
  return a.tape->record(Tensor(1, 1, norm), {a, b}, [a, b, norm](Tape& t, std::size_t self) {
    if (norm == 0.0) return;
    const double g = t.grad(self)[0] / norm;
    const auto& av = t.value(a.id);
    const auto& bv = t.value(b.id);
    const bool ga = t.requires_grad(a.id), gb = t.requires_grad(b.id);
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = g * (av[i] - bv[i]);
      if (ga) t.grad_buffer(a.id)[i] += d;
      if (gb) t.grad_buffer(b.id)[i] -= d;
    }
  });
}

}  // namespace gaa::ad
