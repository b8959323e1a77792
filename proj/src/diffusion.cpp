#include "gaa/diffusion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "gaa/errors.hpp"
#include "gaa/hash.hpp"

namespace gaa {

namespace {

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("alpha grid: cannot parse '" + std::string(s) + "'");
  return v;
}

// Snap to 12 decimals so 0.1 + 2 * 0.1 prints and hashes as 0.3.
double snap(double v) { return std::round(v * 1e12) / 1e12; }

}  // namespace

AlphaGrid::AlphaGrid(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw InputError("alpha grid is empty");
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    const double a = alphas_[i];
    if (!(a > 0.0 && a <= 1.0)) throw InputError("alpha " + std::to_string(a) + " outside (0, 1]");
    if (i > 0 && !(alphas_[i - 1] < a)) throw InputError("alpha grid must be strictly increasing");
  }
}

AlphaGrid AlphaGrid::parse(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto p1 = text.find(':');
    const auto p2 = text.find(':', p1 + 1);
    if (p2 == std::string_view::npos) throw InputError("alpha range must be start:stop:step");
    const double start = parse_double(text.substr(0, p1));
    const double stop = parse_double(text.substr(p1 + 1, p2 - p1 - 1));
    const double step = parse_double(text.substr(p2 + 1));
    if (!(step > 0.0) || stop < start) throw InputError("alpha range: need step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) out.push_back(snap(start + static_cast<double>(k) * step));
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find(',', pos);
      if (end == std::string_view::npos) end = text.size();
      out.push_back(snap(parse_double(text.substr(pos, end - pos))));
      pos = end + 1;
    }
  }
  return AlphaGrid(std::move(out));
}

AlphaGrid AlphaGrid::standard() { return parse("0.1:0.9:0.1"); }

std::string AlphaGrid::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", alphas_[i]);
    if (i) s += ',';
    s += buf;
  }
  return s;
}

std::uint64_t AlphaGrid::content_hash() const {
  ContentHasher h;
  h.u64(alphas_.size());
  for (double a : alphas_) h.f64(a);
  return h.digest();
}

std::vector<double> rwr_steady_state(const SharedGraph& graph, std::span<const double> x0, double alpha,
                                     const RwrOptions& opts) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("rwr: alpha must lie in (0, 1]");
  if (!(opts.tol > 0.0)) throw InputError("rwr: tol must be positive");
  if (x0.size() != graph.n_nodes()) throw InputError("rwr: x0 length does not match n_nodes");

  std::vector<double> x(x0.begin(), x0.end());
  if (alpha == 1.0) return x;

  const auto& a_hat = graph.col_norm_adjacency();
  const double keep = 1.0 - alpha;
  std::vector<double> ax(x.size());
  double residual = 0.0;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    a_hat.multiply(x, ax);
    residual = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double next = alpha * x0[i] + keep * ax[i];
      residual = std::max(residual, std::abs(next - x[i]));
      x[i] = next;
    }
    if (residual <= opts.tol) return x;
  }
  throw NumericalError("rwr: no convergence after " + std::to_string(opts.max_iter) +
                       " iterations (alpha=" + std::to_string(alpha) + ", residual=" + std::to_string(residual) +
                       ")");
}

Tensor dense_rwr_oracle(const SharedGraph& graph, const Tensor& x, double alpha) {
  const std::size_t n = graph.n_nodes();
  if (n > kDenseOracleMaxNodes) throw InputError("dense_rwr_oracle: graph too large for dense solve");
  if (x.rows() != n) throw InputError("dense_rwr_oracle: X rows do not match n_nodes");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("dense_rwr_oracle: alpha must lie in (0, 1]");

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto& a_hat = graph.col_norm_adjacency();
  for (std::size_t r = 0; r < n; ++r)
    for (auto e = a_hat.row_ptr()[r]; e < a_hat.row_ptr()[r + 1]; ++e)
      m(static_cast<Eigen::Index>(r), a_hat.col_idx()[e]) -= (1.0 - alpha) * a_hat.values()[e];

  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x.cols()));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) rhs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c);

  const Eigen::MatrixXd sol = alpha * m.partialPivLu().solve(rhs);
  Tensor out(n, x.cols());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = sol(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

AugmentedFeatures augment_compound(const SharedGraph& graph, std::span<const NodeIndex> targets,
                                   const AlphaGrid& grid, const RwrOptions& opts) {
  const std::size_t n = graph.n_nodes();
  AugmentedFeatures out{Tensor(n, grid.size())};
  if (targets.empty()) return out;

  std::vector<double> x0(n, 0.0);
  for (auto t : targets) x0.at(t) = 1.0;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const auto xs = rwr_steady_state(graph, x0, grid.alphas()[s], opts);
    for (std::size_t i = 0; i < n; ++i) out.matrix(i, s) = xs[i];
  }
  return out;
}

std::vector<AugmentedFeatures> augment_features(const SharedGraph& graph, const CompoundSet& compounds,
                                                const AlphaGrid& grid, const RwrOptions& opts) {
  compounds.validate(graph.n_nodes());
  std::vector<AugmentedFeatures> out(compounds.size());
  std::size_t empty = 0;
  for (const auto& t : compounds.targets) empty += t.empty();
  if (empty > 0)
    std::cerr << "warning: " << empty << " compound(s) have no targets in the graph; using zero features\n";

  // Solves are independent; the first failure is rethrown after the loop.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(compounds.size()); ++c) {
    try {
      out[static_cast<std::size_t>(c)] = augment_compound(graph, compounds.targets[static_cast<std::size_t>(c)], grid, opts);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace gaa
