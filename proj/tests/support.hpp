#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gaa/autodiff.hpp"
#include "gaa/graph.hpp"
#include "gaa/testkit.hpp"
#include "gaa/tensor.hpp"

namespace gaa::test {

inline SharedGraph graph_of(std::initializer_list<IdPair> edges) {
  std::vector<IdPair> e(edges);
  return build_graph(e);
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Norm-wise relative gap ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_gap(const Tensor& a, const Tensor& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale < 1e-12 ? std::sqrt(d) : std::sqrt(d) / scale;
}

using TapeFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Largest relative gap between backprop and central differences over all
// inputs. Non-scalar outputs are reduced to u' * out * v with fixed random u, v.
inline double fd_check(const TapeFn& f, std::vector<Tensor> inputs, double h = 1e-6) {
  Tensor u, v;
  auto scalar = [&](ad::Tape& tape, ad::Var out) {
    if (out.rows() == 1 && out.cols() == 1) return out;
    if (u.size() == 0) {
      std::mt19937_64 rng(out.rows() * 131 + out.cols());
      u = random_tensor(1, out.rows(), rng);
      v = random_tensor(out.cols(), 1, rng);
    }
    return ad::matmul(ad::matmul(tape.constant(u), out), tape.constant(v));
  };
  auto run = [&](std::vector<Tensor>* grads) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.parameter(t));
    auto loss = scalar(tape, f(tape, vars));
    if (grads) {
      tape.backward(loss);
      for (auto& x : vars) grads->push_back(x.grad());
    }
    return loss.value()[0];
  };
  std::vector<Tensor> analytic;
  run(&analytic);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor numeric = testkit::numeric_gradient([&] { return run(nullptr); }, inputs[k], h);
    worst = std::max(worst, relative_gap(analytic[k], numeric));
  }
  return worst;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gaa_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace gaa::test
