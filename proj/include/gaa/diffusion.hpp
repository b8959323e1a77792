#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaa/graph.hpp"
#include "gaa/tensor.hpp"

namespace gaa {

// Restart probabilities, strictly increasing, each in (0, 1].
class AlphaGrid {
 public:
  explicit AlphaGrid(std::vector<double> alphas);
  // "0.1:0.9:0.1" (inclusive range) or "0.1,0.5,1".
  static AlphaGrid parse(std::string_view text);
  // The nine-value grid 0.1, 0.2, ..., 0.9.
  static AlphaGrid standard();

  const std::vector<double>& alphas() const { return alphas_; }
  std::size_t size() const { return alphas_.size(); }
  std::string to_string() const;
  std::uint64_t content_hash() const;

 private:
  std::vector<double> alphas_;
};

struct RwrOptions {
  double tol = 1e-9;
  std::size_t max_iter = 10'000;
};

// Fixed point of x <- alpha x0 + (1 - alpha) Â x, iterated from x0 until the
// infinity-norm step is at most tol. Throws NumericalError past max_iter.
std::vector<double> rwr_steady_state(const SharedGraph& graph, std::span<const double> x0, double alpha,
                                     const RwrOptions& opts = {});

// alpha (I - (1 - alpha) Â)^{-1} X by dense LU. Test oracle; N <= 2000.
Tensor dense_rwr_oracle(const SharedGraph& graph, const Tensor& x, double alpha);

inline constexpr std::size_t kDenseOracleMaxNodes = 2000;

// N x t matrix whose column s is the steady state for grid alpha s.
struct AugmentedFeatures {
  Tensor matrix;
};

AugmentedFeatures augment_compound(const SharedGraph& graph, std::span<const NodeIndex> targets,
                                   const AlphaGrid& grid, const RwrOptions& opts = {});

// One AugmentedFeatures per compound, in compound order. Compounds with no
// targets get an all-zero matrix and a warning on stderr.
std::vector<AugmentedFeatures> augment_features(const SharedGraph& graph, const CompoundSet& compounds,
                                                const AlphaGrid& grid, const RwrOptions& opts = {});

}  // namespace gaa
