#pragma once

#include <array>
#include <span>
#include <vector>

#include "gaa/diffusion.hpp"
#include "gaa/graph.hpp"
#include "gaa/tensor.hpp"

// Linear comparison method: single-alpha RWR profiles fed to an
// L2-regularized, class-weighted logistic regression.
namespace gaa {

struct LinearModel {
  std::vector<double> w;
  double b = 0.0;
  double l2 = 0.0;
};

struct LogisticOptions {
  double l2 = 1e-2;
  double gradient_tol = 1e-6;  // on the Euclidean norm of the full gradient
  std::size_t max_iter = 20'000;
};

inline constexpr double kBaselineDefaultAlpha = 0.5;

// Steady-state RWR vector (length N) of one compound.
std::vector<double> baseline_features(const SharedGraph& graph, std::span<const NodeIndex> targets, double alpha,
                                      const RwrOptions& opts = {});

// Rows of `features` are samples. Objective:
//   (1/n) sum_i w[y_i] * log(1 + exp(-s_i (x_i.w + b))) + (l2/2) ||w||^2,
// with s_i = +1 / -1 for labels 1 / 0; the bias is not penalized.
double logistic_objective(const LinearModel& m, const Tensor& features, std::span<const int> labels,
                          const std::array<double, 2>& class_weights, std::vector<double>* gradient = nullptr);

// Throws InputError for single-class data, NumericalError if the gradient
// norm does not reach opts.gradient_tol.
LinearModel fit_logistic(const Tensor& features, std::span<const int> labels, const std::array<double, 2>& class_weights,
                         const LogisticOptions& opts = {}, const LinearModel* init = nullptr);

double baseline_predict(const LinearModel& m, std::span<const double> x);

}  // namespace gaa
