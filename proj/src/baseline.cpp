#include "gaa/baseline.hpp"

#include <ceres/ceres.h>

#include <cmath>

#include "gaa/errors.hpp"

namespace gaa {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

class LogisticProblem final : public ceres::FirstOrderFunction {
 public:
  LogisticProblem(const Tensor& x, std::span<const int> y, const std::array<double, 2>& cw, double l2)
      : x_(x), y_(y), cw_(cw), l2_(l2) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    LinearModel m;
    m.w.assign(parameters, parameters + x_.cols());
    m.b = parameters[x_.cols()];
    m.l2 = l2_;
    std::vector<double> g;
    *cost = logistic_objective(m, x_, y_, cw_, gradient ? &g : nullptr);
    if (gradient) std::copy(g.begin(), g.end(), gradient);
    return std::isfinite(*cost);
  }

  int NumParameters() const override { return static_cast<int>(x_.cols() + 1); }

 private:
  const Tensor& x_;
  std::span<const int> y_;
  std::array<double, 2> cw_;
  double l2_;
};

}  // namespace

std::vector<double> baseline_features(const SharedGraph& graph, std::span<const NodeIndex> targets, double alpha,
                                      const RwrOptions& opts) {
  std::vector<double> x0(graph.n_nodes(), 0.0);
  for (auto t : targets) x0.at(t) = 1.0;
  return rwr_steady_state(graph, x0, alpha, opts);
}

double logistic_objective(const LinearModel& m, const Tensor& features, std::span<const int> labels,
                          const std::array<double, 2>& class_weights, std::vector<double>* gradient) {
  const std::size_t n = features.rows(), d = features.cols();
  if (labels.size() != n || m.w.size() != d) throw InputError("logistic: dimension mismatch");
  if (gradient) gradient->assign(d + 1, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(i);
    double margin = m.b;
    for (std::size_t j = 0; j < d; ++j) margin += x[j] * m.w[j];
    const double s = labels[i] == 1 ? 1.0 : -1.0;
    const double w = class_weights[labels[i] == 1 ? 1 : 0];
    loss += w * softplus(-s * margin);
    if (gradient) {
      // d/dmargin of softplus(-s*margin) = -s * sigmoid(-s*margin)
      const double coef = -s * w * sigmoid(-s * margin);
      for (std::size_t j = 0; j < d; ++j) (*gradient)[j] += coef * x[j];
      (*gradient)[d] += coef;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double reg = 0.0;
  for (double v : m.w) reg += v * v;
  if (gradient) {
    for (std::size_t j = 0; j <= d; ++j) (*gradient)[j] *= inv_n;
    for (std::size_t j = 0; j < d; ++j) (*gradient)[j] += m.l2 * m.w[j];
  }
  return loss * inv_n + 0.5 * m.l2 * reg;
}

LinearModel fit_logistic(const Tensor& features, std::span<const int> labels, const std::array<double, 2>& class_weights,
                         const LogisticOptions& opts, const LinearModel* init) {
  if (labels.size() != features.rows()) throw InputError("fit_logistic: one label per feature row required");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError("fit_logistic: labels must be 0 or 1");
    (y == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw InputError("fit_logistic: need both classes");
  if (!(opts.l2 >= 0.0)) throw InputError("fit_logistic: l2 must be non-negative");

  const std::size_t d = features.cols();
  std::vector<double> x(d + 1, 0.0);
  if (init) {
    if (init->w.size() != d) throw InputError("fit_logistic: initial model has wrong width");
    std::copy(init->w.begin(), init->w.end(), x.begin());
    x[d] = init->b;
  }

  ceres::GradientProblem problem(new LogisticProblem(features, labels, class_weights, opts.l2));
  ceres::GradientProblemSolver::Options so;
  so.line_search_direction_type = ceres::LBFGS;
  so.max_num_iterations = static_cast<int>(opts.max_iter);
  // Ceres tests the max-norm; the Euclidean norm is checked below.
  so.gradient_tolerance = opts.gradient_tol / std::sqrt(static_cast<double>(d + 1));
  so.function_tolerance = 0.0;
  so.parameter_tolerance = 0.0;
  so.logging_type = ceres::SILENT;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(so, problem, x.data(), &summary);

  LinearModel m;
  m.w.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d));
  m.b = x[d];
  m.l2 = opts.l2;
  std::vector<double> g;
  logistic_objective(m, features, labels, class_weights, &g);
  double norm = 0.0;
  for (double v : g) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm <= opts.gradient_tol))
    throw NumericalError("fit_logistic: gradient norm " + std::to_string(norm) + " above tolerance after " +
                         std::to_string(summary.iterations.size()) + " iterations (" + summary.message + ")");
  return m;
}

double baseline_predict(const LinearModel& m, std::span<const double> x) {
  if (x.size() != m.w.size()) throw InputError("baseline_predict: feature length mismatch");
  double margin = m.b;
  for (std::size_t j = 0; j < x.size(); ++j) margin += x[j] * m.w[j];
  return sigmoid(margin);
}

}  // namespace gaa
