#include "gaa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "gaa/errors.hpp"

namespace gaa {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) throw InputError("metrics: empty input");
  if (scores.size() != labels.size()) throw InputError("metrics: scores and labels differ in length");
  for (int y : labels)
    if (y != 0 && y != 1) throw InputError("metrics: labels must be 0 or 1");
}

}  // namespace

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1)
      pred ? ++c.tp : ++c.fn;
    else
      pred ? ++c.fp : ++c.tn;
  }
  return c;
}

double accuracy(const Confusion& c) {
  if (c.n() == 0) throw InputError("accuracy: empty input");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.n());
}

double f1_score(const Confusion& c) {
  if (c.n() == 0) throw InputError("f1: empty input");
  if (c.tp == 0) return (c.fp == 0 && c.fn == 0) ? 1.0 : 0.0;
  const double p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double r = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return 2.0 * p * r / (p + r);
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  return accuracy(confusion_at(scores, labels, threshold));
}

double f1_score(std::span<const double> scores, std::span<const int> labels, double threshold) {
  return f1_score(confusion_at(scores, labels, threshold));
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0 || n_pos == labels.size()) throw InputError("aupr: undefined unless both classes are present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t k = 0; k < order.size();) {
    // Consume the whole group of equal scores before emitting a PR point.
    const double s = scores[order[k]];
    while (k < order.size() && scores[order[k]] == s) {
      tp += labels[order[k]] == 1;
      ++seen;
      ++k;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold) {
  EvalReport r;
  r.confusion = confusion_at(scores, labels, threshold);
  r.n = r.confusion.n();
  r.threshold = threshold;
  r.acc = accuracy(r.confusion);
  r.f1 = f1_score(r.confusion);
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  r.aupr = (n_pos == 0 || static_cast<std::size_t>(n_pos) == labels.size()) ? std::numeric_limits<double>::quiet_NaN()
                                                                            : aupr(scores, labels);
  return r;
}

std::string table_header() {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s", "Method", "ACC", "F1", "AUPR");
  return buf;
}

std::string table_row(const std::string& method, const EvalReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s %8.2f %8.2f %8.2f", method.c_str(), 100.0 * r.acc, 100.0 * r.f1,
                100.0 * r.aupr);
  return buf;
}

}  // namespace gaa
