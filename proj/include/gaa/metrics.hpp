#pragma once

#include <span>
#include <string>

namespace gaa {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t n() const { return tp + fp + tn + fn; }
};

// Scores >= threshold count as positive predictions.
Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

double accuracy(const Confusion& c);
// 2PR / (P + R). With tp = 0 the result is 0, except 1 when fp = fn = 0 too.
double f1_score(const Confusion& c);

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);
double f1_score(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// Average precision: sum over descending distinct score thresholds of
// (R_k - R_{k-1}) * P_k, equal scores forming a single step. Requires both
// classes to be present.
double aupr(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  double acc = 0.0;
  double f1 = 0.0;
  double aupr = 0.0;  // NaN when only one class is present
  Confusion confusion;
  std::size_t n = 0;
  double threshold = 0.5;
};

EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// "Method  ACC  F1  AUPR" row in percent with two decimals.
std::string table_row(const std::string& method, const EvalReport& r);
std::string table_header();

}  // namespace gaa
