#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cargoscan::eval {

struct ScoreSet {
  std::vector<double> positives;
  std::vector<double> negatives;
};

// Scores must be finite and in [0, 1]; both classes non-empty.
void validate(const ScoreSet& s);

// Mann-Whitney: P(pos > neg) + 0.5 P(pos == neg).
double auc(const ScoreSet& s);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

// Operating points for "car iff score >= t" over every distinct score, from
// (0, 0) to (1, 1).
std::vector<RocPoint> roc_points(const ScoreSet& s);

// Upper convex hull of the operating points, ascending fpr, collinear points
// dropped.
std::vector<RocPoint> roc_convex_hull(const std::vector<RocPoint>& points);

// Hand's H-measure with severity density Beta(pi1 + 1, pi0 + 1), where pi1 and
// pi0 are the positive and negative proportions.
double h_measure(const ScoreSet& s);

// Expected minimum loss of the hull under that density; L(c) =
// c pi0 fpr + (1 - c) pi1 (1 - tpr).
double expected_min_loss(const std::vector<RocPoint>& hull, double pi0, double pi1);

struct FullRecall {
  double t_car = 0.0;
  double fpr = 0.0;
  std::size_t false_positives = 0;
  std::size_t negatives = 0;
};

// t_car = min validation positive score; fpr over the test negatives.
FullRecall fpr_at_full_recall(const ScoreSet& validation, const ScoreSet& test);

struct MetricReport {
  double auc = 0.0;
  double h_measure = 0.0;
  double t_car = 0.0;
  double fpr_at_full_recall = 0.0;
  double validation_fpr = 0.0;
  std::size_t positives = 0;
  std::size_t validation_negatives = 0;
  std::size_t test_negatives = 0;
  std::string feature_family;

  // key = value lines.
  std::string to_text() const;
};

// AUC and H on (positives, test negatives); t_car from the positives, FPR on
// test negatives and, for reference, on validation negatives.
MetricReport summarize(const std::vector<double>& positives, const std::vector<double>& validation_negatives,
                       const std::vector<double>& test_negatives);

}  // namespace cargoscan::eval
