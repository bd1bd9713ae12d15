#include "cargoscan/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "cargoscan/common/error.hpp"

namespace cargoscan::eval {

namespace {

void check_scores(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) fail(ErrorKind::kValidation, std::string(what) + " score outside [0, 1]");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void validate(const ScoreSet& s) {
  if (s.positives.empty() || s.negatives.empty()) fail(ErrorKind::kInput, "score set needs both classes");
  check_scores(s.positives, "positive");
  check_scores(s.negatives, "negative");
}

double auc(const ScoreSet& s) {
  validate(s);
  std::vector<double> pos = s.positives, neg = s.negatives;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  // Twice the Mann-Whitney statistic, kept integral.
  std::uint64_t twice = 0;
  std::size_t below = 0, upto = 0;
  for (double p : pos) {
    while (below < neg.size() && neg[below] < p) ++below;
    while (upto < neg.size() && neg[upto] <= p) ++upto;
    twice += 2 * below + (upto - below);
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::vector<RocPoint> roc_points(const ScoreSet& s) {
  validate(s);
  std::vector<std::pair<double, int>> all;
  for (double p : s.positives) all.emplace_back(p, 1);
  for (double n : s.negatives) all.emplace_back(n, 0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const double np = static_cast<double>(s.positives.size());
  const double nn = static_cast<double>(s.negatives.size());
  std::vector<RocPoint> out{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].first;
    for (; i < all.size() && all[i].first == t; ++i) (all[i].second ? tp : fp) += 1;
    out.push_back({fp / nn, tp / np});
  }
  return out;
}

std::vector<RocPoint> roc_convex_hull(const std::vector<RocPoint>& points) {
  std::vector<RocPoint> p = points;
  std::sort(p.begin(), p.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr > b.tpr);
  });
  std::vector<RocPoint> hull;
  for (const RocPoint& q : p) {
    if (!hull.empty() && hull.back().fpr == q.fpr) continue;  // keep the highest tpr per fpr
    while (hull.size() >= 2) {
      const RocPoint& a = hull[hull.size() - 2];
      const RocPoint& b = hull.back();
      const double cross = (b.fpr - a.fpr) * (q.tpr - a.tpr) - (b.tpr - a.tpr) * (q.fpr - a.fpr);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(q);
  }
  return hull;
}

double expected_min_loss(const std::vector<RocPoint>& hull, double pi0, double pi1) {
  const double a = pi1 + 1.0;
  const double b = pi0 + 1.0;
  const double mean = a / (a + b);
  auto m0 = [&](double lo, double hi) { return boost::math::ibeta(a, b, hi) - boost::math::ibeta(a, b, lo); };
  auto m1 = [&](double lo, double hi) {
    return mean * (boost::math::ibeta(a + 1.0, b, hi) - boost::math::ibeta(a + 1.0, b, lo));
  };
  // Vertex i is optimal for c in [c_i, c_{i-1}], with c_{-1} = 1 and c_m = 0;
  // c_i equalizes the losses of vertices i and i + 1.
  const std::size_t m = hull.size();
  double total = 0.0;
  double upper = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    double lower = 0.0;
    if (i + 1 < m) {
      const double dt = pi1 * (hull[i + 1].tpr - hull[i].tpr);
      const double df = pi0 * (hull[i + 1].fpr - hull[i].fpr);
      lower = dt + df > 0.0 ? dt / (dt + df) : upper;
      lower = std::min(lower, upper);
    }
    if (upper > lower) {
      const double f = hull[i].fpr;
      const double miss = 1.0 - hull[i].tpr;
      total += pi0 * f * m1(lower, upper) + pi1 * miss * (m0(lower, upper) - m1(lower, upper));
    }
    upper = lower;
  }
  return total;
}

double h_measure(const ScoreSet& s) {
  validate(s);
  const double n1 = static_cast<double>(s.positives.size());
  const double n0 = static_cast<double>(s.negatives.size());
  const double pi1 = n1 / (n0 + n1);
  const double pi0 = n0 / (n0 + n1);
  const double loss = expected_min_loss(roc_convex_hull(roc_points(s)), pi0, pi1);
  const double worst = expected_min_loss({{0.0, 0.0}, {1.0, 1.0}}, pi0, pi1);
  return std::clamp(1.0 - loss / worst, 0.0, 1.0);
}

FullRecall fpr_at_full_recall(const ScoreSet& validation, const ScoreSet& test) {
  if (validation.positives.empty()) fail(ErrorKind::kInput, "no validation positives to set t_car");
  if (test.negatives.empty()) fail(ErrorKind::kInput, "no test negatives to measure false positives");
  check_scores(validation.positives, "validation positive");
  check_scores(test.negatives, "test negative");
  FullRecall r;
  r.t_car = *std::min_element(validation.positives.begin(), validation.positives.end());
  r.negatives = test.negatives.size();
  r.false_positives = static_cast<std::size_t>(
      std::count_if(test.negatives.begin(), test.negatives.end(), [&](double v) { return v >= r.t_car; }));
  r.fpr = static_cast<double>(r.false_positives) / static_cast<double>(r.negatives);
  return r;
}

MetricReport summarize(const std::vector<double>& positives, const std::vector<double>& validation_negatives,
                       const std::vector<double>& test_negatives) {
  MetricReport r;
  const ScoreSet test{positives, test_negatives};
  r.auc = auc(test);
  r.h_measure = h_measure(test);
  const FullRecall fr = fpr_at_full_recall(ScoreSet{positives, {}}, test);
  r.t_car = fr.t_car;
  r.fpr_at_full_recall = fr.fpr;
  if (!validation_negatives.empty()) {
    r.validation_fpr = fpr_at_full_recall(ScoreSet{positives, {}}, ScoreSet{{}, validation_negatives}).fpr;
  }
  r.positives = positives.size();
  r.validation_negatives = validation_negatives.size();
  r.test_negatives = test_negatives.size();
  return r;
}

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os << "feature_family = " << feature_family << '\n'
     << "auc = " << format_double(auc) << '\n'
     << "h_measure = " << format_double(h_measure) << '\n'
     << "t_car = " << format_double(t_car) << '\n'
     << "fpr_at_full_recall = " << format_double(fpr_at_full_recall) << '\n'
     << "validation_fpr = " << format_double(validation_fpr) << '\n'
     << "positives = " << positives << '\n'
     << "validation_negatives = " << validation_negatives << '\n'
     << "test_negatives = " << test_negatives << '\n';
  return os.str();
}

}  // namespace cargoscan::eval
