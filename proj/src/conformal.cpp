#include "coad/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coad {

double Threshold::value() const {
  if (!finite_) throw std::logic_error("threshold is infinite");
  return value_;
}

namespace detail {

bool ge_one_minus_alpha_times(std::size_t j, double alpha, std::size_t m) {
  // j >= (1 - alpha) * m  <=>  alpha * m >= m - j, with alpha read as the
  // exact dyadic rational sig * 2^(exp - 53).
  if (j >= m) return true;
  int exp = 0;
  const double frac = std::frexp(alpha, &exp);  // alpha = frac * 2^exp
  const auto sig =
      static_cast<unsigned __int128>(std::ldexp(frac, 53));  // exact
  const int shift = 53 - exp;                                // alpha < 1 => shift >= 53
  const auto lhs = sig * static_cast<unsigned __int128>(m);
  const auto rhs_base = static_cast<unsigned __int128>(m - j);
  if (shift >= 96) return false;  // alpha below ~2^-43: rhs shifted past lhs
  return lhs >= (rhs_base << shift);
}

}  // namespace detail

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1)");
  }
}

// Smallest minimizer of g -> sum_a pinball_{1-alpha}(g, a) over the sample
// `points`. A value v minimizes iff #{a < v} <= (1-alpha)|points| and
// #{a <= v} >= (1-alpha)|points|; the smallest such sample value is the
// first (sorted) whose inclusive count passes the threshold.
double lowest_pinball_minimizer(std::vector<double> points, double alpha) {
  std::sort(points.begin(), points.end());
  const std::size_t m = points.size();
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && points[j + 1] == points[i]) ++j;
    if (detail::ge_one_minus_alpha_times(j + 1, alpha, m)) return points[i];
    i = j + 1;
  }
  return points.back();
}

}  // namespace

ScoredCalibration score_calibration(
    const FittedEstimator& estimator,
    const std::vector<HistoricalRecord>& calibration,
    const GroupCatalog& catalog) {
  ScoredCalibration scored;
  scored.scores_by_group.resize(catalog.size());
  for (const auto& rec : calibration) {
    const double center =
        estimator.predict_group(rec.bidder_features, rec.group_id, catalog);
    scored.scores_by_group[static_cast<std::size_t>(rec.group_id)].push_back(
        std::abs(rec.value - center));
    ++scored.total;
  }
  for (auto& scores : scored.scores_by_group) {
    std::sort(scores.begin(), scores.end());
  }
  return scored;
}

Threshold compute_group_threshold(const std::vector<double>& ascending_scores,
                                  double alpha) {
  check_alpha(alpha);
  const std::size_t n = ascending_scores.size();
  // k = ceil((1-alpha)(n+1)): smallest index whose dual variable can stay
  // below 1-alpha.
  std::size_t k = n + 1;
  for (std::size_t j = 1; j <= n; ++j) {
    if (detail::ge_one_minus_alpha_times(j, alpha, n + 1)) {
      k = j;
      break;
    }
  }
  if (k > n) return Threshold::infinite();
  return Threshold::finite(ascending_scores[k - 1]);
}

Threshold dual_threshold_oracle(const std::vector<double>& scores,
                                double alpha, double tol) {
  check_alpha(alpha);
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");

  // The dual variable of the augmented point stays below 1-alpha exactly
  // when the candidate S does not exceed the smallest minimizer of the
  // augmented pinball objective (ties let another point absorb the
  // saturated dual slot).
  auto dual_slack_available = [&](double s) {
    std::vector<double> augmented = scores;
    augmented.push_back(s);
    return s <= lowest_pinball_minimizer(std::move(augmented), alpha);
  };

  double hi = 1.0;
  for (double s : scores) hi = std::max(hi, s);
  hi = hi * 2.0 + 1.0;
  if (dual_slack_available(hi)) return Threshold::infinite();

  double lo = 0.0;  // scores are nonnegative, so slack always exists at 0
  while (hi - lo > tol) {
    const double mid = lo + (hi - lo) / 2.0;
    if (dual_slack_available(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Threshold::finite(lo + (hi - lo) / 2.0);
}

CalibratedPredictor::CalibratedPredictor(FittedEstimator estimator,
                                         double alpha,
                                         std::vector<Threshold> thresholds)
    : estimator_(std::move(estimator)),
      alpha_(alpha),
      thresholds_(std::move(thresholds)) {}

Threshold CalibratedPredictor::threshold(int group_id) const {
  if (group_id < 0 ||
      static_cast<std::size_t>(group_id) >= thresholds_.size()) {
    throw DataError("unknown group id " + std::to_string(group_id));
  }
  return thresholds_[static_cast<std::size_t>(group_id)];
}

PredictionInterval CalibratedPredictor::predict_interval(
    const std::vector<double>& x, int group_id,
    const GroupCatalog& catalog) const {
  PredictionInterval interval;
  interval.center = estimator_.predict_group(x, group_id, catalog);
  interval.half_width = threshold(group_id);
  return interval;
}

CalibratedPredictor calibrate(FittedEstimator estimator,
                              const std::vector<HistoricalRecord>& calibration,
                              double alpha, const GroupCatalog& catalog) {
  check_alpha(alpha);
  const ScoredCalibration scored =
      score_calibration(estimator, calibration, catalog);
  std::vector<Threshold> thresholds;
  thresholds.reserve(catalog.size());
  for (const auto& scores : scored.scores_by_group) {
    thresholds.push_back(compute_group_threshold(scores, alpha));
  }
  return CalibratedPredictor(std::move(estimator), alpha,
                             std::move(thresholds));
}

std::map<int, double> evaluate_coverage(
    const CalibratedPredictor& predictor,
    const std::vector<HistoricalRecord>& test, const GroupCatalog& catalog) {
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // hit, total
  for (const auto& rec : test) {
    const auto interval =
        predictor.predict_interval(rec.bidder_features, rec.group_id, catalog);
    auto& [hits, total] = counts[rec.group_id];
    if (rec.value >= interval.lower() && rec.value <= interval.upper()) ++hits;
    ++total;
  }
  std::map<int, double> coverage;
  for (const auto& [gid, hit_total] : counts) {
    coverage[gid] = static_cast<double>(hit_total.first) /
                    static_cast<double>(hit_total.second);
  }
  return coverage;
}

}  // namespace coad
