#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <vector>

#include "coad/regression.hpp"

namespace coad {

// Per-group interval half-width. Infinity is a real outcome (a group with
// too few calibration points admits no finite threshold), so it is carried
// as an explicit state rather than encoded as a large float.
class Threshold {
 public:
  static Threshold finite(double value) { return Threshold(value, true); }
  static Threshold infinite() { return Threshold(0.0, false); }

  bool is_finite() const { return finite_; }
  double value() const;
  // IEEE +inf when infinite; convenient for interval arithmetic.
  double as_double() const {
    return finite_ ? value_ : std::numeric_limits<double>::infinity();
  }

  friend bool operator==(const Threshold& a, const Threshold& b) {
    return a.finite_ == b.finite_ && (!a.finite_ || a.value_ == b.value_);
  }

 private:
  Threshold(double value, bool finite) : value_(value), finite_(finite) {}
  double value_;
  bool finite_;
};

// Absolute-residual conformity scores of the calibration records, sorted
// ascending within each group.
struct ScoredCalibration {
  std::vector<std::vector<double>> scores_by_group;  // indexed by group id
  std::size_t total = 0;

  std::size_t group_count(int group_id) const {
    return scores_by_group[static_cast<std::size_t>(group_id)].size();
  }
};

struct PredictionInterval {
  double center = 0.0;
  Threshold half_width = Threshold::finite(0.0);

  double lower() const { return center - half_width.as_double(); }
  double upper() const { return center + half_width.as_double(); }
  bool is_finite() const { return half_width.is_finite(); }
};

// Estimator plus per-group thresholds; immutable once calibrated and safe
// to share across threads.
class CalibratedPredictor {
 public:
  CalibratedPredictor(FittedEstimator estimator, double alpha,
                      std::vector<Threshold> thresholds);

  const FittedEstimator& estimator() const { return estimator_; }
  double alpha() const { return alpha_; }
  const std::vector<Threshold>& thresholds() const { return thresholds_; }
  Threshold threshold(int group_id) const;

  PredictionInterval predict_interval(const std::vector<double>& x,
                                      int group_id,
                                      const GroupCatalog& catalog) const;

 private:
  FittedEstimator estimator_;
  double alpha_;
  std::vector<Threshold> thresholds_;
};

ScoredCalibration score_calibration(
    const FittedEstimator& estimator,
    const std::vector<HistoricalRecord>& calibration,
    const GroupCatalog& catalog);

// Order-statistic threshold: with k = ceil((1-alpha)(n_g+1)), returns the
// k-th smallest score when k <= n_g and infinity otherwise. This is the
// largest S whose augmented-quantile dual variable stays below 1-alpha;
// the group-indicator function class makes the quantile regression
// separable per group, so the general machinery reduces to this.
Threshold compute_group_threshold(const std::vector<double>& ascending_scores,
                                  double alpha);

// Reference computation of the same threshold by bisection on S: at each
// candidate S the one-group augmented pinball problem is solved exactly
// (its minimizers form an interval of augmented sample quantiles) and the
// dual variable's sign condition is read off the case split. Monotonicity
// of S -> eta justifies the bisection. Used to cross-check the
// order-statistic path; not the production route.
Threshold dual_threshold_oracle(const std::vector<double>& scores,
                                double alpha, double tol = 1e-12);

CalibratedPredictor calibrate(FittedEstimator estimator,
                              const std::vector<HistoricalRecord>& calibration,
                              double alpha, const GroupCatalog& catalog);

// Fraction of test values inside their intervals, per group. Groups with no
// test records are omitted (coverage undefined, not zero).
std::map<int, double> evaluate_coverage(
    const CalibratedPredictor& predictor,
    const std::vector<HistoricalRecord>& test, const GroupCatalog& catalog);

namespace detail {
// Exactly decides j >= (1 - alpha) * m using the dyadic expansion of the
// double alpha, so threshold routes cannot disagree at integer knife-edges.
bool ge_one_minus_alpha_times(std::size_t j, double alpha, std::size_t m);
}  // namespace detail

}  // namespace coad
