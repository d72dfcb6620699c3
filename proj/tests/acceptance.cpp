#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include "coad/conformal.hpp"
#include "coad/experiments.hpp"
#include "coad/mechanism.hpp"
#include "coad/rng.hpp"

using namespace coad;
using namespace coad::experiments;

namespace {

void report(int criterion, const std::string& what, bool pass) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(pass, "criterion ", criterion, ": ", what);
}

struct GroupStats {
  std::map<int, double> mean;
  std::map<int, double> se;
};

GroupStats per_group(const MetricsRecord& record, const std::string& metric) {
  GroupStats stats;
  for (const auto& gm : record.aggregates) {
    if (gm.metric != metric || gm.group_id < 0) continue;
    stats.mean[gm.group_id] = gm.mean;
    stats.se[gm.group_id] = gm.std_error;
  }
  return stats;
}

double pooled_mean(const MetricsRecord& record, const std::string& metric) {
  for (const auto& gm : record.aggregates) {
    if (gm.metric == metric && gm.group_id == -1) return gm.mean;
  }
  REQUIRE(false);
  return 0.0;
}

}  // namespace

TEST_CASE("criterion 1: conditional coverage at desk scale") {
  const auto start = std::chrono::steady_clock::now();

  ExperimentConfig cfg;
  cfg.dgp = SyntheticSpec::low_dim();
  cfg.alpha = 0.1;
  cfg.dataset_size = 1000;
  cfg.bidders_per_auction = 1000;
  cfg.replications = 200;
  cfg.seed = 20240601;
  cfg.threads = 1;
  const auto record = run_coverage_experiment(cfg);

  const auto seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();

  const auto coverage = per_group(record, "coverage");
  bool in_band = coverage.mean.size() == 3;
  char detail[256];
  std::string desc;
  for (const auto& [gid, mean] : coverage.mean) {
    in_band = in_band && mean >= 0.88 && mean <= 0.93;
    std::snprintf(detail, sizeof(detail), " z%d=%.4f", gid, mean);
    desc += detail;
  }
  std::snprintf(detail, sizeof(detail), " (%.1fs)", seconds);
  report(1, "per-group coverage in [0.88, 0.93]:" + desc + detail,
         in_band && seconds < 120.0);
}

TEST_CASE("criterion 2: revenue difference versus second price") {
  ExperimentConfig cfg;
  cfg.dgp = SyntheticSpec::low_dim();
  cfg.dataset_size = 1000;
  cfg.bidders_per_auction = 50;
  cfg.replications = 500;  // one auction per replication
  cfg.seed = 20240602;
  const auto record = run_gap_experiment(cfg);

  const double ge = pooled_mean(record, "frac_coad_ge_sp");
  bool pass = ge >= 0.75;
  std::string desc = "frac(rev >= second price) = " + std::to_string(ge);
  const auto gt = per_group(record, "frac_coad_gt_sp");
  for (const auto& [gid, mean] : gt.mean) {
    pass = pass && mean >= 0.5;
    desc += ", z" + std::to_string(gid) + " frac(>)=" + std::to_string(mean);
  }
  report(2, desc, pass);
}

TEST_CASE("criterion 3: exact revenue monotonicity in bidders") {
  ExperimentConfig cfg;
  cfg.dgp = SyntheticSpec::low_dim();
  cfg.dataset_size = 1000;
  cfg.m_grid = {50};  // prefixes 1..50 checked internally
  cfg.replications = 1000;
  cfg.seed = 20240603;
  const auto record = run_revenue_vs_m(cfg);
  REQUIRE(record.scalars[0].first == "prefix_monotonicity_violations");
  const double violations = record.scalars[0].second;
  report(3,
         "coupled-prefix violations over 1000 paths x 50 prefixes = " +
             std::to_string(static_cast<long>(violations)),
         violations == 0.0);
}

TEST_CASE("criterion 4: incentive compatibility audit with mutation check") {
  const SyntheticWorld world(SyntheticSpec::low_dim());
  EstimatorConfig est;

  std::size_t deviations = 0, negative_utilities = 0, boundary = 0;
  std::optional<CalibratedPredictor> predictor;
  auto run_cases = [&](std::size_t cases, ReserveBoundary mode,
                       std::uint64_t seed) {
    std::size_t dev = 0, neg = 0, bnd = 0;
    for (std::size_t c = 0; c < cases; ++c) {
      auto rng = make_rng(derive_seed(seed, c));
      if (c % 50 == 0 || !predictor) {
        predictor = make_predictor(world, 400, est, 0.1, rng);
      }
      std::uniform_int_distribution<int> group_pick(0, 2);
      std::uniform_int_distribution<std::size_t> m_pick(1, 6);
      const auto instance =
          draw_auction(world, group_pick(rng), m_pick(rng), rng);
      double max_bid = 0.0;
      for (const auto& b : instance.bidders) {
        max_bid = std::max(max_bid, b.bid);
      }
      const auto grid = make_bid_grid(max_bid, 101);
      for (const auto& v :
           ic_audit(*predictor, world.catalog(), instance, grid, mode)) {
        switch (v.kind) {
          case ViolationKind::ProfitableDeviation: ++dev; break;
          case ViolationKind::NegativeTruthfulUtility: ++neg; break;
          case ViolationKind::BoundaryMisallocation: ++bnd; break;
        }
      }
    }
    deviations = dev;
    negative_utilities = neg;
    boundary = bnd;
  };

  run_cases(500, ReserveBoundary::Inclusive, 20240604);
  const bool clean =
      deviations == 0 && negative_utilities == 0 && boundary == 0;
  report(4,
         "honest mechanism: deviations=" + std::to_string(deviations) +
             " negative-utilities=" + std::to_string(negative_utilities) +
             " boundary=" + std::to_string(boundary),
         clean);

  predictor.reset();
  run_cases(50, ReserveBoundary::StrictFault, 20240614);
  report(4, "strict-gt mutation reports anomalies: " + std::to_string(boundary),
         boundary >= 1);
}

TEST_CASE("criterion 5: closed form agrees with the dual bisection oracle") {
  const double alphas[] = {0.05, 0.1, 0.3, 0.5};
  auto rng = make_rng(20240605);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> n_pick(0, 20);
    std::vector<double> scores(n_pick(rng));
    for (auto& s : scores) {
      s = uniform_real(rng, 0.0, 10.0);
      if (trial % 5 == 0) s = std::round(s);  // tie-heavy instances
    }
    std::sort(scores.begin(), scores.end());
    const double alpha = alphas[trial % 4];
    const auto closed = compute_group_threshold(scores, alpha);
    const auto oracle = dual_threshold_oracle(scores, alpha, 1e-12);
    if (closed.is_finite() != oracle.is_finite()) {
      ++mismatches;
    } else if (closed.is_finite() &&
               std::abs(closed.value() - oracle.value()) > 1e-9) {
      ++mismatches;
    }
  }
  report(5, "oracle mismatches over 100 instances = " +
                std::to_string(mismatches),
         mismatches == 0);
}

TEST_CASE("criterion 6: coverage bound over repeated recalibration") {
  ExperimentConfig cfg;
  cfg.dgp = SyntheticSpec::low_dim();
  cfg.alpha = 0.1;
  cfg.dataset_size = 1000;
  cfg.bidders_per_auction = 200;  // fresh test draws per group
  cfg.replications = 500;
  cfg.seed = 20240606;
  const auto record = run_coverage_experiment(cfg);

  // mean calibration count per group feeds the upper-bound slack q/(n_g+1)
  std::map<int, double> mean_n;
  std::map<int, std::size_t> rows;
  const auto& t = record.table;
  for (const auto& row : t.rows) {
    mean_n[static_cast<int>(row[1])] += row[3];
    ++rows[static_cast<int>(row[1])];
  }
  for (auto& [gid, sum] : mean_n) sum /= static_cast<double>(rows[gid]);

  const auto coverage = per_group(record, "coverage");
  bool pass = true;
  std::string desc;
  for (const auto& [gid, mean] : coverage.mean) {
    const double se = coverage.se.at(gid);
    const double lo = 0.9 - 3.0 * se;
    const double hi = 0.9 + 3.0 / (mean_n.at(gid) + 1.0) + 3.0 * se;
    pass = pass && mean >= lo && mean <= hi;
    desc += " z" + std::to_string(gid) + "=" + std::to_string(mean);
  }
  report(6, "mean coverage within [1-a-3se, 1-a+q/(n_g+1)+3se]:" + desc, pass);
}

TEST_CASE("criterion 7: estimator consistency (degree-8 fit)") {
  const SyntheticWorld world(SyntheticSpec::low_dim());
  EstimatorConfig est;

  auto mean_mse = [&](std::size_t n, std::size_t reps,
                      std::uint64_t seed) {
    double total = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      auto rng = make_rng(derive_seed(seed, rep));
      std::vector<HistoricalRecord> records;
      records.reserve(n);
      for (std::size_t i = 0; i < n; ++i) records.push_back(world.draw(rng));
      const auto parts = split(records, rng());
      const auto map = est.make_map(1, 1);
      const auto fitted = fit(parts.train, world.catalog(), map, 0.0);
      double mse = 0.0;
      for (const auto& rec : parts.calibration) {
        const double predicted = fitted.predict_group(
            rec.bidder_features, rec.group_id, world.catalog());
        const double truth =
            world.mean_value(rec.bidder_features, rec.group_id);
        mse += (predicted - truth) * (predicted - truth);
      }
      total += mse / static_cast<double>(parts.calibration.size());
    }
    return total / static_cast<double>(reps);
  };

  const double mse_1000 = mean_mse(1000, 60, 20240607);
  const double mse_5000 = mean_mse(5000, 30, 20240617);
  char desc[160];
  std::snprintf(desc, sizeof(desc),
                "avg MSE(mu_hat vs mu): N=1000 -> %.4f (<= 10), N=5000 -> "
                "%.4f (<= 0.5)",
                mse_1000, mse_5000);
  report(7, desc, mse_1000 <= 10.0 && mse_5000 <= 0.5);
}

TEST_CASE("criterion 8: single-bidder revenue lower bound") {
  ExperimentConfig cfg;
  cfg.dgp = SyntheticSpec::low_dim();
  cfg.alpha = 0.1;
  cfg.dataset_size = 5000;
  cfg.replications = 2000;
  cfg.seed = 20240608;
  const auto bound_report = verify_bound(cfg);

  bool pass = bound_report.groups.size() == 3;
  std::string desc;
  char buf[160];
  for (const auto& g : bound_report.groups) {
    pass = pass && g.h_defined && g.holds && g.h_hat >= 1.0;
    std::snprintf(buf, sizeof(buf), " z%d: rev=%.3f bound=%.3f h=%.3f;",
                  g.group_id, g.mean_revenue, g.bound, g.h_hat);
    desc += buf;
  }
  report(8, "mean revenue >= 2(1-a)/(1+h) * welfare - 3se:" + desc, pass);
}

TEST_CASE("criterion 9: two-point distribution reserve baseline") {
  const auto result = run_two_point_baseline(100.0, 20, 20000, 20240609);
  const double welfare_target = 2.0 - 1.0 / 20.0;
  const bool revenue_ok = std::abs(result.best_reserve_revenue - 1.0) <= 0.05;
  const bool welfare_ok =
      std::abs(result.mean_welfare - welfare_target) <= 0.05 * welfare_target;
  char desc[200];
  std::snprintf(desc, sizeof(desc),
                "best reserve %.0f earns %.4f (target 1 +- 5%%), mean welfare "
                "%.4f (target %.2f +- 5%%)",
                result.best_reserve, result.best_reserve_revenue,
                result.mean_welfare, welfare_target);
  report(9, desc, revenue_ok && welfare_ok);
}

TEST_CASE("criterion 10: reduced-dimension high-dim property suite") {
  ExperimentConfig coverage_cfg;
  coverage_cfg.dgp = SyntheticSpec::high_dim(10, 8, 20240610);
  coverage_cfg.alpha = 0.1;
  coverage_cfg.dataset_size = 4000;
  coverage_cfg.bidders_per_auction = 1000;
  coverage_cfg.replications = 150;
  coverage_cfg.seed = 20240610;
  coverage_cfg.estimator.degree = 2;
  const auto coverage = run_coverage_experiment(coverage_cfg);

  bool coverage_ok = true;
  const auto stats = per_group(coverage, "coverage");
  REQUIRE(stats.mean.size() == 8);
  double min_cov = 1.0, max_cov = 0.0;
  for (const auto& [gid, mean] : stats.mean) {
    coverage_ok = coverage_ok && mean >= 0.86 && mean <= 0.94;
    min_cov = std::min(min_cov, mean);
    max_cov = std::max(max_cov, mean);
  }

  ExperimentConfig revenue_cfg = coverage_cfg;
  revenue_cfg.bidders_per_auction = 50;
  revenue_cfg.replications = 400;
  revenue_cfg.seed = 20240611;
  const auto gap = run_gap_experiment(revenue_cfg);
  const double mean_gap = pooled_mean(gap, "gap");

  char desc[200];
  std::snprintf(desc, sizeof(desc),
                "coverage per group in [0.86, 0.94] (min %.4f, max %.4f); "
                "mean revenue gap vs second price %.3f >= 0",
                min_cov, max_cov, mean_gap);
  report(10, desc, coverage_ok && mean_gap >= 0.0);
}

TEST_CASE("criterion 11: homogeneity and translation invariance") {
  // Joint scaling: refit on scaled targets, scale bids, compare outcomes.
  const SyntheticWorld world(SyntheticSpec::low_dim());
  EstimatorConfig est;
  bool scaling_ok = true;
  std::size_t instances = 0;
  for (std::uint64_t block = 0; block < 20; ++block) {
    auto rng = make_rng(derive_seed(20240612, block));
    const double lambda = block % 2 == 0 ? 2.0 : 3.7;

    std::vector<HistoricalRecord> records;
    for (int i = 0; i < 400; ++i) records.push_back(world.draw(rng));
    const std::uint64_t split_seed = rng();
    auto scaled_records = records;
    for (auto& rec : scaled_records) rec.value *= lambda;

    const auto parts = split(records, split_seed);
    const auto scaled_parts = split(scaled_records, split_seed);
    const auto map = est.make_map(1, 1);
    const auto base_pred =
        calibrate(fit(parts.train, world.catalog(), map, 0.0),
                  parts.calibration, 0.1, world.catalog());
    const auto scaled_pred =
        calibrate(fit(scaled_parts.train, world.catalog(), map, 0.0),
                  scaled_parts.calibration, 0.1, world.catalog());

    for (int trial = 0; trial < 10; ++trial) {
      std::uniform_int_distribution<int> group_pick(0, 2);
      std::uniform_int_distribution<std::size_t> m_pick(1, 6);
      const auto instance =
          draw_auction(world, group_pick(rng), m_pick(rng), rng);
      auto scaled_instance = instance;
      for (auto& b : scaled_instance.bidders) b.bid *= lambda;

      const auto base = run_coad(base_pred, world.catalog(), instance);
      const auto scaled =
          run_coad(scaled_pred, world.catalog(), scaled_instance);
      ++instances;
      if (base.winner != scaled.winner) {
        scaling_ok = false;
        continue;
      }
      if (base.winner) {
        const double expected = lambda * base.payments[*base.winner];
        const double actual = scaled.payments[*scaled.winner];
        if (std::abs(actual - expected) >
            1e-9 * std::max(1.0, std::abs(expected))) {
          scaling_ok = false;
        }
      }
    }
  }
  report(11,
         "joint scaling preserves winner and scales payments (" +
             std::to_string(instances) + " instances)",
         scaling_ok && instances == 200);

  // Translation: dyadic values keep every score, hence S*, bit-identical.
  bool translation_ok = true;
  GroupCatalog catalog;
  catalog.add("g", {0.0});
  FittedEstimator zero;
  zero.map = FeatureMap::joint(1, 1, 1);
  zero.coefficients = {0.0, 0.0, 0.0};
  zero.standardization.mean.assign(3, 0.0);
  zero.standardization.scale.assign(3, 1.0);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(derive_seed(20240613, trial));
    std::vector<HistoricalRecord> calibration;
    const std::size_t n = 5 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      const double v =
          std::ldexp(static_cast<double>(rng() % (1 << 20)), -20);
      calibration.push_back({{0.0}, 0, v});
    }
    auto shifted_est = zero;
    shifted_est.coefficients[0] = 512.0;
    auto shifted_cal = calibration;
    for (auto& rec : shifted_cal) rec.value += 512.0;

    const auto base = calibrate(zero, calibration, 0.1, catalog);
    const auto shifted = calibrate(shifted_est, shifted_cal, 0.1, catalog);
    if (!(base.threshold(0) == shifted.threshold(0))) translation_ok = false;
  }
  report(11, "translation of values and intercept leaves S* unchanged exactly",
         translation_ok);
}
