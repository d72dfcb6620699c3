#include "coad/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

#include "coad/rng.hpp"

#ifndef COAD_GIT_DESCRIBE
#define COAD_GIT_DESCRIBE "unknown"
#endif

namespace coad::experiments {

namespace {

using nlohmann::json;

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const int workers =
      std::min<int>(threads, static_cast<int>(count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::size_t column_index(const Table& table, const std::string& name) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (table.columns[i] == name) return i;
  }
  throw std::logic_error("missing column " + name);
}

GroupMetric summarize(int group_id, const std::string& metric,
                      const std::vector<double>& values) {
  GroupMetric gm;
  gm.group_id = group_id;
  gm.metric = metric;
  gm.count = values.size();
  if (values.empty()) return gm;
  double sum = 0.0;
  for (double v : values) sum += v;
  gm.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - gm.mean) * (v - gm.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    gm.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return gm;
}

// Mean and standard error per group (and pooled) for each metric column.
void append_group_aggregates(MetricsRecord& record,
                             const std::vector<std::string>& metrics) {
  const std::size_t gcol = column_index(record.table, "group_id");
  for (const auto& metric : metrics) {
    const std::size_t mcol = column_index(record.table, metric);
    std::map<int, std::vector<double>> by_group;
    std::vector<double> pooled;
    for (const auto& row : record.table.rows) {
      by_group[static_cast<int>(row[gcol])].push_back(row[mcol]);
      pooled.push_back(row[mcol]);
    }
    for (const auto& [gid, values] : by_group) {
      record.aggregates.push_back(summarize(gid, metric, values));
    }
    record.aggregates.push_back(summarize(-1, metric, pooled));
  }
}

std::mt19937_64 replication_rng(const ExperimentConfig& cfg, std::size_t rep) {
  return make_rng(derive_seed(cfg.seed, rep));
}

std::string format_cell(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FeatureMap EstimatorConfig::make_map(int bidder_dim, int item_dim) const {
  if (kind == FeatureMapKind::PolynomialJoint) {
    return FeatureMap::joint(degree, bidder_dim, item_dim);
  }
  return FeatureMap::separate(degree_x, degree_z, bidder_dim, item_dim);
}

void ExperimentConfig::validate() const {
  dgp.validate();
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1)");
  }
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (n_grid.empty() || m_grid.empty()) {
    throw ConfigError("grids must be nonempty");
  }
  if (dataset_size < 2) throw ConfigError("dataset_size must be >= 2");
  if (bidders_per_auction < 1) {
    throw ConfigError("bidders_per_auction must be >= 1");
  }
}

PipelineRun make_pipeline(const SyntheticWorld& world, std::size_t n,
                          const EstimatorConfig& estimator, double alpha,
                          std::mt19937_64& rng) {
  std::vector<HistoricalRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) records.push_back(world.draw(rng));
  const SplitDataset parts = split(records, rng());
  const auto& catalog = world.catalog();
  const FeatureMap map = estimator.make_map(
      world.spec().bidder_dim, static_cast<int>(catalog.encoded_dim()));
  FittedEstimator fitted =
      fit(parts.train, catalog, map, estimator.ridge_lambda);
  std::vector<std::size_t> counts(catalog.size(), 0);
  for (const auto& rec : parts.calibration) {
    ++counts[static_cast<std::size_t>(rec.group_id)];
  }
  return PipelineRun{
      calibrate(std::move(fitted), parts.calibration, alpha, catalog),
      std::move(counts)};
}

CalibratedPredictor make_predictor(const SyntheticWorld& world, std::size_t n,
                                   const EstimatorConfig& estimator,
                                   double alpha, std::mt19937_64& rng) {
  return make_pipeline(world, n, estimator, alpha, rng).predictor;
}

AuctionInstance draw_auction(const SyntheticWorld& world, int group_id,
                             std::size_t bidders, std::mt19937_64& rng) {
  AuctionInstance instance;
  instance.group_id = group_id;
  instance.bidders.reserve(bidders);
  for (std::size_t i = 0; i < bidders; ++i) {
    HistoricalRecord rec = world.draw_in_group(group_id, rng);
    instance.bidders.push_back(
        Bidder{std::move(rec.bidder_features), rec.value});
  }
  return instance;
}

MetricsRecord run_coverage_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SyntheticWorld world(cfg.dgp);
  const std::size_t groups = world.catalog().size();

  MetricsRecord record;
  record.experiment = "coverage";
  record.table.columns = {"replication", "group_id", "coverage",
                          "n_cal_group", "s_star"};
  record.table.rows.resize(cfg.replications * groups);

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    auto rng = replication_rng(cfg, rep);
    const auto pipeline =
        make_pipeline(world, cfg.dataset_size, cfg.estimator, cfg.alpha, rng);
    const auto& predictor = pipeline.predictor;
    for (std::size_t g = 0; g < groups; ++g) {
      const int gid = static_cast<int>(g);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < cfg.bidders_per_auction; ++i) {
        const HistoricalRecord rec = world.draw_in_group(gid, rng);
        const auto interval = predictor.predict_interval(rec.bidder_features,
                                                         gid, world.catalog());
        if (rec.value >= interval.lower() && rec.value <= interval.upper()) {
          ++hits;
        }
      }
      const double coverage = static_cast<double>(hits) /
                              static_cast<double>(cfg.bidders_per_auction);
      record.table.rows[rep * groups + g] = {
          static_cast<double>(rep), static_cast<double>(gid), coverage,
          static_cast<double>(pipeline.calibration_counts[g]),
          predictor.threshold(gid).as_double()};
    }
  });

  append_group_aggregates(record, {"coverage"});
  return record;
}

MetricsRecord run_revenue_vs_n(const ExperimentConfig& cfg) {
  cfg.validate();
  const SyntheticWorld world(cfg.dgp);

  MetricsRecord record;
  record.experiment = "revenue_vs_n";
  record.table.columns = {"replication",  "n",       "group_id",
                          "coad_revenue", "second_price_revenue", "welfare"};
  record.table.rows.resize(cfg.replications * cfg.n_grid.size());

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    auto rng = replication_rng(cfg, rep);
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      const std::size_t n = cfg.n_grid[ni];
      const auto predictor =
          make_predictor(world, n, cfg.estimator, cfg.alpha, rng);
      std::uniform_int_distribution<int> pick(
          0, static_cast<int>(world.catalog().size()) - 1);
      const int gid = pick(rng);
      const auto instance =
          draw_auction(world, gid, cfg.bidders_per_auction, rng);
      const auto coad = run_coad(predictor, world.catalog(), instance);
      const auto sp = second_price(instance);
      record.table.rows[rep * cfg.n_grid.size() + ni] = {
          static_cast<double>(rep),     static_cast<double>(n),
          static_cast<double>(gid),     coad.revenue(),
          sp.revenue(),                 welfare_oracle(instance)};
    }
  });

  append_group_aggregates(
      record, {"coad_revenue", "second_price_revenue", "welfare"});
  return record;
}

MetricsRecord run_revenue_vs_m(const ExperimentConfig& cfg) {
  cfg.validate();
  const SyntheticWorld world(cfg.dgp);
  const std::size_t max_m =
      *std::max_element(cfg.m_grid.begin(), cfg.m_grid.end());

  MetricsRecord record;
  record.experiment = "revenue_vs_m";
  record.table.columns = {"replication",
                          "m",
                          "group_id",
                          "coad_revenue",
                          "second_price_revenue",
                          "welfare",
                          "prefix_violations"};
  record.table.rows.resize(cfg.replications * cfg.m_grid.size());
  std::vector<std::size_t> violations_per_rep(cfg.replications, 0);

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    auto rng = replication_rng(cfg, rep);
    const auto predictor =
        make_predictor(world, cfg.dataset_size, cfg.estimator, cfg.alpha, rng);
    std::uniform_int_distribution<int> pick(
        0, static_cast<int>(world.catalog().size()) - 1);
    const int gid = pick(rng);
    const auto full = draw_auction(world, gid, max_m, rng);

    // One bidder stream per replication; every prefix length is an auction.
    // Revenue along the prefix path must be nondecreasing, exactly.
    std::size_t violations = 0;
    double previous = 0.0;
    std::vector<double> revenue_at(max_m + 1, 0.0);
    std::vector<double> sp_at(max_m + 1, 0.0);
    std::vector<double> welfare_at(max_m + 1, 0.0);
    AuctionInstance prefix;
    prefix.group_id = gid;
    for (std::size_t m = 1; m <= max_m; ++m) {
      prefix.bidders.push_back(full.bidders[m - 1]);
      const auto coad = run_coad(predictor, world.catalog(), prefix);
      revenue_at[m] = coad.revenue();
      sp_at[m] = second_price(prefix).revenue();
      welfare_at[m] = welfare_oracle(prefix);
      if (revenue_at[m] < previous) ++violations;
      previous = revenue_at[m];
    }
    violations_per_rep[rep] = violations;

    for (std::size_t mi = 0; mi < cfg.m_grid.size(); ++mi) {
      const std::size_t m = cfg.m_grid[mi];
      record.table.rows[rep * cfg.m_grid.size() + mi] = {
          static_cast<double>(rep),     static_cast<double>(m),
          static_cast<double>(gid),     revenue_at[m],
          sp_at[m],                     welfare_at[m],
          static_cast<double>(violations)};
    }
  });

  append_group_aggregates(
      record, {"coad_revenue", "second_price_revenue", "welfare"});
  std::size_t total_violations = 0;
  for (std::size_t v : violations_per_rep) total_violations += v;
  record.scalars.emplace_back("prefix_monotonicity_violations",
                              static_cast<double>(total_violations));
  return record;
}

MetricsRecord run_gap_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SyntheticWorld world(cfg.dgp);

  MetricsRecord record;
  record.experiment = "gap";
  record.table.columns = {"replication", "group_id", "gap", "coad_revenue",
                          "second_price_revenue"};
  record.table.rows.resize(cfg.replications);

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    auto rng = replication_rng(cfg, rep);
    const auto predictor =
        make_predictor(world, cfg.dataset_size, cfg.estimator, cfg.alpha, rng);
    std::uniform_int_distribution<int> pick(
        0, static_cast<int>(world.catalog().size()) - 1);
    const int gid = pick(rng);
    const auto instance =
        draw_auction(world, gid, cfg.bidders_per_auction, rng);
    const auto coad = run_coad(predictor, world.catalog(), instance);
    const auto sp = second_price(instance);
    record.table.rows[rep] = {static_cast<double>(rep),
                              static_cast<double>(gid),
                              coad.revenue() - sp.revenue(), coad.revenue(),
                              sp.revenue()};
  });

  append_group_aggregates(record, {"gap"});

  // Sign fractions per group.
  const std::size_t gcol = column_index(record.table, "group_id");
  const std::size_t gap_col = column_index(record.table, "gap");
  std::map<int, std::vector<double>> ge;
  std::map<int, std::vector<double>> gt;
  for (const auto& row : record.table.rows) {
    const int gid = static_cast<int>(row[gcol]);
    ge[gid].push_back(row[gap_col] >= 0.0 ? 1.0 : 0.0);
    gt[gid].push_back(row[gap_col] > 0.0 ? 1.0 : 0.0);
  }
  std::vector<double> ge_all;
  std::vector<double> gt_all;
  for (const auto& [gid, values] : ge) {
    record.aggregates.push_back(summarize(gid, "frac_coad_ge_sp", values));
    ge_all.insert(ge_all.end(), values.begin(), values.end());
  }
  for (const auto& [gid, values] : gt) {
    record.aggregates.push_back(summarize(gid, "frac_coad_gt_sp", values));
    gt_all.insert(gt_all.end(), values.begin(), values.end());
  }
  record.aggregates.push_back(summarize(-1, "frac_coad_ge_sp", ge_all));
  record.aggregates.push_back(summarize(-1, "frac_coad_gt_sp", gt_all));
  return record;
}

double harmonic_number(std::size_t m) {
  double h = 0.0;
  for (std::size_t i = 1; i <= m; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

double revenue_lower_bound(double alpha, double h, std::size_t m, double welfare) {
  if (m < 1) throw ConfigError("m must be >= 1");
  return 2.0 * (1.0 - alpha) * welfare / ((1.0 + h) * harmonic_number(m));
}

HEstimate estimate_h(const CalibratedPredictor& predictor,
                     const SyntheticWorld& world, int group_id,
                     std::size_t n_draws, std::uint64_t seed) {
  auto rng = make_rng(seed);
  double sum_upper = 0.0;
  double sum_lower = 0.0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const HistoricalRecord rec = world.draw_in_group(group_id, rng);
    const auto interval = predictor.predict_interval(rec.bidder_features,
                                                     group_id, world.catalog());
    sum_upper += interval.upper();
    sum_lower += interval.lower();
  }
  HEstimate est;
  est.mean_upper = sum_upper / static_cast<double>(n_draws);
  est.mean_lower = sum_lower / static_cast<double>(n_draws);
  if (est.mean_lower > 0.0 && std::isfinite(est.mean_lower) &&
      std::isfinite(est.mean_upper)) {
    est.defined = true;
    est.h = est.mean_upper / est.mean_lower;
  }
  return est;
}

BoundReport verify_bound(const ExperimentConfig& cfg) {
  cfg.validate();
  const SyntheticWorld world(cfg.dgp);
  const std::size_t groups = world.catalog().size();
  const std::size_t reps = cfg.replications;

  // Per replication and group: one-bidder auction revenue, realized value,
  // and the bidder's interval endpoints.
  struct Draw {
    double revenue, value, lower, upper;
  };
  std::vector<std::vector<Draw>> draws(groups,
                                       std::vector<Draw>(reps, Draw{}));

  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    auto rng = replication_rng(cfg, rep);
    const auto predictor =
        make_predictor(world, cfg.dataset_size, cfg.estimator, cfg.alpha, rng);
    for (std::size_t g = 0; g < groups; ++g) {
      const int gid = static_cast<int>(g);
      const auto instance = draw_auction(world, gid, 1, rng);
      const auto outcome = run_coad(predictor, world.catalog(), instance);
      const auto& interval = outcome.assessments.front().interval;
      draws[g][rep] = Draw{outcome.revenue(), instance.bidders.front().bid,
                           interval.lower(), interval.upper()};
    }
  });

  BoundReport report;
  report.metrics.experiment = "bound";
  report.metrics.table.columns = {"replication", "group_id", "revenue",
                                  "welfare",     "lower",    "upper"};
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (std::size_t g = 0; g < groups; ++g) {
      const auto& d = draws[g][rep];
      report.metrics.table.rows.push_back(
          {static_cast<double>(rep), static_cast<double>(g), d.revenue,
           d.value, d.lower, d.upper});
    }
  }

  const double c = 2.0 * (1.0 - cfg.alpha);
  for (std::size_t g = 0; g < groups; ++g) {
    GroupBoundCheck check;
    check.group_id = static_cast<int>(g);
    check.replications = reps;

    double mr = 0.0, mw = 0.0, ml = 0.0, mu = 0.0;
    for (const auto& d : draws[g]) {
      mr += d.revenue;
      mw += d.value;
      ml += d.lower;
      mu += d.upper;
    }
    const double n = static_cast<double>(reps);
    mr /= n;
    mw /= n;
    ml /= n;
    mu /= n;
    check.mean_revenue = mr;
    check.welfare_hat = mw;
    if (ml > 0.0) {
      check.h_defined = true;
      check.h_hat = mu / ml;
    }

    // Sample covariance of (welfare, lower, upper) means, then a delta-method
    // variance for the bound B = c * W * L / (L + U).
    double cov[3][3] = {};
    double var_rev = 0.0;
    for (const auto& d : draws[g]) {
      const double e[3] = {d.value - mw, d.lower - ml, d.upper - mu};
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) cov[a][b] += e[a] * e[b];
      }
      var_rev += (d.revenue - mr) * (d.revenue - mr);
    }
    const double denom = n * (n - 1.0);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) cov[a][b] /= denom;  // covariance of means
    }
    var_rev /= denom;
    check.se_revenue = std::sqrt(var_rev);

    if (check.h_defined) {
      check.bound = c * mw * ml / (ml + mu);
      const double s = ml + mu;
      const double grad[3] = {c * ml / s, c * mw * mu / (s * s),
                              -c * mw * ml / (s * s)};
      double var_bound = 0.0;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) var_bound += grad[a] * cov[a][b] * grad[b];
      }
      check.bound_se = std::sqrt(std::max(0.0, var_bound));
      check.slack =
          3.0 * std::sqrt(var_rev + std::max(0.0, var_bound));
      check.holds = check.mean_revenue >= check.bound - check.slack;
    }
    report.groups.push_back(check);
  }
  return report;
}

TwoPointBaselineReport run_two_point_baseline(double high,
                                              std::size_t auctions_per_rep,
                                              std::size_t replications,
                                              std::uint64_t seed) {
  if (high <= 1.0) throw ConfigError("high value must exceed 1");
  TwoPointBaselineReport report;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double rev_unit = 0.0;
  double rev_high = 0.0;
  double welfare = 0.0;
  const std::size_t draws = auctions_per_rep * replications;
  for (std::size_t i = 0; i < draws; ++i) {
    const double value = unit(rng) < 1.0 / high ? high : 1.0;
    AuctionInstance instance;
    instance.bidders = {Bidder{{}, value}};
    rev_unit += uniform_reserve_second_price(instance, 1.0).revenue();
    rev_high += uniform_reserve_second_price(instance, high).revenue();
    welfare += welfare_oracle(instance);
  }
  report.draws = draws;
  report.revenue_at_unit_reserve = rev_unit / static_cast<double>(draws);
  report.revenue_at_high_reserve = rev_high / static_cast<double>(draws);
  report.mean_welfare = welfare / static_cast<double>(draws);
  if (report.revenue_at_high_reserve > report.revenue_at_unit_reserve) {
    report.best_reserve = high;
    report.best_reserve_revenue = report.revenue_at_high_reserve;
  } else {
    report.best_reserve = 1.0;
    report.best_reserve_revenue = report.revenue_at_unit_reserve;
  }
  return report;
}

void write_outputs(const MetricsRecord& record, const ExperimentConfig& cfg,
                   const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  const auto csv_path =
      std::filesystem::path(outdir) / (record.experiment + ".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write " + csv_path.string());
  for (std::size_t i = 0; i < record.table.columns.size(); ++i) {
    csv << (i ? "," : "") << record.table.columns[i];
  }
  csv << "\n";
  for (const auto& row : record.table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      csv << (i ? "," : "") << format_cell(row[i]);
    }
    csv << "\n";
  }

  json aggregates = json::array();
  for (const auto& gm : record.aggregates) {
    aggregates.push_back({{"group_id", gm.group_id},
                          {"metric", gm.metric},
                          {"mean", gm.mean},
                          {"std_error", gm.std_error},
                          {"count", gm.count}});
  }
  json scalars = json::object();
  for (const auto& [name, value] : record.scalars) scalars[name] = value;

  json config = {
      {"dgp", cfg.dgp.dgp == DgpId::LowDim51 ? "lowdim51" : "highdim52"},
      {"alpha", cfg.alpha},
      {"dataset_size", cfg.dataset_size},
      {"bidders_per_auction", cfg.bidders_per_auction},
      {"n_grid", cfg.n_grid},
      {"m_grid", cfg.m_grid},
      {"replications", cfg.replications},
      {"threads", cfg.threads},
      {"estimator",
       {{"kind", cfg.estimator.kind == FeatureMapKind::PolynomialJoint
                     ? "joint"
                     : "separate"},
        {"degree", cfg.estimator.degree},
        {"degree_x", cfg.estimator.degree_x},
        {"degree_z", cfg.estimator.degree_z},
        {"ridge_lambda", cfg.estimator.ridge_lambda}}}};

  json summary = {{"experiment", record.experiment},
                  {"seed", cfg.seed},
                  {"git", COAD_GIT_DESCRIBE},
                  {"config", config},
                  {"aggregates", aggregates},
                  {"scalars", scalars}};

  const auto json_path = std::filesystem::path(outdir) /
                         (record.experiment + "_summary.json");
  std::ofstream js(json_path);
  if (!js) throw DataError("cannot write " + json_path.string());
  js << summary.dump(2) << "\n";
}

}  // namespace coad::experiments
