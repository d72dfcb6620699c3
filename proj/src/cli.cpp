#include "coad/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "coad/conformal.hpp"
#include "coad/dataset.hpp"
#include "coad/experiments.hpp"
#include "coad/mechanism.hpp"
#include "coad/rng.hpp"
#include "coad/serialization.hpp"

namespace coad::cli {

namespace {

namespace exps = coad::experiments;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("COAD_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("COAD_SEED must be an unsigned integer");
    }
  }
  return 0;
}

struct DgpFlags {
  std::string dgp = "lowdim51";
  int dim = 10;
  int groups = 30;
  std::string noise = "truncnormal";
  std::uint64_t coefficient_seed = 0;

  SyntheticSpec make_spec() const {
    SyntheticSpec spec = dgp == "lowdim51"
                             ? SyntheticSpec::low_dim()
                             : SyntheticSpec::high_dim(dim, groups,
                                                       coefficient_seed);
    spec.noise =
        noise == "uniform" ? NoiseKind::Uniform : NoiseKind::TruncNormal;
    return spec;
  }
};

void add_dgp_flags(CLI::App* cmd, DgpFlags& flags) {
  cmd->add_option("--dgp", flags.dgp, "data-generating process")
      ->check(CLI::IsMember({"lowdim51", "highdim52"}))
      ->capture_default_str();
  cmd->add_option("--dim", flags.dim,
                  "bidder/item dimension (highdim52 only)")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  cmd->add_option("--groups", flags.groups, "group count (highdim52 only)")
      ->check(CLI::Range(1, 10000))
      ->capture_default_str();
  cmd->add_option("--noise", flags.noise, "noise distribution")
      ->check(CLI::IsMember({"truncnormal", "uniform"}))
      ->capture_default_str();
  cmd->add_option("--coefficient-seed", flags.coefficient_seed,
                  "seed for fixed model coefficients")
      ->capture_default_str();
}

struct EstimatorFlags {
  std::string map = "joint";
  int degree = 8;
  int degree_x = 8;
  int degree_z = 8;
  double ridge = 0.0;
  bool degree_given = false;

  exps::EstimatorConfig make_config(const SyntheticSpec& spec) const {
    exps::EstimatorConfig cfg;
    cfg.kind = map == "joint" ? FeatureMapKind::PolynomialJoint
                              : FeatureMapKind::PolynomialSeparate;
    cfg.degree = degree;
    cfg.degree_x = degree_x;
    cfg.degree_z = degree_z;
    cfg.ridge_lambda = ridge;
    if (!degree_given && spec.dgp == DgpId::HighDimQuad52) {
      cfg.degree = 2;
      cfg.degree_x = 2;
      cfg.degree_z = 2;
    }
    return cfg;
  }
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& flags) {
  cmd->add_option("--map", flags.map, "feature map")
      ->check(CLI::IsMember({"joint", "separate"}))
      ->capture_default_str();
  cmd->add_option("--degree", flags.degree, "polynomial degree (joint map)")
      ->check(CLI::Range(0, 16))
      ->capture_default_str()
      ->each([&flags](const std::string&) { flags.degree_given = true; });
  cmd->add_option("--degree-x", flags.degree_x, "bidder-feature degree")
      ->check(CLI::Range(0, 16))
      ->capture_default_str();
  cmd->add_option("--degree-z", flags.degree_z, "item-feature degree")
      ->check(CLI::Range(0, 16))
      ->capture_default_str();
  cmd->add_option("--ridge", flags.ridge, "ridge penalty")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

struct LoadedData {
  std::vector<HistoricalRecord> records;
  GroupCatalog catalog;
};

LoadedData load_data(const std::string& data_path,
                     const std::string& catalog_path) {
  LoadedData data;
  data.records = io::read_records_csv(data_path);
  data.catalog = io::catalog_from_json(io::read_json_file(catalog_path));
  return data;
}

CalibratedPredictor pipeline_from_files(
    const LoadedData& data, const EstimatorFlags& est_flags, double alpha,
    std::uint64_t seed, std::vector<std::size_t>* group_counts = nullptr) {
  const SplitDataset parts = split(data.records, seed);
  exps::EstimatorConfig est;
  est.kind = est_flags.map == "joint" ? FeatureMapKind::PolynomialJoint
                                      : FeatureMapKind::PolynomialSeparate;
  est.degree = est_flags.degree;
  est.degree_x = est_flags.degree_x;
  est.degree_z = est_flags.degree_z;
  est.ridge_lambda = est_flags.ridge;
  const FeatureMap map =
      est.make_map(static_cast<int>(parts.train.front().bidder_features.size()),
                   static_cast<int>(data.catalog.encoded_dim()));
  FittedEstimator fitted =
      fit(parts.train, data.catalog, map, est.ridge_lambda);
  if (group_counts) {
    group_counts->assign(data.catalog.size(), 0);
    for (const auto& rec : parts.calibration) {
      ++(*group_counts)[static_cast<std::size_t>(rec.group_id)];
    }
  }
  return calibrate(std::move(fitted), parts.calibration, alpha, data.catalog);
}

int cmd_generate(const DgpFlags& dgp, std::size_t n, std::uint64_t seed,
                 const std::string& output, std::string catalog_out) {
  const SyntheticSpec spec = dgp.make_spec();
  const SyntheticWorld world(spec);
  const auto records = generate_synthetic(spec, n, seed);
  io::write_records_csv(records, output);
  if (catalog_out.empty()) catalog_out = sibling_path(output, ".catalog.json");
  io::write_json_file(io::catalog_to_json(world.catalog()), catalog_out);
  std::cout << "wrote " << records.size() << " records to " << output
            << " (catalog: " << catalog_out << ")\n";
  return kExitOk;
}

int cmd_ingest(const std::string& input, const std::string& output,
               std::string catalog_out, double cutoff,
               const std::vector<std::string>& sellers) {
  PreprocessRules rules;
  rules.final_bid_cutoff_days = cutoff;
  if (!sellers.empty()) rules.seller_whitelist = sellers;
  const IngestResult result = ingest_auction_csv(input, rules);
  io::write_records_csv(result.records, output);
  if (catalog_out.empty()) catalog_out = sibling_path(output, ".catalog.json");
  io::write_json_file(io::catalog_to_json(result.catalog), catalog_out);
  std::cout << "kept " << result.records.size() << " records across "
            << result.catalog.size() << " groups\n";
  return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& catalog_path,
            const EstimatorFlags& est_flags, std::uint64_t seed,
            const std::string& output) {
  const LoadedData data = load_data(data_path, catalog_path);
  const SplitDataset parts = split(data.records, seed);
  FeatureMap map =
      est_flags.map == "joint"
          ? FeatureMap::joint(
                est_flags.degree,
                static_cast<int>(parts.train.front().bidder_features.size()),
                static_cast<int>(data.catalog.encoded_dim()))
          : FeatureMap::separate(
                est_flags.degree_x, est_flags.degree_z,
                static_cast<int>(parts.train.front().bidder_features.size()),
                static_cast<int>(data.catalog.encoded_dim()));
  const FittedEstimator estimator =
      fit(parts.train, data.catalog, map, est_flags.ridge);
  io::write_json_file(io::estimator_to_json(estimator), output);
  std::cout << "fitted " << map.output_dim() << " coefficients on "
            << parts.train.size() << " training records -> " << output << "\n";
  return kExitOk;
}

int cmd_calibrate(const std::string& data_path,
                  const std::string& catalog_path,
                  const EstimatorFlags& est_flags, double alpha,
                  std::uint64_t seed, const std::string& output) {
  const LoadedData data = load_data(data_path, catalog_path);
  std::vector<std::size_t> counts;
  const CalibratedPredictor predictor =
      pipeline_from_files(data, est_flags, alpha, seed, &counts);
  io::write_json_file(io::predictor_to_json(predictor), output);
  for (std::size_t g = 0; g < data.catalog.size(); ++g) {
    const auto t = predictor.threshold(static_cast<int>(g));
    std::cout << "group " << g << " (" << data.catalog.group(static_cast<int>(g)).label
              << "): n_cal=" << counts[g] << " S*="
              << (t.is_finite() ? io::format_double(t.value()) : "inf")
              << "\n";
  }
  std::cout << "wrote predictor to " << output << "\n";
  return kExitOk;
}

int cmd_auction(const std::string& predictor_path,
                const std::string& data_path, const std::string& catalog_path,
                const EstimatorFlags& est_flags, double alpha,
                std::uint64_t seed, const std::string& bidders_path,
                const std::string& output) {
  const auto bidders = io::bidders_from_json(io::read_json_file(bidders_path));

  std::optional<CalibratedPredictor> predictor;
  GroupCatalog catalog;
  if (!predictor_path.empty()) {
    predictor = io::predictor_from_json(io::read_json_file(predictor_path));
    if (!catalog_path.empty()) {
      catalog = io::catalog_from_json(io::read_json_file(catalog_path));
    } else {
      // Without a catalog the groups carry no feature vectors; synthesize
      // one-hot groups matching the predictor's threshold table.
      for (std::size_t g = 0; g < predictor->thresholds().size(); ++g) {
        catalog.add("group_" + std::to_string(g));
      }
    }
  } else {
    const LoadedData data = load_data(data_path, catalog_path);
    catalog = data.catalog;
    predictor = pipeline_from_files(data, est_flags, alpha, seed);
  }

  AuctionInstance instance;
  instance.group_id = bidders.group_id;
  instance.bidders = bidders.bidders;
  const AuctionOutcome outcome = run_coad(*predictor, catalog, instance);
  const auto j = io::outcome_to_json(outcome);
  if (output.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    io::write_json_file(j, output);
    std::cout << "wrote outcome to " << output << "\n";
  }
  return kExitOk;
}

int cmd_experiment(const std::string& name, const DgpFlags& dgp_flags,
                   const EstimatorFlags& est_flags, double alpha,
                   std::size_t n, std::size_t m,
                   std::vector<std::size_t> n_grid,
                   std::vector<std::size_t> m_grid, std::size_t reps,
                   std::uint64_t seed, int threads, bool single_thread,
                   const std::string& outdir) {
  exps::ExperimentConfig cfg;
  cfg.dgp = dgp_flags.make_spec();
  cfg.alpha = alpha;
  cfg.dataset_size = n;
  cfg.bidders_per_auction = m;
  if (!n_grid.empty()) cfg.n_grid = std::move(n_grid);
  if (!m_grid.empty()) cfg.m_grid = std::move(m_grid);
  cfg.replications = reps;
  cfg.seed = seed;
  cfg.estimator = est_flags.make_config(cfg.dgp);
  cfg.threads = single_thread ? 1 : threads;

  exps::MetricsRecord record;
  if (name == "coverage") {
    record = exps::run_coverage_experiment(cfg);
  } else if (name == "revenue_vs_n") {
    record = exps::run_revenue_vs_n(cfg);
  } else if (name == "revenue_vs_m") {
    record = exps::run_revenue_vs_m(cfg);
  } else if (name == "gap") {
    record = exps::run_gap_experiment(cfg);
  } else {
    const exps::BoundReport report = exps::verify_bound(cfg);
    record = report.metrics;
    bool all_hold = true;
    for (const auto& g : report.groups) {
      std::cout << "group " << g.group_id << ": mean_revenue="
                << g.mean_revenue << " bound=" << g.bound
                << " slack=" << g.slack << " h_hat=" << g.h_hat
                << (g.holds ? " [holds]" : " [VIOLATED]") << "\n";
      all_hold = all_hold && g.holds;
    }
    exps::write_outputs(record, cfg, outdir);
    std::cout << "wrote " << outdir << "/" << record.experiment
              << ".csv and summary\n";
    return all_hold ? kExitOk : kExitRuntime;
  }
  exps::write_outputs(record, cfg, outdir);
  for (const auto& gm : record.aggregates) {
    if (gm.group_id < 0) {
      std::cout << gm.metric << ": mean=" << gm.mean
                << " se=" << gm.std_error << " (n=" << gm.count << ")\n";
    }
  }
  std::cout << "wrote " << outdir << "/" << record.experiment
            << ".csv and summary\n";
  return kExitOk;
}

int cmd_audit(std::size_t cases, double alpha, std::uint64_t seed,
              const std::string& inject, std::size_t grid_points,
              std::size_t max_bidders) {
  const ReserveBoundary boundary = inject == "strict-gt"
                                       ? ReserveBoundary::StrictFault
                                       : ReserveBoundary::Inclusive;
  const SyntheticWorld world(SyntheticSpec::low_dim());
  exps::EstimatorConfig est;  // degree-8 joint, the low-dim default

  std::size_t deviation_count = 0;
  std::size_t ir_count = 0;
  std::size_t boundary_count = 0;
  std::size_t monotonicity_count = 0;
  std::size_t oracle_count = 0;

  const double alphas[] = {0.05, 0.1, 0.3, 0.5};
  std::optional<CalibratedPredictor> predictor;
  for (std::size_t c = 0; c < cases; ++c) {
    auto rng = make_rng(derive_seed(seed, c));
    if (c % 50 == 0 || !predictor) {
      predictor = exps::make_predictor(world, 400, est, alpha, rng);
    }
    std::uniform_int_distribution<int> group_pick(
        0, static_cast<int>(world.catalog().size()) - 1);
    std::uniform_int_distribution<std::size_t> m_pick(1, max_bidders);
    const int gid = group_pick(rng);
    const auto instance =
        exps::draw_auction(world, gid, m_pick(rng), rng);

    double max_bid = 0.0;
    for (const auto& b : instance.bidders) max_bid = std::max(max_bid, b.bid);
    const auto grid = make_bid_grid(max_bid, grid_points);
    const auto violations =
        ic_audit(*predictor, world.catalog(), instance, grid, boundary);
    for (const auto& v : violations) {
      switch (v.kind) {
        case ViolationKind::ProfitableDeviation: ++deviation_count; break;
        case ViolationKind::NegativeTruthfulUtility: ++ir_count; break;
        case ViolationKind::BoundaryMisallocation: ++boundary_count; break;
      }
    }

    // IR at truthful bids, exact.
    const auto outcome = run_coad(*predictor, world.catalog(), instance, boundary);
    for (std::size_t i = 0; i < instance.bidders.size(); ++i) {
      if (outcome.allocation[i] == 1) {
        if (outcome.payments[i] > instance.bidders[i].bid) ++ir_count;
      } else if (outcome.payments[i] != 0.0) {
        ++ir_count;
      }
    }

    // Coupled monotonicity: one appended bidder never lowers revenue.
    AuctionInstance extended = instance;
    const HistoricalRecord extra = world.draw_in_group(gid, rng);
    extended.bidders.push_back(Bidder{extra.bidder_features, extra.value});
    const auto extended_outcome =
        run_coad(*predictor, world.catalog(), extended, boundary);
    if (extended_outcome.revenue() < outcome.revenue()) ++monotonicity_count;

    // Dual-oracle equivalence on a fresh random score set.
    std::uniform_int_distribution<std::size_t> n_pick(0, 20);
    const double a = alphas[c % 4];
    std::vector<double> scores(n_pick(rng));
    for (auto& s : scores) s = uniform_real(rng, 0.0, 10.0);
    std::sort(scores.begin(), scores.end());
    const Threshold closed = compute_group_threshold(scores, a);
    const Threshold oracle = dual_threshold_oracle(scores, a, 1e-12);
    if (closed.is_finite() != oracle.is_finite()) {
      ++oracle_count;
    } else if (closed.is_finite() &&
               std::abs(closed.value() - oracle.value()) > 1e-9) {
      ++oracle_count;
    }
  }

  const std::size_t total = deviation_count + ir_count + boundary_count +
                            monotonicity_count + oracle_count;
  std::cout << "audit over " << cases << " cases"
            << (boundary == ReserveBoundary::StrictFault
                    ? " (fault injected: strict-gt)"
                    : "")
            << "\n"
            << "  profitable deviations:    " << deviation_count << "\n"
            << "  negative utilities / IR:  " << ir_count << "\n"
            << "  boundary anomalies:       " << boundary_count << "\n"
            << "  monotonicity violations:  " << monotonicity_count << "\n"
            << "  dual-oracle mismatches:   " << oracle_count << "\n"
            << (total == 0 ? "PASS" : "FAIL") << "\n";
  return total == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"conformal prediction-interval auctions: data, calibration, "
               "mechanism, experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed may appear after the subcommand

  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--seed", seed, "global random seed (env COAD_SEED fallback)")
      ->each([&seed_given](const std::string&) { seed_given = true; });

  // generate
  auto* generate = app.add_subcommand("generate", "draw a synthetic dataset");
  DgpFlags gen_dgp;
  add_dgp_flags(generate, gen_dgp);
  std::size_t gen_n = 1000;
  std::string gen_out;
  std::string gen_catalog_out;
  generate->add_option("--n", gen_n, "number of records")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}))
      ->capture_default_str();
  generate->add_option("-o,--output", gen_out, "records CSV path")->required();
  generate->add_option("--catalog-out", gen_catalog_out,
                       "catalog JSON path (default: <output>.catalog.json)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "preprocess an auction CSV");
  std::string ingest_in, ingest_out, ingest_catalog_out;
  double ingest_cutoff = 6.5;
  std::vector<std::string> ingest_sellers;
  ingest->add_option("--input", ingest_in, "raw auction CSV")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("-o,--output", ingest_out, "records CSV path")
      ->required();
  ingest->add_option("--catalog-out", ingest_catalog_out,
                     "catalog JSON path (default: <output>.catalog.json)");
  ingest->add_option("--cutoff", ingest_cutoff,
                     "final-bid time cutoff in days")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  ingest->add_option("--sellers", ingest_sellers,
                     "seller whitelist (default: the three primary sellers)")
      ->delimiter(',');

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit the value estimator");
  std::string fit_data, fit_catalog, fit_out;
  EstimatorFlags fit_est;
  fit_cmd->add_option("--data", fit_data, "records CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--catalog", fit_catalog, "catalog JSON")
      ->required()
      ->check(CLI::ExistingFile);
  add_estimator_flags(fit_cmd, fit_est);
  fit_cmd->add_option("-o,--output", fit_out, "estimator JSON path")
      ->required();

  // calibrate
  auto* cal_cmd =
      app.add_subcommand("calibrate", "fit and calibrate prediction intervals");
  std::string cal_data, cal_catalog, cal_out;
  EstimatorFlags cal_est;
  double cal_alpha = 0.1;
  cal_cmd->add_option("--data", cal_data, "records CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cal_cmd->add_option("--catalog", cal_catalog, "catalog JSON")
      ->required()
      ->check(CLI::ExistingFile);
  add_estimator_flags(cal_cmd, cal_est);
  cal_cmd->add_option("--alpha", cal_alpha, "miscoverage level")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9))
      ->capture_default_str();
  cal_cmd->add_option("-o,--output", cal_out, "predictor JSON path")
      ->required();

  // auction
  auto* auc_cmd = app.add_subcommand("auction", "run one auction");
  std::string auc_predictor, auc_data, auc_catalog, auc_bidders, auc_out;
  EstimatorFlags auc_est;
  double auc_alpha = 0.1;
  auc_cmd->add_option("--predictor", auc_predictor,
                      "calibrated predictor JSON")
      ->check(CLI::ExistingFile);
  auc_cmd->add_option("--data", auc_data, "records CSV (fit+calibrate path)")
      ->check(CLI::ExistingFile);
  auc_cmd->add_option("--catalog", auc_catalog, "catalog JSON")
      ->check(CLI::ExistingFile);
  add_estimator_flags(auc_cmd, auc_est);
  auc_cmd->add_option("--alpha", auc_alpha, "miscoverage level")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9))
      ->capture_default_str();
  auc_cmd->add_option("--bidders", auc_bidders,
                      "bidders JSON ({group, bidders:[{features, bid}]})")
      ->required()
      ->check(CLI::ExistingFile);
  auc_cmd->add_option("-o,--output", auc_out,
                      "outcome JSON path (default: stdout)");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "run a Monte Carlo study");
  std::string exp_name;
  DgpFlags exp_dgp;
  EstimatorFlags exp_est;
  double exp_alpha = 0.1;
  std::size_t exp_n = 1000;
  std::size_t exp_m = 50;
  std::vector<std::size_t> exp_n_grid;
  std::vector<std::size_t> exp_m_grid;
  std::size_t exp_reps = 200;
  int exp_threads = 1;
  bool exp_single = false;
  std::string exp_outdir = "out";
  exp_cmd->add_option("--name", exp_name, "experiment name")
      ->required()
      ->check(CLI::IsMember(
          {"coverage", "revenue_vs_n", "revenue_vs_m", "gap", "bound"}));
  add_dgp_flags(exp_cmd, exp_dgp);
  add_estimator_flags(exp_cmd, exp_est);
  exp_cmd->add_option("--alpha", exp_alpha, "miscoverage level")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9))
      ->capture_default_str();
  exp_cmd->add_option("--n", exp_n, "historical records per replication")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000000}))
      ->capture_default_str();
  exp_cmd->add_option("--m", exp_m, "bidders per auction / draws per group")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}))
      ->capture_default_str();
  exp_cmd->add_option("--n-grid", exp_n_grid, "dataset sizes (revenue_vs_n)")
      ->delimiter(',');
  exp_cmd->add_option("--m-grid", exp_m_grid, "bidder counts (revenue_vs_m)")
      ->delimiter(',');
  exp_cmd->add_option("--reps", exp_reps, "replications")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}))
      ->capture_default_str();
  exp_cmd->add_option("--threads", exp_threads, "worker threads")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  exp_cmd->add_flag("--single-thread", exp_single,
                    "force single-threaded execution");
  exp_cmd->add_option("--outdir", exp_outdir, "output directory")
      ->capture_default_str();

  // audit
  auto* audit_cmd =
      app.add_subcommand("audit", "incentive, monotonicity and oracle audit");
  std::size_t audit_cases = 500;
  double audit_alpha = 0.1;
  std::string audit_inject;
  std::size_t audit_grid_points = 101;
  std::size_t audit_max_bidders = 6;
  audit_cmd->add_option("--cases", audit_cases, "number of random cases")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}))
      ->capture_default_str();
  audit_cmd->add_option("--alpha", audit_alpha, "miscoverage level")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9))
      ->capture_default_str();
  audit_cmd->add_option("--inject", audit_inject,
                        "fault injection mode (strict-gt)")
      ->check(CLI::IsMember({"strict-gt"}));
  audit_cmd->add_option("--grid-points", audit_grid_points,
                        "bid grid resolution")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}))
      ->capture_default_str();
  audit_cmd->add_option("--max-bidders", audit_max_bidders,
                        "max bidders per random instance")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!seed_given) seed = default_seed();
    if (generate->parsed()) {
      return cmd_generate(gen_dgp, gen_n, seed, gen_out, gen_catalog_out);
    }
    if (ingest->parsed()) {
      return cmd_ingest(ingest_in, ingest_out, ingest_catalog_out,
                        ingest_cutoff, ingest_sellers);
    }
    if (fit_cmd->parsed()) {
      return cmd_fit(fit_data, fit_catalog, fit_est, seed, fit_out);
    }
    if (cal_cmd->parsed()) {
      return cmd_calibrate(cal_data, cal_catalog, cal_est, cal_alpha, seed,
                           cal_out);
    }
    if (auc_cmd->parsed()) {
      if (auc_predictor.empty() && (auc_data.empty() || auc_catalog.empty())) {
        std::cerr << "auction requires either --predictor or both --data and "
                     "--catalog\n";
        return kExitUsage;
      }
      return cmd_auction(auc_predictor, auc_data, auc_catalog, auc_est,
                         auc_alpha, seed, auc_bidders, auc_out);
    }
    if (exp_cmd->parsed()) {
      return cmd_experiment(exp_name, exp_dgp, exp_est, exp_alpha, exp_n,
                            exp_m, exp_n_grid, exp_m_grid, exp_reps, seed,
                            exp_threads, exp_single, exp_outdir);
    }
    if (audit_cmd->parsed()) {
      return cmd_audit(audit_cases, audit_alpha, seed, audit_inject,
                       audit_grid_points, audit_max_bidders);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace coad::cli
