#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace coad {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One item type. `features` is the item feature vector carried for
// estimators that consume it; groups ingested from CSVs have no feature
// vector and are one-hot encoded downstream.
struct ItemGroup {
  int id = 0;
  std::string label;
  std::vector<double> features;
};

class GroupCatalog {
 public:
  GroupCatalog() = default;

  // Adds a group in first-seen order and returns its id.
  int add(std::string label, std::vector<double> features = {});

  const ItemGroup& group(int id) const;
  std::optional<int> find_by_label(const std::string& label) const;
  std::size_t size() const { return groups_.size(); }
  const std::vector<ItemGroup>& groups() const { return groups_; }

  bool has_feature_vectors() const;
  // Item features fed to estimators: the stored vector when present,
  // otherwise a one-hot encoding of the group id.
  std::vector<double> encoded_features(int id) const;
  std::size_t encoded_dim() const;

 private:
  std::vector<ItemGroup> groups_;
};

// One (bidder features, item group, value) triple.
struct HistoricalRecord {
  std::vector<double> bidder_features;
  int group_id = 0;
  double value = 0.0;
};

struct SplitDataset {
  std::vector<HistoricalRecord> train;
  std::vector<HistoricalRecord> calibration;
  std::uint64_t seed = 0;
};

enum class DgpId { LowDim51, HighDimQuad52 };
enum class NoiseKind { TruncNormal, Uniform };

struct SyntheticSpec {
  DgpId dgp = DgpId::LowDim51;
  int bidder_dim = 1;   // d
  int item_dim = 1;     // k
  int group_count = 3;  // q
  std::uint64_t coefficient_seed = 0;
  NoiseKind noise = NoiseKind::TruncNormal;

  static SyntheticSpec low_dim();
  static SyntheticSpec high_dim(int dim = 10, int groups = 30,
                                std::uint64_t coefficient_seed = 0);
  void validate() const;
};

// A fixed data-generating process: group vectors and model coefficients are
// drawn once from `coefficient_seed`, after which draws are pure functions
// of the supplied RNG. Keeping the world object around lets experiments draw
// fresh bidders conditional on a group and query the true regression mean.
class SyntheticWorld {
 public:
  explicit SyntheticWorld(const SyntheticSpec& spec);

  const SyntheticSpec& spec() const { return spec_; }
  const GroupCatalog& catalog() const { return catalog_; }

  HistoricalRecord draw(std::mt19937_64& rng) const;
  HistoricalRecord draw_in_group(int group_id, std::mt19937_64& rng) const;

  // True conditional mean mu(x, z) of the DGP.
  double mean_value(const std::vector<double>& x, int group_id) const;

 private:
  double draw_noise(std::mt19937_64& rng) const;

  SyntheticSpec spec_;
  GroupCatalog catalog_;
  std::vector<double> beta_x_;  // high-dim model only
  std::vector<double> beta_z_;
  std::vector<double> group_gain_;  // sin^2(beta_z . z) per group
};

std::vector<HistoricalRecord> generate_synthetic(const SyntheticSpec& spec,
                                                 std::size_t n_records,
                                                 std::uint64_t seed);

// Uniform random partition: floor(N/2) train, ceil(N/2) calibration.
SplitDataset split(const std::vector<HistoricalRecord>& records,
                   std::uint64_t seed);

struct PreprocessRules {
  double final_bid_cutoff_days = 6.5;
  std::vector<std::string> seller_whitelist = {"syschannel", "michael-33",
                                               "saveking"};
};

struct IngestResult {
  std::vector<HistoricalRecord> records;
  GroupCatalog catalog;
};

// Reads an auction CSV (columns auction_id, bidder_id, seller_id,
// bid_amount, bid_time_days, bidder_rating) and applies the preprocessing
// rules: keep each bidder's highest bid per auction as their final bid,
// drop final bids placed after the cutoff, restrict to whitelisted sellers
// (mapped to item groups in first-seen order). Bidder features are
// (bid_time, rating, mean final bid over the bidder's other kept auctions);
// a bidder with no other auction falls back to their own final bid.
IngestResult ingest_auction_csv(const std::string& path,
                                const PreprocessRules& rules);

}  // namespace coad
