#include "coad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "coad/rng.hpp"

namespace coad {

int GroupCatalog::add(std::string label, std::vector<double> features) {
  const int id = static_cast<int>(groups_.size());
  groups_.push_back(ItemGroup{id, std::move(label), std::move(features)});
  return id;
}

const ItemGroup& GroupCatalog::group(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= groups_.size()) {
    throw DataError("unknown group id " + std::to_string(id));
  }
  return groups_[static_cast<std::size_t>(id)];
}

std::optional<int> GroupCatalog::find_by_label(const std::string& label) const {
  for (const auto& g : groups_) {
    if (g.label == label) return g.id;
  }
  return std::nullopt;
}

bool GroupCatalog::has_feature_vectors() const {
  return !groups_.empty() && !groups_.front().features.empty();
}

std::vector<double> GroupCatalog::encoded_features(int id) const {
  const ItemGroup& g = group(id);
  if (!g.features.empty()) return g.features;
  std::vector<double> one_hot(groups_.size(), 0.0);
  one_hot[static_cast<std::size_t>(id)] = 1.0;
  return one_hot;
}

std::size_t GroupCatalog::encoded_dim() const {
  if (groups_.empty()) return 0;
  return has_feature_vectors() ? groups_.front().features.size()
                               : groups_.size();
}

SyntheticSpec SyntheticSpec::low_dim() {
  SyntheticSpec spec;
  spec.dgp = DgpId::LowDim51;
  spec.bidder_dim = 1;
  spec.item_dim = 1;
  spec.group_count = 3;
  return spec;
}

SyntheticSpec SyntheticSpec::high_dim(int dim, int groups,
                                      std::uint64_t coefficient_seed) {
  SyntheticSpec spec;
  spec.dgp = DgpId::HighDimQuad52;
  spec.bidder_dim = dim;
  spec.item_dim = dim;
  spec.group_count = groups;
  spec.coefficient_seed = coefficient_seed;
  return spec;
}

void SyntheticSpec::validate() const {
  if (dgp == DgpId::LowDim51) {
    if (bidder_dim != 1 || item_dim != 1 || group_count != 3) {
      throw ConfigError(
          "low-dimensional DGP requires d=1, k=1, q=3 (groups {3,5,7})");
    }
  } else {
    if (bidder_dim < 1 || item_dim < 1 || group_count < 1) {
      throw ConfigError("high-dimensional DGP requires positive dimensions");
    }
  }
}

SyntheticWorld::SyntheticWorld(const SyntheticSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.dgp == DgpId::LowDim51) {
    for (double z : {3.0, 5.0, 7.0}) {
      catalog_.add("z=" + std::to_string(static_cast<int>(z)), {z});
    }
    return;
  }
  auto rng = make_rng(spec_.coefficient_seed);
  for (int g = 0; g < spec_.group_count; ++g) {
    std::vector<double> z(static_cast<std::size_t>(spec_.item_dim));
    for (auto& v : z) v = standard_normal(rng);
    catalog_.add("group_" + std::to_string(g), std::move(z));
  }
  beta_x_.resize(static_cast<std::size_t>(spec_.bidder_dim));
  for (auto& b : beta_x_) b = uniform_real(rng, -1.0, 1.0);
  beta_z_.resize(static_cast<std::size_t>(spec_.item_dim));
  for (auto& b : beta_z_) b = uniform_real(rng, -1.0, 1.0);
  group_gain_.resize(catalog_.size());
  for (std::size_t g = 0; g < catalog_.size(); ++g) {
    const auto& z = catalog_.group(static_cast<int>(g)).features;
    const double bz =
        std::inner_product(z.begin(), z.end(), beta_z_.begin(), 0.0);
    const double s = std::sin(bz);
    group_gain_[g] = s * s;
  }
}

double SyntheticWorld::draw_noise(std::mt19937_64& rng) const {
  return spec_.noise == NoiseKind::TruncNormal ? truncated_standard_normal(rng)
                                               : uniform_real(rng, -1.0, 1.0);
}

double SyntheticWorld::mean_value(const std::vector<double>& x,
                                  int group_id) const {
  if (x.size() != static_cast<std::size_t>(spec_.bidder_dim)) {
    throw DataError("bidder feature dimension mismatch");
  }
  if (spec_.dgp == DgpId::LowDim51) {
    const double z = catalog_.group(group_id).features.front();
    return std::exp(x.front()) * z + 1.0;
  }
  const double bx =
      std::inner_product(x.begin(), x.end(), beta_x_.begin(), 0.0);
  return bx * bx * group_gain_[static_cast<std::size_t>(group_id)] + 1.0;
}

HistoricalRecord SyntheticWorld::draw_in_group(int group_id,
                                               std::mt19937_64& rng) const {
  HistoricalRecord rec;
  rec.group_id = group_id;
  if (spec_.dgp == DgpId::LowDim51) {
    const double z = catalog_.group(group_id).features.front();
    rec.bidder_features = {z / 10.0 + standard_normal(rng)};
  } else {
    const auto& z = catalog_.group(group_id).features;
    const double norm_sq =
        std::inner_product(z.begin(), z.end(), z.begin(), 0.0);
    const double mean = norm_sq / static_cast<double>(spec_.item_dim);
    rec.bidder_features.resize(static_cast<std::size_t>(spec_.bidder_dim));
    for (auto& v : rec.bidder_features) v = mean + standard_normal(rng);
  }
  rec.value = mean_value(rec.bidder_features, group_id) + draw_noise(rng);
  return rec;
}

HistoricalRecord SyntheticWorld::draw(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> pick(0,
                                          static_cast<int>(catalog_.size()) - 1);
  return draw_in_group(pick(rng), rng);
}

std::vector<HistoricalRecord> generate_synthetic(const SyntheticSpec& spec,
                                                 std::size_t n_records,
                                                 std::uint64_t seed) {
  if (n_records < 1) throw ConfigError("n_records must be >= 1");
  SyntheticWorld world(spec);
  auto rng = make_rng(seed);
  std::vector<HistoricalRecord> records;
  records.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) records.push_back(world.draw(rng));
  return records;
}

SplitDataset split(const std::vector<HistoricalRecord>& records,
                   std::uint64_t seed) {
  if (records.size() < 2) throw DataError("split needs at least 2 records");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitDataset out;
  out.seed = seed;
  const std::size_t n_train = records.size() / 2;  // calibration gets the odd one
  out.train.reserve(n_train);
  out.calibration.reserve(records.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.train : out.calibration).push_back(records[order[i]]);
  }
  return out;
}

namespace {

struct RawBid {
  std::string auction_id;
  std::string bidder_id;
  std::string seller_id;
  double amount = 0.0;
  double time_days = 0.0;
  double rating = 0.0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, std::size_t row,
                    const std::string& column) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("row " + std::to_string(row) + ": non-numeric value '" +
                    text + "' in column " + column);
  }
  return value;
}

}  // namespace

IngestResult ingest_auction_csv(const std::string& path,
                                const PreprocessRules& rules) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::string header;
  if (!std::getline(in, header)) throw DataError("empty file " + path);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  auto columns = split_csv_line(header);
  const std::vector<std::string> required = {"auction_id",   "bidder_id",
                                             "seller_id",    "bid_amount",
                                             "bid_time_days", "bidder_rating"};
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < columns.size(); ++i) index[columns[i]] = i;
  for (const auto& name : required) {
    if (!index.count(name)) throw DataError("missing column " + name);
  }

  std::vector<RawBid> bids;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < columns.size()) {
      throw DataError("row " + std::to_string(row) + ": expected " +
                      std::to_string(columns.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    RawBid b;
    b.auction_id = fields[index["auction_id"]];
    b.bidder_id = fields[index["bidder_id"]];
    b.seller_id = fields[index["seller_id"]];
    b.amount = parse_number(fields[index["bid_amount"]], row, "bid_amount");
    b.time_days =
        parse_number(fields[index["bid_time_days"]], row, "bid_time_days");
    b.rating =
        parse_number(fields[index["bidder_rating"]], row, "bidder_rating");
    bids.push_back(std::move(b));
  }

  // Seller -> group ids in file order, so re-ingesting the same file
  // reproduces the same catalog.
  GroupCatalog catalog;
  for (const auto& b : bids) {
    if (std::find(rules.seller_whitelist.begin(), rules.seller_whitelist.end(),
                  b.seller_id) == rules.seller_whitelist.end()) {
      continue;
    }
    if (!catalog.find_by_label(b.seller_id)) catalog.add(b.seller_id);
  }

  // Final bid = the bidder's highest bid within an auction.
  std::map<std::pair<std::string, std::string>, RawBid> final_bids;
  for (const auto& b : bids) {
    auto key = std::make_pair(b.auction_id, b.bidder_id);
    auto it = final_bids.find(key);
    if (it == final_bids.end() || b.amount > it->second.amount) {
      final_bids[key] = b;
    }
  }

  struct Kept {
    RawBid bid;
    int group_id;
  };
  std::vector<Kept> kept;
  for (const auto& [key, b] : final_bids) {
    if (b.time_days > rules.final_bid_cutoff_days) continue;
    auto gid = catalog.find_by_label(b.seller_id);
    if (!gid) continue;
    kept.push_back(Kept{b, *gid});
  }
  if (kept.empty()) throw DataError("no records left after preprocessing");

  // Mean of the bidder's final bids in their other kept auctions; a bidder
  // seen in only one auction falls back to that auction's final bid.
  std::map<std::string, std::pair<double, std::size_t>> per_bidder;
  for (const auto& k : kept) {
    auto& acc = per_bidder[k.bid.bidder_id];
    acc.first += k.bid.amount;
    acc.second += 1;
  }

  IngestResult out;
  out.catalog = std::move(catalog);
  out.records.reserve(kept.size());
  for (const auto& k : kept) {
    const auto& acc = per_bidder[k.bid.bidder_id];
    double history_mean = k.bid.amount;
    if (acc.second > 1) {
      history_mean = (acc.first - k.bid.amount) /
                     static_cast<double>(acc.second - 1);
    }
    HistoricalRecord rec;
    rec.bidder_features = {k.bid.time_days, k.bid.rating, history_mean};
    rec.group_id = k.group_id;
    rec.value = k.bid.amount;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace coad
