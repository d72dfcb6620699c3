#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "coad/dataset.hpp"
#include "coad/rng.hpp"

using namespace coad;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kAuctionHeader =
    "auction_id,bidder_id,seller_id,bid_amount,bid_time_days,bidder_rating\n";

}  // namespace

TEST_CASE("low-dim mean function evaluates exactly at zero feature") {
  SyntheticWorld world(SyntheticSpec::low_dim());
  // group 0 is z=3: mu(0, 3) = e^0 * 3 + 1 = 4
  CHECK(world.mean_value({0.0}, 0) == doctest::Approx(4.0));
  CHECK(world.mean_value({0.0}, 2) == doctest::Approx(8.0));
}

TEST_CASE("synthetic generation is deterministic under a fixed seed") {
  const auto spec = SyntheticSpec::low_dim();
  const auto a = generate_synthetic(spec, 1000, 42);
  const auto b = generate_synthetic(spec, 1000, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].group_id == b[i].group_id);
    CHECK(a[i].value == b[i].value);  // bitwise
    CHECK(a[i].bidder_features == b[i].bidder_features);
  }
  const auto c = generate_synthetic(spec, 1000, 43);
  bool any_different = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    any_different |= a[i].value != c[i].value;
  }
  CHECK(any_different);
}

TEST_CASE("low-dim values match the lognormal mean identity") {
  // x | z=3 ~ N(0.3, 1), so E[v | z=3] = 3 * E[e^x] + 1 = 3 e^{0.8} + 1.
  const double expected = 3.0 * std::exp(0.3 + 0.5) + 1.0;
  const auto records = generate_synthetic(SyntheticSpec::low_dim(), 100000, 9);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& rec : records) {
    if (rec.group_id != 0) continue;
    sum += rec.value;
    sum_sq += rec.value * rec.value;
    ++n;
  }
  REQUIRE(n > 10000);
  const double mean = sum / static_cast<double>(n);
  const double var = (sum_sq - sum * mean) / static_cast<double>(n - 1);
  const double se = std::sqrt(var / static_cast<double>(n));
  CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("low-dim noise is bounded and values stay positive") {
  SyntheticWorld world(SyntheticSpec::low_dim());
  auto rng = make_rng(3);
  for (int i = 0; i < 5000; ++i) {
    const auto rec = world.draw(rng);
    const double mu = world.mean_value(rec.bidder_features, rec.group_id);
    CHECK(std::abs(rec.value - mu) <= 1.0);
    CHECK(rec.value > 0.0);
  }
}

TEST_CASE("high-dim world validates dimensions and reproduces coefficients") {
  CHECK_THROWS_AS(
      [] {
        SyntheticSpec bad = SyntheticSpec::low_dim();
        bad.bidder_dim = 2;
        SyntheticWorld w(bad);
        (void)w;
      }(),
      ConfigError);

  const auto spec = SyntheticSpec::high_dim(10, 8, 5);
  SyntheticWorld w1(spec), w2(spec);
  CHECK(w1.catalog().size() == 8);
  CHECK(w1.catalog().group(3).features == w2.catalog().group(3).features);
  auto r1 = make_rng(1), r2 = make_rng(1);
  CHECK(w1.draw(r1).value == w2.draw(r2).value);
}

TEST_CASE("split halves the data and preserves the multiset") {
  const auto records = generate_synthetic(SyntheticSpec::low_dim(), 1001, 4);

  SUBCASE("odd count: calibration gets the extra record") {
    const auto parts = split(records, 8);
    CHECK(parts.train.size() == 500);
    CHECK(parts.calibration.size() == 501);
  }

  SUBCASE("multiset preserved") {
    const auto parts = split(records, 8);
    std::vector<double> original, recombined;
    for (const auto& r : records) original.push_back(r.value);
    for (const auto& r : parts.train) recombined.push_back(r.value);
    for (const auto& r : parts.calibration) recombined.push_back(r.value);
    std::sort(original.begin(), original.end());
    std::sort(recombined.begin(), recombined.end());
    CHECK(original == recombined);
  }

  SUBCASE("deterministic under seed") {
    const auto p1 = split(records, 8);
    const auto p2 = split(records, 8);
    REQUIRE(p1.train.size() == p2.train.size());
    for (std::size_t i = 0; i < p1.train.size(); ++i) {
      CHECK(p1.train[i].value == p2.train[i].value);
    }
  }

  SUBCASE("two records split one per half") {
    const std::vector<HistoricalRecord> two(records.begin(),
                                            records.begin() + 2);
    const auto parts = split(two, 0);
    CHECK(parts.train.size() == 1);
    CHECK(parts.calibration.size() == 1);
  }

  SUBCASE("fewer than two records rejected") {
    const std::vector<HistoricalRecord> one(records.begin(),
                                            records.begin() + 1);
    CHECK_THROWS_AS(split(one, 0), DataError);
  }
}

TEST_CASE("ingest keeps each bidder's highest bid with its time") {
  const auto path = temp_file("coad_ingest_basic.csv");
  write_file(path, std::string(kAuctionHeader) +
                       "a1,b1,syschannel,80,1.0,220\n"
                       "a1,b1,syschannel,95,3.0,220\n"
                       "a1,b1,syschannel,110,5.0,220\n");
  const auto result = ingest_auction_csv(path.string(), PreprocessRules{});
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].value == doctest::Approx(110.0));
  CHECK(result.records[0].bidder_features[0] == doctest::Approx(5.0));
  CHECK(result.records[0].bidder_features[1] == doctest::Approx(220.0));
  std::filesystem::remove(path);
}

TEST_CASE("ingest drops final bids after the cutoff") {
  const auto path = temp_file("coad_ingest_cutoff.csv");
  write_file(path, std::string(kAuctionHeader) +
                       "a1,b1,syschannel,100,6.8,10\n"
                       "a1,b2,syschannel,90,6.0,10\n");
  const auto result = ingest_auction_csv(path.string(), PreprocessRules{});
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].value == doctest::Approx(90.0));
  std::filesystem::remove(path);
}

TEST_CASE("ingest restricts to whitelisted sellers") {
  const auto path = temp_file("coad_ingest_sellers.csv");
  write_file(path, std::string(kAuctionHeader) +
                       "a1,b1,syschannel,100,1.0,10\n"
                       "a2,b2,michael-33,90,1.0,10\n"
                       "a3,b3,saveking,80,1.0,10\n"
                       "a4,b4,randomseller,70,1.0,10\n");
  const auto result = ingest_auction_csv(path.string(), PreprocessRules{});
  CHECK(result.records.size() == 3);
  CHECK(result.catalog.size() == 3);
  CHECK(result.catalog.find_by_label("syschannel").has_value());
  CHECK(!result.catalog.find_by_label("randomseller").has_value());
  std::filesystem::remove(path);
}

TEST_CASE("ingest history mean excludes the current auction") {
  const auto path = temp_file("coad_ingest_history.csv");
  write_file(path, std::string(kAuctionHeader) +
                       "a1,b1,syschannel,100,1.0,10\n"
                       "a2,b1,syschannel,60,1.0,10\n"
                       "a3,b1,syschannel,80,1.0,10\n"
                       "a4,b2,syschannel,50,1.0,10\n");
  const auto result = ingest_auction_csv(path.string(), PreprocessRules{});
  REQUIRE(result.records.size() == 4);
  for (const auto& rec : result.records) {
    if (rec.value == 100.0) {
      CHECK(rec.bidder_features[2] == doctest::Approx(70.0));  // (60+80)/2
    }
    if (rec.value == 50.0) {
      // only auction for b2: falls back to the own final bid
      CHECK(rec.bidder_features[2] == doctest::Approx(50.0));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("ingest emits at most one record per auction and bidder") {
  const auto path = temp_file("coad_ingest_unique.csv");
  std::string body(kAuctionHeader);
  for (int i = 0; i < 5; ++i) {
    body += "a1,b1,syschannel," + std::to_string(50 + i) + ",1.0,10\n";
    body += "a2,b1,michael-33," + std::to_string(40 + i) + ",2.0,10\n";
  }
  write_file(path, body);
  const auto result = ingest_auction_csv(path.string(), PreprocessRules{});
  CHECK(result.records.size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("ingest error paths") {
  SUBCASE("missing column") {
    const auto path = temp_file("coad_ingest_badschema.csv");
    write_file(path, "auction_id,bidder_id,seller_id,bid_amount\n");
    CHECK_THROWS_WITH_AS(ingest_auction_csv(path.string(), PreprocessRules{}),
                         doctest::Contains("missing column"), DataError);
    std::filesystem::remove(path);
  }
  SUBCASE("non-numeric field names the row") {
    const auto path = temp_file("coad_ingest_badnum.csv");
    write_file(path, std::string(kAuctionHeader) +
                         "a1,b1,syschannel,oops,1.0,10\n");
    CHECK_THROWS_WITH_AS(ingest_auction_csv(path.string(), PreprocessRules{}),
                         doctest::Contains("row 2"), DataError);
    std::filesystem::remove(path);
  }
  SUBCASE("empty result after filtering") {
    const auto path = temp_file("coad_ingest_empty.csv");
    write_file(path,
               std::string(kAuctionHeader) + "a1,b1,unknown,100,1.0,10\n");
    CHECK_THROWS_AS(ingest_auction_csv(path.string(), PreprocessRules{}),
                    DataError);
    std::filesystem::remove(path);
  }
}

TEST_CASE("catalog encodes one-hot when feature vectors are absent") {
  GroupCatalog catalog;
  catalog.add("a");
  catalog.add("b");
  catalog.add("c");
  CHECK(catalog.encoded_dim() == 3);
  CHECK(catalog.encoded_features(1) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(catalog.group(7), DataError);
}
