#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "coad/dataset.hpp"
#include "coad/regression.hpp"
#include "coad/rng.hpp"

using namespace coad;

namespace {

// Single group with one-hot encoding; the constant group column overlaps
// the intercept, which the minimum-norm solve handles.
GroupCatalog single_group_catalog() {
  GroupCatalog catalog;
  catalog.add("g");
  return catalog;
}

std::vector<HistoricalRecord> linear_records() {
  return {{{1.0}, 0, 2.0}, {{2.0}, 0, 4.0}, {{3.0}, 0, 6.0}};
}

}  // namespace

TEST_CASE("degree-1 joint expansion is (1, x, z)") {
  const auto map = FeatureMap::joint(1, 1, 1);
  CHECK(build_features(map, {2.0}, {3.0}) ==
        std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("degree-2 joint expansion lists all monomials up to total degree 2") {
  const auto map = FeatureMap::joint(2, 1, 1);
  CHECK(build_features(map, {2.0}, {3.0}) ==
        std::vector<double>{1.0, 2.0, 3.0, 4.0, 6.0, 9.0});
}

TEST_CASE("joint output dimension counts monomials") {
  // Independent count: pairs (i, j) with i + j <= 8.
  std::size_t expected = 0;
  for (int i = 0; i <= 8; ++i) {
    for (int j = 0; i + j <= 8; ++j) ++expected;
  }
  CHECK(expected == 45);
  CHECK(FeatureMap::joint(8, 1, 1).output_dim() == 45);
  CHECK(build_features(FeatureMap::joint(8, 1, 1), {0.5}, {2.0}).size() == 45);

  // Degree 2 in 20 variables: C(22, 2) = 231.
  CHECK(FeatureMap::joint(2, 10, 10).output_dim() == 231);
}

TEST_CASE("separate map is the tensor product of the two expansions") {
  const auto map = FeatureMap::separate(2, 1, 1, 1);
  CHECK(map.output_dim() == 3 * 2);
  const auto phi = build_features(map, {2.0}, {3.0});
  // x-monomials (1, 2, 4) crossed with z-monomials (1, 3)
  CHECK(phi == std::vector<double>{1.0, 3.0, 2.0, 6.0, 4.0, 12.0});
}

TEST_CASE("feature dimension mismatch is rejected") {
  const auto map = FeatureMap::joint(2, 1, 1);
  CHECK_THROWS_AS(build_features(map, {1.0, 2.0}, {3.0}), DataError);
}

TEST_CASE("exact linear data is fit exactly") {
  const auto catalog = single_group_catalog();
  const auto map = FeatureMap::joint(1, 1, 1);
  const auto est = fit(linear_records(), catalog, map, 0.0);

  // Minimum-norm solution puts the slope on x and nothing on the two
  // redundant constant columns.
  REQUIRE(est.coefficients.size() == 3);
  CHECK(est.coefficients[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(est.coefficients[1] == doctest::Approx(2.0));
  CHECK(est.coefficients[2] == doctest::Approx(0.0).epsilon(1e-9));

  for (const auto& rec : linear_records()) {
    CHECK(est.predict_group(rec.bidder_features, 0, catalog) ==
          doctest::Approx(rec.value).epsilon(1e-12));
  }
  CHECK(est.predict_group({5.0}, 0, catalog) == doctest::Approx(10.0));
}

TEST_CASE("huge ridge penalty drives coefficients to zero") {
  const auto catalog = single_group_catalog();
  const auto est =
      fit(linear_records(), catalog, FeatureMap::joint(1, 1, 1), 1e12);
  for (double c : est.coefficients) {
    CHECK(std::abs(c) < 1e-6);
  }
}

TEST_CASE("zero coefficients predict zero") {
  FittedEstimator est;
  est.map = FeatureMap::joint(2, 1, 1);
  est.coefficients.assign(est.map.output_dim(), 0.0);
  est.standardization.mean.assign(est.map.output_dim(), 0.0);
  est.standardization.scale.assign(est.map.output_dim(), 1.0);
  CHECK(est.predict({3.0}, {2.0}) == 0.0);
}

TEST_CASE("scaling all targets scales coefficients and predictions") {
  auto rng = make_rng(17);
  GroupCatalog catalog;
  catalog.add("a", {1.0});
  catalog.add("b", {2.0});
  std::vector<HistoricalRecord> train;
  for (int i = 0; i < 60; ++i) {
    const double x = standard_normal(rng);
    train.push_back({{x}, i % 2, std::exp(0.3 * x) + standard_normal(rng)});
  }
  const auto map = FeatureMap::joint(3, 1, 1);
  const auto base = fit(train, catalog, map, 0.0);

  const double lambda = 3.5;
  auto scaled_train = train;
  for (auto& rec : scaled_train) rec.value *= lambda;
  const auto scaled = fit(scaled_train, catalog, map, 0.0);

  for (std::size_t j = 0; j < base.coefficients.size(); ++j) {
    CHECK(scaled.coefficients[j] ==
          doctest::Approx(lambda * base.coefficients[j]).epsilon(1e-9));
  }
  CHECK(scaled.predict_group({0.7}, 1, catalog) ==
        doctest::Approx(lambda * base.predict_group({0.7}, 1, catalog))
            .epsilon(1e-9));
}

TEST_CASE("residuals are orthogonal to the design columns") {
  auto rng = make_rng(23);
  GroupCatalog catalog;
  catalog.add("a", {1.0});
  std::vector<HistoricalRecord> train;
  for (int i = 0; i < 80; ++i) {
    const double x = standard_normal(rng);
    train.push_back({{x}, 0, x * x - 2.0 * x + standard_normal(rng)});
  }
  const auto map = FeatureMap::joint(3, 1, 1);
  const auto est = fit(train, catalog, map, 0.0);

  const std::size_t p = map.output_dim();
  std::vector<double> dot(p, 0.0), col_norm(p, 0.0);
  double res_norm = 0.0;
  for (const auto& rec : train) {
    const auto phi = build_features(map, rec.bidder_features,
                                    catalog.encoded_features(rec.group_id));
    const double r =
        rec.value - est.predict_group(rec.bidder_features, 0, catalog);
    res_norm += r * r;
    for (std::size_t j = 0; j < p; ++j) {
      dot[j] += phi[j] * r;
      col_norm[j] += phi[j] * phi[j];
    }
  }
  res_norm = std::sqrt(res_norm);
  for (std::size_t j = 0; j < p; ++j) {
    const double scale = std::sqrt(col_norm[j]) * res_norm + 1e-30;
    CHECK(std::abs(dot[j]) / scale < 1e-8);
  }
}

TEST_CASE("prediction is invariant to training record order") {
  auto rng = make_rng(29);
  GroupCatalog catalog;
  catalog.add("a", {1.0});
  std::vector<HistoricalRecord> train;
  for (int i = 0; i < 50; ++i) {
    const double x = standard_normal(rng);
    train.push_back({{x}, 0, 2.0 * x + standard_normal(rng)});
  }
  const auto map = FeatureMap::joint(2, 1, 1);
  const auto a = fit(train, catalog, map, 0.0);
  std::shuffle(train.begin(), train.end(), rng);
  const auto b = fit(train, catalog, map, 0.0);
  for (double x : {-1.5, 0.0, 0.8, 2.0}) {
    CHECK(a.predict_group({x}, 0, catalog) ==
          doctest::Approx(b.predict_group({x}, 0, catalog)).epsilon(1e-9));
  }
}

TEST_CASE("rank-deficient designs return the minimum-norm solution") {
  GroupCatalog catalog;
  catalog.add("a", {1.0});
  // two rows, six columns: underdetermined
  const std::vector<HistoricalRecord> train = {{{1.0}, 0, 3.0},
                                               {{2.0}, 0, 5.0}};
  const auto map = FeatureMap::joint(2, 1, 1);
  const auto est = fit(train, catalog, map, 0.0);
  for (const auto& rec : train) {
    CHECK(est.predict_group(rec.bidder_features, 0, catalog) ==
          doctest::Approx(rec.value).epsilon(1e-9));
  }
}

TEST_CASE("negative ridge is rejected and empty training set errors") {
  const auto catalog = single_group_catalog();
  CHECK_THROWS_AS(
      fit(linear_records(), catalog, FeatureMap::joint(1, 1, 1), -1.0),
      ConfigError);
  CHECK_THROWS_AS(fit({}, catalog, FeatureMap::joint(1, 1, 1), 0.0),
                  DataError);
}

TEST_CASE("degree-8 fit recovers the low-dim mean at a known point") {
  const SyntheticWorld world(SyntheticSpec::low_dim());
  auto rng = make_rng(31);
  std::vector<HistoricalRecord> records;
  for (int i = 0; i < 5000; ++i) records.push_back(world.draw(rng));
  const auto parts = split(records, 6);
  const auto est =
      fit(parts.train, world.catalog(), FeatureMap::joint(8, 1, 1), 0.0);
  // true mu(0, z=3) = 4
  CHECK(std::abs(est.predict_group({0.0}, 0, world.catalog()) - 4.0) < 0.5);
}
