#pragma once

#include <cstddef>
#include <vector>

#include "coad/dataset.hpp"

namespace coad {

enum class FeatureMapKind { PolynomialJoint, PolynomialSeparate };

// Monomial feature expansion over the concatenated (bidder, item) features.
// PolynomialJoint(D): all monomials of total degree <= D over the combined
// vector. PolynomialSeparate(Dx, Dz): products of an x-monomial of total
// degree <= Dx and a z-monomial of total degree <= Dz. Both include the
// intercept as the first output and order monomials by total degree.
struct FeatureMap {
  FeatureMapKind kind = FeatureMapKind::PolynomialJoint;
  int degree = 1;    // joint
  int degree_x = 1;  // separate
  int degree_z = 1;
  int bidder_dim = 1;
  int item_dim = 1;

  static FeatureMap joint(int degree, int bidder_dim, int item_dim);
  static FeatureMap separate(int degree_x, int degree_z, int bidder_dim,
                             int item_dim);

  std::size_t output_dim() const;
  int max_total_degree() const;
  std::vector<double> build(const std::vector<double>& x,
                            const std::vector<double>& z) const;
};

// Per-column affine transform of the design matrix (intercept excluded),
// fitted on training data. High-degree polynomial designs are numerically
// hostile without it.
struct Standardization {
  std::vector<double> mean;   // per column, size = output_dim
  std::vector<double> scale;  // 1.0 for untouched columns
  bool active = false;

  void apply(std::vector<double>& features) const;
};

struct FittedEstimator {
  FeatureMap map;
  std::vector<double> coefficients;
  double ridge_lambda = 0.0;
  std::size_t train_size = 0;
  Standardization standardization;

  double predict(const std::vector<double>& x,
                 const std::vector<double>& z) const;
  // Convenience: item features looked up via the catalog encoding.
  double predict_group(const std::vector<double>& x, int group_id,
                       const GroupCatalog& catalog) const;
};

std::vector<double> build_features(const FeatureMap& map,
                                   const std::vector<double>& x,
                                   const std::vector<double>& z);

// Ridge-penalized least squares over the expanded features. With
// ridge_lambda = 0 the solve uses a complete orthogonal decomposition, so a
// rank-deficient design yields the minimum-norm solution rather than a
// failure. Columns are standardized first whenever the map's total degree
// is >= 2.
FittedEstimator fit(const std::vector<HistoricalRecord>& train,
                    const GroupCatalog& catalog, const FeatureMap& map,
                    double ridge_lambda = 0.0);

}  // namespace coad
