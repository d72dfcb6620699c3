#include "coad/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

namespace coad {

namespace {

// Number of monomials of total degree <= degree in `vars` variables:
// C(vars + degree, degree).
std::size_t monomial_count(int vars, int degree) {
  std::size_t count = 1;
  for (int i = 1; i <= vars; ++i) {
    count = count * static_cast<std::size_t>(degree + i) /
            static_cast<std::size_t>(i);
  }
  return count;
}

double pow_int(double base, int exponent) {
  double value = 1.0;
  for (int e = 0; e < exponent; ++e) value *= base;
  return value;
}

// All monomials with exponents summing to exactly `grade`, exponent vectors
// in lexicographically descending order. For (x, z) and grade 2 this emits
// x^2, xz, z^2.
void emit_grade(const std::vector<double>& vars, std::size_t i, int grade,
                double prefix, std::vector<double>& out) {
  if (i + 1 == vars.size()) {
    out.push_back(prefix * pow_int(vars[i], grade));
    return;
  }
  for (int e = grade; e >= 0; --e) {
    emit_grade(vars, i + 1, grade - e, prefix * pow_int(vars[i], e), out);
  }
}

// Intercept first, then grades 1..degree.
void append_monomials(const std::vector<double>& vars, int degree,
                      std::vector<double>& out) {
  out.push_back(1.0);
  if (vars.empty()) return;
  for (int grade = 1; grade <= degree; ++grade) {
    emit_grade(vars, 0, grade, 1.0, out);
  }
}

}  // namespace

FeatureMap FeatureMap::joint(int degree, int bidder_dim, int item_dim) {
  FeatureMap map;
  map.kind = FeatureMapKind::PolynomialJoint;
  map.degree = degree;
  map.bidder_dim = bidder_dim;
  map.item_dim = item_dim;
  return map;
}

FeatureMap FeatureMap::separate(int degree_x, int degree_z, int bidder_dim,
                                int item_dim) {
  FeatureMap map;
  map.kind = FeatureMapKind::PolynomialSeparate;
  map.degree_x = degree_x;
  map.degree_z = degree_z;
  map.bidder_dim = bidder_dim;
  map.item_dim = item_dim;
  return map;
}

std::size_t FeatureMap::output_dim() const {
  if (kind == FeatureMapKind::PolynomialJoint) {
    return monomial_count(bidder_dim + item_dim, degree);
  }
  return monomial_count(bidder_dim, degree_x) *
         monomial_count(item_dim, degree_z);
}

int FeatureMap::max_total_degree() const {
  return kind == FeatureMapKind::PolynomialJoint ? degree
                                                 : degree_x + degree_z;
}

std::vector<double> FeatureMap::build(const std::vector<double>& x,
                                      const std::vector<double>& z) const {
  return build_features(*this, x, z);
}

void Standardization::apply(std::vector<double>& features) const {
  if (!active) return;
  for (std::size_t j = 0; j < features.size(); ++j) {
    features[j] = (features[j] - mean[j]) / scale[j];
  }
}

double FittedEstimator::predict(const std::vector<double>& x,
                                const std::vector<double>& z) const {
  std::vector<double> phi = build_features(map, x, z);
  standardization.apply(phi);
  return std::inner_product(phi.begin(), phi.end(), coefficients.begin(), 0.0);
}

double FittedEstimator::predict_group(const std::vector<double>& x,
                                      int group_id,
                                      const GroupCatalog& catalog) const {
  return predict(x, catalog.encoded_features(group_id));
}

std::vector<double> build_features(const FeatureMap& map,
                                   const std::vector<double>& x,
                                   const std::vector<double>& z) {
  if (x.size() != static_cast<std::size_t>(map.bidder_dim) ||
      z.size() != static_cast<std::size_t>(map.item_dim)) {
    throw DataError("feature dimension mismatch: expected (" +
                    std::to_string(map.bidder_dim) + ", " +
                    std::to_string(map.item_dim) + "), got (" +
                    std::to_string(x.size()) + ", " +
                    std::to_string(z.size()) + ")");
  }
  std::vector<double> out;
  out.reserve(map.output_dim());
  if (map.kind == FeatureMapKind::PolynomialJoint) {
    std::vector<double> joint;
    joint.reserve(x.size() + z.size());
    joint.insert(joint.end(), x.begin(), x.end());
    joint.insert(joint.end(), z.begin(), z.end());
    append_monomials(joint, map.degree, out);
    return out;
  }
  std::vector<double> mx;
  std::vector<double> mz;
  append_monomials(x, map.degree_x, mx);
  append_monomials(z, map.degree_z, mz);
  for (double a : mx) {
    for (double b : mz) out.push_back(a * b);
  }
  return out;
}

FittedEstimator fit(const std::vector<HistoricalRecord>& train,
                    const GroupCatalog& catalog, const FeatureMap& map,
                    double ridge_lambda) {
  if (train.empty()) throw DataError("fit requires at least one record");
  if (ridge_lambda < 0.0) throw ConfigError("ridge_lambda must be >= 0");

  const std::size_t n = train.size();
  const std::size_t p = map.output_dim();
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(p));
  Eigen::VectorXd target(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = train[i];
    auto phi = build_features(map, rec.bidder_features,
                              catalog.encoded_features(rec.group_id));
    for (std::size_t j = 0; j < p; ++j) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          phi[j];
    }
    target(static_cast<Eigen::Index>(i)) = rec.value;
  }

  FittedEstimator est;
  est.map = map;
  est.ridge_lambda = ridge_lambda;
  est.train_size = n;
  est.standardization.mean.assign(p, 0.0);
  est.standardization.scale.assign(p, 1.0);
  est.standardization.active = map.max_total_degree() >= 2;
  if (est.standardization.active) {
    for (std::size_t j = 1; j < p; ++j) {  // leave the intercept column alone
      const auto col = design.col(static_cast<Eigen::Index>(j));
      const double mean = col.mean();
      const double var =
          (col.array() - mean).square().sum() / static_cast<double>(n);
      const double sd = std::sqrt(var);
      est.standardization.mean[j] = mean;
      est.standardization.scale[j] = sd > 1e-12 ? sd : 1.0;
      design.col(static_cast<Eigen::Index>(j)) =
          (col.array() - mean) / est.standardization.scale[j];
    }
  }

  Eigen::VectorXd beta;
  if (ridge_lambda == 0.0) {
    beta = design.completeOrthogonalDecomposition().solve(target);
  } else {
    Eigen::MatrixXd augmented(static_cast<Eigen::Index>(n + p),
                              static_cast<Eigen::Index>(p));
    augmented.topRows(static_cast<Eigen::Index>(n)) = design;
    augmented.bottomRows(static_cast<Eigen::Index>(p)) =
        std::sqrt(ridge_lambda) *
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                  static_cast<Eigen::Index>(p));
    Eigen::VectorXd rhs =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + p));
    rhs.head(static_cast<Eigen::Index>(n)) = target;
    beta = augmented.completeOrthogonalDecomposition().solve(rhs);
  }
  est.coefficients.assign(beta.data(), beta.data() + beta.size());
  return est;
}

}  // namespace coad
