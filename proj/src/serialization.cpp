#include "coad/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace coad::io {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json catalog_to_json(const GroupCatalog& catalog) {
  json groups = json::array();
  for (const auto& g : catalog.groups()) {
    json entry = {{"id", g.id}, {"label", g.label}};
    if (!g.features.empty()) entry["features"] = g.features;
    groups.push_back(std::move(entry));
  }
  return json{{"groups", groups}};
}

GroupCatalog catalog_from_json(const json& j) {
  GroupCatalog catalog;
  for (const auto& entry : j.at("groups")) {
    std::vector<double> features;
    if (entry.contains("features")) {
      features = entry["features"].get<std::vector<double>>();
    }
    const int id =
        catalog.add(entry.at("label").get<std::string>(), std::move(features));
    if (id != entry.at("id").get<int>()) {
      throw DataError("catalog ids must be contiguous from 0");
    }
  }
  return catalog;
}

namespace {

json feature_map_to_json(const FeatureMap& map) {
  if (map.kind == FeatureMapKind::PolynomialJoint) {
    return json{{"kind", "polynomial_joint"},
                {"degree", map.degree},
                {"bidder_dim", map.bidder_dim},
                {"item_dim", map.item_dim}};
  }
  return json{{"kind", "polynomial_separate"},
              {"degree_x", map.degree_x},
              {"degree_z", map.degree_z},
              {"bidder_dim", map.bidder_dim},
              {"item_dim", map.item_dim}};
}

FeatureMap feature_map_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "polynomial_joint") {
    return FeatureMap::joint(j.at("degree").get<int>(),
                             j.at("bidder_dim").get<int>(),
                             j.at("item_dim").get<int>());
  }
  if (kind == "polynomial_separate") {
    return FeatureMap::separate(
        j.at("degree_x").get<int>(), j.at("degree_z").get<int>(),
        j.at("bidder_dim").get<int>(), j.at("item_dim").get<int>());
  }
  throw DataError("unknown feature map kind " + kind);
}

}  // namespace

json estimator_to_json(const FittedEstimator& estimator) {
  json j = {{"feature_map", feature_map_to_json(estimator.map)},
            {"coefficients", estimator.coefficients},
            {"ridge_lambda", estimator.ridge_lambda},
            {"train_size", estimator.train_size}};
  if (estimator.standardization.active) {
    j["standardization"] = {{"mean", estimator.standardization.mean},
                            {"scale", estimator.standardization.scale}};
  }
  return j;
}

FittedEstimator estimator_from_json(const json& j) {
  FittedEstimator est;
  est.map = feature_map_from_json(j.at("feature_map"));
  est.coefficients = j.at("coefficients").get<std::vector<double>>();
  est.ridge_lambda = j.at("ridge_lambda").get<double>();
  est.train_size = j.at("train_size").get<std::size_t>();
  if (est.coefficients.size() != est.map.output_dim()) {
    throw DataError("coefficient count does not match the feature map");
  }
  est.standardization.mean.assign(est.coefficients.size(), 0.0);
  est.standardization.scale.assign(est.coefficients.size(), 1.0);
  est.standardization.active = false;
  if (j.contains("standardization")) {
    est.standardization.mean =
        j["standardization"].at("mean").get<std::vector<double>>();
    est.standardization.scale =
        j["standardization"].at("scale").get<std::vector<double>>();
    est.standardization.active = true;
    if (est.standardization.mean.size() != est.coefficients.size() ||
        est.standardization.scale.size() != est.coefficients.size()) {
      throw DataError("standardization size mismatch");
    }
  }
  return est;
}

json predictor_to_json(const CalibratedPredictor& predictor) {
  json thresholds = json::object();
  const auto& ts = predictor.thresholds();
  for (std::size_t g = 0; g < ts.size(); ++g) {
    if (ts[g].is_finite()) {
      thresholds[std::to_string(g)] = ts[g].value();
    } else {
      thresholds[std::to_string(g)] = "inf";
    }
  }
  return json{{"alpha", predictor.alpha()},
              {"thresholds", thresholds},
              {"estimator", estimator_to_json(predictor.estimator())}};
}

CalibratedPredictor predictor_from_json(const json& j) {
  FittedEstimator est = estimator_from_json(j.at("estimator"));
  const double alpha = j.at("alpha").get<double>();
  const auto& tj = j.at("thresholds");
  std::vector<Threshold> thresholds(tj.size(), Threshold::infinite());
  for (auto it = tj.begin(); it != tj.end(); ++it) {
    const auto gid = static_cast<std::size_t>(std::stoi(it.key()));
    if (gid >= thresholds.size()) {
      throw DataError("threshold group ids must be contiguous from 0");
    }
    if (it.value().is_string()) {
      if (it.value().get<std::string>() != "inf") {
        throw DataError("threshold must be a number or \"inf\"");
      }
      thresholds[gid] = Threshold::infinite();
    } else {
      thresholds[gid] = Threshold::finite(it.value().get<double>());
    }
  }
  return CalibratedPredictor(std::move(est), alpha, std::move(thresholds));
}

json outcome_to_json(const AuctionOutcome& outcome) {
  json bidders = json::array();
  for (const auto& a : outcome.assessments) {
    json entry = {{"center", a.interval.center},
                  {"reserve", a.reserve},
                  {"virtual_value", a.virtual_value},
                  {"unbounded_interval", a.unbounded_interval}};
    if (a.interval.is_finite()) {
      entry["half_width"] = a.interval.half_width.value();
      entry["lower"] = a.interval.lower();
      entry["upper"] = a.interval.upper();
    } else {
      entry["half_width"] = "inf";
      entry["lower"] = "-inf";
      entry["upper"] = "inf";
    }
    bidders.push_back(std::move(entry));
  }
  json j = {{"allocation", outcome.allocation},
            {"payments", outcome.payments},
            {"revenue", outcome.revenue()},
            {"bidders", bidders},
            {"used_unbounded_interval", outcome.used_unbounded_interval}};
  if (outcome.winner) {
    j["winner"] = *outcome.winner;
  } else {
    j["winner"] = nullptr;
  }
  return j;
}

BiddersFile bidders_from_json(const json& j) {
  BiddersFile file;
  file.group_id = j.at("group").get<int>();
  for (const auto& entry : j.at("bidders")) {
    Bidder b;
    b.features = entry.at("features").get<std::vector<double>>();
    b.bid = entry.at("bid").get<double>();
    file.bidders.push_back(std::move(b));
  }
  if (file.bidders.empty()) throw DataError("bidders file has no bidders");
  return file;
}

void write_records_csv(const std::vector<HistoricalRecord>& records,
                       const std::string& path) {
  if (records.empty()) throw DataError("no records to write");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const std::size_t d = records.front().bidder_features.size();
  for (std::size_t i = 0; i < d; ++i) out << "x_" << i << ",";
  out << "group_id,value\n";
  for (const auto& rec : records) {
    if (rec.bidder_features.size() != d) {
      throw DataError("inconsistent bidder feature dimension");
    }
    for (double x : rec.bidder_features) out << format_double(x) << ",";
    out << rec.group_id << "," << format_double(rec.value) << "\n";
  }
}

std::vector<HistoricalRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty file " + path);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::size_t d = 0;
  {
    std::stringstream ss(header);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() < 2 || cols[cols.size() - 2] != "group_id" ||
        cols.back() != "value") {
      throw DataError("records CSV must end with group_id,value columns");
    }
    d = cols.size() - 2;
  }
  std::vector<HistoricalRecord> records;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    HistoricalRecord rec;
    for (std::size_t i = 0; i < d + 2; ++i) {
      if (!std::getline(ss, field, ',')) {
        throw DataError("row " + std::to_string(row) + ": too few fields");
      }
      try {
        if (i < d) {
          rec.bidder_features.push_back(std::stod(field));
        } else if (i == d) {
          rec.group_id = std::stoi(field);
        } else {
          rec.value = std::stod(field);
        }
      } catch (const std::exception&) {
        throw DataError("row " + std::to_string(row) + ": non-numeric value '" +
                        field + "'");
      }
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DataError("no records in " + path);
  return records;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace coad::io
