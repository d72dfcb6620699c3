#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "coad/conformal.hpp"
#include "coad/dataset.hpp"
#include "coad/mechanism.hpp"
#include "coad/regression.hpp"

namespace coad::io {

nlohmann::json catalog_to_json(const GroupCatalog& catalog);
GroupCatalog catalog_from_json(const nlohmann::json& j);

nlohmann::json estimator_to_json(const FittedEstimator& estimator);
FittedEstimator estimator_from_json(const nlohmann::json& j);

// Predictor JSON carries alpha, per-group thresholds keyed by group id
// ("inf" for uncalibrated groups) and the embedded estimator.
nlohmann::json predictor_to_json(const CalibratedPredictor& predictor);
CalibratedPredictor predictor_from_json(const nlohmann::json& j);

nlohmann::json outcome_to_json(const AuctionOutcome& outcome);

struct BiddersFile {
  int group_id = 0;
  std::vector<Bidder> bidders;
};
BiddersFile bidders_from_json(const nlohmann::json& j);

// Records CSV: header x_0..x_{d-1},group_id,value, one record per row.
void write_records_csv(const std::vector<HistoricalRecord>& records,
                       const std::string& path);
std::vector<HistoricalRecord> read_records_csv(const std::string& path);

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

std::string format_double(double v);

}  // namespace coad::io
