#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "coad/conformal.hpp"

namespace coad {

struct Bidder {
  std::vector<double> features;
  double bid = 0.0;
};

// One new auction: the item group plus the participating bidders.
struct AuctionInstance {
  int group_id = 0;
  std::vector<Bidder> bidders;

  std::size_t m_star() const { return bidders.size(); }
  void validate() const;
};

struct BidderAssessment {
  PredictionInterval interval;
  double reserve = 0.0;        // max(0, interval lower)
  double virtual_value = 0.0;  // bid if bid >= interval lower, else 0
  bool unbounded_interval = false;
};

struct AuctionOutcome {
  std::vector<int> allocation;  // 0/1, sums to <= 1
  std::vector<double> payments;
  std::optional<std::size_t> winner;
  std::vector<BidderAssessment> assessments;
  bool used_unbounded_interval = false;

  double revenue() const;
};

// Bid-equals-lower-bound boundary handling. `Inclusive` is the mechanism's
// rule (a bid equal to the lower bound qualifies); `StrictFault` flips the
// comparison and exists solely so audits can prove they detect the flip.
enum class ReserveBoundary { Inclusive, StrictFault };

std::vector<BidderAssessment> assess(
    const CalibratedPredictor& predictor, const GroupCatalog& catalog,
    const AuctionInstance& instance,
    ReserveBoundary boundary = ReserveBoundary::Inclusive);

// Winner = argmax virtual value when the max is positive; ties broken by
// larger interval lower bound, then by lower bidder index. No positive
// virtual value means the seller retains the item.
std::optional<std::size_t> allocate(
    const std::vector<BidderAssessment>& assessments);

// Lowest winning bid for the given winner: the larger of the winner's
// clipped lower bound and the best rival virtual value.
double payment(const std::vector<BidderAssessment>& assessments,
               std::size_t winner);

// Threshold price a bidder would have to reach to win, computable for
// losers too (used by the incentive audit).
double winning_threshold(const std::vector<BidderAssessment>& assessments,
                         std::size_t bidder);

AuctionOutcome run_coad(const CalibratedPredictor& predictor,
                        const GroupCatalog& catalog,
                        const AuctionInstance& instance,
                        ReserveBoundary boundary = ReserveBoundary::Inclusive);

// Baselines.
AuctionOutcome second_price(const AuctionInstance& instance);
double welfare_oracle(const AuctionInstance& instance);
AuctionOutcome uniform_reserve_second_price(const AuctionInstance& instance,
                                            double reserve);

enum class ViolationKind {
  ProfitableDeviation,
  NegativeTruthfulUtility,
  BoundaryMisallocation,
};

struct IcViolation {
  std::size_t bidder = 0;
  ViolationKind kind = ViolationKind::ProfitableDeviation;
  double deviation_bid = 0.0;
  double utility_gain = 0.0;
};

// Treats submitted bids as true values and, for every bidder, replays the
// auction at each grid bid plus the analytic threshold and nearby probes.
// Records strictly profitable deviations (tolerance 1e-9), negative
// truthful utilities, and exact-threshold outcomes that disagree with the
// mechanism's non-strict boundary semantics.
std::vector<IcViolation> ic_audit(
    const CalibratedPredictor& predictor, const GroupCatalog& catalog,
    const AuctionInstance& instance, const std::vector<double>& bid_grid,
    ReserveBoundary boundary = ReserveBoundary::Inclusive);

std::vector<double> make_bid_grid(double max_bid, std::size_t points = 101);

}  // namespace coad
