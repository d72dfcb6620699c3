#include "coad/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coad {

namespace {

constexpr double kIcTolerance = 1e-9;

bool tie_break_prefers(const std::vector<BidderAssessment>& assessments,
                       std::size_t candidate, std::size_t incumbent) {
  const double cl = assessments[candidate].interval.lower();
  const double il = assessments[incumbent].interval.lower();
  if (cl != il) return cl > il;
  return candidate < incumbent;
}

}  // namespace

void AuctionInstance::validate() const {
  if (bidders.empty()) throw DataError("auction requires at least one bidder");
  for (const auto& b : bidders) {
    if (b.bid < 0.0) throw DataError("bids must be nonnegative");
  }
}

double AuctionOutcome::revenue() const {
  double total = 0.0;
  for (double p : payments) total += p;
  return total;
}

std::vector<BidderAssessment> assess(const CalibratedPredictor& predictor,
                                     const GroupCatalog& catalog,
                                     const AuctionInstance& instance,
                                     ReserveBoundary boundary) {
  instance.validate();
  std::vector<BidderAssessment> assessments;
  assessments.reserve(instance.bidders.size());
  for (const auto& bidder : instance.bidders) {
    BidderAssessment a;
    a.interval = predictor.predict_interval(bidder.features, instance.group_id,
                                            catalog);
    a.unbounded_interval = !a.interval.is_finite();
    a.reserve = std::max(0.0, a.interval.lower());
    const bool qualifies = boundary == ReserveBoundary::Inclusive
                               ? bidder.bid >= a.interval.lower()
                               : bidder.bid > a.interval.lower();
    a.virtual_value = qualifies ? bidder.bid : 0.0;
    assessments.push_back(a);
  }
  return assessments;
}

std::optional<std::size_t> allocate(
    const std::vector<BidderAssessment>& assessments) {
  if (assessments.empty()) throw DataError("allocate requires bidders");
  std::size_t best = 0;
  for (std::size_t i = 1; i < assessments.size(); ++i) {
    if (assessments[i].virtual_value > assessments[best].virtual_value ||
        (assessments[i].virtual_value == assessments[best].virtual_value &&
         tie_break_prefers(assessments, i, best))) {
      best = i;
    }
  }
  if (assessments[best].virtual_value <= 0.0) return std::nullopt;
  return best;
}

double winning_threshold(const std::vector<BidderAssessment>& assessments,
                         std::size_t bidder) {
  double best_rival = 0.0;
  for (std::size_t j = 0; j < assessments.size(); ++j) {
    if (j == bidder) continue;
    best_rival = std::max(best_rival, assessments[j].virtual_value);
  }
  return std::max(assessments[bidder].reserve, best_rival);
}

double payment(const std::vector<BidderAssessment>& assessments,
               std::size_t winner) {
  if (winner >= assessments.size() ||
      assessments[winner].virtual_value <= 0.0) {
    throw std::logic_error("payment requires the allocated winner");
  }
  return winning_threshold(assessments, winner);
}

namespace {

AuctionOutcome build_outcome(std::vector<BidderAssessment> assessments) {
  AuctionOutcome outcome;
  outcome.winner = allocate(assessments);
  outcome.allocation.assign(assessments.size(), 0);
  outcome.payments.assign(assessments.size(), 0.0);
  if (outcome.winner) {
    outcome.allocation[*outcome.winner] = 1;
    outcome.payments[*outcome.winner] = payment(assessments, *outcome.winner);
  }
  for (const auto& a : assessments) {
    outcome.used_unbounded_interval |= a.unbounded_interval;
  }
  outcome.assessments = std::move(assessments);
  return outcome;
}

}  // namespace

AuctionOutcome run_coad(const CalibratedPredictor& predictor,
                        const GroupCatalog& catalog,
                        const AuctionInstance& instance,
                        ReserveBoundary boundary) {
  return build_outcome(assess(predictor, catalog, instance, boundary));
}

AuctionOutcome second_price(const AuctionInstance& instance) {
  instance.validate();
  AuctionOutcome outcome;
  const std::size_t m = instance.bidders.size();
  outcome.allocation.assign(m, 0);
  outcome.payments.assign(m, 0.0);
  std::size_t best = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (instance.bidders[i].bid > instance.bidders[best].bid) best = i;
  }
  double second = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i != best) second = std::max(second, instance.bidders[i].bid);
  }
  outcome.winner = best;
  outcome.allocation[best] = 1;
  outcome.payments[best] = m > 1 ? second : 0.0;
  return outcome;
}

double welfare_oracle(const AuctionInstance& instance) {
  instance.validate();
  double best = 0.0;
  for (const auto& b : instance.bidders) best = std::max(best, b.bid);
  return best;
}

AuctionOutcome uniform_reserve_second_price(const AuctionInstance& instance,
                                            double reserve) {
  instance.validate();
  if (reserve < 0.0) throw ConfigError("reserve must be nonnegative");
  AuctionOutcome outcome;
  const std::size_t m = instance.bidders.size();
  outcome.allocation.assign(m, 0);
  outcome.payments.assign(m, 0.0);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < m; ++i) {
    if (instance.bidders[i].bid < reserve) continue;
    if (!best || instance.bidders[i].bid > instance.bidders[*best].bid) {
      best = i;
    }
  }
  if (!best) return outcome;  // no qualifier: seller retains
  double second = reserve;
  for (std::size_t i = 0; i < m; ++i) {
    if (i == *best || instance.bidders[i].bid < reserve) continue;
    second = std::max(second, instance.bidders[i].bid);
  }
  outcome.winner = best;
  outcome.allocation[*best] = 1;
  outcome.payments[*best] = second;
  return outcome;
}

std::vector<double> make_bid_grid(double max_bid, std::size_t points) {
  if (points < 2) throw ConfigError("bid grid needs at least 2 points");
  std::vector<double> grid(points);
  const double hi = 2.0 * std::max(max_bid, 1e-12);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = hi * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

std::vector<IcViolation> ic_audit(const CalibratedPredictor& predictor,
                                  const GroupCatalog& catalog,
                                  const AuctionInstance& instance,
                                  const std::vector<double>& bid_grid,
                                  ReserveBoundary boundary) {
  instance.validate();
  std::vector<IcViolation> violations;
  const auto truthful = run_coad(predictor, catalog, instance, boundary);
  const auto base_assessments =
      assess(predictor, catalog, instance, ReserveBoundary::Inclusive);

  double scale = 1.0;
  for (const auto& b : instance.bidders) scale = std::max(scale, b.bid);
  const double step = 1e-9 * scale;

  for (std::size_t i = 0; i < instance.bidders.size(); ++i) {
    const double value = instance.bidders[i].bid;
    const double truthful_utility =
        static_cast<double>(truthful.allocation[i]) * value -
        truthful.payments[i];
    if (truthful_utility < -kIcTolerance) {
      violations.push_back(
          IcViolation{i, ViolationKind::NegativeTruthfulUtility, value,
                      -truthful_utility});
    }

    const double threshold = winning_threshold(base_assessments, i);

    std::vector<double> probes = bid_grid;
    probes.push_back(threshold);
    probes.push_back(threshold + step);
    if (threshold - step >= 0.0) probes.push_back(threshold - step);

    AuctionInstance deviated = instance;  // rebuilt per bidder
    for (double b : probes) {
      if (b < 0.0) continue;
      deviated.bidders[i].bid = b;
      const auto outcome = run_coad(predictor, catalog, deviated, boundary);
      const double utility =
          static_cast<double>(outcome.allocation[i]) * value -
          outcome.payments[i];
      if (utility > truthful_utility + kIcTolerance) {
        violations.push_back(IcViolation{
            i, ViolationKind::ProfitableDeviation, b,
            utility - truthful_utility});
      }
    }

    // Exact-threshold semantics: the threshold is at least the bidder's
    // lower bound, so a bid equal to it qualifies under the non-strict rule
    // and must win unless a rival tie resolves against this bidder.
    if (threshold > 0.0) {
      deviated.bidders[i].bid = threshold;
      const auto at_threshold =
          run_coad(predictor, catalog, deviated, boundary);
      bool expect_win = true;
      for (std::size_t j = 0; j < base_assessments.size(); ++j) {
        if (j == i) continue;
        const double rival = base_assessments[j].virtual_value;
        if (rival > threshold ||
            (rival == threshold &&
             !tie_break_prefers(base_assessments, i, j))) {
          expect_win = false;
          break;
        }
      }
      const bool won = at_threshold.allocation[i] == 1;
      if (won != expect_win) {
        violations.push_back(IcViolation{
            i, ViolationKind::BoundaryMisallocation, threshold, 0.0});
      }
    }
  }
  return violations;
}

}  // namespace coad
