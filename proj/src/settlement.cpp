#include "flowmatch/settlement.hpp"

#include <algorithm>

#include "flowmatch/error.hpp"

namespace flowmatch {

TariffScheme TariffScheme::from_buy_sell(double buy, double sell, double grid_compound) {
  TariffScheme t{buy, sell, (buy + sell) / 2.0, grid_compound};
  validate(t);
  return t;
}

void validate(const TariffScheme& t) {
  if (t.lambda_eq != (t.lambda_buy + t.lambda_sell) / 2.0) {
    throw Error(ErrorCode::InvalidArgument, "lambda_eq must be the midpoint of buy and sell");
  }
  if (!(0.0 <= t.lambda_sell && t.lambda_sell <= t.lambda_eq && t.lambda_eq <= t.lambda_buy)) {
    throw Error(ErrorCode::InvalidArgument, "tariffs must satisfy 0 <= sell <= eq <= buy");
  }
  if (!(t.grid_compound >= 0.0)) throw Error(ErrorCode::InvalidArgument, "grid compound must be >= 0");
}

namespace {

void check(std::span<const std::uint8_t> x, std::span<const Trade> trades) {
  if (x.size() != trades.size()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from trade count");
  }
}

double positive(double v) { return std::max(v, 0.0); }
double negative(double v) { return std::min(v, 0.0); }

}  // namespace

std::vector<double> peer_grid_costs(std::span<const std::uint8_t> x, std::span<const Trade> trades,
                                    std::span<const double> trade_costs, std::size_t bus_count) {
  check(x, trades);
  if (trade_costs.size() != trades.size()) {
    throw Error(ErrorCode::DimensionMismatch, "trade cost count differs from trade count");
  }
  std::vector<double> cost(bus_count, 0.0);
  for (std::size_t k = 0; k < trades.size(); ++k) {
    if (!x[k]) continue;
    cost[trades[k].producer] += 0.5 * trade_costs[k];
    cost[trades[k].consumer] += 0.5 * trade_costs[k];
  }
  return cost;
}

std::vector<double> matched_energy(std::span<const std::uint8_t> x, std::span<const Trade> trades,
                                   std::size_t bus_count) {
  check(x, trades);
  std::vector<double> matched(bus_count, 0.0);
  for (std::size_t k = 0; k < trades.size(); ++k) {
    if (!x[k]) continue;
    matched[trades[k].producer] += trades[k].volume;
    matched[trades[k].consumer] += trades[k].volume;
  }
  return matched;
}

std::vector<PeerSettlement> settle(std::span<const std::uint8_t> x, const Instance& instance,
                                   std::span<const Trade> trades, std::span<const double> trade_costs,
                                   const TariffScheme& t) {
  validate(t);
  const auto n = instance.grid.bus_count();
  const auto grid_cost = peer_grid_costs(x, trades, trade_costs, n);
  const auto matched = matched_energy(x, trades, n);

  std::vector<PeerSettlement> out;
  out.reserve(n);
  for (BusId i = 0; i < n; ++i) {
    const double d = instance.loads.demand[i];
    if (d == 0.0) throw Error(ErrorCode::ZeroDemand, "bus " + std::to_string(i) + " has zero net demand");
    PeerSettlement s;
    s.peer = i;
    s.producer = d < 0.0;
    s.demand = d;
    s.matched_energy = matched[i];
    s.grid_cost = grid_cost[i];
    if (s.producer) {
      // unsold production (d~ + d < 0) goes to the DSO at lambda_sell;
      // over-matching (> 0) is bought back at lambda_buy
      const double gap = matched[i] + d;
      s.final_bill = grid_cost[i] + t.lambda_buy * positive(gap) + t.lambda_sell * negative(gap) -
                     t.lambda_eq * matched[i];
    } else {
      const double gap = d - matched[i];
      s.final_bill = grid_cost[i] + t.lambda_buy * positive(gap) + t.lambda_sell * negative(gap) +
                     t.lambda_eq * matched[i];
    }
    s.effective_tariff = s.final_bill / d;
    out.push_back(s);
  }
  return out;
}

CommunityReport community_report(std::span<const PeerSettlement> settlements,
                                 std::span<const std::uint8_t> x, std::span<const double> trade_costs,
                                 const TariffScheme& t) {
  if (x.size() != trade_costs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from trade count");
  }
  CommunityReport r;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k]) r.p2p_fees += trade_costs[k];
  }
  double demand = 0.0;
  double matched = 0.0;
  double unmatched = 0.0;
  for (const auto& s : settlements) {
    if (s.producer) continue;
    demand += s.demand;
    // excess beyond a consumer's own demand is resold, not delivered
    matched += std::min(s.matched_energy, s.demand);
    unmatched += positive(s.demand - s.matched_energy);
  }
  r.residual_fees = t.grid_compound * unmatched;
  r.total_dso_fees = r.p2p_fees + r.residual_fees;
  r.baseline_fees = t.grid_compound * demand;
  r.p2p_ratio = demand > 0.0 ? matched / demand : 0.0;
  return r;
}

}  // namespace flowmatch
