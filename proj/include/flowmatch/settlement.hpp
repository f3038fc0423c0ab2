#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowmatch/instance.hpp"
#include "flowmatch/matching.hpp"

namespace flowmatch {

/// Flat DSO tariffs in ct/kWh. grid_compound is the share of lambda_buy that
/// funds grid operation; producers do not pay it.
struct TariffScheme {
  double lambda_buy = 30.0;
  double lambda_sell = 8.0;
  double lambda_eq = 19.0;
  double grid_compound = 15.0;

  /// lambda_eq is set to the midpoint of buy and sell.
  static TariffScheme from_buy_sell(double buy, double sell, double grid_compound);
};

void validate(const TariffScheme& tariffs);

struct PeerSettlement {
  BusId peer = 0;
  bool producer = false;
  double demand = 0.0;          // d^i, kWh
  double matched_energy = 0.0;  // kWh traded peer-to-peer
  double grid_cost = 0.0;       // ct
  double final_bill = 0.0;      // ct, negative = income
  double effective_tariff = 0.0;  // ct/kWh, final_bill / demand
};

struct CommunityReport {
  double p2p_fees = 0.0;
  double residual_fees = 0.0;
  double total_dso_fees = 0.0;
  double baseline_fees = 0.0;
  double p2p_ratio = 0.0;
};

/// Half of each active trade's fee goes to each side, per bus.
std::vector<double> peer_grid_costs(std::span<const std::uint8_t> x, std::span<const Trade> trades,
                                    std::span<const double> trade_costs, std::size_t bus_count);

/// Matched volume per bus.
std::vector<double> matched_energy(std::span<const std::uint8_t> x, std::span<const Trade> trades,
                                   std::size_t bus_count);

std::vector<PeerSettlement> settle(std::span<const std::uint8_t> x, const Instance& instance,
                                   std::span<const Trade> trades, std::span<const double> trade_costs,
                                   const TariffScheme& tariffs = {});

CommunityReport community_report(std::span<const PeerSettlement> settlements,
                                 std::span<const std::uint8_t> x, std::span<const double> trade_costs,
                                 const TariffScheme& tariffs = {});

}  // namespace flowmatch
