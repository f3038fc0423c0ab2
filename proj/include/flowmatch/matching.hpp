#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flowmatch/grid.hpp"
#include "flowmatch/instance.hpp"
#include "flowmatch/qubo.hpp"

namespace flowmatch {

/// Candidate bilateral trade; variable_index follows (producer, consumer)
/// lexicographic order.
struct Trade {
  BusId producer = 0;
  BusId consumer = 0;
  double volume = 0.0;  // kWh
  std::size_t variable_index = 0;
};

/// Trades and their pair flows; row k of `flows` is the DC flow of trade k
/// alone (producer injects, consumer draws `volume`).
struct PairFlowSet {
  using FlowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  std::vector<Trade> trades;
  FlowMatrix flows;  // trades x lines

  std::size_t size() const { return trades.size(); }
  std::size_t line_count() const { return static_cast<std::size_t>(flows.cols()); }
  std::span<const double> row(std::size_t k) const {
    return {flows.data() + k * line_count(), line_count()};
  }
};

PairFlowSet pair_flows(const Instance& instance);

/// Superposition of the active pair flows.
FlowVector logical_flow(const PairFlowSet& pf, std::span<const std::uint8_t> x);

/// Directional grid fee of one trade: rho * sum_l u_l * max(sign(w_l) v_l, 0).
double trade_cost(std::span<const double> pair_flow, std::span<const double> baseline,
                  std::span<const double> utilization, double rho);

/// Everything the objective needs, derived once from an instance.
struct MatchingModel {
  FlowVector baseline;
  std::vector<double> capacities;
  std::vector<double> utilization;
  PairFlowSet pairs;
  std::vector<double> trade_costs;  // ct, per trade
  double alpha = 0.0;
  double rho = 0.0;

  std::size_t size() const { return pairs.size(); }
};

MatchingModel build_model(const Instance& instance);
/// Reuses already computed pair flows.
MatchingModel build_model(const Instance& instance, PairFlowSet pf);

inline constexpr double kQuboDropTolerance = 1e-12;

Qubo build_qubo(const MatchingModel& model);
Qubo build_qubo(const Instance& instance, const PairFlowSet& pf);

/// Direct objective alpha * ||w - v(x)||^2 + sum_k x_k M_k, no expansion.
double evaluate(const MatchingModel& model, std::span<const std::uint8_t> x);
double evaluate(const Instance& instance, const PairFlowSet& pf, std::span<const std::uint8_t> x);

ResidualForm residual_form(const MatchingModel& model);

}  // namespace flowmatch
