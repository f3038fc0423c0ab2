#include "flowmatch/matching.hpp"

#include <algorithm>

#include "flowmatch/error.hpp"

namespace flowmatch {

namespace {

void check_size(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw Error(ErrorCode::DimensionMismatch,
                "assignment has " + std::to_string(got) + " bits, expected " + std::to_string(expected));
  }
}

}  // namespace

PairFlowSet pair_flows(const Instance& instance) {
  const auto& grid = instance.grid;
  const auto& loads = instance.loads;
  const DcFlowSolver solver(grid);

  PairFlowSet pf;
  for (BusId p : loads.producers) {
    for (BusId c : loads.consumers) {
      const double volume = std::min(-loads.demand[p], loads.demand[c]);
      if (volume > 0.0) pf.trades.push_back({p, c, volume, pf.trades.size()});
    }
  }
  pf.flows.resize(static_cast<Eigen::Index>(pf.trades.size()),
                  static_cast<Eigen::Index>(grid.line_count()));
  std::vector<double> injection(grid.bus_count(), 0.0);
  for (const auto& t : pf.trades) {
    injection[t.producer] = t.volume;
    injection[t.consumer] = -t.volume;
    const auto flows = solver.solve(injection);
    std::copy(flows.begin(), flows.end(), pf.flows.row(static_cast<Eigen::Index>(t.variable_index)).data());
    injection[t.producer] = 0.0;
    injection[t.consumer] = 0.0;
  }
  return pf;
}

FlowVector logical_flow(const PairFlowSet& pf, std::span<const std::uint8_t> x) {
  check_size(pf.size(), x.size());
  FlowVector v(pf.line_count(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!x[k]) continue;
    const auto row = pf.row(k);
    for (std::size_t l = 0; l < v.size(); ++l) v[l] += row[l];
  }
  return v;
}

double trade_cost(std::span<const double> pair_flow, std::span<const double> baseline,
                  std::span<const double> utilization, double rho) {
  if (pair_flow.size() != baseline.size() || baseline.size() != utilization.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pair flow, baseline and utilization differ in length");
  }
  double cost = 0.0;
  for (std::size_t l = 0; l < pair_flow.size(); ++l) {
    // sign(0) = 0: unloaded lines charge nothing
    const double sign = baseline[l] > 0.0 ? 1.0 : (baseline[l] < 0.0 ? -1.0 : 0.0);
    cost += utilization[l] * std::max(sign * pair_flow[l], 0.0);
  }
  return rho * cost;
}

MatchingModel build_model(const Instance& instance) { return build_model(instance, pair_flows(instance)); }

MatchingModel build_model(const Instance& instance, PairFlowSet pf) {
  MatchingModel m;
  m.baseline = dc_power_flow(instance.grid, instance.loads.demand);
  // Producers have negative demand, i.e. they inject: injection = -demand.
  for (double& w : m.baseline) w = -w;
  m.capacities = line_capacities(instance.grid, instance.period_h);
  m.utilization = utilization(m.baseline, m.capacities);
  m.pairs = std::move(pf);
  if (m.pairs.line_count() != instance.grid.line_count()) {
    throw Error(ErrorCode::DimensionMismatch, "pair flows do not match the instance grid");
  }
  m.trade_costs.reserve(m.pairs.size());
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    m.trade_costs.push_back(trade_cost(m.pairs.row(k), m.baseline, m.utilization, instance.rho));
  }
  m.alpha = instance.alpha;
  m.rho = instance.rho;
  return m;
}

Qubo build_qubo(const MatchingModel& m) {
  const auto n = m.size();
  const auto& V = m.pairs.flows;
  const Eigen::Map<const Eigen::VectorXd> w(m.baseline.data(), static_cast<Eigen::Index>(m.baseline.size()));

  // alpha * sum_l (w_l - sum_k v_kl x_k)^2 + sum_k M_k x_k, using x_k^2 = x_k.
  const Eigen::MatrixXd gram = V * V.transpose();
  const Eigen::VectorXd cross = V * w;
  QuboBuilder b(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    b.add(k, k, m.alpha * (gram(kk, kk) - 2.0 * cross(kk)) + m.trade_costs[k]);
    for (std::size_t j = k + 1; j < n; ++j) {
      b.add(k, j, 2.0 * m.alpha * gram(kk, static_cast<Eigen::Index>(j)));
    }
  }
  b.add_offset(m.alpha * w.squaredNorm());
  return b.build(kQuboDropTolerance);
}

Qubo build_qubo(const Instance& instance, const PairFlowSet& pf) {
  return build_qubo(build_model(instance, pf));
}

double evaluate(const MatchingModel& m, std::span<const std::uint8_t> x) {
  check_size(m.size(), x.size());
  const FlowVector v = logical_flow(m.pairs, x);
  double mismatch = 0.0;
  for (std::size_t l = 0; l < v.size(); ++l) {
    const double r = m.baseline[l] - v[l];
    mismatch += r * r;
  }
  double cost = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k]) cost += m.trade_costs[k];
  }
  return m.alpha * mismatch + cost;
}

double evaluate(const Instance& instance, const PairFlowSet& pf, std::span<const std::uint8_t> x) {
  return evaluate(build_model(instance, pf), x);
}

ResidualForm residual_form(const MatchingModel& m) {
  ResidualForm form;
  form.columns = m.pairs.flows.transpose();
  form.target = Eigen::Map<const Eigen::VectorXd>(m.baseline.data(), static_cast<Eigen::Index>(m.baseline.size()));
  form.linear = Eigen::Map<const Eigen::VectorXd>(m.trade_costs.data(), static_cast<Eigen::Index>(m.trade_costs.size()));
  form.alpha = m.alpha;
  return form;
}

}  // namespace flowmatch
