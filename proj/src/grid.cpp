#include "flowmatch/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowmatch/error.hpp"

namespace flowmatch {

Line::Line(BusId from, BusId to, double length_m, double x_ohm_per_km,
           double r_ohm_per_km, double i_max_a, double voltage_v)
    : from_(from),
      to_(to),
      length_m_(length_m),
      x_ohm_per_km_(x_ohm_per_km),
      r_ohm_per_km_(r_ohm_per_km),
      i_max_a_(i_max_a),
      voltage_v_(voltage_v) {
  if (from == to) {
    throw Error(ErrorCode::InvalidArgument,
                "line endpoints must differ (bus " + std::to_string(from) + ")");
  }
  if (!(length_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "line length must be > 0");
  if (!(x_ohm_per_km > 0.0)) throw Error(ErrorCode::InvalidArgument, "line reactance must be > 0");
  if (!(r_ohm_per_km >= 0.0)) throw Error(ErrorCode::InvalidArgument, "line resistance must be >= 0");
  if (!(i_max_a > 0.0)) throw Error(ErrorCode::InvalidArgument, "line max current must be > 0");
  if (!(voltage_v > 0.0)) throw Error(ErrorCode::InvalidArgument, "line voltage must be > 0");
}

double Line::susceptance() const { return 1.0 / (x_ohm_per_km_ * length_m_ / 1000.0); }

Grid::Grid(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].id != i) {
      throw Error(ErrorCode::InvalidArgument,
                  "bus ids must be contiguous 0..N-1; found id " +
                      std::to_string(buses_[i].id) + " at position " + std::to_string(i));
    }
  }
  for (std::size_t l = 0; l < lines_.size(); ++l) {
    if (lines_[l].from() >= buses_.size() || lines_[l].to() >= buses_.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(l) + " references an unknown bus");
    }
  }
}

bool Grid::is_connected() const {
  if (buses_.empty()) return true;
  // union-find over line endpoints
  std::vector<std::size_t> parent(buses_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::size_t components = buses_.size();
  for (const auto& line : lines_) {
    auto a = find(line.from());
    auto b = find(line.to());
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

DcFlowSolver::DcFlowSolver(const Grid& grid, BusId reference_bus)
    : bus_count_(grid.bus_count()), reference_(reference_bus) {
  if (reference_bus >= bus_count_) {
    throw Error(ErrorCode::InvalidArgument, "reference bus out of range");
  }
  if (!grid.is_connected()) {
    throw Error(ErrorCode::SingularSystem, "grid is not connected; B-theta system is singular");
  }
  for (const auto& line : grid.lines()) {
    from_.push_back(line.from());
    to_.push_back(line.to());
    susceptance_.push_back(line.susceptance());
  }

  // Reduced Laplacian: bus index b maps to row b (b < ref) or b - 1 (b > ref).
  const auto reduced = static_cast<Eigen::Index>(bus_count_ - 1);
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(reduced, reduced);
  auto row = [&](BusId b) -> Eigen::Index {
    return static_cast<Eigen::Index>(b < reference_ ? b : b - 1);
  };
  for (std::size_t l = 0; l < from_.size(); ++l) {
    const double b = susceptance_[l];
    const BusId i = from_[l];
    const BusId j = to_[l];
    if (i != reference_) laplacian(row(i), row(i)) += b;
    if (j != reference_) laplacian(row(j), row(j)) += b;
    if (i != reference_ && j != reference_) {
      laplacian(row(i), row(j)) -= b;
      laplacian(row(j), row(i)) -= b;
    }
  }
  factor_.compute(laplacian);
  if (factor_.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "reduced Laplacian factorization failed");
  }
}

FlowVector DcFlowSolver::solve(std::span<const double> injections) const {
  if (injections.size() != bus_count_) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(bus_count_) + " injections, got " +
                    std::to_string(injections.size()));
  }
  double total = 0.0;
  double largest = 0.0;
  for (double p : injections) {
    total += p;
    largest = std::max(largest, std::abs(p));
  }
  if (std::abs(total) > 1e-9 * largest) {
    throw Error(ErrorCode::UnbalancedInjections,
                "injections sum to " + std::to_string(total) + " kWh");
  }

  FlowVector flows(from_.size(), 0.0);
  if (bus_count_ < 2) return flows;

  Eigen::VectorXd rhs(static_cast<Eigen::Index>(bus_count_ - 1));
  for (BusId b = 0, r = 0; b < bus_count_; ++b) {
    if (b != reference_) rhs(static_cast<Eigen::Index>(r++)) = injections[b];
  }
  const Eigen::VectorXd reduced_theta = factor_.solve(rhs);
  std::vector<double> theta(bus_count_, 0.0);
  for (BusId b = 0, r = 0; b < bus_count_; ++b) {
    if (b != reference_) theta[b] = reduced_theta(static_cast<Eigen::Index>(r++));
  }
  for (std::size_t l = 0; l < from_.size(); ++l) {
    flows[l] = susceptance_[l] * (theta[from_[l]] - theta[to_[l]]);
  }
  return flows;
}

FlowVector dc_power_flow(const Grid& grid, std::span<const double> injections,
                         BusId reference_bus) {
  return DcFlowSolver(grid, reference_bus).solve(injections);
}

double line_capacity(const Line& line, double period_h) {
  if (!(period_h > 0.0)) throw Error(ErrorCode::InvalidArgument, "period must be > 0");
  return std::sqrt(3.0) * line.voltage_v() * line.max_current_a() * period_h / 1000.0;
}

std::vector<double> line_capacities(const Grid& grid, double period_h) {
  std::vector<double> out;
  out.reserve(grid.line_count());
  for (const auto& line : grid.lines()) out.push_back(line_capacity(line, period_h));
  return out;
}

std::vector<double> utilization(std::span<const double> flows,
                                std::span<const double> capacities) {
  if (flows.size() != capacities.size()) {
    throw Error(ErrorCode::DimensionMismatch, "flows and capacities differ in length");
  }
  std::vector<double> u(flows.size());
  for (std::size_t l = 0; l < flows.size(); ++l) {
    if (!(capacities[l] > 0.0)) {
      throw Error(ErrorCode::ZeroCapacity, "line " + std::to_string(l) + " has capacity <= 0");
    }
    u[l] = std::abs(flows[l]) / capacities[l];
  }
  return u;
}

}  // namespace flowmatch
