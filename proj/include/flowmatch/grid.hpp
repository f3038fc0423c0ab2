#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flowmatch {

using BusId = std::size_t;

struct Bus {
  BusId id = 0;
  std::string name;
};

/// Electrical line between two buses. The from->to orientation defines the
/// positive flow sign. Construction rejects parameters violating the line
/// invariants with ErrorCode::InvalidArgument.
class Line {
 public:
  Line(BusId from, BusId to, double length_m, double x_ohm_per_km,
       double r_ohm_per_km, double i_max_a, double voltage_v);

  BusId from() const { return from_; }
  BusId to() const { return to_; }
  double length_m() const { return length_m_; }
  double reactance_per_km() const { return x_ohm_per_km_; }
  double resistance_per_km() const { return r_ohm_per_km_; }
  double max_current_a() const { return i_max_a_; }
  double voltage_v() const { return voltage_v_; }

  /// Series susceptance 1/X of the whole line, X in ohm.
  double susceptance() const;

  bool operator==(const Line&) const = default;

 private:
  BusId from_;
  BusId to_;
  double length_m_;
  double x_ohm_per_km_;
  double r_ohm_per_km_;
  double i_max_a_;
  double voltage_v_;
};

/// Buses and lines of a distribution grid. Bus ids must equal their position
/// (0..N-1). Parallel lines are distinct entries addressed by line index.
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<Bus> buses, std::vector<Line> lines);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  std::size_t bus_count() const { return buses_.size(); }
  std::size_t line_count() const { return lines_.size(); }

  bool is_connected() const;

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
};

/// Signed per-line energy flow in kWh, indexed by line index.
using FlowVector = std::vector<double>;

/// B-theta DC power flow with the reduced Laplacian factorized once, so
/// repeated solves on the same grid are cheap.
class DcFlowSolver {
 public:
  explicit DcFlowSolver(const Grid& grid, BusId reference_bus = 0);

  /// Flows for balanced per-bus injections (kWh, positive = into the grid).
  FlowVector solve(std::span<const double> injections) const;

  std::size_t bus_count() const { return bus_count_; }
  std::size_t line_count() const { return from_.size(); }

 private:
  std::size_t bus_count_;
  BusId reference_;
  std::vector<BusId> from_;
  std::vector<BusId> to_;
  std::vector<double> susceptance_;
  Eigen::LDLT<Eigen::MatrixXd> factor_;
};

FlowVector dc_power_flow(const Grid& grid, std::span<const double> injections,
                         BusId reference_bus = 0);

/// Three-phase thermal limit sqrt(3)*V*I expressed as kWh over `period_h`.
double line_capacity(const Line& line, double period_h);

std::vector<double> line_capacities(const Grid& grid, double period_h);

/// u = |w| / W per line.
std::vector<double> utilization(std::span<const double> flows,
                                std::span<const double> capacities);

}  // namespace flowmatch
