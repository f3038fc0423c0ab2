#include "flowmatch/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include "flowmatch/error.hpp"
#include "flowmatch/io.hpp"
#include "flowmatch/seed.hpp"

#ifndef FLOWMATCH_DATA_DIR
#define FLOWMATCH_DATA_DIR "data/cases"
#endif

namespace flowmatch {

const std::vector<CaseSpec>& builtin_cases() {
  static const std::vector<CaseSpec> cases = {
      {"case9", 9, 20.0, 1.0, 100},       {"case14", 14, 45.0, 2.45, 100},
      {"case24", 24, 40.0, 7.2, 1000},    {"case33", 33, 15.0, 13.6, 5000},
      {"case39", 39, 15.0, 19.0, 5000},   {"case57", 57, 15.0, 40.6, 10000},
  };
  return cases;
}

std::optional<CaseSpec> find_case(std::string_view name) {
  for (const auto& c : builtin_cases()) {
    if (c.name == name) return c;
  }
  return std::nullopt;
}

void validate(const Instance& inst) {
  const auto n = inst.grid.bus_count();
  const auto& loads = inst.loads;
  if (!(inst.rho >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be >= 0");
  if (!(inst.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
  if (!(inst.period_h > 0.0)) throw Error(ErrorCode::InvalidArgument, "period must be > 0");
  if (loads.demand.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "load vector length differs from bus count");
  }
  std::vector<int> seen(n, 0);
  for (BusId p : loads.producers) {
    if (p >= n) throw Error(ErrorCode::InvalidArgument, "producer id out of range");
    ++seen[p];
    if (!(loads.demand[p] < 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "producer " + std::to_string(p) + " must have negative net demand");
    }
  }
  for (BusId c : loads.consumers) {
    if (c >= n) throw Error(ErrorCode::InvalidArgument, "consumer id out of range");
    ++seen[c];
    if (!(loads.demand[c] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "consumer " + std::to_string(c) + " must have positive net demand");
    }
  }
  for (BusId b = 0; b < n; ++b) {
    if (seen[b] != 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "bus " + std::to_string(b) + " must be in exactly one of producers/consumers");
    }
  }
  if (!std::is_sorted(loads.producers.begin(), loads.producers.end()) ||
      !std::is_sorted(loads.consumers.begin(), loads.consumers.end())) {
    throw Error(ErrorCode::InvalidArgument, "producer and consumer lists must be ascending");
  }
  const double total = std::accumulate(loads.demand.begin(), loads.demand.end(), 0.0);
  if (std::abs(total) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument,
                "net demand must sum to zero, got " + std::to_string(total) + " kWh");
  }
}

Grid rescale_topology(const Grid& grid) {
  if (grid.line_count() == 0) {
    throw Error(ErrorCode::InvalidArgument, "cannot rescale a grid without lines");
  }
  double shortest = grid.lines().front().length_m();
  for (const auto& line : grid.lines()) shortest = std::min(shortest, line.length_m());
  const double scale = kShortestLine / shortest;

  std::vector<Line> lines;
  lines.reserve(grid.line_count());
  for (const auto& line : grid.lines()) {
    // The shortest line lands on exactly 50 m so repeated rescaling is a no-op.
    const double length = line.length_m() == shortest ? kShortestLine : line.length_m() * scale;
    lines.emplace_back(line.from(), line.to(), length, kNayyX, kNayyR, kNayyIMax,
                       kResidentialVoltage);
  }
  return Grid(grid.buses(), std::move(lines));
}

PeerLoads sample_loads(const Grid& grid, std::uint64_t seed, double mean, double stddev) {
  const auto n = grid.bus_count();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least two buses to sample loads");
  if (!(mean > 0.0) || !(stddev >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "load mean must be > 0 and stddev >= 0");
  }

  std::vector<BusId> order(n);
  std::iota(order.begin(), order.end(), BusId{0});
  std::mt19937_64 shuffle_rng(derive_seed(seed, "loads.partition"));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  PeerLoads loads;
  loads.demand.assign(n, 0.0);
  loads.producers.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n / 2));
  loads.consumers.assign(order.begin() + static_cast<std::ptrdiff_t>(n / 2), order.end());
  std::sort(loads.producers.begin(), loads.producers.end());
  std::sort(loads.consumers.begin(), loads.consumers.end());

  std::mt19937_64 draw_rng(derive_seed(seed, "loads.draw"));
  std::normal_distribution<double> consumption(mean, stddev);
  std::normal_distribution<double> production(-mean, stddev);
  auto draw = [&](auto& dist, bool positive) {
    for (;;) {
      const double v = dist(draw_rng);
      if (positive ? v > 0.0 : v < 0.0) return v;
    }
  };

  double consumed = 0.0;
  for (BusId c : loads.consumers) {
    loads.demand[c] = draw(consumption, true);
    consumed += loads.demand[c];
  }
  double produced = 0.0;
  for (BusId p : loads.producers) {
    loads.demand[p] = draw(production, false);
    produced -= loads.demand[p];
  }
  const double factor = consumed / produced;
  for (BusId p : loads.producers) loads.demand[p] *= factor;

  // Absorb the rounding residue in the largest producer so the sum is exact
  // to well below 1e-9 kWh.
  double residue = 0.0;
  for (double d : loads.demand) residue += d;
  auto largest = *std::min_element(loads.producers.begin(), loads.producers.end(),
                                   [&](BusId a, BusId b) { return loads.demand[a] < loads.demand[b]; });
  loads.demand[largest] -= residue;
  return loads;
}

std::filesystem::path default_topology_dir() {
  if (const char* env = std::getenv("FLOWMATCH_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return FLOWMATCH_DATA_DIR;
}

Grid load_case_topology(const std::string& case_name, const std::filesystem::path& dir) {
  const auto path = dir / (case_name + ".json");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingTopology, "no topology file " + path.string());
  }
  return load_grid(path);
}

Instance generate(const CaseSpec& spec, std::uint64_t seed, double alpha,
                  const std::filesystem::path& dir) {
  Grid grid = rescale_topology(load_case_topology(spec.name, dir));
  PeerLoads loads = sample_loads(grid, seed);
  Instance inst{std::move(grid), std::move(loads), spec.rho, alpha, 1.0, seed, spec.name};
  validate(inst);
  return inst;
}

}  // namespace flowmatch
