#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowmatch/grid.hpp"

namespace flowmatch {

/// Benchmark case: topology name plus the per-case fee constant, timeout
/// and annealing sweep count.
struct CaseSpec {
  std::string name;
  std::size_t node_count = 0;
  double rho = 0.0;        // ct/kWh
  double timeout_s = 0.0;  // s
  int sa_sweeps = 0;
};

const std::vector<CaseSpec>& builtin_cases();
std::optional<CaseSpec> find_case(std::string_view name);

/// Net demand per bus in kWh: negative for producers, positive for consumers.
struct PeerLoads {
  std::vector<double> demand;
  std::vector<BusId> producers;  // ascending
  std::vector<BusId> consumers;  // ascending

  bool is_producer(BusId b) const { return demand[b] < 0.0; }
};

struct Instance {
  Grid grid;
  PeerLoads loads;
  double rho = 0.0;       // ct/kWh
  double alpha = 100.0;   // ct/kWh^2
  double period_h = 1.0;
  std::uint64_t seed = 0;
  std::string case_name;
};

/// Throws ErrorCode::InvalidArgument when an Instance invariant is violated.
void validate(const Instance& instance);

// NAYY 4x50 SE low-voltage cable.
inline constexpr double kNayyR = 0.642;      // ohm/km
inline constexpr double kNayyX = 0.083;      // ohm/km
inline constexpr double kNayyIMax = 142.0;   // A
inline constexpr double kResidentialVoltage = 400.0;  // V
inline constexpr double kShortestLine = 50.0;          // m

inline constexpr double kDefaultAlpha = 100.0;
inline constexpr double kDefaultLoadMean = 1.0;
inline constexpr double kDefaultLoadStddev = 0.25;

/// Scale lengths so the shortest line is 50 m and swap in residential cable
/// parameters at 400 V.
Grid rescale_topology(const Grid& grid);

PeerLoads sample_loads(const Grid& grid, std::uint64_t seed,
                       double mean = kDefaultLoadMean,
                       double stddev = kDefaultLoadStddev);

/// Directory holding <case>.json topology files. FLOWMATCH_DATA_DIR wins over
/// the compiled-in location.
std::filesystem::path default_topology_dir();

Grid load_case_topology(const std::string& case_name,
                        const std::filesystem::path& dir = default_topology_dir());

Instance generate(const CaseSpec& spec, std::uint64_t seed, double alpha = kDefaultAlpha,
                  const std::filesystem::path& dir = default_topology_dir());

}  // namespace flowmatch
