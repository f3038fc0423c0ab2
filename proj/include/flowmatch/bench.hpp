#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "flowmatch/instance.hpp"
#include "flowmatch/matching.hpp"
#include "flowmatch/qubo.hpp"
#include "flowmatch/settlement.hpp"
#include "flowmatch/solvers.hpp"

namespace flowmatch {

/// (C - C*) / C*. A zero reference yields 0 for a zero cost and +infinity
/// otherwise.
double relative_error(double cost, double ref_cost);

/// t_s * ceil(log(0.01) / log(1 - p)); t_s for p = 1, nullopt for p = 0.
std::optional<double> time_to_solution(double sample_time, double success_probability);

/// Instance with everything a solver run needs.
struct PreparedInstance {
  Instance instance;
  MatchingModel model;
  Qubo qubo;
  ResidualForm form;
};

PreparedInstance prepare(Instance instance);

struct ReferenceSolution {
  std::string case_name;
  std::uint64_t seed = 0;
  Bits x;
  double cost = 0.0;
  bool proven_optimal = false;
};

using ReferenceKey = std::pair<std::string, std::uint64_t>;
using ReferenceMap = std::map<ReferenceKey, ReferenceSolution>;

/// Best-effort optimum from the exact solver within `budget_s`.
ReferenceSolution compute_reference(const PreparedInstance& prepared, double budget_s,
                                    bool deterministic = false, std::uint64_t budget_ops = 0);

struct BenchRecord {
  std::string case_name;
  std::uint64_t seed = 0;
  std::string solver;
  std::string metric;            // "epsilon" or "tts"
  std::vector<double> epsilon;   // best-per-run (epsilon) or per-sample (tts)
  std::optional<double> tts;     // seconds (operations in deterministic mode)
  std::size_t samples_found = 0; // samples within the threshold
  std::size_t samples_drawn = 0;
  double p_eps = 0.0;
  double sample_time = 0.0;
  double wall_time = 0.0;
  bool reference_proven = false;
  bool deterministic = false;
};

struct BenchOptions {
  double alpha = kDefaultAlpha;
  std::filesystem::path topology_dir = default_topology_dir();
  std::filesystem::path out_dir;  // per-run JSON records; empty = do not persist
  std::size_t workers = 1;
  bool deterministic = false;
  /// Deterministic mode converts second budgets into operation budgets.
  double ops_per_second = 1000.0;
  double reference_budget_s = 3600.0;
  double eps_threshold = 0.05;
  // time-to-solution protocol
  std::size_t target_hits = 50;
  std::size_t min_hits = 10;
  double tts_cap_s = 1000.0;
  SaParams sa;  // num_sweeps <= 0 means "use the case table"
  TabuParams tabu;
  std::uint64_t solver_seed = 0;
};

/// Loads references from out_dir/refs when present, computes and persists the
/// rest.
ReferenceMap ensure_references(const std::vector<CaseSpec>& cases, const std::vector<std::uint64_t>& seeds,
                               const BenchOptions& options);

/// Fixed-timeout run per (case, seed, solver); records the best epsilon.
std::vector<BenchRecord> timeout_benchmark(const std::vector<CaseSpec>& cases,
                                           const std::vector<SolverKind>& solvers,
                                           const std::vector<std::uint64_t>& seeds, const ReferenceMap& refs,
                                           const BenchOptions& options);

/// Draws samples until target_hits are within the threshold or tts_cap_s
/// elapses; TTS is absent with fewer than min_hits.
std::vector<BenchRecord> tts_benchmark(const std::vector<CaseSpec>& cases, const std::vector<SolverKind>& solvers,
                                       const std::vector<std::uint64_t>& seeds, const ReferenceMap& refs,
                                       const BenchOptions& options);

/// One TTS measurement on a single prepared instance.
BenchRecord measure_tts(const PreparedInstance& prepared, const ReferenceSolution& ref,
                        const SolverConfig& base, const BenchOptions& options);

struct SummaryRow {
  std::string case_name;
  std::string solver;
  std::string metric;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t runs = 0;
  std::size_t valid = 0;             // runs with a finite value
  std::size_t within_threshold = 0;  // epsilon <= threshold (epsilon metric)
};

/// Median and 25-75% interval per (case, solver, metric).
std::vector<SummaryRow> aggregate(const std::vector<BenchRecord>& records, double eps_threshold = 0.05);

nlohmann::json record_to_json(const BenchRecord& record);
BenchRecord record_from_json(const nlohmann::json& doc);
std::filesystem::path record_path(const std::filesystem::path& dir, const BenchRecord& record);
void save_record(const BenchRecord& record, const std::filesystem::path& dir);
/// Every per-run record (epsilon_*.json, tts_*.json) directly inside `dir`,
/// sorted by file name.
std::vector<BenchRecord> load_records(const std::filesystem::path& dir);

struct RhoSweepRow {
  std::string case_name;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double rho = 0.0;
  CommunityReport report;
  double mean_consumer_tariff = 0.0;
  double mean_producer_tariff = 0.0;
  double objective = 0.0;
  bool proven_optimal = false;
};

struct RhoSweepOptions {
  std::filesystem::path topology_dir = default_topology_dir();
  SolverConfig solver = [] {
    SolverConfig c;
    c.kind = SolverKind::Exact;
    c.budget_s = 60.0;
    return c;
  }();
  TariffScheme tariffs;
  std::size_t workers = 1;
};

std::vector<RhoSweepRow> rho_sweep(const CaseSpec& spec, const std::vector<std::uint64_t>& seeds,
                                   const std::vector<double>& alphas, const std::vector<double>& rho_grid,
                                   const RhoSweepOptions& options);

/// Seed-averaged fee curve for one alpha, ordered by rho.
struct FeeCurvePoint {
  double rho = 0.0;
  double p2p_fees = 0.0;
  double total_fees = 0.0;
  double baseline_fees = 0.0;
  double p2p_ratio = 0.0;
  double mean_consumer_tariff = 0.0;
  double mean_producer_tariff = 0.0;
};
std::vector<FeeCurvePoint> fee_curve(const std::vector<RhoSweepRow>& rows, double alpha);

/// Smallest rho (linearly interpolated) where total/baseline fees reach
/// `fraction`, or nullopt.
std::optional<double> fee_fraction_crossing(const std::vector<FeeCurvePoint>& curve, double fraction);

struct SaSweepRow {
  std::string kind;  // "sweeps" or "schedule"
  int num_sweeps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  double tts_median = 0.0;
  double tts_q75 = 0.0;
  std::size_t valid_instances = 0;
};

/// TTS per num_sweeps value (at options.sa's schedule) and per
/// (beta_start, beta_end) cell (at options.sa.num_sweeps sweeps).
std::vector<SaSweepRow> sa_hyperparameter_sweep(const CaseSpec& spec, const std::vector<std::uint64_t>& seeds,
                                                const std::vector<int>& sweep_grid,
                                                const std::vector<std::pair<double, double>>& schedule_grid,
                                                const ReferenceMap& refs, const BenchOptions& options);

/// Runs jobs on `workers` threads; each job runs single-threaded.
void run_parallel(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& job);

/// FLOWMATCH_WORKERS, else available cores - 1 (at least 1).
std::size_t default_workers();

}  // namespace flowmatch
