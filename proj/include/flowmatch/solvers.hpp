#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowmatch/qubo.hpp"

namespace flowmatch {

enum class SolverKind { Sa, Tabu, Exact };

std::string_view to_string(SolverKind kind);
std::optional<SolverKind> parse_solver_kind(std::string_view name);

struct SaParams {
  int num_sweeps = 1000;
  double beta_start = 0.2;
  double beta_end = 1000.0;
};

/// Zero means "derive from the problem size": tenure = max(10, n/10),
/// stall limit = 5n.
struct TabuParams {
  std::size_t tenure = 0;
  std::size_t max_stall_iterations = 0;
};

struct SolverConfig {
  SolverKind kind = SolverKind::Sa;
  SaParams sa;
  TabuParams tabu;
  double budget_s = std::numeric_limits<double>::infinity();
  std::size_t num_reads = 1;  // 0 = until budget or the consumer stops
  std::uint64_t seed = 0;

  /// Replace wall-clock time with operation counts (sweeps, tabu iterations,
  /// B&B nodes). Sample::elapsed then counts operations and budget_ops is the
  /// budget.
  bool deterministic = false;
  std::uint64_t budget_ops = 0;  // 0 = unlimited, deterministic mode only

  std::size_t enumeration_cutoff = 22;
  /// Re-evaluate the full objective after every accepted flip (n <= 64 only)
  /// and throw std::logic_error on disagreement.
  bool verify_incremental = false;
};

/// Throws ErrorCode::InvalidArgument on a bad configuration.
void validate(const SolverConfig& cfg);

struct Sample {
  Bits x;
  double cost = 0.0;     // QUBO objective including offset
  double elapsed = 0.0;  // seconds since solver start (operations if deterministic)
};

struct SolveResult {
  Sample best;
  std::vector<Sample> samples;
  std::size_t reads_completed = 0;
  bool proven_optimal = false;
  bool timed_out = false;
};

/// Receives each sample as it is produced; return false to stop sampling.
using SampleSink = std::function<bool(const Sample&)>;

struct ReadStats {
  std::size_t reads = 0;
  bool timed_out = false;
  bool proven_optimal = false;
};

/// Repeatedly runs the configured solver and streams one sample per read. At
/// least one sample is always produced: a read in flight when the budget runs
/// out completes if nothing has been emitted yet.
ReadStats run_reads(const Qubo& q, const SolverConfig& cfg, const SampleSink& sink,
                    const ResidualForm* form = nullptr);

SolveResult simulated_annealing(const Qubo& q, const SolverConfig& cfg);
SolveResult tabu_search(const Qubo& q, const SolverConfig& cfg);

/// Exhaustive Gray-code enumeration up to cfg.enumeration_cutoff variables,
/// branch-and-bound above. Ties resolve to the smallest assignment read as a
/// big-endian bit string (x_0 most significant). Samples trace incumbent
/// improvements.
SolveResult exact_solve(const Qubo& q, const ResidualForm* form, const SolverConfig& cfg);

/// Dispatches on cfg.kind and collects every sample.
SolveResult solve(const Qubo& q, const SolverConfig& cfg, const ResidualForm* form = nullptr);

/// Convex box relaxation of a QUBO used as the branch-and-bound node bound.
/// With a residual form the least-squares structure is used directly;
/// otherwise the off-diagonal part is made convex by a diagonal shift.
class BoxRelaxation {
 public:
  BoxRelaxation(const Qubo& q, const ResidualForm* form);

  /// Certified lower bound of the QUBO objective over all binary x with
  /// lo <= x <= hi. `warm` seeds and receives the relaxed minimizer. Stops
  /// early once the bound exceeds `cutoff`.
  double lower_bound(std::span<const double> lo, std::span<const double> hi,
                     std::vector<double>& warm,
                     double cutoff = std::numeric_limits<double>::infinity(),
                     int max_iterations = 400) const;

 private:
  double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

  bool residual_;
  Eigen::MatrixXd columns_;  // residual route
  Eigen::VectorXd target_;
  double alpha_ = 0.0;
  Eigen::MatrixXd hessian_half_;  // generic route: f = x'Hx + g'x + c
  Eigen::VectorXd linear_;
  double constant_ = 0.0;
  double lipschitz_ = 1.0;
  double slack_ = 0.0;
};

}  // namespace flowmatch
