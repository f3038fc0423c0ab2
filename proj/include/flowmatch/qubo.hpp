#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace flowmatch {

using Bits = std::vector<std::uint8_t>;
using Spins = std::vector<std::int8_t>;

struct QuboTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
  bool operator==(const QuboTerm&) const = default;
};

/// Upper-triangular QUBO: objective(x) = sum_{i<=j} Q_ij x_i x_j + offset.
/// Terms are sorted by (i, j), unique, and nonzero.
class Qubo {
 public:
  Qubo() = default;
  /// Validates the term invariants; throws ErrorCode::InvalidArgument.
  Qubo(std::size_t n, std::vector<QuboTerm> terms, double offset);

  std::size_t size() const { return n_; }
  double offset() const { return offset_; }
  const std::vector<QuboTerm>& terms() const { return terms_; }
  double coefficient(std::size_t i, std::size_t j) const;

  double objective(std::span<const std::uint8_t> x) const;

  bool operator==(const Qubo&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<QuboTerm> terms_;
  double offset_ = 0.0;
};

/// Accumulates coefficients in any order; build() drops |value| < tolerance.
class QuboBuilder {
 public:
  explicit QuboBuilder(std::size_t n) : n_(n) {}
  void add(std::size_t i, std::size_t j, double value);
  void add_offset(double value) { offset_ += value; }
  Qubo build(double drop_tolerance = 0.0) const;

 private:
  std::size_t n_;
  std::map<std::pair<std::size_t, std::size_t>, double> coefficients_;
  double offset_ = 0.0;
};

/// energy(z) = sum_{i<j} J_ij z_i z_j + sum_i h_i z_i + offset, z in {-1,+1}.
class IsingModel {
 public:
  IsingModel() = default;
  IsingModel(std::vector<double> fields, std::vector<QuboTerm> couplings, double offset);

  std::size_t size() const { return fields_.size(); }
  const std::vector<double>& fields() const { return fields_; }
  const std::vector<QuboTerm>& couplings() const { return couplings_; }
  double offset() const { return offset_; }

  double energy(std::span<const std::int8_t> z) const;

  bool operator==(const IsingModel&) const = default;

 private:
  std::vector<double> fields_;
  std::vector<QuboTerm> couplings_;
  double offset_ = 0.0;
};

/// Energy-preserving change of variables z = 1 - 2x.
IsingModel to_ising(const Qubo& q);
Qubo to_qubo(const IsingModel& ising);

Spins spins_from_bits(std::span<const std::uint8_t> x);
Bits bits_from_spins(std::span<const std::int8_t> z);

// Text exchange format: "qubo <n> <nnz>\noffset <v>\n<i> <j> <v>\n..." with
// 17 significant digits. Ising uses the "ising" header and stores h_i as the
// diagonal entries (i, i).
std::string format_qubo(const Qubo& q);
Qubo parse_qubo(std::string_view text);
void export_qubo(const Qubo& q, const std::filesystem::path& path);
Qubo import_qubo(const std::filesystem::path& path);

std::string format_ising(const IsingModel& m);
IsingModel parse_ising(std::string_view text);
void export_ising(const IsingModel& m, const std::filesystem::path& path);
IsingModel import_ising(const std::filesystem::path& path);

/// A QUBO known to equal alpha * ||target - columns * x||^2 + linear . x on
/// binary x. Exact solvers use it for convex box relaxations.
struct ResidualForm {
  Eigen::MatrixXd columns;  // lines x variables
  Eigen::VectorXd target;   // lines
  Eigen::VectorXd linear;   // variables
  double alpha = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(columns.cols()); }
  double objective(std::span<const double> x) const;
};

}  // namespace flowmatch
