#include "flowmatch/solvers.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <deque>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "flowmatch/error.hpp"
#include "flowmatch/seed.hpp"

namespace flowmatch {

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Sa: return "sa";
    case SolverKind::Tabu: return "tabu";
    case SolverKind::Exact: return "exact";
  }
  return "unknown";
}

std::optional<SolverKind> parse_solver_kind(std::string_view name) {
  if (name == "sa") return SolverKind::Sa;
  if (name == "tabu") return SolverKind::Tabu;
  if (name == "exact") return SolverKind::Exact;
  return std::nullopt;
}

void validate(const SolverConfig& cfg) {
  if (cfg.sa.num_sweeps < 1) throw Error(ErrorCode::InvalidArgument, "num_sweeps must be >= 1");
  if (!(cfg.sa.beta_start > 0.0) || !(cfg.sa.beta_start < cfg.sa.beta_end)) {
    throw Error(ErrorCode::InvalidArgument, "annealing schedule needs 0 < beta_start < beta_end");
  }
  if (!(cfg.budget_s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(const SolverConfig& cfg)
      : deterministic_(cfg.deterministic),
        budget_s_(cfg.budget_s),
        budget_ops_(cfg.budget_ops),
        start_(Clock::now()) {}

  void tick(std::uint64_t n = 1) { ops_ += n; }
  std::uint64_t operations() const { return ops_; }

  double elapsed() const {
    if (deterministic_) return static_cast<double>(ops_);
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

  bool expired() const {
    if (deterministic_) return budget_ops_ != 0 && ops_ >= budget_ops_;
    return elapsed() >= budget_s_;
  }

  /// Config for a nested solve limited to what is left of this budget.
  SolverConfig remaining(SolverConfig cfg) const {
    if (deterministic_) {
      if (budget_ops_ != 0) cfg.budget_ops = budget_ops_ > ops_ ? budget_ops_ - ops_ : 1;
    } else {
      cfg.budget_s = std::max(0.0, budget_s_ - elapsed());
    }
    return cfg;
  }

 private:
  bool deterministic_;
  double budget_s_;
  std::uint64_t budget_ops_;
  std::uint64_t ops_ = 0;
  Clock::time_point start_;
};

// Portable draws; std distributions differ between standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

__extension__ using Wide = unsigned __int128;

std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<Wide>(rng()) * n) >> 64);
}

/// Off-diagonal neighbours per variable, for O(degree) flip updates.
struct Adjacency {
  std::vector<double> diag;
  std::vector<std::size_t> start;
  std::vector<std::size_t> neighbor;
  std::vector<double> weight;

  explicit Adjacency(const Qubo& q) : diag(q.size(), 0.0), start(q.size() + 1, 0) {
    for (const auto& t : q.terms()) {
      if (t.i == t.j) {
        diag[t.i] = t.value;
      } else {
        ++start[t.i + 1];
        ++start[t.j + 1];
      }
    }
    std::partial_sum(start.begin(), start.end(), start.begin());
    neighbor.resize(start.back());
    weight.resize(start.back());
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (const auto& t : q.terms()) {
      if (t.i == t.j) continue;
      neighbor[fill[t.i]] = t.j;
      weight[fill[t.i]++] = t.value;
      neighbor[fill[t.j]] = t.i;
      weight[fill[t.j]++] = t.value;
    }
  }

  std::size_t size() const { return diag.size(); }
};

/// Assignment plus local fields field_k = sum_j Q_kj x_j (j != k).
class FlipState {
 public:
  FlipState(const Qubo& q, const Adjacency& adj) : q_(q), adj_(adj) { reset(Bits(adj.size(), 0)); }

  void reset(Bits x) {
    x_ = std::move(x);
    field_.assign(x_.size(), 0.0);
    for (std::size_t k = 0; k < x_.size(); ++k) {
      if (!x_[k]) continue;
      for (std::size_t e = adj_.start[k]; e < adj_.start[k + 1]; ++e) field_[adj_.neighbor[e]] += adj_.weight[e];
    }
    cost_ = q_.objective(x_);
  }

  double delta(std::size_t k) const { return (x_[k] ? -1.0 : 1.0) * (adj_.diag[k] + field_[k]); }

  void flip(std::size_t k, double delta) {
    const double sign = x_[k] ? -1.0 : 1.0;
    x_[k] ^= 1;
    for (std::size_t e = adj_.start[k]; e < adj_.start[k + 1]; ++e) {
      field_[adj_.neighbor[e]] += sign * adj_.weight[e];
    }
    cost_ += delta;
  }

  void verify() const {
    if (x_.size() > 64) return;
    const double full = q_.objective(x_);
    if (std::abs(full - cost_) > 1e-9 * (1.0 + std::abs(full))) {
      throw std::logic_error("incremental cost " + std::to_string(cost_) +
                             " disagrees with full evaluation " + std::to_string(full));
    }
  }

  const Bits& x() const { return x_; }
  double cost() const { return cost_; }

 private:
  const Qubo& q_;
  const Adjacency& adj_;
  Bits x_;
  std::vector<double> field_;
  double cost_ = 0.0;
};

class ReadEngine {
 public:
  virtual ~ReadEngine() = default;
  /// Returns nullopt only when the budget expired and `must_finish` is false.
  virtual std::optional<Sample> read(Stopwatch& sw, bool must_finish) = 0;
  virtual bool proven_optimal() const { return false; }
};

class AnnealingEngine final : public ReadEngine {
 public:
  AnnealingEngine(const Qubo& q, const SolverConfig& cfg)
      : q_(q), adj_(q), state_(q, adj_), rng_(derive_seed(cfg.seed, "solver.sa")),
        verify_(cfg.verify_incremental), order_(q.size()) {
    const auto& p = cfg.sa;
    betas_.resize(static_cast<std::size_t>(p.num_sweeps));
    for (int t = 0; t < p.num_sweeps; ++t) {
      const double frac = p.num_sweeps == 1 ? 0.0 : static_cast<double>(t) / (p.num_sweeps - 1);
      betas_[static_cast<std::size_t>(t)] = p.beta_start * std::pow(p.beta_end / p.beta_start, frac);
    }
  }

  std::optional<Sample> read(Stopwatch& sw, bool must_finish) override {
    state_.reset(Bits(q_.size(), 0));
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (double beta : betas_) {
      for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[bounded(rng_, i)]);
      for (std::size_t k : order_) {
        const double d = state_.delta(k);
        if (d <= 0.0 || uniform01(rng_) < std::exp(-beta * d)) {
          state_.flip(k, d);
          if (verify_) state_.verify();
        }
      }
      sw.tick();
      if (!must_finish && sw.expired()) return std::nullopt;
    }
    return Sample{state_.x(), q_.objective(state_.x()), 0.0};
  }

 private:
  const Qubo& q_;
  Adjacency adj_;
  FlipState state_;
  std::mt19937_64 rng_;
  bool verify_;
  std::vector<std::size_t> order_;
  std::vector<double> betas_;
};

class TabuEngine final : public ReadEngine {
 public:
  TabuEngine(const Qubo& q, const SolverConfig& cfg)
      : q_(q), adj_(q), state_(q, adj_), rng_(derive_seed(cfg.seed, "solver.tabu")),
        verify_(cfg.verify_incremental) {
    const auto n = q.size();
    tenure_ = cfg.tabu.tenure != 0 ? cfg.tabu.tenure : std::max<std::size_t>(10, n / 10);
    max_stall_ = cfg.tabu.max_stall_iterations != 0 ? cfg.tabu.max_stall_iterations : std::max<std::size_t>(1, 5 * n);
  }

  std::optional<Sample> read(Stopwatch& sw, bool /*must_finish*/) override {
    const auto n = q_.size();
    Bits start(n, 0);
    if (reads_++ > 0) {
      for (auto& b : start) b = static_cast<std::uint8_t>(rng_() >> 63);
    }
    state_.reset(std::move(start));
    Bits best = state_.x();
    double best_cost = state_.cost();

    std::deque<std::size_t> recent;
    std::vector<std::uint32_t> tabu_count(n, 0);
    std::size_t stall = 0;
    while (n > 0) {
      const double eps = 1e-12 * (1.0 + std::abs(best_cost));
      std::size_t move = n;
      double move_delta = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        const double d = state_.delta(k);
        const bool aspirates = state_.cost() + d < best_cost - eps;
        if ((tabu_count[k] == 0 || aspirates) && d < move_delta) {
          move = k;
          move_delta = d;
        }
      }
      if (move == n) break;  // every move tabu, none aspirating: restart

      state_.flip(move, move_delta);
      if (verify_) state_.verify();
      recent.push_back(move);
      ++tabu_count[move];
      if (recent.size() > tenure_) {
        --tabu_count[recent.front()];
        recent.pop_front();
      }
      if (state_.cost() < best_cost - eps) {
        best = state_.x();
        best_cost = state_.cost();
        stall = 0;
      } else {
        ++stall;
      }
      sw.tick();
      if (stall >= max_stall_ || sw.expired()) break;
    }
    return Sample{best, q_.objective(best), 0.0};
  }

 private:
  const Qubo& q_;
  Adjacency adj_;
  FlipState state_;
  std::mt19937_64 rng_;
  bool verify_;
  std::size_t tenure_ = 10;
  std::size_t max_stall_ = 1;
  std::size_t reads_ = 0;
};

class ExactEngine final : public ReadEngine {
 public:
  ExactEngine(const Qubo& q, const SolverConfig& cfg, const ResidualForm* form)
      : q_(q), cfg_(cfg), form_(form) {}

  std::optional<Sample> read(Stopwatch& sw, bool /*must_finish*/) override {
    auto result = exact_solve(q_, form_, sw.remaining(cfg_));
    if (cfg_.deterministic) sw.tick(static_cast<std::uint64_t>(std::max(1.0, result.best.elapsed)));
    proven_ = result.proven_optimal;
    return std::move(result.best);
  }
  bool proven_optimal() const override { return proven_; }

 private:
  const Qubo& q_;
  SolverConfig cfg_;
  const ResidualForm* form_;
  bool proven_ = false;
};

// Big-endian comparison with x_0 most significant equals lexicographic order.
bool lex_smaller(const Bits& a, const Bits& b) { return a < b; }

class Incumbent {
 public:
  Incumbent(const Stopwatch& sw, std::vector<Sample>& trace) : sw_(sw), trace_(trace) {}

  double cost() const { return cost_; }
  bool has_value() const { return has_; }
  const Bits& x() const { return x_; }
  double tolerance() const { return 1e-9 * (1.0 + std::abs(cost_)); }

  void offer(const Bits& x, double cost) {
    const bool better = !has_ || cost < cost_ - tolerance();
    const bool tie = has_ && !better && cost <= cost_ + tolerance() && lex_smaller(x, x_);
    if (!better && !tie) return;
    has_ = true;
    x_ = x;
    cost_ = better ? cost : std::min(cost, cost_);
    trace_.push_back(Sample{x_, cost, sw_.elapsed()});
  }

 private:
  const Stopwatch& sw_;
  std::vector<Sample>& trace_;
  Bits x_;
  double cost_ = std::numeric_limits<double>::infinity();
  bool has_ = false;
};

constexpr std::size_t kWarmStartTabuReads = 1024;

SolveResult enumerate_all(const Qubo& q, Stopwatch& sw) {
  const auto n = q.size();
  const Adjacency adj(q);
  FlipState state(q, adj);
  double scale = std::abs(q.offset());
  for (const auto& t : q.terms()) scale += std::abs(t.value);
  const double tol = 1e-10 * (1.0 + scale);

  Bits best = state.x();
  double best_cost = state.cost();
  const std::uint64_t total = n == 0 ? 1 : (std::uint64_t{1} << n);
  for (std::uint64_t i = 1; i < total; ++i) {
    const auto k = static_cast<std::size_t>(std::countr_zero(i));
    state.flip(k, state.delta(k));
    double cost = state.cost();
    if ((i & 0xFFFF) == 0) {
      state.reset(state.x());  // resynchronize accumulated rounding
      cost = state.cost();
    }
    if (cost < best_cost - tol) {
      best = state.x();
      best_cost = cost;
    } else if (cost <= best_cost + tol && lex_smaller(state.x(), best)) {
      best = state.x();
      best_cost = std::min(best_cost, cost);
    }
  }
  sw.tick(total);

  SolveResult r;
  r.best = Sample{best, q.objective(best), sw.elapsed()};
  r.samples.push_back(r.best);
  r.reads_completed = 1;
  r.proven_optimal = true;
  return r;
}

class BranchAndBound {
 public:
  BranchAndBound(const Qubo& q, const ResidualForm* form, Stopwatch& sw, std::vector<Sample>& trace)
      : q_(q), adj_(q), relax_(q, form), sw_(sw), incumbent_(sw, trace), n_(q.size()),
        lo_(n_, 0.0), hi_(n_, 1.0), fixed_(n_, -1), polish_(q_, adj_) {}

  Incumbent& incumbent() { return incumbent_; }
  bool timed_out() const { return timed_out_; }

  void run() {
    std::vector<double> warm(n_, 0.5);
    if (incumbent_.has_value()) {
      for (std::size_t k = 0; k < n_; ++k) warm[k] = incumbent_.x()[k];
    }
    explore(warm);
  }

 private:
  void explore(std::vector<double>& warm) {
    if (timed_out_) return;
    sw_.tick();
    if (sw_.expired()) {
      timed_out_ = true;
      return;
    }

    std::size_t free_count = 0;
    for (auto f : fixed_) free_count += f < 0;
    if (free_count == 0) {
      Bits x(n_);
      for (std::size_t k = 0; k < n_; ++k) x[k] = static_cast<std::uint8_t>(fixed_[k]);
      incumbent_.offer(x, q_.objective(x));
      return;
    }

    const double cutoff = incumbent_.cost() + incumbent_.tolerance();
    const double bound = relax_.lower_bound(lo_, hi_, warm, cutoff);
    if (bound > cutoff) return;

    // rounding heuristic on the relaxed minimizer
    Bits rounded(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      rounded[k] = static_cast<std::uint8_t>(fixed_[k] >= 0 ? fixed_[k] : (warm[k] >= 0.5 ? 1 : 0));
    }
    incumbent_.offer(rounded, q_.objective(rounded));
    offer_polished(rounded);

    const std::size_t var = branching_variable();
    for (int value : {1, 0}) {
      fixed_[var] = static_cast<std::int8_t>(value);
      lo_[var] = hi_[var] = value;
      std::vector<double> child = warm;
      child[var] = value;
      explore(child);
      if (timed_out_) break;
    }
    fixed_[var] = -1;
    lo_[var] = 0.0;
    hi_[var] = 1.0;
  }

  // Free variable with the largest |linear coefficient| after substituting
  // the fixed ones; lowest index on ties.
  std::size_t branching_variable() const {
    std::size_t best = n_;
    double best_mag = -1.0;
    for (std::size_t k = 0; k < n_; ++k) {
      if (fixed_[k] >= 0) continue;
      double linear = adj_.diag[k];
      for (std::size_t e = adj_.start[k]; e < adj_.start[k + 1]; ++e) {
        if (fixed_[adj_.neighbor[e]] == 1) linear += adj_.weight[e];
      }
      if (std::abs(linear) > best_mag) {
        best_mag = std::abs(linear);
        best = k;
      }
    }
    return best;
  }

  // Steepest single-flip descent; any binary point is a valid incumbent.
  void offer_polished(const Bits& x) {
    polish_.reset(x);
    for (;;) {
      std::size_t best = n_;
      double best_delta = -1e-12 * (1.0 + std::abs(polish_.cost()));
      for (std::size_t k = 0; k < n_; ++k) {
        const double d = polish_.delta(k);
        if (d < best_delta) {
          best_delta = d;
          best = k;
        }
      }
      if (best == n_) break;
      polish_.flip(best, best_delta);
    }
    incumbent_.offer(polish_.x(), q_.objective(polish_.x()));
  }

  const Qubo& q_;
  Adjacency adj_;
  BoxRelaxation relax_;
  Stopwatch& sw_;
  Incumbent incumbent_;
  std::size_t n_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<std::int8_t> fixed_;
  FlipState polish_;
  bool timed_out_ = false;
};

std::unique_ptr<ReadEngine> make_engine(const Qubo& q, const SolverConfig& cfg, const ResidualForm* form) {
  switch (cfg.kind) {
    case SolverKind::Sa: return std::make_unique<AnnealingEngine>(q, cfg);
    case SolverKind::Tabu: return std::make_unique<TabuEngine>(q, cfg);
    case SolverKind::Exact: return std::make_unique<ExactEngine>(q, cfg, form);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown solver kind");
}

SolveResult collect(const Qubo& q, const SolverConfig& cfg, const ResidualForm* form) {
  SolveResult result;
  auto stats = run_reads(
      q, cfg,
      [&](const Sample& s) {
        if (result.samples.empty() || s.cost < result.best.cost) result.best = s;
        result.samples.push_back(s);
        return true;
      },
      form);
  result.reads_completed = stats.reads;
  result.timed_out = stats.timed_out;
  result.proven_optimal = stats.proven_optimal;
  return result;
}

}  // namespace

ReadStats run_reads(const Qubo& q, const SolverConfig& cfg, const SampleSink& sink, const ResidualForm* form) {
  validate(cfg);
  Stopwatch sw(cfg);
  auto engine = make_engine(q, cfg, form);
  ReadStats stats;
  for (std::size_t r = 0; cfg.num_reads == 0 || r < cfg.num_reads; ++r) {
    if (stats.reads > 0 && sw.expired()) {
      stats.timed_out = true;
      break;
    }
    auto sample = engine->read(sw, stats.reads == 0);
    if (!sample) {
      stats.timed_out = true;
      break;
    }
    sample->elapsed = sw.elapsed();
    ++stats.reads;
    stats.proven_optimal = stats.proven_optimal || engine->proven_optimal();
    if (!sink(*sample)) break;
  }
  return stats;
}

SolveResult simulated_annealing(const Qubo& q, const SolverConfig& cfg) {
  if (cfg.kind != SolverKind::Sa) throw Error(ErrorCode::InvalidArgument, "config kind must be sa");
  return collect(q, cfg, nullptr);
}

SolveResult tabu_search(const Qubo& q, const SolverConfig& cfg) {
  if (cfg.kind != SolverKind::Tabu) throw Error(ErrorCode::InvalidArgument, "config kind must be tabu");
  return collect(q, cfg, nullptr);
}

SolveResult exact_solve(const Qubo& q, const ResidualForm* form, const SolverConfig& cfg) {
  validate(cfg);
  Stopwatch sw(cfg);
  if (q.size() <= cfg.enumeration_cutoff) return enumerate_all(q, sw);

  SolveResult result;
  BranchAndBound bnb(q, form, sw, result.samples);

  SolverConfig sa_cfg = cfg;
  sa_cfg.kind = SolverKind::Sa;
  sa_cfg.num_reads = 1;
  sa_cfg.budget_s = std::numeric_limits<double>::infinity();
  sa_cfg.budget_ops = 0;
  const auto seed_read = collect(q, sa_cfg, nullptr);
  bnb.incumbent().offer(seed_read.best.x, seed_read.best.cost);

  // tabu restarts are cheap and usually land close to the optimum, which
  // makes pruning bite early; a tenth of the wall budget at most
  SolverConfig tabu_cfg = sa_cfg;
  tabu_cfg.kind = SolverKind::Tabu;
  tabu_cfg.num_reads = kWarmStartTabuReads;
  if (!cfg.deterministic) tabu_cfg.budget_s = 0.1 * cfg.budget_s;
  const auto tabu_reads = collect(q, tabu_cfg, nullptr);
  bnb.incumbent().offer(tabu_reads.best.x, tabu_reads.best.cost);

  bnb.run();
  result.best = Sample{bnb.incumbent().x(), q.objective(bnb.incumbent().x()), sw.elapsed()};
  result.reads_completed = 1;
  result.timed_out = bnb.timed_out();
  result.proven_optimal = !bnb.timed_out();
  return result;
}

SolveResult solve(const Qubo& q, const SolverConfig& cfg, const ResidualForm* form) {
  if (cfg.kind == SolverKind::Exact) return exact_solve(q, form, cfg);
  return collect(q, cfg, form);
}

BoxRelaxation::BoxRelaxation(const Qubo& q, const ResidualForm* form) : residual_(form != nullptr) {
  const auto n = static_cast<Eigen::Index>(q.size());
  double scale = std::abs(q.offset());
  for (const auto& t : q.terms()) scale += std::abs(t.value);

  if (residual_) {
    if (form->size() != q.size()) {
      throw Error(ErrorCode::DimensionMismatch, "residual form does not match the QUBO size");
    }
    columns_ = form->columns;
    target_ = form->target;
    alpha_ = form->alpha;
    linear_ = form->linear;
    constant_ = q.offset() - alpha_ * target_.squaredNorm();
    const Eigen::MatrixXd small = columns_.rows() <= columns_.cols()
                                      ? Eigen::MatrixXd(columns_ * columns_.transpose())
                                      : Eigen::MatrixXd(columns_.transpose() * columns_);
    const double top = small.size() == 0 ? 0.0 : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(small).eigenvalues().maxCoeff();
    lipschitz_ = 2.0 * alpha_ * top;
  } else {
    hessian_half_ = Eigen::MatrixXd::Zero(n, n);
    linear_ = Eigen::VectorXd::Zero(n);
    for (const auto& t : q.terms()) {
      const auto i = static_cast<Eigen::Index>(t.i);
      const auto j = static_cast<Eigen::Index>(t.j);
      if (i == j) {
        linear_(i) = t.value;
      } else {
        hessian_half_(i, j) = hessian_half_(j, i) = t.value / 2.0;
      }
    }
    double shift = 0.0;
    double top = 0.0;
    if (n > 0) {
      const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hessian_half_).eigenvalues();
      shift = std::max(0.0, -eig.minCoeff()) * (1.0 + 1e-9) + 1e-12 * (1.0 + scale);
      top = eig.maxCoeff() + shift;
    }
    // x_k^2 = x_k on binaries, so moving `shift` from the linear to the
    // quadratic part leaves the objective unchanged there.
    hessian_half_.diagonal().array() += shift;
    linear_.array() -= shift;
    constant_ = q.offset();
    lipschitz_ = 2.0 * top;
  }
  lipschitz_ = std::max(lipschitz_, 1e-12);
  slack_ = 1e-9 * (1.0 + scale);
}

double BoxRelaxation::value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  if (residual_) {
    const Eigen::VectorXd r = target_ - columns_ * x;
    grad.noalias() = -2.0 * alpha_ * (columns_.transpose() * r);
    grad += linear_;
    return alpha_ * r.squaredNorm() + linear_.dot(x) + constant_;
  }
  const Eigen::VectorXd hx = hessian_half_ * x;
  grad = 2.0 * hx + linear_;
  return x.dot(hx) + linear_.dot(x) + constant_;
}

double BoxRelaxation::lower_bound(std::span<const double> lo, std::span<const double> hi,
                                  std::vector<double>& warm, double cutoff, int max_iterations) const {
  const auto n = static_cast<Eigen::Index>(warm.size());
  const Eigen::Map<const Eigen::VectorXd> lower(lo.data(), n);
  const Eigen::Map<const Eigen::VectorXd> upper(hi.data(), n);
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(warm.data(), n).cwiseMax(lower).cwiseMin(upper);
  Eigen::VectorXd y = x;
  Eigen::VectorXd grad(n);
  Eigen::VectorXd next(n);
  double t = 1.0;
  double best = -std::numeric_limits<double>::infinity();
  const double step = 1.0 / lipschitz_;

  for (int it = 0; it < max_iterations; ++it) {
    const double fy = value_and_gradient(y, grad);
    // Convexity: f(z) >= f(y) + g.(z - y) for every z, minimized over the box.
    double linear_min = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      linear_min += grad(k) >= 0.0 ? grad(k) * (lower(k) - y(k)) : grad(k) * (upper(k) - y(k));
    }
    best = std::max(best, fy + linear_min);
    if (best - slack_ > cutoff) break;
    if (fy - best <= 1e-9 * (1.0 + std::abs(fy))) break;

    next = (y - step * grad).cwiseMax(lower).cwiseMin(upper);
    if (grad.dot(next - x) > 0.0) {
      t = 1.0;  // adaptive restart
      y = next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - x);
      t = t_next;
    }
    x = next;
  }
  std::copy(x.data(), x.data() + n, warm.begin());
  return best - slack_;
}

}  // namespace flowmatch
