#include <cmath>
#include <random>

#include "doctest.h"
#include "flowmatch/instance.hpp"
#include "flowmatch/matching.hpp"
#include "flowmatch/solvers.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace flowmatch;

namespace {

SolverConfig config(SolverKind kind, std::size_t reads = 1, std::uint64_t seed = 0) {
  SolverConfig c;
  c.kind = kind;
  c.num_reads = reads;
  c.seed = seed;
  return c;
}

Qubo diagonal(std::size_t n, double value, double offset = 0.0) {
  std::vector<QuboTerm> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, value});
  return Qubo(n, t, offset);
}

void check_samples(const Qubo& q, const SolveResult& r) {
  double best = std::numeric_limits<double>::infinity();
  double last_elapsed = 0.0;
  for (const auto& s : r.samples) {
    CHECK(std::abs(s.cost - oracle::qubo_value(q, s.x)) <= 1e-9 * (1 + std::abs(s.cost)));
    CHECK(s.elapsed >= last_elapsed);
    last_elapsed = s.elapsed;
    best = std::min(best, s.cost);
  }
  CHECK(r.best.cost == best);
}

}  // namespace

TEST_CASE("config validation") {
  auto c = config(SolverKind::Sa);
  c.sa.beta_start = 10;
  c.sa.beta_end = 1;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidArgument);
  c = config(SolverKind::Sa);
  c.sa.num_sweeps = 0;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidArgument);
  CHECK(parse_solver_kind("tabu") == SolverKind::Tabu);
  CHECK_FALSE(parse_solver_kind("gurobi").has_value());
  CHECK(to_string(SolverKind::Exact) == "exact");
}

TEST_CASE("simulated annealing") {
  SUBCASE("positive diagonal keeps zero") {
    const auto q = diagonal(12, 1.0, 4.0);
    const auto r = simulated_annealing(q, config(SolverKind::Sa, 10));
    REQUIRE(r.samples.size() == 10);
    for (const auto& s : r.samples) CHECK(s.cost == 4.0);
  }
  SUBCASE("single variable") {
    auto c = config(SolverKind::Sa, 1);
    c.sa.num_sweeps = 100;
    const auto r = simulated_annealing(Qubo(1, {{0, 0, -1.0}}, 0.5), c);
    CHECK(r.best.x == Bits{1});
    CHECK(r.best.cost == -0.5);
  }
  SUBCASE("deterministic per seed") {
    std::mt19937_64 rng(1);
    const auto q = oracle::random_qubo(30, rng, 0.3, false);
    auto c = config(SolverKind::Sa, 8, 99);
    c.sa.num_sweeps = 50;
    const auto a = simulated_annealing(q, c), b = simulated_annealing(q, c);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) CHECK(a.samples[k].x == b.samples[k].x);
    c.seed = 100;
    const auto other = simulated_annealing(q, c);
    bool differs = false;
    for (std::size_t k = 0; k < a.samples.size(); ++k) differs |= a.samples[k].x != other.samples[k].x;
    CHECK(differs);
  }
  SUBCASE("incremental deltas agree with full evaluation") {
    std::mt19937_64 rng(2);
    const auto q = oracle::random_qubo(40, rng, 0.4, false);
    auto c = config(SolverKind::Sa, 5);
    c.sa.num_sweeps = 200;
    c.verify_incremental = true;
    CHECK_NOTHROW(check_samples(q, simulated_annealing(q, c)));
  }
}

TEST_CASE("tabu search") {
  SUBCASE("one-hot optimum from zero") {
    std::vector<QuboTerm> t;
    for (std::size_t i = 0; i < 8; ++i) t.push_back({i, i, i == 3 ? -5.0 : 1.0});
    const Qubo q(8, t, 0.0);
    auto c = config(SolverKind::Tabu, 1);
    c.tabu.max_stall_iterations = 8;
    const auto r = tabu_search(q, c);
    Bits e3(8, 0);
    e3[3] = 1;
    CHECK(r.best.x == e3);
    CHECK(oracle::brute_force(q).x == e3);
  }
  SUBCASE("tenure beyond n forces restarts") {
    std::mt19937_64 rng(3);
    const auto q = oracle::random_qubo(5, rng);
    auto c = config(SolverKind::Tabu, 6);
    c.tabu.tenure = 50;
    c.tabu.max_stall_iterations = 3;
    const auto r = tabu_search(q, c);
    CHECK(r.samples.size() == 6);
    CHECK(r.best.cost == oracle::brute_force(q).cost);
  }
  SUBCASE("deterministic and incremental") {
    std::mt19937_64 rng(4);
    const auto q = oracle::random_qubo(35, rng, 0.3, false);
    auto c = config(SolverKind::Tabu, 4, 5);
    c.verify_incremental = true;
    const auto a = tabu_search(q, c), b = tabu_search(q, c);
    for (std::size_t k = 0; k < a.samples.size(); ++k) CHECK(a.samples[k].x == b.samples[k].x);
    check_samples(q, a);
  }
}

TEST_CASE("exact solver") {
  SUBCASE("tie resolves to the smallest big-endian value") {
    const Qubo q(2, {{0, 0, -1.0}, {0, 1, 2.0}, {1, 1, -1.0}}, 0.0);
    const auto r = exact_solve(q, nullptr, config(SolverKind::Exact));
    CHECK(r.best.cost == -1.0);
    CHECK(r.best.x == Bits{0, 1});
    CHECK(r.proven_optimal);
  }
  SUBCASE("enumeration equals brute force") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t n = 4 + trial % 13;
      const auto q = oracle::random_qubo(n, rng, 0.5);
      const auto r = exact_solve(q, nullptr, config(SolverKind::Exact));
      const auto bf = oracle::brute_force(q);
      CHECK(r.best.cost == bf.cost);
      CHECK(r.best.x == bf.x);
      CHECK(r.proven_optimal);
    }
  }
  SUBCASE("branch and bound equals brute force") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 8 + trial % 9;
      const auto q = oracle::random_qubo(n, rng, 0.5);
      auto c = config(SolverKind::Exact);
      c.enumeration_cutoff = 0;
      const auto r = exact_solve(q, nullptr, c);
      const auto bf = oracle::brute_force(q);
      CHECK(r.best.cost == bf.cost);
      CHECK(r.best.x == bf.x);
      CHECK(r.proven_optimal);
    }
  }
  SUBCASE("branch and bound with the residual form") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto model = build_model(oracle::random_instance(7, seed));
      const auto q = build_qubo(model);
      const auto form = residual_form(model);
      auto c = config(SolverKind::Exact);
      c.enumeration_cutoff = 0;
      const auto r = exact_solve(q, &form, c);
      const auto bf = oracle::brute_force(q);
      CHECK(r.best.cost == doctest::Approx(bf.cost).epsilon(1e-9));
      CHECK(r.proven_optimal);
    }
  }
  SUBCASE("zero budget returns the incumbent") {
    std::mt19937_64 rng(7);
    const auto q = oracle::random_qubo(40, rng, 0.3, false);
    auto c = config(SolverKind::Exact);
    c.budget_s = 0.0;
    const auto r = exact_solve(q, nullptr, c);
    CHECK(r.timed_out);
    CHECK_FALSE(r.proven_optimal);
    CHECK(r.best.x.size() == 40);
    CHECK(r.best.cost == doctest::Approx(q.objective(r.best.x)));
  }
}

TEST_CASE("box relaxation never exceeds a completion") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + trial % 7;
    const auto q = oracle::random_qubo(n, rng, 0.6, false);
    const BoxRelaxation relax(q, nullptr);
    std::vector<double> lo(n, 0.0), hi(n, 1.0);
    // fix a random prefix
    const std::size_t fixed = rng() % (n / 2);
    for (std::size_t k = 0; k < fixed; ++k) lo[k] = hi[k] = static_cast<double>(rng() & 1u);
    std::vector<double> warm(n, 0.5);
    for (std::size_t k = 0; k < fixed; ++k) warm[k] = lo[k];
    const double bound = relax.lower_bound(lo, hi, warm);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
      const auto x = oracle::bits_of(v, n);
      bool ok = true;
      for (std::size_t k = 0; k < fixed; ++k) ok &= x[k] == lo[k];
      if (ok) best = std::min(best, oracle::qubo_value(q, x));
    }
    CHECK(bound <= best + 1e-9 * (1 + std::abs(best)));
  }
  const auto model = build_model(oracle::random_instance(7, 3));
  const auto q = build_qubo(model);
  const auto form = residual_form(model);
  const BoxRelaxation relax(q, &form);
  std::vector<double> lo(q.size(), 0.0), hi(q.size(), 1.0), warm(q.size(), 0.0);
  CHECK(relax.lower_bound(lo, hi, warm) <= oracle::brute_force(q).cost + 1e-9);
}

TEST_CASE("run_reads") {
  std::mt19937_64 rng(9);
  const auto q = oracle::random_qubo(20, rng, 0.3, false);
  SUBCASE("exact read count") {
    auto c = config(SolverKind::Sa, 50);
    c.sa.num_sweeps = 20;
    std::size_t count = 0;
    double last = 0.0;
    run_reads(q, c, [&](const Sample& s) {
      ++count;
      CHECK(s.elapsed >= last);
      last = s.elapsed;
      return true;
    });
    CHECK(count == 50);
  }
  SUBCASE("tiny budget still yields a sample") {
    for (auto kind : {SolverKind::Sa, SolverKind::Tabu, SolverKind::Exact}) {
      auto c = config(kind, 0);
      c.budget_s = 1e-9;
      const auto r = solve(q, c);
      CHECK(r.samples.size() >= 1);
    }
  }
  SUBCASE("consumer can stop the stream") {
    auto c = config(SolverKind::Tabu, 0);
    std::size_t count = 0;
    run_reads(q, c, [&](const Sample&) { return ++count < 7; });
    CHECK(count == 7);
  }
  SUBCASE("deterministic mode uses operation budgets") {
    auto c = config(SolverKind::Sa, 0);
    c.sa.num_sweeps = 10;
    c.deterministic = true;
    c.budget_ops = 5000;
    const auto a = solve(q, c), b = solve(q, c);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.samples.size() > 1);
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
      CHECK(a.samples[k].x == b.samples[k].x);
      CHECK(a.samples[k].elapsed == b.samples[k].elapsed);
    }
  }
}
