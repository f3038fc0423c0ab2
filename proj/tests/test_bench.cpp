#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "flowmatch/bench.hpp"
#include "flowmatch/stats.hpp"
#include "test_util.hpp"

using namespace flowmatch;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("flowmatch_bench_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

BenchOptions quick_options() {
  BenchOptions o;
  o.deterministic = true;
  o.ops_per_second = 200.0;
  o.reference_budget_s = 1e6;
  o.tts_cap_s = 50.0;
  return o;
}

}  // namespace

TEST_CASE("relative error") {
  CHECK(relative_error(3.0, 3.0) == 0.0);
  CHECK(relative_error(12.0, 10.0) == doctest::Approx(0.2));
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(std::isinf(relative_error(1.0, 0.0)));
}

TEST_CASE("time to solution") {
  CHECK(*time_to_solution(1.0, 0.99) == 1.0);
  CHECK(*time_to_solution(2.0, 0.5) == 14.0);
  CHECK(*time_to_solution(3.0, 1.0) == 3.0);
  CHECK_FALSE(time_to_solution(1.0, 0.0).has_value());
  CHECK(*time_to_solution(1.0, 0.25) == 17.0);
  double last = std::numeric_limits<double>::infinity();
  for (double p = 0.01; p <= 1.0; p += 0.01) {
    const double t = *time_to_solution(1.5, p);
    CHECK(t <= last);
    last = t;
  }
  CHECK(code_of([] { time_to_solution(0.0, 0.5); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("quantiles") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(median(v) == 2.5);
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(std::isnan(median({})));
  CHECK(std::isinf(median({1.0, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()})));
}

TEST_CASE("references and the timeout benchmark") {
  const auto dir = scratch("timeout");
  auto o = quick_options();
  o.out_dir = dir;
  const std::vector<CaseSpec> cases{*find_case("case9")};
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  CHECK(code_of([&] { timeout_benchmark(cases, {SolverKind::Exact}, seeds, {}, o); }) == ErrorCode::MissingReference);

  const auto refs = ensure_references(cases, seeds, o);
  REQUIRE(refs.size() == 3);
  for (const auto& [key, ref] : refs) {
    CHECK(ref.proven_optimal);
    CHECK(std::filesystem::exists(dir / "refs" / (key.first + "_" + std::to_string(key.second) + ".json")));
    const auto p = prepare(generate(cases[0], key.second));
    CHECK(p.qubo.objective(ref.x) == doctest::Approx(ref.cost).epsilon(1e-12));
  }
  // cached copies load back identically
  const auto cached = ensure_references(cases, seeds, o);
  for (const auto& [key, ref] : refs) CHECK(cached.at(key).x == ref.x);

  const auto records = timeout_benchmark(cases, {SolverKind::Exact, SolverKind::Sa}, seeds, refs, o);
  REQUIRE(records.size() == 6);
  for (const auto& r : records) {
    REQUIRE(r.epsilon.size() == 1);
    if (r.solver == "exact") CHECK(r.epsilon[0] == 0.0);
    CHECK(r.epsilon[0] >= 0.0);
  }
  const auto rows = aggregate(load_records(dir));
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.runs == 3);
    CHECK(row.within_threshold <= 3);
    CHECK(row.q25 <= row.median);
    CHECK(row.median <= row.q75);
  }
  // deterministic mode reproduces records bit for bit
  const auto again = timeout_benchmark(cases, {SolverKind::Exact, SolverKind::Sa}, seeds, refs, o);
  for (std::size_t k = 0; k < records.size(); ++k) {
    CHECK(record_to_json(again[k]) == record_to_json(records[k]));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("TTS protocol") {
  auto o = quick_options();
  const auto p = prepare(generate(*find_case("case9"), 3));
  const auto ref = compute_reference(p, 1e6);
  SUBCASE("a solver that always hits") {
    o.ops_per_second = 1.1e6;  // one case9 enumeration costs 2^20 operations
    SolverConfig c;
    c.kind = SolverKind::Exact;
    const auto r = measure_tts(p, ref, c, o);
    CHECK(r.samples_found == 50);
    CHECK(r.p_eps == 1.0);
    REQUIRE(r.tts.has_value());
    CHECK(*r.tts == r.sample_time);
  }
  SUBCASE("fewer than ten hits leaves TTS absent") {
    o.target_hits = 9;
    o.ops_per_second = 1.1e6;
    SolverConfig c;
    c.kind = SolverKind::Exact;
    const auto r = measure_tts(p, ref, c, o);
    CHECK(r.samples_found == 9);
    CHECK_FALSE(r.tts.has_value());
  }
  SUBCASE("per-sample classification") {
    SolverConfig c;
    c.kind = SolverKind::Sa;
    c.sa.num_sweeps = 100;
    const auto r = measure_tts(p, ref, c, o);
    std::size_t hits = 0;
    for (double e : r.epsilon) hits += e <= 0.05;
    CHECK(hits == r.samples_found);
    CHECK(r.samples_drawn == r.epsilon.size());
  }
}

TEST_CASE("record JSON round trip") {
  BenchRecord r;
  r.case_name = "case9";
  r.seed = 4;
  r.solver = "sa";
  r.metric = "tts";
  r.epsilon = {0.0, 0.1, std::numeric_limits<double>::infinity()};
  r.samples_found = 1;
  r.samples_drawn = 3;
  r.p_eps = 1.0 / 3.0;
  r.sample_time = 0.001;
  r.wall_time = 0.003;
  const auto back = record_from_json(record_to_json(r));
  CHECK(std::isinf(back.epsilon[2]));
  CHECK_FALSE(back.tts.has_value());
  CHECK(back.p_eps == r.p_eps);
  CHECK(record_to_json(back) == record_to_json(r));
  r.tts = 0.5;
  CHECK(*record_from_json(record_to_json(r)).tts == 0.5);
  CHECK(record_path("runs", r).filename() == "tts_case9_sa_4.json");
}

TEST_CASE("rho sweep and fee curve") {
  RhoSweepOptions o;
  o.solver.deterministic = true;
  o.solver.budget_ops = 0;
  const auto rows = rho_sweep(*find_case("case9"), {0, 1}, {10.0, 100.0}, {0.0, 20.0}, o);
  REQUIRE(rows.size() == 8);
  for (const auto& r : rows) {
    if (r.rho == 0.0) CHECK(r.report.p2p_fees == 0.0);
    CHECK(r.proven_optimal);
    CHECK(r.report.total_dso_fees == doctest::Approx(r.report.p2p_fees + r.report.residual_fees));
  }
  const auto curve = fee_curve(rows, 100.0);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].rho == 0.0);
  CHECK(curve[1].rho == 20.0);

  std::vector<FeeCurvePoint> synthetic(3);
  for (int k = 0; k < 3; ++k) {
    synthetic[k].rho = 15.0 * k;
    synthetic[k].baseline_fees = 100.0;
  }
  synthetic[0].total_fees = 40.0;
  synthetic[1].total_fees = 70.0;
  synthetic[2].total_fees = 90.0;
  CHECK(*fee_fraction_crossing(synthetic, 0.8) == doctest::Approx(22.5));
  CHECK_FALSE(fee_fraction_crossing(synthetic, 0.95).has_value());
}

TEST_CASE("SA hyperparameter sweep shape") {
  auto o = quick_options();
  o.tts_cap_s = 20.0;
  const auto spec = *find_case("case9");
  const auto refs = ensure_references({spec}, {0}, o);
  o.sa.num_sweeps = 20;
  const auto one = sa_hyperparameter_sweep(spec, {0}, {20}, {}, refs, o);
  CHECK(one.size() == 1);
  const auto rows = sa_hyperparameter_sweep(spec, {0}, {10, 20}, {{0.2, 1000.0}, {0.02, 100.0}, {2.0, 10.0}}, refs, o);
  CHECK(rows.size() == 5);
  CHECK(rows[0].kind == "sweeps");
  CHECK(rows[4].kind == "schedule");
}

TEST_CASE("parallel runner") {
  std::vector<int> hit(100, 0);
  run_parallel(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  std::atomic<int> count{0};
  CHECK_THROWS_AS(run_parallel(10, 3,
                               [&](std::size_t i) {
                                 ++count;
                                 if (i == 5) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  CHECK(count == 10);
  CHECK(default_workers() >= 1);
}
