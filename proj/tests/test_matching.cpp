#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "flowmatch/instance.hpp"
#include "flowmatch/io.hpp"
#include "flowmatch/matching.hpp"
#include "flowmatch/qubo.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace flowmatch;

namespace {

Instance two_bus(double alpha, double rho, double d0 = -1.0) {
  Instance inst;
  inst.grid = oracle::make_grid(2, {{0, 1}});
  inst.loads.demand = {d0, -d0};
  inst.loads.producers = {d0 < 0 ? 0u : 1u};
  inst.loads.consumers = {d0 < 0 ? 1u : 0u};
  inst.alpha = alpha;
  inst.rho = rho;
  return inst;
}

MatchingModel hand_model(std::vector<double> w, std::vector<std::vector<double>> rows, std::vector<double> costs,
                         double alpha) {
  MatchingModel m;
  m.baseline = w;
  m.alpha = alpha;
  m.trade_costs = costs;
  m.pairs.flows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(w.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    m.pairs.trades.push_back({0, 1, 1.0, k});
    for (std::size_t l = 0; l < w.size(); ++l) m.pairs.flows(k, l) = rows[k][l];
  }
  return m;
}

}  // namespace

TEST_CASE("trade volumes and ordering") {
  Instance inst;
  inst.grid = oracle::make_grid(4, {{0, 1}, {1, 2}, {2, 3}});
  inst.loads.demand = {-3.0, 2.0, -1.0, 2.0};
  inst.loads.producers = {0, 2};
  inst.loads.consumers = {1, 3};
  const auto pf = pair_flows(inst);
  REQUIRE(pf.size() == 4);
  CHECK(pf.trades[0].producer == 0);
  CHECK(pf.trades[0].consumer == 1);
  CHECK(pf.trades[0].volume == 2.0);
  CHECK(pf.trades[1].consumer == 3);
  CHECK(pf.trades[2].producer == 2);
  CHECK(pf.trades[2].volume == 1.0);
  for (std::size_t k = 0; k < pf.size(); ++k) CHECK(pf.trades[k].variable_index == k);
  // trade 0 sends 2 kWh over line 0->1
  CHECK(std::abs(pf.flows(0, 0) - 2.0) < 1e-12);
  CHECK(std::abs(pf.flows(0, 1)) < 1e-12);
}

TEST_CASE("two-bus pair flow points at the consumer") {
  const auto pf = pair_flows(two_bus(100, 0));
  REQUIRE(pf.size() == 1);
  CHECK(std::abs(pf.flows(0, 0) - 1.0) < 1e-12);
  const auto reversed = pair_flows(two_bus(100, 0, 1.0));
  CHECK(std::abs(reversed.flows(0, 0) + 1.0) < 1e-12);
}

TEST_CASE("case9 has 20 trades") {
  CHECK(pair_flows(generate(*find_case("case9"), 3)).size() == 20);
}

TEST_CASE("logical flow") {
  const auto inst = generate(*find_case("case9"), 0);
  const auto pf = pair_flows(inst);
  Bits x(pf.size(), 0);
  for (double v : logical_flow(pf, x)) CHECK(v == 0.0);
  x[4] = 1;
  const auto one = logical_flow(pf, x);
  for (std::size_t l = 0; l < one.size(); ++l) CHECK(one[l] == pf.flows(4, l));
  x[7] = 1;
  const auto two = logical_flow(pf, x);
  for (std::size_t l = 0; l < two.size(); ++l) CHECK(std::abs(two[l] - (pf.flows(4, l) + pf.flows(7, l))) < 1e-15);
  CHECK(code_of([&] { logical_flow(pf, Bits(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("trade cost") {
  const std::vector<double> w{1.0}, u{0.5};
  CHECK(trade_cost(std::vector<double>{2.0}, w, u, 10.0) == 10.0);
  CHECK(trade_cost(std::vector<double>{-2.0}, w, u, 10.0) == 0.0);
  CHECK(trade_cost(std::vector<double>{2.0}, w, u, 0.0) == 0.0);
  CHECK(trade_cost(std::vector<double>{-2.0}, std::vector<double>{-1.0}, u, 10.0) == 10.0);
  CHECK(trade_cost(std::vector<double>{2.0}, std::vector<double>{0.0}, std::vector<double>{0.0}, 10.0) == 0.0);
}

TEST_CASE("QUBO expansion by hand") {
  SUBCASE("single trade, single line") {
    const auto q = build_qubo(hand_model({1.0}, {{1.0}}, {0.0}, 1.0));
    CHECK(q.coefficient(0, 0) == -1.0);
    CHECK(q.offset() == 1.0);
    CHECK(q.objective(Bits{1}) == 0.0);
    CHECK(q.objective(Bits{0}) == 1.0);
  }
  SUBCASE("cross term") {
    const auto q = build_qubo(hand_model({1.0}, {{1.0}, {1.0}}, {0.0, 0.0}, 1.0));
    CHECK(q.coefficient(0, 1) == 2.0);
  }
  SUBCASE("two-bus instance") {
    const auto inst = two_bus(1.0, 0.0);
    const auto q = build_qubo(inst, pair_flows(inst));
    CHECK(std::abs(q.coefficient(0, 0) + 1.0) < 1e-12);
    CHECK(std::abs(q.offset() - 1.0) < 1e-12);
  }
}

TEST_CASE("alpha scaling with rho = 0") {
  auto inst = generate(*find_case("case9"), 2);
  inst.rho = 0.0;
  const auto pf = pair_flows(inst);
  const auto q1 = build_qubo(inst, pf);
  inst.alpha *= 3.0;
  const auto q3 = build_qubo(inst, pf);
  REQUIRE(q1.terms().size() == q3.terms().size());
  for (std::size_t t = 0; t < q1.terms().size(); ++t) {
    CHECK(q3.terms()[t].value == doctest::Approx(3.0 * q1.terms()[t].value).epsilon(1e-12));
  }
  CHECK(q3.offset() == doctest::Approx(3.0 * q1.offset()).epsilon(1e-12));
}

TEST_CASE("evaluate and QUBO agree with the direct oracle") {
  std::mt19937_64 rng(21);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = oracle::random_instance(6 + seed, seed, 30.0);
    const auto model = build_model(inst);
    const auto q = build_qubo(model);
    for (int s = 0; s < 20; ++s) {
      const auto x = oracle::random_bits(q.size(), rng);
      const double direct = oracle::direct_objective(inst, x);
      CHECK(std::abs(evaluate(model, x) - direct) <= 1e-6 * (1 + std::abs(direct)));
      CHECK(std::abs(q.objective(x) - direct) <= 1e-6 * (1 + std::abs(direct)));
      CHECK(evaluate(model, x) >= 0.0);
    }
    CHECK(evaluate(model, Bits(q.size(), 0)) ==
          doctest::Approx(inst.alpha * [&] {
            double s = 0;
            for (double w : model.baseline) s += w * w;
            return s;
          }()));
    for (double m : model.trade_costs) CHECK(m >= 0.0);
  }
}

TEST_CASE("matching beats doing nothing on a single pair") {
  const auto inst = two_bus(100.0, 20.0);
  const auto pf = pair_flows(inst);
  CHECK(evaluate(inst, pf, Bits{1}) < evaluate(inst, pf, Bits{0}));
}

TEST_CASE("residual form reproduces the objective") {
  const auto model = build_model(generate(*find_case("case9"), 4));
  const auto form = residual_form(model);
  const auto q = build_qubo(model);
  std::mt19937_64 rng(2);
  for (int s = 0; s < 50; ++s) {
    const auto x = oracle::random_bits(q.size(), rng);
    std::vector<double> xd(x.begin(), x.end());
    CHECK(form.objective(xd) == doctest::Approx(q.objective(x)).epsilon(1e-9));
  }
}

TEST_CASE("Ising conversion") {
  SUBCASE("empty") {
    const Qubo q(0, {}, 2.5);
    const auto m = to_ising(q);
    CHECK(m.size() == 0);
    CHECK(m.offset() == 2.5);
  }
  SUBCASE("single diagonal term") {
    const Qubo q(1, {{0, 0, 3.0}}, 0.5);
    const auto m = to_ising(q);
    CHECK(m.fields()[0] == -1.5);
    CHECK(m.energy(Spins{1}) == q.objective(Bits{0}));
    CHECK(m.energy(Spins{-1}) == q.objective(Bits{1}));
  }
  SUBCASE("exhaustive on random n = 8 and back") {
    std::mt19937_64 rng(8);
    const auto q = oracle::random_qubo(8, rng, 0.7, false);
    const auto m = to_ising(q);
    const auto back = to_qubo(m);
    for (std::uint64_t v = 0; v < 256; ++v) {
      const auto x = oracle::bits_of(v, 8);
      CHECK(m.energy(spins_from_bits(x)) == doctest::Approx(q.objective(x)).epsilon(1e-12));
      CHECK(back.objective(x) == doctest::Approx(q.objective(x)).epsilon(1e-12));
    }
    CHECK(bits_from_spins(spins_from_bits(oracle::bits_of(77, 8))) == oracle::bits_of(77, 8));
  }
}

TEST_CASE("QUBO text format") {
  std::mt19937_64 rng(4);
  const auto q = build_qubo(build_model(generate(*find_case("case9"), 5)));
  const auto text = format_qubo(q);
  CHECK(text.rfind("qubo 20 ", 0) == 0);
  CHECK(parse_qubo(text) == q);
  const auto path = std::filesystem::temp_directory_path() / "flowmatch_qubo_test.qubo";
  export_qubo(q, path);
  CHECK(import_qubo(path) == q);
  std::filesystem::remove(path);

  const auto ising = to_ising(q);
  const auto itext = format_ising(ising);
  CHECK(itext.rfind("ising 20 ", 0) == 0);
  CHECK(parse_ising(itext) == ising);

  const Qubo tiny(2, {{0, 0, 0.1}, {0, 1, -2.0}}, 1.0 / 3.0);
  CHECK(format_qubo(tiny) == "qubo 2 2\noffset 0.33333333333333331\n0 0 0.10000000000000001\n0 1 -2\n");
  CHECK(parse_qubo(format_qubo(tiny)).offset() == 1.0 / 3.0);

  const auto malformed = [](const std::string& s) { return code_of([&] { parse_qubo(s); }); };
  CHECK(malformed("qubo 2 1\noffset 0\n1 0 1\n") == ErrorCode::MalformedFile);
  CHECK(line_of([] { parse_qubo("qubo 2 1\noffset 0\n1 0 1\n"); }) == 3);
  CHECK(malformed("qubo 2 2\noffset 0\n0 1 1\n0 0 1\n") == ErrorCode::MalformedFile);
  CHECK(malformed("qubo 2 1\noffset 0\n0 2 1\n") == ErrorCode::MalformedFile);
  CHECK(malformed("qubo 2 2\noffset 0\n0 0 1\n") == ErrorCode::MalformedFile);
  CHECK(malformed("qubo 2 1\r\noffset 0\r\n0 0 1\r\n") == ErrorCode::MalformedFile);
  CHECK(malformed("qubo 2 1\noffset 0\n0  0 1\n") == ErrorCode::MalformedFile);
  CHECK(malformed("qubo 2 1\noffset 0\n0 0 0\n") == ErrorCode::MalformedFile);
  CHECK(malformed("ising 2 0\noffset 0\n") == ErrorCode::MalformedFile);
}

TEST_CASE("builder drops tiny terms and rejects bad indices") {
  QuboBuilder b(3);
  b.add(0, 1, 1e-13);
  b.add(2, 1, 4.0);
  b.add(1, 2, -1.0);
  const auto q = b.build(1e-12);
  REQUIRE(q.terms().size() == 1);
  CHECK(q.terms()[0] == QuboTerm{1, 2, 3.0});
  CHECK(code_of([] { QuboBuilder(2).add(0, 2, 1.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Qubo(2, {{1, 0, 1.0}}, 0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { q.objective(Bits(2)); }) == ErrorCode::DimensionMismatch);
}
