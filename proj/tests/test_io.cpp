#include <filesystem>
#include <string>

#include "doctest.h"
#include "flowmatch/instance.hpp"
#include "flowmatch/io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace flowmatch;

namespace {

const char* kGrid = R"({
  "buses": [
    {"id": 0, "name": "b0"},
    {"id": 1, "name": "b1"},
    {"id": 2, "name": "b2"}
  ],
  "lines": [
    {"from": 0, "to": 1, "length_m": 50.0, "x_ohm_per_km": 0.083, "r_ohm_per_km": 0.642, "i_max_a": 142.0, "v_v": 400.0},
    {"from": 1, "to": 2, "length_m": 75.0, "x_ohm_per_km": 0.083, "r_ohm_per_km": 0.642, "i_max_a": 142.0, "v_v": 400.0}
  ]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("grid JSON parses and round-trips") {
  const auto g = parse_grid(kGrid);
  CHECK(g.bus_count() == 3);
  REQUIRE(g.line_count() == 2);
  CHECK(g.lines()[1].length_m() == 75.0);
  CHECK(g.buses()[2].name == "b2");
  const auto again = parse_grid(grid_to_json(g).dump());
  CHECK(again.lines() == g.lines());
}

TEST_CASE("grid loader reports the offending line") {
  SUBCASE("self-loop") {
    const auto bad = replace(kGrid, R"("from": 1, "to": 2)", R"("from": 2, "to": 2)");
    CHECK(code_of([&] { parse_grid(bad); }) == ErrorCode::MalformedFile);
    CHECK(line_of([&] { parse_grid(bad); }) == 9);
  }
  SUBCASE("zero length") {
    const auto bad = replace(kGrid, R"("length_m": 50.0)", R"("length_m": 0.0)");
    CHECK(line_of([&] { parse_grid(bad); }) == 8);
  }
  SUBCASE("missing field") {
    const auto bad = replace(kGrid, R"("i_max_a": 142.0, "v_v": 400.0},)", R"("v_v": 400.0},)");
    CHECK(code_of([&] { parse_grid(bad); }) == ErrorCode::MalformedFile);
    CHECK(line_of([&] { parse_grid(bad); }) == 8);
  }
  SUBCASE("non-contiguous ids") {
    const auto bad = replace(kGrid, R"({"id": 2, "name": "b2"})", R"({"id": 5, "name": "b2"})");
    CHECK(line_of([&] { parse_grid(bad); }) == 5);
  }
  SUBCASE("unknown bus") {
    const auto bad = replace(kGrid, R"("from": 1, "to": 2)", R"("from": 1, "to": 7)");
    CHECK(line_of([&] { parse_grid(bad); }) == 9);
  }
  SUBCASE("syntax error") {
    const auto bad = replace(kGrid, R"("name": "b1"},)", R"("name": "b1"}})");
    CHECK(code_of([&] { parse_grid(bad); }) == ErrorCode::MalformedFile);
    CHECK(line_of([&] { parse_grid(bad); }) == 4);
  }
  SUBCASE("disconnected") {
    const auto bad = replace(kGrid, R"("from": 1, "to": 2)", R"("from": 1, "to": 0)");
    CHECK(code_of([&] { parse_grid(bad); }) == ErrorCode::MalformedFile);
  }
}

TEST_CASE("instance JSON round-trips exactly") {
  const auto inst = generate(*find_case("case14"), 7, 100.0);
  const auto path = std::filesystem::temp_directory_path() / "flowmatch_io_test" / "inst.json";
  save_instance(inst, path);
  const auto back = load_instance(path);
  CHECK(back.loads.demand == inst.loads.demand);
  CHECK(back.loads.producers == inst.loads.producers);
  CHECK(back.loads.consumers == inst.loads.consumers);
  CHECK(back.grid.lines() == inst.grid.lines());
  CHECK(back.rho == 45.0);
  CHECK(back.alpha == 100.0);
  CHECK(back.period_h == 1.0);
  CHECK(back.seed == 7);
  CHECK(back.case_name == "case14");
  const auto doc = instance_to_json(inst);
  CHECK(doc.contains("rho_ct_per_kwh"));
  CHECK(doc.contains("alpha_ct_per_kwh2"));
  CHECK(doc["loads"].contains("0"));
  std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("corrupt instance files") {
  const auto text = instance_to_json(generate(*find_case("case9"), 0)).dump(2);
  CHECK(code_of([&] { parse_instance(text.substr(0, text.size() / 2)); }) == ErrorCode::MalformedFile);
  CHECK(line_of([&] { parse_instance(text.substr(0, text.size() / 2)); }) > 0);
  auto doc = parse_json(text);
  doc["alpha_ct_per_kwh2"] = -1.0;
  CHECK(code_of([&] { parse_instance(doc.dump(2)); }) == ErrorCode::MalformedFile);
  CHECK(code_of([] { load_instance("/nonexistent/inst.json"); }) == ErrorCode::Io);
}
