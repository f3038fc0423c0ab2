#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowmatch/bench.hpp"
#include "flowmatch/error.hpp"
#include "flowmatch/instance.hpp"
#include "flowmatch/io.hpp"
#include "flowmatch/matching.hpp"
#include "flowmatch/qubo.hpp"
#include "flowmatch/report.hpp"
#include "flowmatch/settlement.hpp"
#include "flowmatch/solvers.hpp"

namespace fm = flowmatch;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid " + what + " '" + s + "'");
}

std::uint64_t to_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      const auto v = std::stoull(s, &used);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw UsageError("invalid " + what + " '" + s + "'");
}

/// "0..19" (inclusive) or "0,3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const auto lo = to_u64(item.substr(0, dots), "seed");
      const auto hi = to_u64(item.substr(dots + 2), "seed");
      if (hi < lo) throw UsageError("empty seed range '" + item + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(to_u64(item, "seed"));
    }
  }
  if (out.empty()) throw UsageError("seed list is empty");
  return out;
}

/// "0:120:5" (inclusive start:stop:step) or "0,15,30".
std::vector<double> parse_grid(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0, colon;
    while ((colon = text.find(':', start)) != std::string::npos) {
      parts.push_back(text.substr(start, colon - start));
      start = colon + 1;
    }
    parts.push_back(text.substr(start));
    if (parts.size() != 3) throw UsageError(what + " range must be start:stop:step");
    const double lo = to_double(parts[0], what), hi = to_double(parts[1], what), step = to_double(parts[2], what);
    if (!(step > 0.0) || hi < lo) throw UsageError("empty " + what + " range '" + text + "'");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) out.push_back(lo + step * static_cast<double>(k));
  } else {
    for (const auto& item : split_list(text)) out.push_back(to_double(item, what));
  }
  if (out.empty()) throw UsageError(what + " list is empty");
  return out;
}

std::vector<int> parse_int_grid(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_grid(text, what)) {
    if (v < 1 || v != std::floor(v)) throw UsageError(what + " values must be positive integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

fm::CaseSpec case_spec(const std::string& name) {
  auto spec = fm::find_case(name);
  if (!spec) throw UsageError("unknown case '" + name + "'");
  return *spec;
}

std::vector<fm::CaseSpec> case_specs(const std::string& text) {
  std::vector<fm::CaseSpec> out;
  for (const auto& name : split_list(text)) out.push_back(case_spec(name));
  if (out.empty()) throw UsageError("case list is empty");
  return out;
}

fm::SolverKind solver_kind(const std::string& name) {
  auto kind = fm::parse_solver_kind(name);
  if (!kind) throw UsageError("unknown solver '" + name + "' (sa, tabu, exact)");
  return *kind;
}

std::vector<fm::SolverKind> solver_kinds(const std::string& text) {
  std::vector<fm::SolverKind> out;
  for (const auto& name : split_list(text)) out.push_back(solver_kind(name));
  if (out.empty()) throw UsageError("solver list is empty");
  return out;
}

std::pair<double, double> parse_beta(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("beta schedule must be start:end");
  return {to_double(text.substr(0, colon), "beta"), to_double(text.substr(colon + 1), "beta")};
}

std::string bit_string(const fm::Bits& x) {
  std::string s;
  for (auto b : x) s += b ? '1' : '0';
  return s;
}

fm::Bits parse_bit_string(const std::string& s, std::size_t n) {
  if (s.size() != n) {
    throw fm::Error(fm::ErrorCode::DimensionMismatch,
                    "assignment has " + std::to_string(s.size()) + " bits, instance has " + std::to_string(n));
  }
  fm::Bits x(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (s[k] != '0' && s[k] != '1') throw fm::Error(fm::ErrorCode::MalformedFile, "assignment must be a 0/1 string");
    x[k] = s[k] == '1';
  }
  return x;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    fm::write_text_file(out, text);
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- options shared by several subcommands -------------------------------

struct SolveOptions {
  std::string solver = "sa";
  int sweeps = 0;
  std::string beta = "0.2:1000";
  std::size_t reads = 1;
  double budget = 0.0;  // 0 = case table timeout, else unlimited
  std::uint64_t seed = 0;
  std::size_t tenure = 0;
  std::size_t stall = 0;
  std::size_t cutoff = 22;
  bool deterministic = false;
  std::uint64_t budget_ops = 0;
};

void add_solver_flags(CLI::App* app, SolveOptions& o) {
  app->add_option("--solver", o.solver, "sa, tabu or exact")->capture_default_str();
  app->add_option("--sweeps", o.sweeps, "SA sweeps per read (default: case table, else 1000)");
  app->add_option("--beta", o.beta, "SA geometric schedule beta_start:beta_end")->capture_default_str();
  app->add_option("--tenure", o.tenure, "tabu tenure (0 = max(10, n/10))");
  app->add_option("--stall", o.stall, "tabu restart after this many non-improving moves (0 = 5n)");
  app->add_option("--cutoff", o.cutoff, "exact solver: enumerate up to this many variables")->capture_default_str();
  app->add_option("--deterministic-ops", o.budget_ops, "operation budget in deterministic mode (0 = unlimited)");
}

fm::SolverConfig make_solver_config(const SolveOptions& o, const fm::Instance* inst) {
  fm::SolverConfig cfg;
  cfg.kind = solver_kind(o.solver);
  std::optional<fm::CaseSpec> spec;
  if (inst != nullptr) spec = fm::find_case(inst->case_name);
  cfg.sa.num_sweeps = o.sweeps > 0 ? o.sweeps : spec ? spec->sa_sweeps : 1000;
  std::tie(cfg.sa.beta_start, cfg.sa.beta_end) = parse_beta(o.beta);
  cfg.tabu.tenure = o.tenure;
  cfg.tabu.max_stall_iterations = o.stall;
  cfg.num_reads = o.reads;
  if (o.budget > 0.0) {
    cfg.budget_s = o.budget;
  } else if (spec) {
    cfg.budget_s = spec->timeout_s;
  }
  cfg.seed = o.seed;
  cfg.enumeration_cutoff = o.cutoff;
  cfg.deterministic = o.deterministic;
  cfg.budget_ops = o.budget_ops;
  try {
    fm::validate(cfg);
  } catch (const fm::Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

// ---- subcommands ---------------------------------------------------------

int cmd_gen(const std::string& case_name, std::uint64_t seed, double alpha, std::optional<double> rho,
            const std::string& topology, const std::string& out) {
  const auto spec = case_spec(case_name);
  auto inst = fm::generate(spec, seed, alpha, topology.empty() ? fm::default_topology_dir() : std::filesystem::path(topology));
  if (rho) inst.rho = *rho;
  fm::validate(inst);
  emit(fm::instance_to_json(inst).dump(2) + "\n", out);
  return 0;
}

int cmd_solve(const std::string& in, const SolveOptions& o, const std::string& out) {
  const auto inst = fm::load_instance(in);
  const auto cfg = make_solver_config(o, &inst);
  const auto model = fm::build_model(inst);
  const auto qubo = fm::build_qubo(model);
  const auto form = fm::residual_form(model);
  const auto result = fm::solve(qubo, cfg, &form);

  json samples = json::array();
  for (const auto& s : result.samples) {
    samples.push_back({{"x", bit_string(s.x)}, {"cost_ct", s.cost}, {"elapsed_s", s.elapsed}});
  }
  json doc{{"case", inst.case_name},
           {"seed", inst.seed},
           {"solver", std::string(fm::to_string(cfg.kind))},
           {"variables", qubo.size()},
           {"best", {{"x", bit_string(result.best.x)}, {"cost_ct", result.best.cost}, {"elapsed_s", result.best.elapsed}}},
           {"samples", samples},
           {"reads", result.reads_completed},
           {"proven_optimal", result.proven_optimal},
           {"timed_out", result.timed_out},
           {"deterministic", cfg.deterministic}};
  emit(doc.dump(2) + "\n", out);
  return 0;
}

int cmd_settle(const std::string& in, const std::string& assignment, const fm::TariffScheme& tariffs,
               const std::string& out) {
  const auto inst = fm::load_instance(in);
  const auto model = fm::build_model(inst);
  const std::string text = fm::read_text_file(assignment);
  const json doc = fm::parse_json(text);
  std::string bits;
  if (doc.is_object() && doc.contains("best") && doc["best"].contains("x")) {
    bits = doc["best"]["x"].get<std::string>();
  } else if (doc.is_object() && doc.contains("x")) {
    bits = doc["x"].get<std::string>();
  } else {
    throw fm::Error(fm::ErrorCode::MalformedFile, "assignment file needs best.x or x");
  }
  const auto x = parse_bit_string(bits, model.pairs.size());
  const auto peers = fm::settle(x, inst, model.pairs.trades, model.trade_costs, tariffs);
  const auto report = fm::community_report(peers, x, model.trade_costs, tariffs);

  json rows = json::array();
  std::string csv = "peer,role,demand_kwh,matched_kwh,grid_cost_ct,final_bill_ct,effective_tariff_ct_per_kwh\n";
  for (const auto& p : peers) {
    rows.push_back({{"peer", p.peer},
                    {"role", p.producer ? "producer" : "consumer"},
                    {"demand_kwh", p.demand},
                    {"matched_kwh", p.matched_energy},
                    {"grid_cost_ct", p.grid_cost},
                    {"final_bill_ct", p.final_bill},
                    {"effective_tariff_ct_per_kwh", p.effective_tariff}});
    csv += std::to_string(p.peer) + ',' + (p.producer ? "producer" : "consumer") + ',' + num(p.demand) + ',' +
           num(p.matched_energy) + ',' + num(p.grid_cost) + ',' + num(p.final_bill) + ',' +
           num(p.effective_tariff) + '\n';
  }
  json result{{"case", inst.case_name},
              {"seed", inst.seed},
              {"objective_ct", fm::evaluate(model, x)},
              {"peers", rows},
              {"community",
               {{"p2p_fees_ct", report.p2p_fees},
                {"residual_fees_ct", report.residual_fees},
                {"total_dso_fees_ct", report.total_dso_fees},
                {"baseline_fees_ct", report.baseline_fees},
                {"p2p_ratio", report.p2p_ratio}}}};
  emit(result.dump(2) + "\n", out);
  if (!out.empty() && out != "-") {
    std::filesystem::path csv_path(out);
    csv_path.replace_extension(".csv");
    fm::write_text_file(csv_path, csv);
  }
  return 0;
}

struct BenchArgs {
  std::string cases = "case9,case14";
  std::string solvers = "sa,tabu,exact";
  std::string seeds = "0..19";
  std::string out = "runs";
  std::string topology;
  double alpha = fm::kDefaultAlpha;
  double reference_budget = 3600.0;
  double tts_cap = 1000.0;
  double eps = 0.05;
  int sweeps = 0;
  std::string beta = "0.2:1000";
  std::size_t workers = 0;
  bool deterministic = false;
  double ops_per_second = 1000.0;
  bool plot = false;
};

fm::BenchOptions bench_options(const BenchArgs& a) {
  fm::BenchOptions o;
  o.alpha = a.alpha;
  if (!a.topology.empty()) o.topology_dir = a.topology;
  o.out_dir = a.out;
  o.workers = a.workers > 0 ? a.workers : fm::default_workers();
  o.deterministic = a.deterministic;
  o.ops_per_second = a.ops_per_second;
  o.reference_budget_s = a.reference_budget;
  o.tts_cap_s = a.tts_cap;
  o.eps_threshold = a.eps;
  o.sa.num_sweeps = a.sweeps;
  std::tie(o.sa.beta_start, o.sa.beta_end) = parse_beta(a.beta);
  return o;
}

void add_bench_flags(CLI::App* app, BenchArgs& a) {
  app->add_option("--seeds", a.seeds, "seed range 0..19 or list 0,1,2")->capture_default_str();
  app->add_option("--out", a.out, "output directory for run records")->capture_default_str();
  app->add_option("--topology-dir", a.topology, "directory with caseN.json topologies");
  app->add_option("--alpha", a.alpha, "matching penalty [ct/kWh^2]")->capture_default_str();
  app->add_option("--reference-budget", a.reference_budget, "exact reference budget per instance [s]")
      ->capture_default_str();
  app->add_option("--tts-cap", a.tts_cap, "time-to-solution sampling cap [s]")->capture_default_str();
  app->add_option("--eps", a.eps, "relative error threshold")->capture_default_str();
  app->add_option("--sweeps", a.sweeps, "SA sweeps (default: case table)");
  app->add_option("--beta", a.beta, "SA schedule beta_start:beta_end")->capture_default_str();
  app->add_option("--workers", a.workers, "parallel jobs (default: FLOWMATCH_WORKERS or cores - 1)");
  app->add_flag("--deterministic", a.deterministic, "operation-count budgets instead of wall time");
  app->add_option("--ops-per-second", a.ops_per_second, "deterministic mode: operations per budget second")
      ->capture_default_str();
  app->add_flag("--plot", a.plot, "also write SVG plots");
}

int cmd_bench(const std::string& mode, const BenchArgs& a) {
  const auto cases = case_specs(a.cases);
  const auto solvers = solver_kinds(a.solvers);
  const auto seeds = parse_seeds(a.seeds);
  const auto o = bench_options(a);
  const auto refs = fm::ensure_references(cases, seeds, o);
  const auto records = mode == "tts" ? fm::tts_benchmark(cases, solvers, seeds, refs, o)
                                     : fm::timeout_benchmark(cases, solvers, seeds, refs, o);
  (void)records;
  // Aggregates come from the persisted records, never from memory.
  const auto persisted = fm::load_records(a.out);
  fm::emit_report(persisted, fm::ReportFormat::Csv, a.out, a.eps);
  if (a.plot) fm::emit_report(persisted, fm::ReportFormat::Svg, a.out, a.eps);
  for (const auto& row : fm::aggregate(persisted, a.eps)) {
    std::printf("%-8s %-6s %-8s median=%-12.6g q25=%-12.6g q75=%-12.6g valid=%zu/%zu within=%zu\n",
                row.case_name.c_str(), row.solver.c_str(), row.metric.c_str(), row.median, row.q25, row.q75,
                row.valid, row.runs, row.within_threshold);
  }
  return 0;
}

struct SweepArgs {
  std::string case_name = "case14";
  std::string seeds = "0..4";
  std::string alphas = "10,100,1000";
  std::string rho = "0:120:5";
  std::string solver = "exact";
  double budget = 60.0;
  std::string sweeps_grid = "10,20,50,100,200,500,1000";
  std::string beta_start_grid = "0.002,0.02,0.2,2";
  std::string beta_end_grid = "10,100,1000,10000";
  std::string out = "sweep";
};

int cmd_sweep(const std::string& mode, const SweepArgs& s, const BenchArgs& a) {
  const auto spec = case_spec(s.case_name);
  const auto seeds = parse_seeds(s.seeds);
  const std::filesystem::path out(s.out);
  if (mode == "rho") {
    fm::RhoSweepOptions o;
    if (!a.topology.empty()) o.topology_dir = a.topology;
    o.solver.kind = solver_kind(s.solver);
    o.solver.budget_s = s.budget;
    o.solver.num_reads = o.solver.kind == fm::SolverKind::Exact ? 1 : 0;
    o.solver.sa.num_sweeps = spec.sa_sweeps;
    o.solver.deterministic = a.deterministic;
    if (a.deterministic) o.solver.budget_ops = static_cast<std::uint64_t>(std::ceil(s.budget * a.ops_per_second));
    o.workers = a.workers > 0 ? a.workers : fm::default_workers();
    const auto rows = fm::rho_sweep(spec, seeds, parse_grid(s.alphas, "alpha"), parse_grid(s.rho, "rho"), o);
    fm::write_text_file(out / "rho_sweep.csv", fm::format_rho_sweep_csv(rows));
    if (a.plot) fm::write_text_file(out / "rho_sweep.svg", fm::rho_sweep_svg(rows));
    for (double alpha : parse_grid(s.alphas, "alpha")) {
      const auto curve = fm::fee_curve(rows, alpha);
      for (const auto& p : curve) {
        std::printf("alpha=%-8g rho=%-8g p2p=%-10.5g total=%-10.5g baseline=%-10.5g ratio=%.3f\n", alpha, p.rho,
                    p.p2p_fees, p.total_fees, p.baseline_fees, p.p2p_ratio);
      }
      if (const auto cross = fm::fee_fraction_crossing(curve, 0.8)) {
        std::printf("alpha=%g: total fees reach 80%% of baseline at rho=%.4g\n", alpha, *cross);
      } else {
        std::printf("alpha=%g: total fees stay below 80%% of baseline\n", alpha);
      }
    }
    return 0;
  }
  auto o = bench_options(a);
  o.out_dir = out / "refs_cache";
  std::vector<std::pair<double, double>> schedules;
  for (double b0 : parse_grid(s.beta_start_grid, "beta_start")) {
    for (double b1 : parse_grid(s.beta_end_grid, "beta_end")) schedules.emplace_back(b0, b1);
  }
  if (o.sa.num_sweeps <= 0) o.sa.num_sweeps = 100;
  const auto refs = fm::ensure_references({spec}, seeds, o);
  const auto rows = fm::sa_hyperparameter_sweep(spec, seeds, parse_int_grid(s.sweeps_grid, "sweeps"), schedules,
                                                refs, o);
  fm::write_text_file(out / "sa_sweep.csv", fm::format_sa_sweep_csv(rows));
  if (a.plot) {
    std::vector<fm::SaSweepRow> sweeps, cells;
    for (const auto& r : rows) (r.kind == "sweeps" ? sweeps : cells).push_back(r);
    fm::write_text_file(out / "sa_sweeps.svg", fm::sa_sweep_svg(sweeps));
    if (!cells.empty()) fm::write_text_file(out / "sa_schedule.svg", fm::sa_sweep_svg(cells));
  }
  std::cout << fm::format_sa_sweep_csv(rows);
  return 0;
}

int cmd_export(const std::string& kind, const std::string& in, const std::string& out) {
  const auto inst = fm::load_instance(in);
  const auto qubo = fm::build_qubo(fm::build_model(inst));
  emit(kind == "ising" ? fm::format_ising(fm::to_ising(qubo)) : fm::format_qubo(qubo), out);
  return 0;
}

int cmd_report(const std::string& runs, const std::string& csv, const std::string& format, const std::string& out,
               double eps) {
  const auto fmt = fm::parse_report_format(format);
  const auto records =
      csv.empty() ? fm::load_records(runs) : fm::parse_summary_csv(fm::read_text_file(csv));
  const auto path = fm::emit_report(records, fmt, std::filesystem::path(out.empty() ? runs : out), eps);
  std::cout << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-based cost allocation for peer-to-peer energy trading"};
  app.set_config("--config", "", "TOML-style key = value file; command-line flags take precedence");
  app.require_subcommand(1);

  // gen
  std::string case_name, out, in, topology;
  std::uint64_t seed = 0;
  double alpha = fm::kDefaultAlpha;
  std::optional<double> rho;
  auto* gen = app.add_subcommand("gen", "generate a problem instance");
  gen->add_option("--case", case_name, "built-in case (case9 ... case57)")->required();
  gen->add_option("--seed", seed, "instance seed")->capture_default_str();
  gen->add_option("--alpha", alpha, "matching penalty [ct/kWh^2]")->capture_default_str();
  gen->add_option("--rho", rho, "grid fee parameter [ct/kWh] (default: case table)");
  gen->add_option("--topology-dir", topology, "directory with caseN.json topologies");
  gen->add_option("--out", out, "output file (default: stdout)");

  // solve
  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "solve an instance");
  solve->add_option("--in", in, "instance JSON")->required();
  add_solver_flags(solve, so);
  solve->add_option("--reads", so.reads, "samples to draw (0 = until the budget)")->capture_default_str();
  solve->add_option("--budget", so.budget, "time budget [s] (default: case table timeout)");
  solve->add_option("--seed", so.seed, "solver seed")->capture_default_str();
  solve->add_flag("--deterministic", so.deterministic, "operation-count budgets instead of wall time");
  solve->add_option("--out", out, "result JSON (default: stdout)");

  // settle
  std::string assignment;
  double buy = 30.0, sell = 8.0, compound = 15.0;
  auto* settle = app.add_subcommand("settle", "settle bills for an assignment");
  settle->add_option("--in", in, "instance JSON")->required();
  settle->add_option("--assignment", assignment, "result JSON from solve")->required();
  settle->add_option("--buy", buy, "DSO buy tariff [ct/kWh]")->capture_default_str();
  settle->add_option("--sell", sell, "DSO sell tariff [ct/kWh]")->capture_default_str();
  settle->add_option("--compound", compound, "grid compound of the buy tariff [ct/kWh]")->capture_default_str();
  settle->add_option("--out", out, "settlement JSON (a .csv mirror is written next to it)");

  // bench
  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "solver benchmarks");
  bench->require_subcommand(1);
  auto* bench_timeout = bench->add_subcommand("timeout", "fixed-timeout benchmark");
  auto* bench_tts = bench->add_subcommand("tts", "time-to-solution benchmark");
  for (auto* sub : {bench_timeout, bench_tts}) {
    sub->add_option("--cases", ba.cases, "comma-separated case names")->capture_default_str();
    sub->add_option("--solvers", ba.solvers, "comma-separated solvers")->capture_default_str();
    add_bench_flags(sub, ba);
  }

  // sweep
  SweepArgs sa;
  BenchArgs sweep_bench;
  sweep_bench.workers = 0;
  auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
  sweep->require_subcommand(1);
  auto* sweep_rho = sweep->add_subcommand("rho", "grid fee sweep with settlement");
  auto* sweep_sa = sweep->add_subcommand("sa", "SA hyperparameter sweep");
  for (auto* sub : {sweep_rho, sweep_sa}) {
    sub->add_option("--case", sa.case_name, "case name")->capture_default_str();
    sub->add_option("--seeds", sa.seeds, "seed range or list")->capture_default_str();
    sub->add_option("--out", sa.out, "output directory")->capture_default_str();
    sub->add_option("--topology-dir", sweep_bench.topology, "directory with caseN.json topologies");
    sub->add_option("--workers", sweep_bench.workers, "parallel jobs");
    sub->add_flag("--deterministic", sweep_bench.deterministic, "operation-count budgets");
    sub->add_option("--ops-per-second", sweep_bench.ops_per_second, "deterministic mode: operations per second");
    sub->add_flag("--plot", sweep_bench.plot, "also write SVG plots");
  }
  sweep_rho->add_option("--alphas", sa.alphas, "alpha list or start:stop:step")->capture_default_str();
  sweep_rho->add_option("--rho", sa.rho, "rho list or start:stop:step")->capture_default_str();
  sweep_rho->add_option("--solver", sa.solver, "solver per grid point")->capture_default_str();
  sweep_rho->add_option("--budget", sa.budget, "budget per grid point [s]")->capture_default_str();
  sweep_sa->add_option("--sweeps-grid", sa.sweeps_grid, "num_sweeps values")->capture_default_str();
  sweep_sa->add_option("--beta-start-grid", sa.beta_start_grid, "beta_start values")->capture_default_str();
  sweep_sa->add_option("--beta-end-grid", sa.beta_end_grid, "beta_end values")->capture_default_str();
  sweep_sa->add_option("--sweeps", sweep_bench.sweeps, "sweeps for the schedule heatmap (default 100)");
  sweep_sa->add_option("--beta", sweep_bench.beta, "schedule for the sweeps curve")->capture_default_str();
  sweep_sa->add_option("--alpha", sweep_bench.alpha, "matching penalty")->capture_default_str();
  sweep_sa->add_option("--reference-budget", sweep_bench.reference_budget, "exact reference budget [s]")
      ->capture_default_str();
  sweep_sa->add_option("--tts-cap", sweep_bench.tts_cap, "sampling cap per instance [s]")->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "write the QUBO or Ising model");
  exp->require_subcommand(1);
  auto* exp_qubo = exp->add_subcommand("qubo", "QUBO text format");
  auto* exp_ising = exp->add_subcommand("ising", "Ising text format");
  for (auto* sub : {exp_qubo, exp_ising}) {
    sub->add_option("--in", in, "instance JSON")->required();
    sub->add_option("--out", out, "output file (default: stdout)");
  }

  // report
  std::string runs = "runs", csv, format = "csv";
  double eps = 0.05;
  auto* report = app.add_subcommand("report", "summaries and plots from bench records");
  report->add_option("--runs", runs, "directory with run records")->capture_default_str();
  report->add_option("--csv", csv, "re-ingest a summary.csv instead of run records");
  report->add_option("--format", format, "csv, json or svg")->capture_default_str();
  report->add_option("--out", out, "output directory (default: the runs directory)");
  report->add_option("--eps", eps, "relative error threshold")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*gen) return cmd_gen(case_name, seed, alpha, rho, topology, out);
    if (*solve) return cmd_solve(in, so, out);
    if (*settle) {
      const auto tariffs = fm::TariffScheme::from_buy_sell(buy, sell, compound);
      return cmd_settle(in, assignment, tariffs, out);
    }
    if (*bench) return cmd_bench(*bench_tts ? "tts" : "timeout", ba);
    if (*sweep) return cmd_sweep(*sweep_rho ? "rho" : "sa", sa, sweep_bench);
    if (*exp) return cmd_export(*exp_ising ? "ising" : "qubo", in, out);
    if (*report) return cmd_report(runs, csv, format, out, eps);
  } catch (const UsageError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 1;
  } catch (const fm::Error& e) {
    const bool usage = e.code() == fm::ErrorCode::InvalidArgument;
    std::cerr << (usage ? "error[usage]: " : "error[data]: ") << e.what() << "\n";
    return usage ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
