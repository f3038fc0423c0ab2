#include "flowmatch/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "flowmatch/error.hpp"
#include "flowmatch/io.hpp"
#include "flowmatch/seed.hpp"
#include "flowmatch/stats.hpp"

namespace flowmatch {

using nlohmann::json;

double relative_error(double cost, double ref_cost) {
  if (ref_cost == 0.0) return cost == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (cost - ref_cost) / ref_cost;
}

std::optional<double> time_to_solution(double sample_time, double p) {
  if (!(sample_time > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample time must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "success probability must be in [0, 1]");
  if (p == 0.0) return std::nullopt;
  if (p == 1.0) return sample_time;
  const double repetitions = std::ceil(std::log(0.01) / std::log(1.0 - p));
  return sample_time * std::max(1.0, repetitions);
}

PreparedInstance prepare(Instance instance) {
  MatchingModel model = build_model(instance);
  Qubo qubo = build_qubo(model);
  ResidualForm form = residual_form(model);
  return {std::move(instance), std::move(model), std::move(qubo), std::move(form)};
}

ReferenceSolution compute_reference(const PreparedInstance& p, double budget_s, bool deterministic,
                                    std::uint64_t budget_ops) {
  SolverConfig cfg;
  cfg.kind = SolverKind::Exact;
  cfg.budget_s = budget_s;
  cfg.deterministic = deterministic;
  cfg.budget_ops = budget_ops;
  cfg.seed = derive_seed(p.instance.seed, "reference");
  const auto result = exact_solve(p.qubo, &p.form, cfg);
  return {p.instance.case_name, p.instance.seed, result.best.x, result.best.cost, result.proven_optimal};
}

namespace {

std::string bits_string(const Bits& x) {
  std::string s(x.size(), '0');
  for (std::size_t k = 0; k < x.size(); ++k) s[k] = x[k] ? '1' : '0';
  return s;
}

Bits bits_from_string(const std::string& s) {
  Bits x(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] != '0' && s[k] != '1') throw Error(ErrorCode::MalformedFile, "bit string must hold only 0/1");
    x[k] = s[k] == '1';
  }
  return x;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_inf(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

std::filesystem::path reference_path(const std::filesystem::path& dir, const std::string& name, std::uint64_t seed) {
  return dir / "refs" / (name + "_" + std::to_string(seed) + ".json");
}

SolverConfig solver_config(SolverKind kind, const CaseSpec& spec, double budget_s, const BenchOptions& o,
                           std::uint64_t instance_seed) {
  SolverConfig cfg;
  cfg.kind = kind;
  cfg.sa = o.sa;
  if (cfg.sa.num_sweeps <= 0) cfg.sa.num_sweeps = spec.sa_sweeps;
  cfg.tabu = o.tabu;
  cfg.num_reads = 0;
  cfg.budget_s = budget_s;
  cfg.deterministic = o.deterministic;
  if (o.deterministic) {
    cfg.budget_ops = static_cast<std::uint64_t>(std::ceil(budget_s * o.ops_per_second));
  }
  cfg.seed = derive_seed(o.solver_seed ^ instance_seed, std::string("bench.") + std::string(to_string(kind)));
  return cfg;
}

struct Job {
  const CaseSpec* spec;
  std::uint64_t seed;
  SolverKind solver;
};

std::vector<Job> make_jobs(const std::vector<CaseSpec>& cases, const std::vector<SolverKind>& solvers,
                           const std::vector<std::uint64_t>& seeds) {
  std::vector<Job> jobs;
  for (const auto& c : cases) {
    for (auto s : seeds) {
      for (auto k : solvers) jobs.push_back({&c, s, k});
    }
  }
  return jobs;
}

const ReferenceSolution& lookup(const ReferenceMap& refs, const std::string& name, std::uint64_t seed) {
  auto it = refs.find({name, seed});
  if (it == refs.end()) {
    throw Error(ErrorCode::MissingReference, "no reference solution for " + name + " seed " + std::to_string(seed));
  }
  return it->second;
}

}  // namespace

std::size_t default_workers() {
  if (const char* env = std::getenv("FLOWMATCH_WORKERS"); env != nullptr && *env != '\0') {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  const unsigned cores = std::thread::hardware_concurrency();
  return cores > 1 ? cores - 1 : 1;
}

void run_parallel(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, jobs));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ReferenceMap ensure_references(const std::vector<CaseSpec>& cases, const std::vector<std::uint64_t>& seeds,
                               const BenchOptions& o) {
  struct Item {
    const CaseSpec* spec;
    std::uint64_t seed;
  };
  std::vector<Item> items;
  for (const auto& c : cases) {
    for (auto s : seeds) items.push_back({&c, s});
  }
  std::vector<ReferenceSolution> refs(items.size());
  run_parallel(items.size(), o.workers, [&](std::size_t i) {
    const auto& [spec, seed] = items[i];
    if (!o.out_dir.empty()) {
      const auto path = reference_path(o.out_dir, spec->name, seed);
      if (std::filesystem::exists(path)) {
        const json doc = parse_json(read_text_file(path));
        refs[i] = {doc.at("case").get<std::string>(), doc.at("seed").get<std::uint64_t>(),
                   bits_from_string(doc.at("x").get<std::string>()), doc.at("cost_ct").get<double>(),
                   doc.at("proven_optimal").get<bool>()};
        return;
      }
    }
    const auto prepared = prepare(generate(*spec, seed, o.alpha, o.topology_dir));
    const auto ops = static_cast<std::uint64_t>(std::ceil(o.reference_budget_s * o.ops_per_second));
    refs[i] = compute_reference(prepared, o.reference_budget_s, o.deterministic, o.deterministic ? ops : 0);
    if (!o.out_dir.empty()) {
      json doc{{"case", refs[i].case_name},
               {"seed", refs[i].seed},
               {"x", bits_string(refs[i].x)},
               {"cost_ct", refs[i].cost},
               {"proven_optimal", refs[i].proven_optimal}};
      write_text_file(reference_path(o.out_dir, spec->name, seed), doc.dump(2) + "\n");
    }
  });
  ReferenceMap out;
  for (auto& r : refs) out[{r.case_name, r.seed}] = std::move(r);
  return out;
}

std::vector<BenchRecord> timeout_benchmark(const std::vector<CaseSpec>& cases, const std::vector<SolverKind>& solvers,
                                           const std::vector<std::uint64_t>& seeds, const ReferenceMap& refs,
                                           const BenchOptions& o) {
  const auto jobs = make_jobs(cases, solvers, seeds);
  for (const auto& j : jobs) lookup(refs, j.spec->name, j.seed);

  std::vector<BenchRecord> records(jobs.size());
  run_parallel(jobs.size(), o.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& ref = lookup(refs, job.spec->name, job.seed);
    const auto prepared = prepare(generate(*job.spec, job.seed, o.alpha, o.topology_dir));
    const auto cfg = solver_config(job.solver, *job.spec, job.spec->timeout_s, o, job.seed);
    const auto result = solve(prepared.qubo, cfg, &prepared.form);

    BenchRecord r;
    r.case_name = job.spec->name;
    r.seed = job.seed;
    r.solver = std::string(to_string(job.solver));
    r.metric = "epsilon";
    r.epsilon = {relative_error(result.best.cost, ref.cost)};
    r.samples_drawn = result.samples.size();
    r.samples_found = r.epsilon.front() <= o.eps_threshold ? 1 : 0;
    r.wall_time = result.samples.empty() ? 0.0 : result.samples.back().elapsed;
    r.reference_proven = ref.proven_optimal;
    r.deterministic = o.deterministic;
    if (!o.out_dir.empty()) save_record(r, o.out_dir);
    records[i] = std::move(r);
  });
  return records;
}

BenchRecord measure_tts(const PreparedInstance& p, const ReferenceSolution& ref, const SolverConfig& base,
                        const BenchOptions& o) {
  SolverConfig cfg = base;
  cfg.num_reads = 0;
  cfg.budget_s = o.tts_cap_s;
  cfg.deterministic = o.deterministic;
  if (o.deterministic) cfg.budget_ops = static_cast<std::uint64_t>(std::ceil(o.tts_cap_s * o.ops_per_second));

  BenchRecord r;
  r.case_name = p.instance.case_name;
  r.seed = p.instance.seed;
  r.solver = std::string(to_string(cfg.kind));
  r.metric = "tts";
  r.reference_proven = ref.proven_optimal;
  r.deterministic = o.deterministic;
  double last_elapsed = 0.0;
  run_reads(
      p.qubo, cfg,
      [&](const Sample& s) {
        const double eps = relative_error(s.cost, ref.cost);
        r.epsilon.push_back(eps);
        ++r.samples_drawn;
        if (eps <= o.eps_threshold) ++r.samples_found;
        last_elapsed = s.elapsed;
        return r.samples_found < o.target_hits;
      },
      &p.form);
  r.wall_time = last_elapsed;
  r.p_eps = r.samples_drawn == 0 ? 0.0 : static_cast<double>(r.samples_found) / static_cast<double>(r.samples_drawn);
  r.sample_time = r.samples_drawn == 0 ? 0.0 : last_elapsed / static_cast<double>(r.samples_drawn);
  if (r.samples_found >= o.min_hits && r.reference_proven && r.sample_time > 0.0) {
    r.tts = time_to_solution(r.sample_time, r.p_eps);
  }
  return r;
}

std::vector<BenchRecord> tts_benchmark(const std::vector<CaseSpec>& cases, const std::vector<SolverKind>& solvers,
                                       const std::vector<std::uint64_t>& seeds, const ReferenceMap& refs,
                                       const BenchOptions& o) {
  const auto jobs = make_jobs(cases, solvers, seeds);
  for (const auto& j : jobs) lookup(refs, j.spec->name, j.seed);

  std::vector<BenchRecord> records(jobs.size());
  run_parallel(jobs.size(), o.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto prepared = prepare(generate(*job.spec, job.seed, o.alpha, o.topology_dir));
    const auto cfg = solver_config(job.solver, *job.spec, o.tts_cap_s, o, job.seed);
    auto r = measure_tts(prepared, lookup(refs, job.spec->name, job.seed), cfg, o);
    if (!o.out_dir.empty()) save_record(r, o.out_dir);
    records[i] = std::move(r);
  });
  return records;
}

std::vector<SummaryRow> aggregate(const std::vector<BenchRecord>& records, double eps_threshold) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const BenchRecord*>> groups;
  for (const auto& r : records) groups[{r.case_name, r.solver, r.metric}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, group] : groups) {
    SummaryRow row;
    std::tie(row.case_name, row.solver, row.metric) = key;
    row.runs = group.size();
    std::vector<double> values;
    for (const auto* r : group) {
      if (r->metric == "epsilon") {
        const double eps = r->epsilon.empty() ? std::numeric_limits<double>::infinity() : r->epsilon.front();
        values.push_back(eps);
        if (eps <= eps_threshold) ++row.within_threshold;
        if (std::isfinite(eps)) ++row.valid;
      } else if (r->tts) {
        values.push_back(*r->tts);
        ++row.valid;
      }
    }
    row.median = quantile(values, 0.5);
    row.q25 = quantile(values, 0.25);
    row.q75 = quantile(values, 0.75);
    rows.push_back(row);
  }
  return rows;
}

json record_to_json(const BenchRecord& r) {
  json eps = json::array();
  for (double e : r.epsilon) eps.push_back(number_or_null(e));
  return json{{"case", r.case_name},
              {"seed", r.seed},
              {"solver", r.solver},
              {"metric", r.metric},
              {"epsilon", eps},
              {"tts", r.tts ? json(*r.tts) : json(nullptr)},
              {"samples_found", r.samples_found},
              {"samples_drawn", r.samples_drawn},
              {"p_eps", r.p_eps},
              {"sample_time", r.sample_time},
              {"wall_time", r.wall_time},
              {"reference_proven", r.reference_proven},
              {"deterministic", r.deterministic}};
}

BenchRecord record_from_json(const json& doc) {
  try {
    BenchRecord r;
    r.case_name = doc.at("case").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.solver = doc.at("solver").get<std::string>();
    r.metric = doc.at("metric").get<std::string>();
    for (const auto& e : doc.at("epsilon")) r.epsilon.push_back(number_or_inf(e));
    if (!doc.at("tts").is_null()) r.tts = doc.at("tts").get<double>();
    r.samples_found = doc.at("samples_found").get<std::size_t>();
    r.samples_drawn = doc.at("samples_drawn").get<std::size_t>();
    r.p_eps = doc.at("p_eps").get<double>();
    r.sample_time = doc.at("sample_time").get<double>();
    r.wall_time = doc.at("wall_time").get<double>();
    r.reference_proven = doc.at("reference_proven").get<bool>();
    r.deterministic = doc.at("deterministic").get<bool>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("bench record: ") + e.what());
  }
}

std::filesystem::path record_path(const std::filesystem::path& dir, const BenchRecord& r) {
  return dir / (r.metric + "_" + r.case_name + "_" + r.solver + "_" + std::to_string(r.seed) + ".json");
}

void save_record(const BenchRecord& record, const std::filesystem::path& dir) {
  write_text_file(record_path(dir, record), record_to_json(record).dump(2) + "\n");
}

std::vector<BenchRecord> load_records(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    const bool record = name.starts_with("epsilon_") || name.starts_with("tts_");
    if (entry.is_regular_file() && record && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<BenchRecord> out;
  for (const auto& f : files) out.push_back(record_from_json(parse_json(read_text_file(f))));
  return out;
}

std::vector<RhoSweepRow> rho_sweep(const CaseSpec& spec, const std::vector<std::uint64_t>& seeds,
                                   const std::vector<double>& alphas, const std::vector<double>& rho_grid,
                                   const RhoSweepOptions& o) {
  struct Point {
    std::size_t seed_index;
    double alpha;
    double rho;
  };
  std::vector<Point> points;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (double a : alphas) {
      for (double r : rho_grid) points.push_back({s, a, r});
    }
  }
  // Pair flows depend only on grid and loads, so compute them once per seed.
  std::vector<Instance> base;
  std::vector<PairFlowSet> flows;
  for (auto seed : seeds) {
    base.push_back(generate(spec, seed, kDefaultAlpha, o.topology_dir));
    flows.push_back(pair_flows(base.back()));
  }

  std::vector<RhoSweepRow> rows(points.size());
  run_parallel(points.size(), o.workers, [&](std::size_t i) {
    const auto& pt = points[i];
    Instance inst = base[pt.seed_index];
    inst.alpha = pt.alpha;
    inst.rho = pt.rho;
    const MatchingModel model = build_model(inst, flows[pt.seed_index]);
    const Qubo qubo = build_qubo(model);
    const ResidualForm form = residual_form(model);
    SolverConfig cfg = o.solver;
    cfg.seed = derive_seed(inst.seed, "sweep.rho");
    const auto result = solve(qubo, cfg, &form);
    const auto& x = result.best.x;

    const auto peers = settle(x, inst, model.pairs.trades, model.trade_costs, o.tariffs);
    std::vector<double> consumer_tariffs;
    std::vector<double> producer_tariffs;
    for (const auto& p : peers) (p.producer ? producer_tariffs : consumer_tariffs).push_back(p.effective_tariff);

    RhoSweepRow row;
    row.case_name = spec.name;
    row.seed = inst.seed;
    row.alpha = pt.alpha;
    row.rho = pt.rho;
    row.report = community_report(peers, x, model.trade_costs, o.tariffs);
    row.mean_consumer_tariff = mean(consumer_tariffs);
    row.mean_producer_tariff = mean(producer_tariffs);
    row.objective = result.best.cost;
    row.proven_optimal = result.proven_optimal;
    rows[i] = row;
  });
  return rows;
}

std::vector<FeeCurvePoint> fee_curve(const std::vector<RhoSweepRow>& rows, double alpha) {
  std::map<double, std::vector<const RhoSweepRow*>> by_rho;
  for (const auto& r : rows) {
    if (r.alpha == alpha) by_rho[r.rho].push_back(&r);
  }
  std::vector<FeeCurvePoint> curve;
  for (const auto& [rho, group] : by_rho) {
    FeeCurvePoint p;
    p.rho = rho;
    const double n = static_cast<double>(group.size());
    for (const auto* r : group) {
      p.p2p_fees += r->report.p2p_fees / n;
      p.total_fees += r->report.total_dso_fees / n;
      p.baseline_fees += r->report.baseline_fees / n;
      p.p2p_ratio += r->report.p2p_ratio / n;
      p.mean_consumer_tariff += r->mean_consumer_tariff / n;
      p.mean_producer_tariff += r->mean_producer_tariff / n;
    }
    curve.push_back(p);
  }
  return curve;
}

std::optional<double> fee_fraction_crossing(const std::vector<FeeCurvePoint>& curve, double fraction) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double f = curve[i].total_fees / curve[i].baseline_fees;
    if (f < fraction) continue;
    if (i == 0) return curve[i].rho;
    const double prev = curve[i - 1].total_fees / curve[i - 1].baseline_fees;
    const double t = (fraction - prev) / (f - prev);
    return curve[i - 1].rho + t * (curve[i].rho - curve[i - 1].rho);
  }
  return std::nullopt;
}

std::vector<SaSweepRow> sa_hyperparameter_sweep(const CaseSpec& spec, const std::vector<std::uint64_t>& seeds,
                                                const std::vector<int>& sweep_grid,
                                                const std::vector<std::pair<double, double>>& schedule_grid,
                                                const ReferenceMap& refs, const BenchOptions& o) {
  std::vector<PreparedInstance> instances;
  for (auto seed : seeds) {
    lookup(refs, spec.name, seed);
    instances.push_back(prepare(generate(spec, seed, o.alpha, o.topology_dir)));
  }
  const int default_sweeps = o.sa.num_sweeps > 0 ? o.sa.num_sweeps : spec.sa_sweeps;

  std::vector<SaSweepRow> rows;
  for (int sweeps : sweep_grid) rows.push_back({"sweeps", sweeps, o.sa.beta_start, o.sa.beta_end, 0, 0, 0});
  for (const auto& [b0, b1] : schedule_grid) rows.push_back({"schedule", default_sweeps, b0, b1, 0, 0, 0});

  // one job per (row, instance)
  std::vector<std::optional<double>> tts(rows.size() * instances.size());
  run_parallel(tts.size(), o.workers, [&](std::size_t job) {
    const auto& row = rows[job / instances.size()];
    const auto& p = instances[job % instances.size()];
    SolverConfig cfg;
    cfg.kind = SolverKind::Sa;
    cfg.sa = {row.num_sweeps, row.beta_start, row.beta_end};
    cfg.seed = derive_seed(o.solver_seed ^ p.instance.seed, "sweep.sa");
    tts[job] = measure_tts(p, lookup(refs, spec.name, p.instance.seed), cfg, o).tts;
  });
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> values;
    for (std::size_t k = 0; k < instances.size(); ++k) {
      if (const auto& t = tts[r * instances.size() + k]) values.push_back(*t);
    }
    rows[r].valid_instances = values.size();
    rows[r].tts_median = quantile(values, 0.5);
    rows[r].tts_q75 = quantile(values, 0.75);
  }
  return rows;
}

}  // namespace flowmatch
