#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error,
// 2 data/format error, 3 kernel error.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftle/bench.hpp"
#include "ftle/core.hpp"
#include "ftle/error.hpp"
#include "ftle/flows.hpp"
#include "ftle/io.hpp"
#include "ftle/kernels.hpp"

namespace ftle::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kKernel = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
T parse_value(const std::string& s, const std::string& what) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) throw UsageError("invalid " + what + ": '" + s + "'");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& s, char sep, const std::string& what) {
  std::vector<T> out;
  for (const auto& part : ftle::detail::split(s, sep)) out.push_back(parse_value<T>(part, what));
  return out;
}

inline int exit_code_for(const Error& e) {
  if (e.code() == Errc::invalid_argument) return kUsage;
  if (is_kernel_error(e.code())) return kKernel;
  return kData;
}

struct Globals {
  bool quiet = false;
  std::optional<std::uint64_t> seed;
};

// -------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string flow;
  std::string dims;
  std::string domain;
  double t0 = 0.0;
  double T = 0.0;
  double dt = 0.0;
  std::string out;
  std::string velocity;
  std::optional<double> A, eps, omega;
  std::string abc;
};

inline FlowSpec make_flow(const GenerateArgs& a, int dim) {
  const bool gyre_params = a.A || a.eps || a.omega;
  if (a.flow != "double-gyre" && gyre_params) throw UsageError("--A/--eps/--omega apply to double-gyre only");
  if (a.flow != "abc" && !a.abc.empty()) throw UsageError("--abc applies to the abc flow only");
  if (a.flow != "drift" && !a.velocity.empty()) throw UsageError("--velocity applies to the drift flow only");

  if (a.flow == "double-gyre") {
    DoubleGyre g;
    if (a.A) g.A = *a.A;
    if (a.eps) g.eps = *a.eps;
    if (a.omega) g.omega = *a.omega;
    return g;
  }
  if (a.flow == "abc") {
    if (dim != 3) throw UsageError("the abc flow needs --dims NXxNYxNZ");
    AbcFlow f;
    if (!a.abc.empty()) {
      const auto c = parse_list<double>(a.abc, ',', "--abc");
      if (c.size() != 3) throw UsageError("--abc takes A,B,C");
      f = {c[0], c[1], c[2]};
    }
    return f;
  }
  if (a.flow == "identity") return IdentityFlow{};
  if (a.velocity.empty()) throw UsageError("the drift flow needs --velocity");
  const auto v = parse_list<double>(a.velocity, ',', "--velocity");
  if (static_cast<int>(v.size()) != dim) throw UsageError("--velocity needs one component per axis");
  ConstantDrift d;
  d.dim = dim;
  std::copy(v.begin(), v.end(), d.velocity.begin());
  return d;
}

inline int run_generate(const GenerateArgs& a, const Globals& g, std::ostream& out) {
  const auto dims = parse_list<std::size_t>(a.dims, 'x', "--dims");
  if (dims.size() != 2 && dims.size() != 3) throw UsageError("--dims takes NXxNY or NXxNYxNZ");
  const int dim = static_cast<int>(dims.size());
  const auto flow = make_flow(a, dim);

  auto domain = default_domain(flow);
  if (!a.domain.empty()) {
    const auto b = parse_list<double>(a.domain, ',', "--domain");
    if (b.size() != dims.size() * 2) throw UsageError("--domain needs a lower and upper bound per axis");
    for (int ax = 0; ax < dim; ++ax) domain[ax] = {b[2 * ax], b[2 * ax + 1]};
  }
  StructuredGrid grid;
  for (int ax = 0; ax < dim; ++ax) {
    if (!(domain[ax][1] > domain[ax][0])) throw UsageError("--domain bounds must be increasing");
    if (dims[ax] < 3) throw UsageError("--dims needs at least 3 points per axis");
    grid.dims[ax] = dims[ax];
    grid.origin[ax] = domain[ax][0];
    grid.spacing[ax] = (domain[ax][1] - domain[ax][0]) / static_cast<double>(dims[ax] - 1);
  }
  if (a.T == 0.0) throw UsageError("--T must be non-zero");
  if (a.dt == 0.0 || (a.dt > 0) != (a.T > 0)) throw UsageError("--dt must be non-zero with the sign of --T");

  const auto mesh = make_structured_grid(grid, dim);
  const auto field = generate_flowmap(mesh, flow, a.t0, a.T, a.dt);
  write_flowmap(a.out, field, mesh);
  if (!g.quiet) out << "wrote " << a.out << " (" << flow_name(flow) << ", npoints=" << mesh.npoints() << ")\n";
  return kOk;
}

// -------------------------------------------------------------------------
// compute

struct ComputeArgs {
  std::string input;
  std::string strategy;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> chunk;
  std::string out;
  std::string csv;
};

inline int run_compute(const ComputeArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  ExecutionStrategy strategy = SinglePass{};
  if (a.strategy == "data-parallel") {
    strategy = DataParallel{a.workers.value_or(default_worker_count()), a.chunk.value_or(4096)};
  } else if (a.workers || a.chunk) {
    throw UsageError("--workers/--chunk apply to the data-parallel strategy only");
  }
  if (a.workers && *a.workers < 1) throw UsageError("--workers must be >= 1");
  if (a.chunk && *a.chunk < 1) throw UsageError("--chunk must be >= 1");

  const auto [field, mesh] = read_flowmap(a.input);
  const auto diag = validate_flowmap(field, mesh);
  if (!diag.ok) {
    for (const auto& v : diag.violations) err << "invalid flowmap: " << v << "\n";
    return kData;
  }

  const auto start = std::chrono::steady_clock::now();
  const auto ftle = compute_ftle_field(field, mesh, strategy);
  const auto stop = std::chrono::steady_clock::now();

  write_ftle_field(a.out, ftle);
  if (!a.csv.empty()) write_ftle_csv(a.csv, ftle, mesh);
  if (!g.quiet) {
    out << "strategy=" << strategy_label(strategy) << "\n"
        << "kernel_time_ms=" << std::chrono::duration<double, std::milli>(stop - start).count() << "\n"
        << "degenerate_count=" << ftle.degenerate_count << "\n";
  }
  return kOk;
}

// -------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string sizes = "200000,400000,600000";
  std::string dims = "2,3";
  std::string strategies = "data-parallel,single-pass";
  std::string workers;
  std::size_t chunk = 4096;
  std::size_t reps = 5;
  std::size_t warmup = 1;
  std::string flow = "double-gyre";
  double t0 = 0.0;
  double T = 15.0;
  double dt = 0.1;
  std::string out = "bench.csv";
};

inline int run_bench(const BenchArgs& a, const Globals& g, std::ostream& out) {
  SuiteConfig cfg;
  cfg.sizes = parse_list<std::size_t>(a.sizes, ',', "--sizes");
  cfg.dims = parse_list<int>(a.dims, ',', "--dims");
  for (int d : cfg.dims)
    if (d != 2 && d != 3) throw UsageError("--dims entries must be 2 or 3");
  if (a.reps < 1) throw UsageError("--reps must be >= 1");
  if (a.chunk < 1) throw UsageError("--chunk must be >= 1");

  std::vector<std::size_t> workers{default_worker_count()};
  if (!a.workers.empty()) workers = parse_list<std::size_t>(a.workers, ',', "--workers");
  for (auto w : workers)
    if (w < 1) throw UsageError("--workers entries must be >= 1");

  cfg.strategies.clear();
  for (const auto& s : ftle::detail::split(a.strategies, ',')) {
    if (s == "single-pass") {
      cfg.strategies.emplace_back(SinglePass{});
    } else if (s == "data-parallel") {
      for (auto w : workers) cfg.strategies.emplace_back(DataParallel{w, a.chunk});
    } else {
      throw UsageError("unknown strategy '" + s + "'");
    }
  }

  if (a.flow == "double-gyre") cfg.flow = DoubleGyre{};
  else if (a.flow == "abc") cfg.flow = AbcFlow{};
  else if (a.flow == "identity") cfg.flow = IdentityFlow{};
  else throw UsageError("--flow for bench must be double-gyre, abc or identity");
  if (a.T == 0.0 || a.dt == 0.0 || (a.dt > 0) != (a.T > 0)) throw UsageError("--T and --dt must be non-zero, same sign");

  cfg.reps = a.reps;
  cfg.warmup = a.warmup;
  cfg.t0 = a.t0;
  cfg.T = a.T;
  cfg.dt = a.dt;
  cfg.shuffle_seed = g.seed;

  const auto records = run_suite(cfg, [&](const BenchRecord& r) {
    if (!g.quiet) {
      out << r.dim << "D " << r.npoints << " " << r.label << ": median " << ftle::detail::fixed(r.median_ms, 3)
          << " ms\n";
    }
  });
  write_bench_csv(a.out, records);
  if (!g.quiet) {
    out << "wrote " << a.out << " and " << summary_path(a.out).string() << "\n\n";
    out << render_report(records, nullptr, ReportFormat::markdown);
  }
  return kOk;
}

// -------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string bench;
  std::string reference;
  std::string format = "md";
};

inline int run_report(const ReportArgs& a, std::ostream& out) {
  if (a.bench.empty() && a.reference.empty()) throw UsageError("report needs --bench and/or --reference");
  const ReferenceTable* ref = nullptr;
  if (!a.reference.empty()) ref = &reference_table1();
  std::vector<BenchRecord> records;
  if (!a.bench.empty()) records = read_bench_csv(a.bench);
  out << render_report(records, ref, a.format == "csv" ? ReportFormat::csv : ReportFormat::markdown);
  return kOk;
}

}  // namespace detail

/// Runs the CLI on `args` (argv without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Finite-time Lyapunov exponent fields from discrete flowmaps", "ftle"};
  app.require_subcommand(1);
  Globals globals;
  std::uint64_t seed = 0;
  app.add_flag("--quiet", globals.quiet, "Suppress human-readable output");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized choices (bench strategy order)");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Advect a grid of seeds and write an .ftlm flowmap");
  generate->add_option("--flow", gen.flow, "double-gyre | abc | identity | drift")
      ->required()
      ->check(CLI::IsMember({"double-gyre", "abc", "identity", "drift"}));
  generate->add_option("--dims", gen.dims, "Grid points per axis, NXxNY[xNZ]")->required();
  generate->add_option("--domain", gen.domain, "x0,x1,y0,y1[,z0,z1] (default: the flow's domain)");
  generate->add_option("--t0", gen.t0, "Start time")->capture_default_str();
  generate->add_option("--T", gen.T, "Integration horizon (negative for backward time)")->required();
  generate->add_option("--dt", gen.dt, "RK4 step, same sign as T")->required();
  generate->add_option("--out", gen.out, "Output .ftlm path")->required();
  generate->add_option("--velocity", gen.velocity, "Drift velocity vx,vy[,vz] (drift only)");
  generate->add_option("--A", gen.A, "Double-gyre amplitude (default 0.1)");
  generate->add_option("--eps", gen.eps, "Double-gyre perturbation (default 0.25)");
  generate->add_option("--omega", gen.omega, "Double-gyre angular frequency (default 2*pi/10)");
  generate->add_option("--abc", gen.abc, "ABC coefficients A,B,C (default sqrt3,sqrt2,1)");

  ComputeArgs comp;
  auto* compute = app.add_subcommand("compute", "Compute the FTLE field of an .ftlm flowmap");
  compute->add_option("--input", comp.input, "Input .ftlm path")->required();
  compute->add_option("--strategy", comp.strategy, "data-parallel | single-pass")
      ->required()
      ->check(CLI::IsMember({"data-parallel", "single-pass"}));
  compute->add_option("--workers", comp.workers, "Data-parallel workers (default: logical CPUs)");
  compute->add_option("--chunk", comp.chunk, "Points per work unit (default 4096)");
  compute->add_option("--out", comp.out, "Output .ftlf path")->required();
  compute->add_option("--csv", comp.csv, "Also write x,y[,z],ftle CSV");

  BenchArgs ben;
  auto* bench = app.add_subcommand("bench", "Time both strategies over grid sizes and dimensions");
  bench->add_option("--sizes", ben.sizes, "Point counts, comma-separated")->capture_default_str();
  bench->add_option("--dims", ben.dims, "Dimensions, comma-separated")->capture_default_str();
  bench->add_option("--strategies", ben.strategies, "data-parallel,single-pass")->capture_default_str();
  bench->add_option("--workers", ben.workers, "Data-parallel worker counts, comma-separated (default: logical CPUs)");
  bench->add_option("--chunk", ben.chunk, "Points per work unit")->capture_default_str();
  bench->add_option("--reps", ben.reps, "Timed repetitions")->capture_default_str();
  bench->add_option("--warmup", ben.warmup, "Untimed warmup runs")->capture_default_str();
  bench->add_option("--flow", ben.flow, "double-gyre | abc | identity")->capture_default_str();
  bench->add_option("--t0", ben.t0, "Start time")->capture_default_str();
  bench->add_option("--T", ben.T, "Integration horizon")->capture_default_str();
  bench->add_option("--dt", ben.dt, "RK4 step")->capture_default_str();
  bench->add_option("--out", ben.out, "Per-repetition CSV (summary goes to *.summary.csv)")->capture_default_str();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Render bench results and/or the reference table");
  report->add_option("--bench", rep.bench, "Bench CSV written by `bench`");
  report->add_option("--reference", rep.reference, "Reference table to include")->check(CLI::IsMember({"table1"}));
  report->add_option("--format", rep.format, "md | csv")->check(CLI::IsMember({"md", "csv"}))->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  if (seed_opt->count() > 0) globals.seed = seed;

  try {
    if (generate->parsed()) return run_generate(gen, globals, out);
    if (compute->parsed()) return run_compute(comp, globals, out, err);
    if (bench->parsed()) return run_bench(ben, globals, out);
    return run_report(rep, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace ftle::cli
