#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ftle/core.hpp"
#include "ftle/error.hpp"
#include "ftle/flows.hpp"
#include "ftle/io.hpp"
#include "ftle/kernels.hpp"

namespace ftle {

struct BenchRecord {
  std::string label;
  int dim = 0;
  std::size_t npoints = 0;
  ExecutionStrategy strategy = SinglePass{};
  std::size_t reps = 0;
  std::vector<double> times_ms;
  double median_ms = 0.0;
  std::uint64_t input_digest = 0;
};

/// Exact median; mean of the central pair for even counts.
inline double median(std::vector<double> xs) {
  if (xs.empty()) throw Error(Errc::invalid_argument, "median of an empty list");
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  const double hi = *mid;
  if (xs.size() % 2 == 1) return hi;
  const double lo = *std::max_element(xs.begin(), mid);
  return (lo + hi) / 2.0;
}

/// FNV-1a over the value bytes; identifies benchmark inputs.
inline std::uint64_t digest(const FlowmapField& field) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(field.dim));
  mix(field.npoints);
  mix(std::bit_cast<std::uint64_t>(field.t0));
  mix(std::bit_cast<std::uint64_t>(field.T));
  for (double v : field.values) mix(std::bit_cast<std::uint64_t>(v));
  return h;
}

inline double speedup(double baseline_ms, double candidate_ms) {
  if (!(baseline_ms > 0.0) || !(candidate_ms > 0.0)) {
    throw Error(Errc::invalid_argument, "speedup needs positive times");
  }
  return baseline_ms / candidate_ms;
}

/// Runs the kernel warmup + reps times and records the wall time of the last
/// `reps` runs. Only compute_ftle_field is inside the timed region.
inline BenchRecord time_computation(const FlowmapField& field, const MeshTopology& mesh,
                                    const ExecutionStrategy& strategy, std::size_t reps, std::size_t warmup) {
  if (reps < 1) throw Error(Errc::invalid_argument, "reps must be >= 1");
  BenchRecord rec;
  rec.label = strategy_label(strategy);
  rec.dim = field.dim;
  rec.npoints = field.npoints;
  rec.strategy = strategy;
  rec.reps = reps;
  rec.input_digest = digest(field);
  rec.times_ms.reserve(reps);

  for (std::size_t i = 0; i < warmup + reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = compute_ftle_field(field, mesh, strategy);
    const auto stop = std::chrono::steady_clock::now();
    if (i >= warmup) rec.times_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    (void)result;
  }
  rec.median_ms = median(rec.times_ms);
  return rec;
}

// ---------------------------------------------------------------------------
// Published reference timings

struct ReferenceConfig {
  int dim;
  std::size_t npoints;
  friend bool operator==(const ReferenceConfig&, const ReferenceConfig&) = default;
};

class ReferenceTable {
 public:
  struct Row {
    std::string label;
    std::array<double, 6> ms;  // same order as configs()
  };

  explicit ReferenceTable(std::vector<Row> rows) : rows_(std::move(rows)) {}

  static constexpr std::array<ReferenceConfig, 6> configs() {
    return {{{2, 200000}, {2, 400000}, {2, 600000}, {3, 200000}, {3, 400000}, {3, 600000}}};
  }

  const std::vector<Row>& rows() const noexcept { return rows_; }

  std::optional<double> lookup(std::string_view label, int dim, std::size_t npoints) const {
    const auto cfgs = configs();
    const auto col = std::find(cfgs.begin(), cfgs.end(), ReferenceConfig{dim, npoints});
    if (col == cfgs.end()) return std::nullopt;
    for (const auto& r : rows_) {
      if (r.label == label) return r.ms[static_cast<std::size_t>(col - cfgs.begin())];
    }
    return std::nullopt;
  }

 private:
  std::vector<Row> rows_;
};

/// Milliseconds for the naive FPGA ports (SYCL/OpenCL, ND-range/single-task)
/// and an OpenMP CPU baseline, columns 2D 200K/400K/600K then 3D.
inline const ReferenceTable& reference_table1() {
  static const ReferenceTable table({
      {"S-NR naïve", {11.1, 22.3, 33.7, 371.7, 803.1, 1364.9}},
      {"O-NR naïve", {10.7, 21.5, 32.5, 359.4, 777.6, 1275.7}},
      {"S-ST naïve", {6635.5, 13316.5, 6281.4, 26892.7, 54207.4, 34863.8}},
      {"O-ST naïve", {2085.7, 4116.1, 20034.4, 9194.2, 18455.6, 92703.2}},
      {"CPU 1 thread", {30.1, 51.1, 75.5, 71.5, 172.6, 240.1}},
      {"CPU 4 threads", {20.7, 32.5, 39.0, 41.3, 64.0, 90.1}},
      {"CPU 8 threads", {17.2, 23.1, 31.6, 33.0, 51.3, 70.6}},
  });
  return table;
}

// ---------------------------------------------------------------------------
// Suite

/// Grid shape used for a requested point count. The six published sizes have
/// fixed shapes; anything else gets the most balanced factorization with every
/// axis >= 3.
inline std::array<std::size_t, 3> grid_shape(int dim, std::size_t npoints) {
  detail::check_dim(dim);
  static const std::map<std::pair<int, std::size_t>, std::array<std::size_t, 3>> fixed{
      {{2, 200000}, {500, 400, 1}}, {{2, 400000}, {800, 500, 1}},  {{2, 600000}, {1000, 600, 1}},
      {{3, 200000}, {80, 50, 50}},  {{3, 400000}, {100, 80, 50}}, {{3, 600000}, {100, 100, 60}},
  };
  if (auto it = fixed.find({dim, npoints}); it != fixed.end()) return it->second;

  std::optional<std::array<std::size_t, 3>> best;
  double best_score = 0.0;
  auto consider = [&](std::array<std::size_t, 3> s) {
    const auto [lo, hi] = std::minmax_element(s.begin(), s.begin() + dim);
    const double score = static_cast<double>(*hi) / static_cast<double>(*lo);
    if (!best || score < best_score) {
      best = s;
      best_score = score;
    }
  };
  for (std::size_t a = 3; a * 3 <= npoints; ++a) {
    if (npoints % a) continue;
    const std::size_t rest = npoints / a;
    if (dim == 2) {
      if (rest >= 3 && a >= rest) consider({a, rest, 1});
      continue;
    }
    for (std::size_t b = 3; b * 3 <= rest && b <= a; ++b) {
      if (rest % b) continue;
      const std::size_t c = rest / b;
      if (c >= 3 && c <= b) consider({a, b, c});
    }
  }
  if (!best) {
    throw Error(Errc::invalid_argument, std::to_string(npoints) + " points cannot be arranged as a " +
                                            std::to_string(dim) + "D grid with >= 3 points per axis");
  }
  return *best;
}

/// Structured grid covering the flow's default domain.
inline MeshTopology bench_mesh(int dim, std::size_t npoints, const FlowSpec& flow) {
  const auto shape = grid_shape(dim, npoints);
  const auto domain = default_domain(flow);
  StructuredGrid g;
  for (int a = 0; a < dim; ++a) {
    g.dims[a] = shape[a];
    g.origin[a] = domain[a][0];
    g.spacing[a] = (domain[a][1] - domain[a][0]) / static_cast<double>(shape[a] - 1);
  }
  return make_structured_grid(g, dim);
}

struct SuiteConfig {
  std::vector<std::size_t> sizes{200000, 400000, 600000};
  std::vector<int> dims{2, 3};
  std::vector<ExecutionStrategy> strategies{DataParallel{default_worker_count(), 4096}, SinglePass{}};
  std::size_t reps = 5;
  std::size_t warmup = 1;
  FlowSpec flow = DoubleGyre{};
  double t0 = 0.0;
  double T = 15.0;
  double dt = 0.1;
  // When set, strategies run in a shuffled order per configuration.
  std::optional<std::uint64_t> shuffle_seed;
};

/// One record per (dim, size, strategy). The flowmap for each (dim, size) is
/// generated once, outside any timed region, and shared by all strategies.
inline std::vector<BenchRecord> run_suite(const SuiteConfig& cfg,
                                          const std::function<void(const BenchRecord&)>& on_record = {}) {
  if (cfg.reps < 1) throw Error(Errc::invalid_argument, "reps must be >= 1");
  for (const auto& s : cfg.strategies) validate_strategy(s);
  for (int d : cfg.dims) {
    detail::check_dim(d);
    validate_flow(cfg.flow, d);
    for (std::size_t n : cfg.sizes) (void)grid_shape(d, n);
  }

  std::vector<BenchRecord> records;
  std::optional<std::mt19937_64> rng;
  if (cfg.shuffle_seed) rng.emplace(*cfg.shuffle_seed);

  for (int d : cfg.dims) {
    for (std::size_t n : cfg.sizes) {
      const auto mesh = bench_mesh(d, n, cfg.flow);
      const auto field = generate_flowmap(mesh, cfg.flow, cfg.t0, cfg.T, cfg.dt);
      std::vector<std::size_t> order(cfg.strategies.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      if (rng) std::shuffle(order.begin(), order.end(), *rng);
      std::vector<BenchRecord> batch(order.size());
      for (std::size_t i : order) {
        batch[i] = time_computation(field, mesh, cfg.strategies[i], cfg.reps, cfg.warmup);
        if (on_record) on_record(batch[i]);
      }
      for (auto& r : batch) records.push_back(std::move(r));
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Bench CSV

inline std::string format_bench_csv(const std::vector<BenchRecord>& records) {
  std::string out = "label,dim,npoints,strategy,workers,chunk,rep,time_ms\n";
  for (const auto& r : records) {
    const auto* dp = std::get_if<DataParallel>(&r.strategy);
    for (std::size_t i = 0; i < r.times_ms.size(); ++i) {
      out += r.label + ',' + std::to_string(r.dim) + ',' + std::to_string(r.npoints) + ',' +
             strategy_name(r.strategy) + ',' + std::to_string(dp ? dp->workers : 1) + ',' +
             std::to_string(dp ? dp->chunk : 0) + ',' + std::to_string(i) + ',' + format_double(r.times_ms[i]) +
             '\n';
    }
  }
  return out;
}

inline std::string format_bench_summary_csv(const std::vector<BenchRecord>& records) {
  std::string out = "label,dim,npoints,strategy,median_ms\n";
  for (const auto& r : records) {
    out += r.label + ',' + std::to_string(r.dim) + ',' + std::to_string(r.npoints) + ',' +
           strategy_name(r.strategy) + ',' + format_double(r.median_ms) + '\n';
  }
  return out;
}

/// bench.csv -> bench.summary.csv
inline std::filesystem::path summary_path(const std::filesystem::path& bench_csv) {
  auto p = bench_csv;
  p.replace_extension(".summary.csv");
  return p;
}

inline void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records) {
  detail::write_text_file(path, format_bench_csv(records));
  detail::write_text_file(summary_path(path), format_bench_summary_csv(records));
}

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    parts.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <class T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(Errc::invalid_header, std::string("cannot parse ") + what + " '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Rebuilds records from per-repetition rows, grouping by (label, dim, npoints).
inline std::vector<BenchRecord> parse_bench_csv(std::string_view text) {
  std::vector<BenchRecord> records;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "label,dim,npoints,strategy,workers,chunk,rep,time_ms") {
    throw Error(Errc::invalid_header, "not a bench CSV (unexpected header)");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 8) throw Error(Errc::invalid_header, "line " + std::to_string(lineno) + ": expected 8 fields");
    const int dim = detail::parse_number<int>(f[1], "dim");
    const auto n = detail::parse_number<std::size_t>(f[2], "npoints");
    ExecutionStrategy strategy;
    if (f[3] == "single-pass") {
      strategy = SinglePass{};
    } else if (f[3] == "data-parallel") {
      strategy = DataParallel{detail::parse_number<std::size_t>(f[4], "workers"),
                              detail::parse_number<std::size_t>(f[5], "chunk")};
    } else {
      throw Error(Errc::invalid_header, "line " + std::to_string(lineno) + ": unknown strategy " + f[3]);
    }
    const double t = detail::parse_number<double>(f[7], "time_ms");
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const BenchRecord& r) { return r.label == f[0] && r.dim == dim && r.npoints == n; });
    if (it == records.end()) {
      BenchRecord r;
      r.label = f[0];
      r.dim = dim;
      r.npoints = n;
      r.strategy = strategy;
      records.push_back(std::move(r));
      it = records.end() - 1;
    }
    it->times_ms.push_back(t);
  }
  for (auto& r : records) {
    r.reps = r.times_ms.size();
    r.median_ms = median(r.times_ms);
  }
  return records;
}

inline std::vector<BenchRecord> read_bench_csv(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_bench_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---------------------------------------------------------------------------
// Report

enum class ReportFormat { markdown, csv };

namespace detail {

inline std::string size_heading(int dim, std::size_t npoints) {
  const std::string n = npoints % 1000 == 0 ? std::to_string(npoints / 1000) + "K" : std::to_string(npoints);
  return std::to_string(dim) + "D " + n;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string table_row(const std::vector<std::string>& cells, ReportFormat fmt) {
  std::string out;
  if (fmt == ReportFormat::markdown) {
    out = "|";
    for (const auto& c : cells) out += " " + c + " |";
  } else {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  }
  return out + "\n";
}

inline std::string table_rule(std::size_t ncols, ReportFormat fmt) {
  if (fmt != ReportFormat::markdown) return "";
  std::string out = "|";
  for (std::size_t i = 0; i < ncols; ++i) out += "---|";
  return out + "\n";
}

}  // namespace detail

/// Median-time table (one row per label, one column per (dim, size)). With a
/// reference table, the published grid and a data-parallel vs single-pass
/// speedup section are appended. Pure function of its inputs.
inline std::string render_report(const std::vector<BenchRecord>& records, const ReferenceTable* reference,
                                 ReportFormat fmt) {
  using detail::table_row;
  using detail::table_rule;
  const bool md = fmt == ReportFormat::markdown;

  std::vector<std::pair<int, std::size_t>> configs;
  std::vector<std::string> labels;
  for (const auto& r : records) {
    if (std::find(configs.begin(), configs.end(), std::pair{r.dim, r.npoints}) == configs.end())
      configs.emplace_back(r.dim, r.npoints);
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
  }
  std::sort(configs.begin(), configs.end());

  auto find = [&](const std::string& label, int dim, std::size_t n) -> const BenchRecord* {
    for (const auto& r : records)
      if (r.label == label && r.dim == dim && r.npoints == n) return &r;
    return nullptr;
  };

  std::string out;
  const bool measured = !records.empty() || reference == nullptr;
  if (measured) {
    if (md) out += "## Measured median times (ms)\n\n";
    std::vector<std::string> head{"Implementation"};
    for (auto [d, n] : configs) head.push_back(detail::size_heading(d, n));
    out += table_row(head, fmt) + table_rule(head.size(), fmt);
    for (const auto& label : labels) {
      std::vector<std::string> row{label};
      for (auto [d, n] : configs) {
        const auto* r = find(label, d, n);
        row.push_back(r ? detail::fixed(r->median_ms, 3) : "-");
      }
      out += table_row(row, fmt);
    }
  }

  if (reference == nullptr) return out;

  if (!out.empty()) out += "\n";
  if (md) out += "## Reference times (ms), naive FPGA ports and OpenMP CPU baseline\n\n";
  {
    std::vector<std::string> head{"Implementation"};
    for (const auto& c : ReferenceTable::configs()) head.push_back(detail::size_heading(c.dim, c.npoints));
    out += table_row(head, fmt) + table_rule(head.size(), fmt);
    for (const auto& row : reference->rows()) {
      std::vector<std::string> cells{row.label};
      for (double v : row.ms) cells.push_back(detail::fixed(v, 1));
      out += table_row(cells, fmt);
    }
  }

  if (records.empty()) return out;

  out += "\n";
  if (md) out += "## Data-parallel speedup over single-pass\n\n";
  std::vector<std::string> head{"Configuration", "single-pass ms", "data-parallel", "data-parallel ms", "speedup",
                                "ordering reproduced", "reference S-ST/S-NR", "reference O-ST/O-NR"};
  out += table_row(head, fmt) + table_rule(head.size(), fmt);

  std::size_t compared = 0;
  std::size_t reproduced = 0;
  auto ratio = [&](const char* st, const char* nr, int d, std::size_t n) -> std::string {
    const auto a = reference->lookup(st, d, n);
    const auto b = reference->lookup(nr, d, n);
    return a && b ? detail::fixed(speedup(*a, *b), 1) : "-";
  };
  for (auto [d, n] : configs) {
    const BenchRecord* sp = nullptr;
    std::vector<const BenchRecord*> dps;
    for (const auto& r : records) {
      if (r.dim != d || r.npoints != n) continue;
      if (std::holds_alternative<SinglePass>(r.strategy)) sp = &r;
      else dps.push_back(&r);
    }
    if (!sp || dps.empty()) continue;
    ++compared;
    const bool all_faster =
        std::all_of(dps.begin(), dps.end(), [&](const BenchRecord* r) { return r->median_ms < sp->median_ms; });
    if (all_faster) ++reproduced;
    for (const auto* dp : dps) {
      out += table_row({detail::size_heading(d, n), detail::fixed(sp->median_ms, 3), dp->label,
                        detail::fixed(dp->median_ms, 3), detail::fixed(speedup(sp->median_ms, dp->median_ms), 2),
                        all_faster ? "yes" : "no", ratio("S-ST naïve", "S-NR naïve", d, n),
                        ratio("O-ST naïve", "O-NR naïve", d, n)},
                       fmt);
    }
  }
  const std::string verdict = "data-parallel faster than single-pass in " + std::to_string(reproduced) + "/" +
                              std::to_string(compared) + " configurations";
  out += md ? "\nOrdering reproduced: " + verdict + "\n" : "\n# ordering reproduced: " + verdict + "\n";
  return out;
}

}  // namespace ftle
