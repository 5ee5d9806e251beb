#pragma once

#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wpmec/dnn_predictor.hpp"
#include "wpmec/instance_gen.hpp"
#include "wpmec/strategy_search.hpp"

namespace wpmec {

enum class ExperimentId {
  kFig6WscrVsDistance,
  kFig7WscrVsIteration,
  kFig8RuntimeVsN,
  kFig9WscrVsN,
  kFig10WscrVsFhap,
  kFig11WscrVsDe,
  kFig12MstarVsParams,
};

inline const char* to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::kFig6WscrVsDistance: return "fig6_wscr_vs_distance";
    case ExperimentId::kFig7WscrVsIteration: return "fig7_wscr_vs_iteration";
    case ExperimentId::kFig8RuntimeVsN: return "fig8_runtime_vs_N";
    case ExperimentId::kFig9WscrVsN: return "fig9_wscr_vs_N";
    case ExperimentId::kFig10WscrVsFhap: return "fig10_wscr_vs_fhap";
    case ExperimentId::kFig11WscrVsDe: return "fig11_wscr_vs_de";
    case ExperimentId::kFig12MstarVsParams: return "fig12_mstar_vs_params";
  }
  return "?";
}

inline std::optional<ExperimentId> parse_experiment(const std::string& s) {
  for (auto id : {ExperimentId::kFig6WscrVsDistance, ExperimentId::kFig7WscrVsIteration,
                  ExperimentId::kFig8RuntimeVsN, ExperimentId::kFig9WscrVsN,
                  ExperimentId::kFig10WscrVsFhap, ExperimentId::kFig11WscrVsDe,
                  ExperimentId::kFig12MstarVsParams})
    if (s == to_string(id)) return id;
  return std::nullopt;
}

struct ExperimentSpec {
  ExperimentId id = ExperimentId::kFig6WscrVsDistance;
  std::vector<double> grid;          // primary sweep values
  std::vector<double> grid2;         // secondary sweep (fig6: l_th; fig12: f_hap)
  std::vector<Method> methods = {Method::kPi, Method::kNc, Method::kLc};
  int n_seeds = 50;
  std::uint64_t base_seed = 1;
  InstanceConfig base;
  SolverOptions solver;
  int ex_cap = 8;
  int row_threads = 0;               // 0 = hardware concurrency
  int dl_train_samples = 64;         // fig8 trains per-N helper models
  std::string out_path;

  void check() const {
    if (grid.empty()) throw std::invalid_argument("experiment: empty grid");
    if (n_seeds < 1) throw std::invalid_argument("experiment: n_seeds < 1");
    // EX rows above ex_cap are skipped per-cell (the N sweep may pass it).
  }
};

struct ResultRow {
  std::string sweep_param;
  double sweep_value = 0.0;
  double sweep2_value = 0.0;
  int seed = 0;
  Method method = Method::kNc;
  SolveStatus status = SolveStatus::kNumericalFailure;
  double wscr = 0.0;         // 0 when the row is infeasible
  int m = 0;
  double solve_ms = 0.0;
  double worst_violation = 0.0;  // relative, from re-validating the allocation
  long lp_solves = 0;
};

struct ResultTable {
  ExperimentId id = ExperimentId::kFig6WscrVsDistance;
  std::vector<ResultRow> rows;
};

// Timing (solve_ms) is only emitted for the runtime experiment: wall-clock
// jitter would break the byte-determinism contract of the science CSVs.
inline void write_csv(const ResultTable& table, std::ostream& out) {
  bool timing = table.id == ExperimentId::kFig8RuntimeVsN;
  out << "# wpmec results v1 experiment=" << to_string(table.id) << "\n";
  out << "sweep_param,sweep_value,sweep2_value,seed,method,status,wscr,m,"
      << (timing ? "decision_ms," : "") << "worst_violation,lp_solves\n";
  for (const auto& r : table.rows) {
    out << r.sweep_param << ',' << format_double(r.sweep_value) << ','
        << format_double(r.sweep2_value) << ',' << r.seed << ','
        << to_string(r.method) << ',' << to_string(r.status) << ','
        << format_double(r.wscr) << ',' << r.m << ',';
    if (timing) out << format_double(r.solve_ms) << ',';
    out << format_double(r.worst_violation) << ',' << r.lp_solves << '\n';
  }
}

inline void write_csv_file(const ResultTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_csv(table, out);
}

namespace detail {

inline void apply_sweep(ExperimentId id, double v1, double v2,
                        InstanceConfig& cfg) {
  switch (id) {
    case ExperimentId::kFig6WscrVsDistance:
      cfg.mean_distance = v1;
      cfg.min_data_bits = v2;
      break;
    case ExperimentId::kFig9WscrVsN:
    case ExperimentId::kFig8RuntimeVsN:
      cfg.n_devices = static_cast<int>(v1);
      break;
    case ExperimentId::kFig10WscrVsFhap:
      cfg.hap.cpu_speed = v1;
      break;
    case ExperimentId::kFig11WscrVsDe:
      cfg.hap.path_loss_exp = v1;
      break;
    case ExperimentId::kFig12MstarVsParams:
    case ExperimentId::kFig7WscrVsIteration:
      break;
  }
}

inline ResultRow evaluate_method(const ExperimentSpec& spec,
                                 const NetworkInstance& inst, Method method,
                                 std::uint64_t instance_seed) {
  StrategyResult sr;
  switch (method) {
    case Method::kEx: {
      ExhaustiveOptions ex;
      ex.cap = spec.ex_cap;
      ex.threads = 1;
      sr = exhaustive(inst, spec.solver, ex);
      break;
    }
    case Method::kPi:
      sr = priority_iterative(inst, spec.solver);
      break;
    case Method::kNc:
      sr = baseline_nc(inst, spec.solver);
      break;
    case Method::kLc:
      sr = baseline_lc(inst);
      break;
    case Method::kSc:
      sr = baseline_sc(inst, instance_seed, spec.solver);
      break;
    case Method::kDl:
      throw std::invalid_argument("DL rows need a trained model; use timing or dl_solve directly");
  }
  ResultRow row;
  row.method = method;
  row.status = sr.status;
  row.wscr = sr.feasible() ? sr.wscr : 0.0;
  row.m = sr.strategy.clusters();
  row.solve_ms = sr.stats.wall_ms;
  row.lp_solves = sr.lp_solves;
  if (sr.feasible())
    row.worst_violation = validate(inst, sr.strategy, sr.allocation).worst_relative;
  return row;
}

}  // namespace detail

struct TimingRow {
  int n_devices = 0;
  int seed = 0;
  Method method = Method::kPi;
  double decision_ms = 0.0;
  double wscr = 0.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  long lp_solves = 0;
};

// Wall-clock decision time per method over N. DL helper models are trained
// on small deterministic datasets first (training time excluded, as the
// deployed model is pre-trained).
inline std::vector<TimingRow> timing_suite(const std::vector<int>& n_list,
                                           const std::vector<Method>& methods,
                                           int n_seeds,
                                           const ExperimentSpec& spec) {
  std::vector<TimingRow> rows;
  for (int n : n_list) {
    InstanceConfig cfg = spec.base;
    cfg.n_devices = n;
    std::optional<TrainedPredictor> predictor;
    bool wants_dl = false;
    for (Method m : methods) wants_dl |= (m == Method::kDl);
    if (wants_dl) {
      Dataset data = generate_dataset(cfg, spec.dl_train_samples,
                                      spec.base_seed ^ 0xD1D1, spec.solver,
                                      spec.row_threads);
      TrainOptions topt;
      topt.epochs = 60;
      if (!data.empty()) predictor = train(data, topt, spec.base_seed);
    }
    for (int s = 0; s < n_seeds; ++s) {
      auto inst = make_instance(cfg, spec.base_seed + 7777 + s);
      for (Method method : methods) {
        if (method == Method::kEx && n > spec.ex_cap) continue;  // guard
        TimingRow row;
        row.n_devices = n;
        row.seed = s;
        row.method = method;
        auto t0 = std::chrono::steady_clock::now();
        StrategyResult sr;
        switch (method) {
          case Method::kPi: sr = priority_iterative(inst, spec.solver); break;
          case Method::kNc: sr = baseline_nc(inst, spec.solver); break;
          case Method::kLc: sr = baseline_lc(inst); break;
          case Method::kSc: sr = baseline_sc(inst, spec.base_seed + s, spec.solver); break;
          case Method::kDl:
            if (!predictor) continue;
            sr = dl_solve(inst, *predictor, spec.solver);
            break;
          case Method::kEx: {
            ExhaustiveOptions ex;
            ex.cap = spec.ex_cap;
            sr = exhaustive(inst, spec.solver, ex);
            break;
          }
        }
        row.decision_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
        row.wscr = sr.feasible() ? sr.wscr : 0.0;
        row.status = sr.status;
        row.lp_solves = sr.lp_solves;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

inline void write_timing_csv(const std::vector<TimingRow>& rows,
                             std::ostream& out) {
  out << "# wpmec timing v1\n";
  out << "n_devices,seed,method,decision_ms,wscr,status,lp_solves\n";
  for (const auto& r : rows) {
    out << r.n_devices << ',' << r.seed << ',' << to_string(r.method) << ','
        << format_double(r.decision_ms) << ',' << format_double(r.wscr) << ','
        << to_string(r.status) << ',' << r.lp_solves << '\n';
  }
}

// Runs the experiment grid: every (grid point x seed x method) row carries
// the realized WSCR, chosen m, decision time, and the re-validation result.
// Device draws per seed never depend on the swept values (common random
// numbers), so per-seed monotonicity in nested sweeps is structural.
inline ResultTable run(const ExperimentSpec& spec) {
  spec.check();
  ResultTable table;
  table.id = spec.id;

  if (spec.id == ExperimentId::kFig7WscrVsIteration) {
    // one row per (seed, m): the per-m WSCR sequence of the priority search
    std::vector<std::vector<ResultRow>> per_seed(spec.n_seeds);
    parallel_for(
        spec.n_seeds,
        [&](int s) {
          auto inst = make_instance(spec.base, spec.base_seed + s);
          std::vector<double> per_m;
          auto pi = priority_iterative(inst, spec.solver, &per_m);
          for (std::size_t m = 0; m < per_m.size(); ++m) {
            ResultRow row;
            row.sweep_param = "m";
            row.sweep_value = static_cast<double>(m);
            row.seed = s;
            row.method = Method::kPi;
            bool ok = std::isfinite(per_m[m]);
            row.status = ok ? SolveStatus::kConverged
                            : SolveStatus::kInfeasibleOrStalled;
            row.wscr = ok ? per_m[m] : 0.0;
            row.m = static_cast<int>(m);
            row.lp_solves = 1;
            per_seed[s].push_back(row);
          }
          (void)pi;
        },
        spec.row_threads);
    for (auto& v : per_seed)
      table.rows.insert(table.rows.end(), v.begin(), v.end());
    return table;
  }

  if (spec.id == ExperimentId::kFig8RuntimeVsN) {
    std::vector<int> n_list;
    for (double v : spec.grid) n_list.push_back(static_cast<int>(v));
    for (const auto& t : timing_suite(n_list, spec.methods, spec.n_seeds, spec)) {
      ResultRow row;
      row.sweep_param = "n_devices";
      row.sweep_value = t.n_devices;
      row.seed = t.seed;
      row.method = t.method;
      row.status = t.status;
      row.wscr = t.wscr;
      row.solve_ms = t.decision_ms;
      row.lp_solves = t.lp_solves;
      table.rows.push_back(row);
    }
    return table;
  }

  struct Cell {
    std::string param;
    double v1, v2;
    int seed;
  };
  std::vector<Cell> cells;
  if (spec.id == ExperimentId::kFig12MstarVsParams) {
    // two sub-sweeps: eta over grid (f_hap from the base config), then
    // hap_cpu_speed over grid2 (eta from the base config)
    for (double v : spec.grid)
      for (int s = 0; s < spec.n_seeds; ++s) cells.push_back({"eta", v, 0.0, s});
    for (double v : spec.grid2)
      for (int s = 0; s < spec.n_seeds; ++s)
        cells.push_back({"hap_cpu_speed", v, 0.0, s});
  } else {
    const char* param = "";
    switch (spec.id) {
      case ExperimentId::kFig6WscrVsDistance: param = "mean_distance"; break;
      case ExperimentId::kFig8RuntimeVsN:
      case ExperimentId::kFig9WscrVsN: param = "n_devices"; break;
      case ExperimentId::kFig10WscrVsFhap: param = "hap_cpu_speed"; break;
      case ExperimentId::kFig11WscrVsDe: param = "path_loss_exp"; break;
      default: break;
    }
    std::vector<double> grid2 = spec.grid2.empty() ? std::vector<double>{0.0}
                                                   : spec.grid2;
    for (double v1 : spec.grid)
      for (double v2 : grid2)
        for (int s = 0; s < spec.n_seeds; ++s)
          cells.push_back({param, v1, v2, s});
  }

  std::vector<std::vector<ResultRow>> results(cells.size());
  parallel_for(
      static_cast<int>(cells.size()),
      [&](int i) {
        const Cell& cell = cells[i];
        InstanceConfig cfg = spec.base;
        if (spec.id == ExperimentId::kFig12MstarVsParams) {
          if (cell.param == "eta")
            cfg.hap.eh_efficiency = cell.v1;
          else
            cfg.hap.cpu_speed = cell.v1;
        } else {
          detail::apply_sweep(spec.id, cell.v1, cell.v2, cfg);
        }
        std::uint64_t instance_seed = spec.base_seed + cell.seed;
        auto inst = make_instance(cfg, instance_seed);
        for (Method method : spec.methods) {
          if (method == Method::kEx && inst.size() > spec.ex_cap) continue;
          ResultRow row =
              detail::evaluate_method(spec, inst, method, instance_seed);
          row.sweep_param = cell.param;
          row.sweep_value = cell.v1;
          row.sweep2_value = cell.v2;
          row.seed = cell.seed;
          results[i].push_back(row);
        }
      },
      spec.row_threads);
  for (auto& v : results)
    table.rows.insert(table.rows.end(), v.begin(), v.end());
  return table;
}

using SeriesKey = std::tuple<std::string, double, double, Method>;

// Mean WSCR per (sweep_param, sweep_value, sweep2_value, method); infeasible
// rows count as 0 (the frame misses its service requirement).
inline std::map<SeriesKey, double> mean_wscr(const ResultTable& table) {
  std::map<SeriesKey, std::pair<double, int>> acc;
  for (const auto& r : table.rows) {
    auto& slot = acc[{r.sweep_param, r.sweep_value, r.sweep2_value, r.method}];
    slot.first += r.wscr;
    slot.second += 1;
  }
  std::map<SeriesKey, double> out;
  for (auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

// Mean chosen m per series, feasible rows only (m* is undefined otherwise).
inline std::map<SeriesKey, double> mean_m(const ResultTable& table) {
  std::map<SeriesKey, std::pair<double, int>> acc;
  for (const auto& r : table.rows) {
    if (r.status != SolveStatus::kConverged) continue;
    auto& slot = acc[{r.sweep_param, r.sweep_value, r.sweep2_value, r.method}];
    slot.first += r.m;
    slot.second += 1;
  }
  std::map<SeriesKey, double> out;
  for (auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

// One polyline per method over the sweep values; the CSV is the contract,
// this is a quick-look artifact with deterministic bytes.
inline void emit_plot(const ResultTable& table, const std::string& title,
                      std::ostream& out) {
  if (table.rows.empty()) throw std::invalid_argument("emit_plot: empty table");
  auto means = mean_wscr(table);
  std::map<Method, std::map<double, std::pair<double, int>>> series;
  for (const auto& [key, value] : means) {
    auto& [param, v1, v2, method] = key;
    auto& slot = series[method][v1];
    slot.first += value;
    slot.second += 1;
  }
  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  for (auto& [method, pts] : series)
    for (auto& [x, acc] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymax = std::max(ymax, acc.first / acc.second);
    }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= 0.0) ymax = 1.0;
  const double W = 640, H = 420, L = 70, B = 40;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - 20); };
  auto py = [&](double y) { return H - B - y / ymax * (H - B - 30); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"16\" text-anchor=\"middle\">" << title
      << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - 20
      << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << L
      << "\" y2=\"20\" stroke=\"black\"/>\n";
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};
  int ci = 0;
  for (auto& [method, pts] : series) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[ci % 6]
        << "\" stroke-width=\"2\" points=\"";
    for (auto& [x, acc] : pts)
      out << format_double(px(x)) << ',' << format_double(py(acc.first / acc.second)) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << W - 90 << "\" y=\"" << 30 + 16 * ci << "\" fill=\""
        << colors[ci % 6] << "\">" << to_string(method) << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

// ---- experiment spec file ----

inline ExperimentSpec parse_experiment_spec(const KeyValues& kv) {
  ExperimentSpec spec;
  apply_instance_config(kv, spec.base);
  auto it = kv.find("experiment");
  if (it != kv.end()) {
    auto id = parse_experiment(it->second);
    if (!id) throw std::invalid_argument("unknown experiment " + it->second);
    spec.id = *id;
  }
  auto grid_of = [&](const char* key) {
    std::vector<double> out;
    auto g = kv.find(key);
    if (g == kv.end()) return out;
    std::stringstream ss(g->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
  };
  spec.grid = grid_of("grid");
  spec.grid2 = grid_of("grid2");
  it = kv.find("methods");
  if (it != kv.end()) {
    spec.methods.clear();
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      auto m = parse_method(tok);
      if (!m) throw std::invalid_argument("unknown method " + tok);
      spec.methods.push_back(*m);
    }
  }
  it = kv.find("n_seeds");
  if (it != kv.end()) spec.n_seeds = std::stoi(it->second);
  it = kv.find("base_seed");
  if (it != kv.end()) spec.base_seed = std::stoull(it->second);
  it = kv.find("ex_cap");
  if (it != kv.end()) spec.ex_cap = std::stoi(it->second);
  it = kv.find("row_threads");
  if (it != kv.end()) spec.row_threads = std::stoi(it->second);
  it = kv.find("dl_train_samples");
  if (it != kv.end()) spec.dl_train_samples = std::stoi(it->second);
  it = kv.find("out");
  if (it != kv.end()) spec.out_path = it->second;
  it = kv.find("solver_tol");
  if (it != kv.end()) spec.solver.tol = std::stod(it->second);
  it = kv.find("solver_decay");
  if (it != kv.end()) spec.solver.decay = std::stod(it->second);
  it = kv.find("solver_max_iters");
  if (it != kv.end()) spec.solver.max_iters = std::stoi(it->second);
  it = kv.find("solver_mu_rule");
  if (it != kv.end())
    spec.solver.mu_rule = (it->second == "scheduled")
                              ? SolverOptions::MuRule::kScheduled
                              : SolverOptions::MuRule::kAdaptive;
  return spec;
}

// Default grids per experiment, used when the spec file leaves grid empty.
inline void fill_default_grid(ExperimentSpec& spec) {
  if (!spec.grid.empty()) return;
  switch (spec.id) {
    case ExperimentId::kFig6WscrVsDistance:
      spec.grid = {3, 4, 5, 6, 7, 8};
      if (spec.grid2.empty()) spec.grid2 = {4000, 8000};
      break;
    case ExperimentId::kFig7WscrVsIteration:
      spec.grid = {0};
      break;
    case ExperimentId::kFig8RuntimeVsN:
      spec.grid = {5, 10, 20, 30};
      break;
    case ExperimentId::kFig9WscrVsN:
      spec.grid = {4, 6, 8};
      break;
    case ExperimentId::kFig10WscrVsFhap:
      spec.grid = {0.5e9, 1e9, 2e9, 4e9};
      break;
    case ExperimentId::kFig11WscrVsDe:
      spec.grid = {2.4, 2.6, 2.8, 3.0};
      break;
    case ExperimentId::kFig12MstarVsParams:
      spec.grid = {0.3, 0.51, 0.7};        // eta sweep (sweep2_value = 0)
      if (spec.grid2.empty()) spec.grid2 = {0.0};
      break;
  }
}

}  // namespace wpmec
