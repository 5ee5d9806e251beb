// Command-line front end: experiment runner, timing suite, DNN training and
// single-instance solves over the key=value config format.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "wpmec/experiment.hpp"

using namespace wpmec;

namespace {

ExperimentSpec load_spec(const std::string& path) {
  auto spec = parse_experiment_spec(parse_key_values_file(path));
  fill_default_grid(spec);
  return spec;
}

std::vector<Method> parse_methods_csv(const std::string& csv) {
  std::vector<Method> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto m = parse_method(tok);
    if (!m) throw CLI::ValidationError("methods", "unknown method " + tok);
    out.push_back(*m);
  }
  return out;
}

int check_rows(const ResultTable& table) {
  double worst = 0.0;
  for (const auto& r : table.rows)
    if (r.status == SolveStatus::kConverged)
      worst = std::max(worst, r.worst_violation);
  if (worst > 1e-8) {
    std::cerr << "invariant failure: re-validated allocation violation "
              << worst << " exceeds 1e-8\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wireless-powered MEC computation-rate experiments"};
  app.require_subcommand(1);

  std::string spec_path, out_path, methods_csv, config_path, model_path;
  std::string dataset_path, plot_path, dump_lp_path, trace_path, channels_path;
  std::uint64_t seed = 1;
  int ex_cap = -1, n_samples = 2000, n_seeds = 3;
  std::string n_list_csv = "5,10,20,30";
  std::string method_one = "NC";

  auto* run_cmd = app.add_subcommand("run", "run an experiment spec file");
  run_cmd->add_option("spec", spec_path, "experiment spec file")->required();
  run_cmd->add_option("--out", out_path, "output CSV path (overrides spec)");
  run_cmd->add_option("--seed", seed, "base seed (overrides spec)");
  run_cmd->add_option("--methods", methods_csv, "comma list, e.g. PI,NC,LC");
  run_cmd->add_option("--ex-cap", ex_cap, "exhaustive-search device cap");
  run_cmd->add_option("--plot", plot_path, "write an SVG line chart here");

  auto* timing_cmd = app.add_subcommand("timing", "decision-time comparison");
  timing_cmd->add_option("--config", config_path, "instance config file");
  timing_cmd->add_option("--n-list", n_list_csv, "device counts");
  timing_cmd->add_option("--methods", methods_csv, "methods to time");
  timing_cmd->add_option("--seeds", n_seeds, "seeds per N");
  timing_cmd->add_option("--seed", seed, "base seed");
  timing_cmd->add_option("--out", out_path, "output CSV path");

  auto* train_cmd = app.add_subcommand("train-dnn", "train the m predictor");
  train_cmd->add_option("--config", config_path, "instance config file");
  train_cmd->add_option("--samples", n_samples, "dataset size");
  train_cmd->add_option("--seed", seed, "dataset/training seed");
  train_cmd->add_option("--out", model_path, "model output path")->required();
  train_cmd->add_option("--dataset", dataset_path, "also dump the dataset CSV");

  auto* solve_cmd = app.add_subcommand("solve-one", "solve one instance");
  solve_cmd->add_option("--config", config_path, "instance config file");
  solve_cmd->add_option("--seed", seed, "instance seed");
  solve_cmd->add_option("--method", method_one, "EX|PI|NC|LC|SC");
  solve_cmd->add_option("--ex-cap", ex_cap, "exhaustive-search device cap");
  solve_cmd->add_option("--dump-lp", dump_lp_path, "write the built (c,A,b)");
  solve_cmd->add_option("--trace", trace_path, "per-iteration solver trace CSV");
  solve_cmd->add_option("--channels", channels_path, "channel realization CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ExperimentSpec spec = load_spec(spec_path);
      if (!out_path.empty()) spec.out_path = out_path;
      if (run_cmd->count("--seed")) spec.base_seed = seed;
      if (!methods_csv.empty()) spec.methods = parse_methods_csv(methods_csv);
      if (ex_cap >= 0) spec.ex_cap = ex_cap;
      ResultTable table = run(spec);
      if (spec.out_path.empty()) {
        write_csv(table, std::cout);
      } else {
        write_csv_file(table, spec.out_path);
        std::cout << "wrote " << table.rows.size() << " rows to "
                  << spec.out_path << "\n";
      }
      if (!plot_path.empty()) {
        std::ofstream svg(plot_path, std::ios::binary);
        emit_plot(table, to_string(spec.id), svg);
      }
      return check_rows(table);
    }

    if (*timing_cmd) {
      ExperimentSpec spec;
      if (!config_path.empty())
        spec = parse_experiment_spec(parse_key_values_file(config_path));
      spec.base_seed = seed;
      std::vector<Method> methods = methods_csv.empty()
                                        ? std::vector<Method>{Method::kPi, Method::kDl, Method::kNc}
                                        : parse_methods_csv(methods_csv);
      std::vector<int> n_list;
      std::stringstream ss(n_list_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) n_list.push_back(std::stoi(tok));
      auto rows = timing_suite(n_list, methods, n_seeds, spec);
      if (out_path.empty()) {
        write_timing_csv(rows, std::cout);
      } else {
        std::ofstream out(out_path, std::ios::binary);
        write_timing_csv(rows, out);
      }
      return 0;
    }

    if (*train_cmd) {
      InstanceConfig cfg;
      if (!config_path.empty())
        apply_instance_config(parse_key_values_file(config_path), cfg);
      Dataset data = generate_dataset(cfg, n_samples, seed);
      if (data.empty()) {
        std::cerr << "no feasible frames sampled; check the config\n";
        return 2;
      }
      if (!dataset_path.empty()) save_dataset_csv(data, dataset_path);
      TrainedPredictor pred = train(data, {}, seed);
      save_predictor(pred, model_path);
      std::cout << "trained on " << data.size() << " samples, best val loss "
                << pred.best_validation_loss << ", saved to " << model_path
                << "\n";
      return 0;
    }

    if (*solve_cmd) {
      InstanceConfig cfg;
      if (!config_path.empty())
        apply_instance_config(parse_key_values_file(config_path), cfg);
      auto inst = make_instance(cfg, seed);
      if (!channels_path.empty()) {
        std::ofstream out(channels_path, std::ios::binary);
        write_channels_csv(inst, out);
      }
      auto method = parse_method(method_one);
      if (!method) {
        std::cerr << "unknown method " << method_one << "\n";
        return 2;
      }
      SolverOptions opt;
      opt.record_trace = !trace_path.empty();
      StrategyResult sr;
      switch (*method) {
        case Method::kPi: sr = priority_iterative(inst, opt); break;
        case Method::kNc: sr = baseline_nc(inst, opt); break;
        case Method::kLc: sr = baseline_lc(inst); break;
        case Method::kSc: sr = baseline_sc(inst, seed, opt); break;
        case Method::kEx: {
          ExhaustiveOptions ex;
          if (ex_cap >= 0) ex.cap = ex_cap;
          ex.threads = 0;
          sr = exhaustive(inst, opt, ex);
          break;
        }
        case Method::kDl:
          std::cerr << "solve-one does not load DNN models; use PI or NC\n";
          return 2;
      }
      if (!dump_lp_path.empty())
        dump_matrix_file(build(inst, sr.strategy), dump_lp_path);
      if (!trace_path.empty()) {
        // re-solve the chosen strategy with tracing on
        StandardFormLp lp = build(inst, sr.strategy);
        auto hint = interior_hint(inst, sr.strategy, lp);
        SolveResult traced = solve(lp, opt, hint);
        std::ofstream out(trace_path, std::ios::binary);
        out << "iter,mu,residual,beta,objective\n";
        for (const auto& t : traced.trace)
          out << t.iter << ',' << format_double(t.mu) << ','
              << format_double(t.residual) << ',' << format_double(t.beta)
              << ',' << format_double(t.objective) << '\n';
      }
      std::cout << "method " << to_string(*method) << " status "
                << to_string(sr.status) << " m " << sr.strategy.clusters()
                << " wscr " << format_double(sr.wscr) << " bits/frame ("
                << format_double(sr.wscr / inst.hap().frame_length)
                << " bits/s), " << sr.stats.iterations << " iterations, "
                << sr.lp_solves << " LP solves\n";
      if (sr.feasible()) {
        auto rep = validate(inst, sr.strategy, sr.allocation);
        std::cout << "validate: worst relative violation "
                  << format_double(rep.worst_relative) << "\n";
        if (rep.worst_relative > 1e-8) return 2;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
