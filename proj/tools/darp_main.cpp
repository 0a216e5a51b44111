// Command-line harness: scenario generation, flow-model fitting, training,
// evaluation, and method comparison. Exit codes: 0 ok, 1 usage, 2 runtime.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "darp/bench.hpp"
#include "darp/svg_chart.hpp"

namespace fs = std::filesystem;
using namespace darp;

namespace {

std::string output_dir() {
  const char* dir = std::getenv("DARP_OUT_DIR");
  return dir != nullptr && *dir != '\0' ? dir : ".";
}

std::string in_output_dir(const std::string& name) {
  return (fs::path(output_dir()) / name).string();
}

GridCoord parse_coord(const std::string& text) {
  int x = 0, y = 0;
  char sep = 0;
  std::istringstream in(text);
  if (!(in >> x >> sep >> y) || sep != ',' || !in.eof()) {
    throw CLI::ValidationError("expected a coordinate like 3,4");
  }
  return {x, y};
}

int cmd_gen_scenario(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "gen-scenario", "Write a scenario document with benchmark defaults");
  auto opts = std::make_shared<ScenarioDocument>();
  auto out_path = std::make_shared<std::string>();
  auto congested_count = std::make_shared<int>(0);
  auto congested_list = std::make_shared<std::vector<int>>();
  auto shaping = std::make_shared<std::string>("toward_positive");
  auto replay = std::make_shared<std::string>("prioritized");
  auto origin = std::make_shared<std::string>("0,0");
  auto dest = std::make_shared<std::string>();

  cmd->add_option("-o,--out", *out_path, "Output path (default scenario.json)");
  cmd->add_option("--seed", opts->seed, "Master scenario seed");
  cmd->add_option("--width-cells", opts->width_cells, "Grid width in cells");
  cmd->add_option("--height-cells", opts->height_cells, "Grid height in cells");
  cmd->add_option("--dist-min", opts->dist_range.first, "Min segment length, m");
  cmd->add_option("--dist-max", opts->dist_range.second, "Max segment length, m");
  cmd->add_option("--flow-min", opts->flows.base_flow_range.first,
                  "Min initial flow");
  cmd->add_option("--flow-max", opts->flows.base_flow_range.second,
                  "Max initial flow");
  cmd->add_option("--congested-nodes", *congested_count,
                  "Number of congested nodes to draw");
  cmd->add_option("--congested-node-list", *congested_list,
                  "Explicit congested node ids");
  cmd->add_option("--congested-mean", opts->flows.congested_mean,
                  "Congested flow mean");
  cmd->add_option("--congested-var", opts->flows.congested_var,
                  "Congested flow variance");
  cmd->add_flag("--var-is-std", opts->flows.var_is_std,
                "Treat --congested-var as a standard deviation");
  cmd->add_option("--ar-lambda", opts->flows.arima.ar_coeffs[0],
                  "AR(1) coefficient");
  cmd->add_option("--diff-order", opts->flows.arima.diff_order,
                  "Differencing order");
  cmd->add_option("--noise-var", opts->flows.arima.noise_var,
                  "Flow noise variance");
  cmd->add_option("--drift", opts->flows.arima.mean_drift,
                  "Differenced-process drift");
  cmd->add_option("--origin", *origin, "Origin node as x,y");
  cmd->add_option("--destination", *dest,
                  "Destination node as x,y (default far corner)");
  cmd->add_option("--w-r", opts->reward.w_r, "Shaping weight");
  cmd->add_option("--goal-bonus", opts->reward.goal_bonus, "Arrival bonus");
  cmd->add_option("--shaping", *shaping,
                  "toward_positive or paper_literal shaping sign")
      ->check(CLI::IsMember({"toward_positive", "paper_literal"}));
  cmd->add_option("--time-unit", opts->reward.time_unit,
                  "Seconds per reward unit");
  cmd->add_option("--gamma", opts->agent.gamma, "Discount factor");
  cmd->add_option("--epsilon", opts->agent.epsilon, "Exploration rate");
  cmd->add_option("--batch", opts->agent.batch_size, "Minibatch size");
  cmd->add_option("--capacity", opts->agent.buffer_capacity,
                  "Replay buffer capacity");
  cmd->add_option("--eta", opts->agent.learning_rate, "RMSProp learning rate");
  cmd->add_option("--sync-k", opts->agent.target_sync_period,
                  "Target network sync period, steps");
  cmd->add_option("--episodes", opts->agent.episodes, "Training episodes");
  cmd->add_option("--t-max", opts->agent.t_max, "Episode step budget");
  cmd->add_option("--replay", *replay, "uniform or prioritized replay")
      ->check(CLI::IsMember({"uniform", "prioritized"}));
  cmd->add_option("--hidden", opts->agent.hidden_dim, "Hidden layer width");
  cmd->add_option("--eval-every", opts->agent.eval_every,
                  "Episodes between greedy checkpoints (0 off)");
  cmd->add_option("--eval-runs", opts->agent.eval_runs,
                  "Rollouts per greedy checkpoint");
  cmd->add_option("--runs", opts->eval_runs, "Evaluation runs for compare");
  cmd->add_option("--eval-t-max", opts->eval_t_max,
                  "Evaluation episode step budget");

  cmd->callback([=]() {
    ScenarioDocument doc = *opts;
    doc.reward.sign = *shaping == "paper_literal"
                          ? RewardConfig::ShapingSign::paper_literal
                          : RewardConfig::ShapingSign::toward_positive;
    doc.agent.replay =
        *replay == "uniform" ? ReplayMode::uniform : ReplayMode::prioritized;
    doc.origin = parse_coord(*origin);
    doc.destination = dest->empty()
                          ? GridCoord{doc.width_cells, doc.height_cells}
                          : parse_coord(*dest);
    if (!congested_list->empty()) {
      doc.flows.congested_nodes = *congested_list;
    } else if (*congested_count > 0) {
      const int n = (doc.width_cells + 1) * (doc.height_cells + 1);
      doc.flows.congested_nodes =
          pick_congested_nodes(*congested_count, n, doc.seed);
    }
    doc.validate();
    const std::string path =
        out_path->empty() ? in_output_dir("scenario.json") : *out_path;
    doc.save(path);
    std::cout << "wrote " << path << " (" << doc.width_cells << "x"
              << doc.height_cells << " cells, "
              << doc.flows.congested_nodes.size() << " congested nodes)\n";
  });
  return 0;
}

int cmd_fit_flow(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "fit-flow", "Fit the AR(1) flow model to a CSV count series");
  auto csv_path = std::make_shared<std::string>();
  auto diff_order = std::make_shared<int>(1);
  auto scenario_path = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  cmd->add_option("--csv", *csv_path, "Input series, one count per row")
      ->required();
  cmd->add_option("-d,--diff-order", *diff_order, "Differencing order");
  cmd->add_option("-s,--scenario", *scenario_path,
                  "Scenario document to update");
  cmd->add_option("-o,--out", *out_path,
                  "Where to write the updated scenario (default: in place)");

  cmd->callback([=]() {
    std::ifstream in(*csv_path);
    if (!in) {
      throw std::runtime_error("cannot open " + *csv_path);
    }
    const std::vector<double> series = read_flow_csv(in);
    ArFitStats stats;
    const ArimaParams fitted = fit_ar(series, *diff_order, &stats);
    std::cout << "series length " << series.size() << ", diff order "
              << *diff_order << "\n";
    std::cout << "lambda_1  = " << fitted.ar_coeffs[0] << " (se "
              << stats.lambda_se << ")\n";
    std::cout << "drift c   = " << fitted.mean_drift << "\n";
    std::cout << "noise var = " << fitted.noise_var << "\n";
    if (!fitted.stationary()) {
      std::cout << "warning: |lambda_1| >= 1, differenced process is not "
                   "stationary\n";
    }
    if (!scenario_path->empty()) {
      ScenarioDocument doc = ScenarioDocument::load(*scenario_path);
      doc.flows.arima = fitted;
      const std::string path = out_path->empty() ? *scenario_path : *out_path;
      doc.save(path);
      std::cout << "updated " << path << "\n";
    }
  });
  return 0;
}

void write_training_outputs(const std::string& dir, const TrainResult& result,
                            bool svg) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "checkpoint.bin", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write checkpoint in " + dir);
    }
    save_checkpoint(out, result.net);
  }
  {
    std::ofstream out(fs::path(dir) / "metrics.csv", std::ios::binary);
    write_metrics_csv(out, result.episodes);
  }
  {
    std::ofstream out(fs::path(dir) / "eval_curve.csv", std::ios::binary);
    write_eval_curve_csv(out, result.eval_curve);
  }
  if (svg) {
    ChartSeries reward{"episode reward", {}};
    for (const EpisodeMetrics& m : result.episodes) {
      reward.points.emplace_back(m.episode, m.cumulative_reward);
    }
    ChartSeries eval{"greedy eval seconds", {}};
    for (const EvalPoint& p : result.eval_curve) {
      eval.points.emplace_back(p.episode, p.mean_seconds);
    }
    std::ofstream r(fs::path(dir) / "reward_curve.svg", std::ios::binary);
    write_line_chart(r, "Training reward", "episode", "cumulative reward",
                     {reward});
    std::ofstream e(fs::path(dir) / "eval_curve.svg", std::ios::binary);
    write_line_chart(e, "Greedy evaluation", "episode", "mean seconds",
                     {eval});
  }
}

int cmd_train(CLI::App& app) {
  auto* cmd =
      app.add_subcommand("train", "Train the route planner on a scenario");
  auto scenario_path = std::make_shared<std::string>();
  auto seed = std::make_shared<std::uint64_t>(1);
  auto out_dir = std::make_shared<std::string>();
  auto svg = std::make_shared<bool>(false);
  cmd->add_option("-s,--scenario", *scenario_path, "Scenario document")
      ->required();
  cmd->add_option("--seed", *seed, "Training run seed");
  cmd->add_option("-o,--out-dir", *out_dir,
                  "Output directory (default $DARP_OUT_DIR or .)");
  cmd->add_flag("--svg", *svg, "Also write svg charts");

  cmd->callback([=]() {
    const ScenarioDocument doc = ScenarioDocument::load(*scenario_path);
    const RoadNetwork road = doc.build_network();
    const TrainResult result =
        train(doc.make_train_factory(road), doc.agent, *seed);

    const std::string dir = out_dir->empty() ? output_dir() : *out_dir;
    write_training_outputs(dir, result, *svg);

    int reached = 0;
    for (const EpisodeMetrics& m : result.episodes) {
      reached += m.reached ? 1 : 0;
    }
    std::cout << "trained " << result.episodes.size() << " episodes ("
              << reached << " reached the destination)\n";
    if (!result.eval_curve.empty()) {
      const EvalPoint& last = result.eval_curve.back();
      std::cout << "final greedy eval: mean " << last.mean_seconds << " s, "
                << last.failures << " failures\n";
    }
    std::cout << "wrote checkpoint.bin, metrics.csv, eval_curve.csv in " << dir
              << "\n";
  });
  return 0;
}

int cmd_eval(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "eval", "Greedy evaluation of a trained checkpoint");
  auto scenario_path = std::make_shared<std::string>();
  auto checkpoint_path = std::make_shared<std::string>();
  auto runs = std::make_shared<int>(10);
  auto seed = std::make_shared<std::uint64_t>(1);
  cmd->add_option("-s,--scenario", *scenario_path, "Scenario document")
      ->required();
  cmd->add_option("-c,--checkpoint", *checkpoint_path, "Trained checkpoint")
      ->required();
  cmd->add_option("--runs", *runs, "Number of evaluation episodes");
  cmd->add_option("--seed", *seed, "Evaluation seed");

  cmd->callback([=]() {
    const ScenarioDocument doc = ScenarioDocument::load(*scenario_path);
    const RoadNetwork road = doc.build_network();
    std::ifstream in(*checkpoint_path, std::ios::binary);
    if (!in) {
      throw std::runtime_error("cannot open " + *checkpoint_path);
    }
    DuelingNet net(2, doc.agent.hidden_dim, kDirectionCount);
    load_checkpoint(in, net);
    const EvalResult result = evaluate(
        net, doc.make_eval_factory(road), *runs,
        derive_seed(*seed, seed_stream::eval));
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
      const EvalRun& run = result.runs[r];
      std::cout << "run " << r << ": " << run.seconds << " s, " << run.steps
                << " steps" << (run.completed ? "" : " [failed]") << "\n";
    }
    std::cout << "mean over completed: " << result.mean_seconds << " s ("
              << result.failures << " failures)\n";
  });
  return 0;
}

int cmd_compare(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "compare", "Evaluate methods on identical flow traces");
  auto scenario_path = std::make_shared<std::string>();
  auto checkpoint_path = std::make_shared<std::string>();
  auto methods_csv =
      std::make_shared<std::string>("darp,shortest,random,oracle");
  auto runs = std::make_shared<int>(0);
  auto seed = std::make_shared<std::uint64_t>(1);
  auto out_path = std::make_shared<std::string>();
  auto csv_path = std::make_shared<std::string>();
  auto svg_path = std::make_shared<std::string>();
  cmd->add_option("-s,--scenario", *scenario_path, "Scenario document")
      ->required();
  cmd->add_option("-c,--checkpoint", *checkpoint_path,
                  "Trained checkpoint (needed for method darp)");
  cmd->add_option("--methods", *methods_csv,
                  "Comma list of darp,shortest,random,oracle,tabular");
  cmd->add_option("--runs", *runs, "Runs per method (default: scenario)");
  cmd->add_option("--seed", *seed, "Comparison seed");
  cmd->add_option("-o,--out", *out_path, "Results json path");
  cmd->add_option("--csv", *csv_path, "Also write per-run rows as csv");
  cmd->add_option("--svg", *svg_path, "Also write a method-means chart");

  cmd->callback([=]() {
    const ScenarioDocument doc = ScenarioDocument::load(*scenario_path);

    CompareOptions options;
    options.seed = *seed;
    options.runs = *runs > 0 ? *runs : doc.eval_runs;
    options.methods.clear();
    std::istringstream methods(*methods_csv);
    std::string name;
    while (std::getline(methods, name, ',')) {
      if (!name.empty()) {
        options.methods.push_back(name);
      }
    }

    DuelingNet net(2, doc.agent.hidden_dim, kDirectionCount);
    const bool wants_darp =
        std::find(options.methods.begin(), options.methods.end(), "darp") !=
        options.methods.end();
    if (wants_darp) {
      if (checkpoint_path->empty()) {
        throw std::runtime_error("method darp requires --checkpoint");
      }
      std::ifstream in(*checkpoint_path, std::ios::binary);
      if (!in) {
        throw std::runtime_error("cannot open " + *checkpoint_path);
      }
      load_checkpoint(in, net);
    }

    ResultsDocument results =
        run_compare(doc, wants_darp ? &net : nullptr, options);

    // Echo the training curve when it sits next to the checkpoint.
    if (!checkpoint_path->empty()) {
      const fs::path curve =
          fs::path(*checkpoint_path).parent_path() / "eval_curve.csv";
      std::ifstream in(curve);
      if (in) {
        results.training_curve = read_eval_curve_csv(in);
      }
    }

    const std::string path =
        out_path->empty() ? in_output_dir("results.json") : *out_path;
    results.save(path);

    for (const MethodResult& m : results.methods) {
      std::cout << m.name << ": mean " << m.mean_seconds << " s over "
                << m.runs.size() - m.failures << " completed runs ("
                << m.failures << " failures)\n";
    }
    for (const auto& [key, value] : results.savings) {
      std::cout << key << ": " << value * 100.0 << "% time saved\n";
    }
    if (!csv_path->empty()) {
      std::ofstream out(*csv_path, std::ios::binary);
      write_compare_csv(out, results);
    }
    if (!svg_path->empty()) {
      std::vector<ChartSeries> series;
      for (const MethodResult& m : results.methods) {
        ChartSeries s{m.name, {}};
        for (std::size_t r = 0; r < m.runs.size(); ++r) {
          if (m.runs[r].completed) {
            s.points.emplace_back(static_cast<double>(r), m.runs[r].seconds);
          }
        }
        series.push_back(std::move(s));
      }
      std::ofstream out(*svg_path, std::ios::binary);
      write_line_chart(out, "Realized travel time per run", "run", "seconds",
                       series);
    }
    std::cout << "wrote " << path << "\n";
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic route planning benchmark"};
  app.require_subcommand(1);
  cmd_gen_scenario(app);
  cmd_fit_flow(app);
  cmd_train(app);
  cmd_eval(app);
  cmd_compare(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;  // validation error
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;  // runtime error
  }
  return 0;
}
