/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vrsplit/vrsplit.hpp"

namespace {

using namespace vrsplit;

nlohmann::json report_to_json(const SplitAssignment& assignment,
                              const EvalReport& report) {
  nlohmann::json j;
  j["assignment"] = assignment.to_string();
  j["total_cost"] = report.total_cost;
  j["feasible"] = report.feasible;
  j["du_costs"] = report.du_costs;
  j["cu_costs"] = report.cu_costs;
  j["routing_costs"] = report.routing_costs;
  j["flows_mbps"] = report.flows;
  j["violations"] = {{"cu_compute", report.violations.cu_compute},
                     {"du_compute", report.violations.du_compute},
                     {"link", report.violations.link},
                     {"delay", report.violations.delay}};
  return j;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write " + out_path);
    out << j.dump(2) << "\n";
  }
}

std::vector<PolicyParams> load_models(const std::vector<std::string>& paths) {
  std::vector<PolicyParams> models;
  models.reserve(paths.size());
  for (const std::string& p : paths)
    models.push_back(load_checkpoint(p).policy);
  return models;
}

std::string out_dir_override(std::string dir) {
  if (const char* env = std::getenv("VRSPLIT_OUTDIR"); env && *env)
    return env;
  return dir;
}

int run(int argc, char** argv) {
  CLI::App app{"Functional-split placement toolkit: exact and learned solvers "
               "for minimum-cost vRAN split selection"};
  app.require_subcommand(1);

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a random Waxman scenario");
  WaxmanConfig wax;
  double gen_traffic = 150.0;
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output scenario JSON path")->required();
  gen->add_option("--n-du", wax.n_du, "Number of DUs");
  gen->add_option("--n-router", wax.n_router, "Number of routers");
  gen->add_option("--alpha", wax.alpha, "Waxman link probability scale");
  gen->add_option("--beta", wax.beta, "Waxman edge length control");
  gen->add_option("--area", wax.area_km, "Square side length in km");
  gen->add_option("--cap-min", wax.capacity_range.first, "Min link capacity (Mbps)");
  gen->add_option("--cap-max", wax.capacity_range.second, "Max link capacity (Mbps)");
  gen->add_option("--cost-min", wax.link_cost_range.first, "Min link cost per Mbps");
  gen->add_option("--cost-max", wax.link_cost_range.second, "Max link cost per Mbps");
  gen->add_option("--seed", wax.seed, "Generator seed");
  gen->add_option("--traffic", gen_traffic, "Uniform per-DU traffic (Mbps)");
  gen->callback([&] {
    Scenario s;
    s.topology = generate_waxman(wax);
    s.params = SystemParams::defaults();
    s.traffic_mbps.assign(wax.n_du, gen_traffic);
    s.validate();
    save_scenario(s, gen_out);
    std::cout << "wrote " << gen_out << " (" << s.topology.nodes.size()
              << " nodes, " << s.topology.links.size() << " links)\n";
  });

  // ---- solve --------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "Exact minimum-cost assignment");
  std::string solve_scenario, solve_out;
  double time_budget = std::numeric_limits<double>::infinity();
  bool use_oracle = false;
  solve->add_option("--scenario", solve_scenario, "Scenario JSON")->required();
  solve->add_option("--time-budget", time_budget, "Budget in seconds");
  solve->add_flag("--oracle", use_oracle, "Force 4^N brute-force enumeration");
  solve->add_option("--out", solve_out, "Write the JSON report here");
  solve->callback([&] {
    const Scenario s = load_scenario(solve_scenario);
    const SolveResult r =
        use_oracle ? solve_bruteforce(s) : solve_exact(s, time_budget);
    nlohmann::json j = report_to_json(r.assignment, r.report);
    j["proof"] = r.proof == Proof::Optimal ? "optimal" : "best_found";
    j["nodes_expanded"] = r.nodes_expanded;
    j["wall_seconds"] = r.wall_seconds;
    emit(j, solve_out);
  });

  // ---- train --------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train CDRS policy/critic models");
  std::string train_scenario, train_dir = ".", penalty = "fixed", resume_path;
  TrainConfig tcfg;
  std::size_t n_models = 1;
  double mu0_scalar = 1.0;
  bool deterministic = false;
  tr->add_option("--scenario", train_scenario, "Scenario JSON")->required();
  tr->add_option("--out-dir", train_dir, "Checkpoint/log directory");
  tr->add_option("--epochs", tcfg.epochs, "Training epochs");
  tr->add_option("--batch", tcfg.batch, "Batch size");
  tr->add_option("--lr-agent", tcfg.lr_agent, "Agent learning rate");
  tr->add_option("--lr-critic", tcfg.lr_critic, "Critic learning rate");
  tr->add_option("--penalty", penalty, "Penalty mode: fixed | adaptive");
  tr->add_option("--mu0", mu0_scalar, "Initial penalty coefficient");
  tr->add_option("--eta-dual", tcfg.eta_dual, "Dual ascent step size");
  tr->add_option("--seed", tcfg.seed, "Master seed");
  tr->add_option("--hidden", tcfg.hidden, "LSTM hidden size");
  tr->add_option("--embed", tcfg.embed, "Embedding size");
  tr->add_option("--temperature", tcfg.temperature, "Training temperature");
  tr->add_option("--threads", tcfg.threads, "Worker threads (0 = auto)");
  tr->add_option("--models", n_models, "Ensemble size");
  tr->add_option("--checkpoint-every", tcfg.checkpoint_every,
                 "Checkpoint cadence in epochs (0 = final only)");
  tr->add_option("--resume", resume_path, "Continue from this checkpoint");
  tr->add_flag("--clip-gradients", tcfg.clip_gradients,
               "Clip the agent gradient norm at 1.0");
  tr->add_flag("--deterministic", deterministic,
               "Force single-threaded execution");
  tr->callback([&] {
    const Scenario s = load_scenario(train_scenario);
    if (penalty == "fixed") tcfg.penalty = PenaltyMode::Fixed;
    else if (penalty == "adaptive") tcfg.penalty = PenaltyMode::Adaptive;
    else throw Error("--penalty must be fixed or adaptive");
    tcfg.mu0 = {mu0_scalar, mu0_scalar, mu0_scalar, mu0_scalar};
    if (deterministic) tcfg.threads = 1;
    std::filesystem::create_directories(train_dir);

    if (!resume_path.empty()) {
      if (n_models != 1)
        throw Error("--resume supports a single model");
      const TrainingCheckpoint from = load_checkpoint(resume_path);
      std::ofstream csv(train_dir + "/model_0.csv");
      tcfg.csv = &csv;
      tcfg.checkpoint_path = train_dir + "/model_0.ckpt";
      const TrainResult res = train(tcfg, s, &from);
      save_checkpoint(res.state, train_dir + "/model_0.ckpt");
      std::cout << "resumed to epoch " << res.state.epoch << ", wrote "
                << train_dir << "/model_0.ckpt\n";
      return;
    }

    for (std::size_t k = 0; k < n_models; ++k) {
      TrainConfig sub = tcfg;
      if (k > 0) sub.seed = derive_seed(tcfg.seed, 0x73, k);
      std::ofstream csv(train_dir + "/model_" + std::to_string(k) + ".csv");
      sub.csv = &csv;
      sub.checkpoint_path = train_dir + "/model_" + std::to_string(k) + ".ckpt";
      const TrainResult res = train(sub, s);
      save_checkpoint(res.state,
                      train_dir + "/model_" + std::to_string(k) + ".ckpt");
      const EpochLog& last = res.log.epochs.back();
      std::cout << "model " << k << ": epochs=" << res.state.epoch
                << " final J=" << last.mean_cost << " xi=" << last.mean_penalty
                << "\n";
    }
  });

  // ---- infer --------------------------------------------------------------
  auto* inf = app.add_subcommand("infer", "Decode assignments from checkpoints");
  std::string infer_scenario, strategy = "greedy", reference_path, infer_out;
  std::vector<std::string> model_paths;
  double temp = kInferDefaultTemperature;
  std::size_t samples = kInferDefaultSamples;
  std::uint64_t infer_seed = 0;
  inf->add_option("--scenario", infer_scenario, "Scenario JSON")->required();
  inf->add_option("--models", model_paths, "Checkpoint paths")
      ->required()
      ->delimiter(',');
  inf->add_option("--strategy", strategy, "greedy | temperature");
  inf->add_option("--temp", temp, "Sampling softmax temperature");
  inf->add_option("--samples", samples, "Samples per model");
  inf->add_option("--seed", infer_seed, "Sampling seed");
  inf->add_option("--reference", reference_path,
                  "solve report JSON; adds the optimality gap");
  inf->add_option("--out", infer_out, "Write the JSON result here");
  inf->callback([&] {
    const Scenario s = load_scenario(infer_scenario);
    const std::vector<PolicyParams> models = load_models(model_paths);
    InferResult r;
    if (strategy == "greedy") {
      r = infer_greedy(models, s);
    } else if (strategy == "temperature") {
      r = infer_temperature(models, s, temp, samples, infer_seed);
    } else {
      throw Error("--strategy must be greedy or temperature");
    }
    nlohmann::json j = report_to_json(r.assignment, r.report);
    j["strategy"] = strategy;
    j["penalized_cost"] = r.penalized_cost;
    j["source_model"] = r.source_model;
    if (!reference_path.empty()) {
      std::ifstream in(reference_path);
      if (!in) throw IoError("cannot open reference " + reference_path);
      nlohmann::json ref;
      in >> ref;
      const SplitAssignment ref_assign =
          SplitAssignment::from_string(ref.at("assignment").get<std::string>());
      j["gap_pct"] = optimality_gap(r.report, evaluate(s, ref_assign));
    }
    emit(j, infer_out);
  });

  // ---- experiment ---------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "Evaluation harness");
  exp->require_subcommand(1);
  ExperimentSpec spec;
  std::string exp_scenario;
  std::vector<std::string> solver_names{"exact", "cdrs-fixed-g", "cdrs-fixed-t",
                                        "dran", "cran"};
  std::vector<std::string> fixed_paths, ada_paths;
  std::vector<double> sweep_values;
  std::string axis_name = "routing";
  std::size_t repetitions = 128;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", exp_scenario, "Scenario JSON")->required();
    sub->add_option("--solvers", solver_names, "Solvers to run")
        ->delimiter(',');
    sub->add_option("--models-fixed", fixed_paths,
                    "Checkpoints trained with fixed penalty")
        ->delimiter(',');
    sub->add_option("--models-ada", ada_paths,
                    "Checkpoints trained with adaptive penalty")
        ->delimiter(',');
    sub->add_option("--tests", spec.tests_per_point, "Tests per point");
    sub->add_option("--seed", spec.seed, "Seed");
    sub->add_option("--temp", spec.temperature, "Sampling temperature");
    sub->add_option("--samples", spec.samples, "Samples per model");
    sub->add_option("--out-dir", spec.out_dir,
                    "Output directory (VRSPLIT_OUTDIR overrides)");
  };

  auto* hist = exp->add_subcommand("histogram",
                                   "Permuted-order optimality-gap histogram");
  add_common(hist);
  auto* sweep = exp->add_subcommand("sweep", "Routing-cost or traffic sweep");
  add_common(sweep);
  sweep->add_option("--axis", axis_name, "routing | traffic")->required();
  sweep->add_option("--values", sweep_values, "Sweep values")
      ->required()
      ->delimiter(',');
  auto* timing = exp->add_subcommand("timing", "Per-solver wall-clock table");
  add_common(timing);
  timing->add_option("--repetitions", repetitions, "Timed runs per solver");

  int experiment_status = 0;
  auto run_experiment = [&](const std::string& kind) {
    const Scenario s = load_scenario(exp_scenario);
    spec.out_dir = out_dir_override(spec.out_dir);
    spec.solvers.clear();
    for (const std::string& n : solver_names)
      spec.solvers.push_back(solver_from_name(n));
    ModelSet models;
    models.fixed = load_models(fixed_paths);
    models.ada = load_models(ada_paths);
    ExperimentOutcome outcome;
    if (kind == "histogram") {
      outcome = run_gap_histogram(spec, s, models);
    } else if (kind == "sweep") {
      spec.axis = axis_name == "routing" ? SweepAxis::Routing
                 : axis_name == "traffic" ? SweepAxis::Traffic
                                          : SweepAxis::None;
      spec.sweep_values = sweep_values;
      outcome = run_sweep(spec, s, models);
    } else {
      outcome = run_timing(spec, s, models, repetitions);
    }
    for (const std::string& f : outcome.files) std::cout << "wrote " << f << "\n";
    if (!outcome.revalidated) {
      std::cerr << "re-validation FAILED: logged costs do not reproduce\n";
      experiment_status = 1;
    }
  };
  hist->callback([&] { run_experiment("histogram"); });
  sweep->callback([&] { run_experiment("sweep"); });
  timing->callback([&] { run_experiment("timing"); });

  CLI11_PARSE(app, argc, argv);
  return experiment_status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
