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

#ifndef VRSPLIT_EXPERIMENT_HPP
#define VRSPLIT_EXPERIMENT_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrsplit/exact.hpp"
#include "vrsplit/infer.hpp"
#include "vrsplit/json_io.hpp"
#include "vrsplit/model.hpp"
#include "vrsplit/rng.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

// ---------------------------------------------------------------------------
// Solvers under test
// ---------------------------------------------------------------------------

enum class Solver {
  Exact,
  BruteForce,
  CdrsFixedG,
  CdrsFixedT,
  CdrsAdaG,
  CdrsAdaT,
  Dran,
  Cran,
};

inline const char* solver_name(Solver s) {
  switch (s) {
    case Solver::Exact: return "exact";
    case Solver::BruteForce: return "bruteforce";
    case Solver::CdrsFixedG: return "cdrs-fixed-g";
    case Solver::CdrsFixedT: return "cdrs-fixed-t";
    case Solver::CdrsAdaG: return "cdrs-ada-g";
    case Solver::CdrsAdaT: return "cdrs-ada-t";
    case Solver::Dran: return "dran";
    case Solver::Cran: return "cran";
  }
  return "?";
}

inline Solver solver_from_name(const std::string& name) {
  for (Solver s : {Solver::Exact, Solver::BruteForce, Solver::CdrsFixedG,
                   Solver::CdrsFixedT, Solver::CdrsAdaG, Solver::CdrsAdaT,
                   Solver::Dran, Solver::Cran})
    if (name == solver_name(s)) return s;
  throw ParseError("unknown solver \"" + name + "\"");
}

inline bool is_cdrs(Solver s) {
  return s == Solver::CdrsFixedG || s == Solver::CdrsFixedT ||
         s == Solver::CdrsAdaG || s == Solver::CdrsAdaT;
}

inline bool uses_sampling(Solver s) {
  return s == Solver::CdrsFixedT || s == Solver::CdrsAdaT;
}

struct ModelSet {
  std::vector<PolicyParams> fixed;  // checkpoints trained with fixed mu
  std::vector<PolicyParams> ada;    // checkpoints trained with adaptive mu
};

enum class SweepAxis { None, Routing, Traffic };

inline const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::None: return "none";
    case SweepAxis::Routing: return "routing";
    case SweepAxis::Traffic: return "traffic";
  }
  return "?";
}

struct ExperimentSpec {
  std::vector<Solver> solvers;
  std::size_t tests_per_point = 128;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  double temperature = kInferDefaultTemperature;
  std::size_t samples = kInferDefaultSamples;
  SweepAxis axis = SweepAxis::None;
  std::vector<double> sweep_values;
  std::size_t histogram_bins = 20;

  void validate() const {
    if (solvers.empty()) throw Error("at least one solver is required");
    if (tests_per_point < 1) throw Error("tests per point must be >= 1");
    for (double v : sweep_values)
      if (!(v > 0)) throw Error("sweep values must be positive");
  }
};

struct ExperimentOutcome {
  std::vector<std::string> files;
  bool revalidated = false;
};

// ---------------------------------------------------------------------------
// Scenario rescaling for sweeps
// ---------------------------------------------------------------------------

inline Scenario scale_routing_costs(const Scenario& s, double gamma) {
  Scenario out = s;
  for (Link& l : out.topology.links) l.cost_per_mbps *= gamma;
  shortest_paths(out.topology);
  return out;
}

inline Scenario with_uniform_traffic(const Scenario& s, double lambda) {
  Scenario out = s;
  for (double& t : out.traffic_mbps) t = lambda;
  return out;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct SolverRun {
  SplitAssignment assignment;
  EvalReport report;
};

inline const std::vector<PolicyParams>& models_for(const ModelSet& models,
                                                   Solver s) {
  const auto& set = (s == Solver::CdrsFixedG || s == Solver::CdrsFixedT)
                        ? models.fixed
                        : models.ada;
  if (set.empty())
    throw MissingCheckpoint(std::string("solver ") + solver_name(s) +
                            " needs pretrained checkpoints");
  return set;
}

/// One solver invocation on one scenario instance.
inline SolverRun run_solver(Solver s, const Scenario& scenario,
                            const ModelSet& models,
                            const std::vector<std::size_t>* order,
                            double temperature, std::size_t samples,
                            std::uint64_t sample_seed) {
  SolverRun out;
  switch (s) {
    case Solver::Exact: {
      const SolveResult res = solve_exact(scenario);
      out.assignment = res.assignment;
      out.report = res.report;
      return out;
    }
    case Solver::BruteForce: {
      const SolveResult res = solve_bruteforce(scenario);
      out.assignment = res.assignment;
      out.report = res.report;
      return out;
    }
    case Solver::Dran:
    case Solver::Cran: {
      out.assignment = SplitAssignment::uniform(
          scenario.num_dus(),
          s == Solver::Dran ? SplitOption::S0 : SplitOption::S3);
      out.report = evaluate(scenario, out.assignment);
      return out;
    }
    case Solver::CdrsFixedG:
    case Solver::CdrsAdaG: {
      const InferResult res =
          infer_greedy(models_for(models, s), scenario, order);
      out.assignment = res.assignment;
      out.report = res.report;
      return out;
    }
    case Solver::CdrsFixedT:
    case Solver::CdrsAdaT: {
      const InferResult res =
          infer_temperature(models_for(models, s), scenario, temperature,
                            samples, sample_seed, order);
      out.assignment = res.assignment;
      out.report = res.report;
      return out;
    }
  }
  throw Error("unhandled solver");
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("short write to " + path);
}

/// Signed percent difference without the NegativeGap guard; infeasible
/// candidates may legitimately undercut the optimum.
inline double raw_gap_pct(double cost, double reference) {
  if (reference == 0.0) return 0.0;
  return 100.0 * (cost - reference) / reference;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV re-validation
// ---------------------------------------------------------------------------

/// Re-reads an emitted CSV and recomputes evaluate() on every logged
/// assignment; the logged J must match to 1e-9 relative. `scenario_for_row`
/// maps a parsed row back to the scenario it was scored on.
template <class ScenarioForRow>
bool revalidate_csv(const std::string& path, std::size_t cost_column,
                    std::size_t assignment_column,
                    ScenarioForRow&& scenario_for_row) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot reopen " + path + " for re-validation");
  std::string line;
  std::getline(in, line);  // header
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() <= std::max(cost_column, assignment_column))
      return false;
    const double logged = std::stod(cells[cost_column]);
    const SplitAssignment assignment =
        SplitAssignment::from_string(cells[assignment_column]);
    const Scenario& sc = scenario_for_row(cells, row_index);
    const EvalReport rep = evaluate(sc, assignment);
    const double tol = 1e-9 * std::max(1.0, std::abs(rep.total_cost));
    if (std::abs(rep.total_cost - logged) > tol) return false;
    ++row_index;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace detail {

inline void write_manifest(const ExperimentSpec& spec, const Scenario& scenario,
                           const std::string& experiment,
                           const std::vector<std::string>& outputs,
                           bool revalidated) {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["seed"] = spec.seed;
  j["tests_per_point"] = spec.tests_per_point;
  j["temperature"] = spec.temperature;
  j["samples"] = spec.samples;
  j["sweep_axis"] = sweep_axis_name(spec.axis);
  j["sweep_values"] = spec.sweep_values;
  std::vector<std::string> names;
  for (Solver s : spec.solvers) names.push_back(solver_name(s));
  j["solvers"] = names;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a(scenario_to_json(scenario))));
  j["scenario_fnv1a"] = hash;
  j["outputs"] = outputs;
  j["revalidation"] = revalidated ? "pass" : "fail";
  write_text(spec.out_dir + "/manifest_" + experiment + ".json",
             j.dump(2) + "\n");
}

}  // namespace detail

/// Permuted-order accuracy test: `tests_per_point` runs, each presenting the
/// BSs to the CDRS solvers in a fresh random order, every requested solver
/// scored against the exact optimum. Emits per-test rows and per-solver
/// histogram bin counts.
inline ExperimentOutcome run_gap_histogram(const ExperimentSpec& spec,
                                           const Scenario& scenario,
                                           const ModelSet& models) {
  spec.validate();
  std::filesystem::create_directories(spec.out_dir);
  const std::size_t n = scenario.num_dus();

  const SolveResult reference = solve_exact(scenario);

  struct Row {
    std::size_t test;
    Solver solver;
    double cost;
    double gap;
    bool feasible;
    std::string assignment;
  };
  std::vector<Row> rows;
  rows.reserve(spec.tests_per_point * spec.solvers.size());

  for (std::size_t t = 0; t < spec.tests_per_point; ++t) {
    Rng order_rng(derive_seed(spec.seed, 0xA1, t));
    const std::vector<std::size_t> order = order_rng.permutation(n);
    for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
      const Solver s = spec.solvers[si];
      detail::SolverRun run;
      if (s == Solver::Exact) {
        run.assignment = reference.assignment;
        run.report = reference.report;
      } else {
        run = detail::run_solver(s, scenario, models, &order,
                                 spec.temperature, spec.samples,
                                 derive_seed(spec.seed, 0xA2, t, si));
      }
      Row row;
      row.test = t;
      row.solver = s;
      row.cost = run.report.total_cost;
      row.gap = detail::raw_gap_pct(run.report.total_cost,
                                    reference.report.total_cost);
      row.feasible = run.report.feasible;
      row.assignment = run.assignment.to_string();
      rows.push_back(std::move(row));
    }
  }

  std::ostringstream csv;
  csv << "test,solver,J,gap_pct,feasible,assignment\n";
  for (const Row& r : rows)
    csv << r.test << ',' << solver_name(r.solver) << ','
        << detail::fmt_double(r.cost) << ',' << detail::fmt_double(r.gap)
        << ',' << (r.feasible ? 1 : 0) << ',' << r.assignment << '\n';
  const std::string csv_path = spec.out_dir + "/histogram.csv";
  detail::write_text(csv_path, csv.str());

  // Shared equal-width bins over the observed gap range.
  double lo = 0.0, hi = 0.0;
  for (const Row& r : rows) {
    lo = std::min(lo, r.gap);
    hi = std::max(hi, r.gap);
  }
  if (hi <= lo) hi = lo + 1.0;
  const std::size_t bins = spec.histogram_bins;
  const double width = (hi - lo) / double(bins);
  std::ostringstream bcsv;
  bcsv << "solver,bin_lo_pct,bin_hi_pct,count\n";
  for (Solver s : spec.solvers) {
    std::vector<std::size_t> counts(bins, 0);
    for (const Row& r : rows) {
      if (r.solver != s) continue;
      std::size_t b = std::size_t((r.gap - lo) / width);
      if (b >= bins) b = bins - 1;
      ++counts[b];
    }
    for (std::size_t b = 0; b < bins; ++b)
      bcsv << solver_name(s) << ',' << detail::fmt_double(lo + width * b)
           << ',' << detail::fmt_double(lo + width * (b + 1)) << ','
           << counts[b] << '\n';
  }
  const std::string bins_path = spec.out_dir + "/histogram_bins.csv";
  detail::write_text(bins_path, bcsv.str());

  ExperimentOutcome out;
  out.files = {csv_path, bins_path};
  out.revalidated = revalidate_csv(
      csv_path, 2, 5,
      [&](const std::vector<std::string>&, std::size_t) -> const Scenario& {
        return scenario;
      });
  detail::write_manifest(spec, scenario, "histogram", out.files,
                         out.revalidated);
  return out;
}

/// Routing-cost or traffic sweep: for every sweep value the scenario is
/// rescaled, every solver re-run once, and costs are recorded raw and
/// normalized to the C-RAN benchmark at that point.
inline ExperimentOutcome run_sweep(const ExperimentSpec& spec,
                                   const Scenario& scenario,
                                   const ModelSet& models) {
  spec.validate();
  if (spec.axis == SweepAxis::None)
    throw Error("run_sweep needs a sweep axis");
  if (spec.sweep_values.empty()) throw Error("run_sweep needs sweep values");
  std::filesystem::create_directories(spec.out_dir);

  std::vector<Scenario> points;
  points.reserve(spec.sweep_values.size());
  for (double v : spec.sweep_values)
    points.push_back(spec.axis == SweepAxis::Routing
                         ? scale_routing_costs(scenario, v)
                         : with_uniform_traffic(scenario, v));

  std::ostringstream csv;
  csv << "axis,value,solver,J,J_over_cran,feasible,assignment\n";
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const Scenario& sc = points[pi];
    const double cran_cost =
        fixed_baseline_cost(sc, BaselineMode::CRAN).total_cost;
    for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
      const detail::SolverRun run = detail::run_solver(
          spec.solvers[si], sc, models, nullptr, spec.temperature,
          spec.samples, derive_seed(spec.seed, 0xB1, pi, si));
      csv << sweep_axis_name(spec.axis) << ','
          << detail::fmt_double(spec.sweep_values[pi]) << ','
          << solver_name(spec.solvers[si]) << ','
          << detail::fmt_double(run.report.total_cost) << ','
          << detail::fmt_double(run.report.total_cost / cran_cost) << ','
          << (run.report.feasible ? 1 : 0) << ','
          << run.assignment.to_string() << '\n';
    }
  }
  const std::string csv_path = spec.out_dir + "/sweep.csv";
  detail::write_text(csv_path, csv.str());

  ExperimentOutcome out;
  out.files = {csv_path};
  out.revalidated = revalidate_csv(
      csv_path, 3, 6,
      [&](const std::vector<std::string>& cells,
          std::size_t) -> const Scenario& {
        const double value = std::stod(cells[1]);
        for (std::size_t i = 0; i < spec.sweep_values.size(); ++i)
          if (spec.sweep_values[i] == value) return points[i];
        throw Error("sweep re-validation: unknown sweep value in CSV");
      });
  detail::write_manifest(spec, scenario, "sweep", out.files, out.revalidated);
  return out;
}

struct TimingRow {
  Solver solver;
  std::size_t runs = 0;
  double mean_seconds = 0.0;
  double speedup_vs_exact = 0.0;
};

/// Wall-clock comparison on single-instance solves: one warm-up run per
/// solver is discarded, then `repetitions` runs are averaged on the monotonic
/// clock. Speedups are relative to the exact solver.
inline std::vector<TimingRow> measure_timing(const ExperimentSpec& spec,
                                             const Scenario& scenario,
                                             const ModelSet& models,
                                             std::size_t repetitions = 128) {
  spec.validate();
  if (repetitions < 1) throw Error("repetitions must be >= 1");
  std::vector<Solver> solvers = spec.solvers;
  if (std::find(solvers.begin(), solvers.end(), Solver::Exact) ==
      solvers.end())
    solvers.insert(solvers.begin(), Solver::Exact);

  std::vector<TimingRow> rows;
  for (std::size_t si = 0; si < solvers.size(); ++si) {
    const Solver s = solvers[si];
    auto once = [&](std::uint64_t rep) {
      detail::run_solver(s, scenario, models, nullptr, spec.temperature,
                         spec.samples, derive_seed(spec.seed, 0xC1, si, rep));
    };
    once(~0ULL);  // warm-up, excluded
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < repetitions; ++r) once(r);
    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    rows.push_back({s, repetitions, total / double(repetitions), 0.0});
  }
  double exact_mean = 0.0;
  for (const TimingRow& r : rows)
    if (r.solver == Solver::Exact) exact_mean = r.mean_seconds;
  for (TimingRow& r : rows)
    r.speedup_vs_exact = r.mean_seconds > 0 ? exact_mean / r.mean_seconds : 0.0;
  return rows;
}

inline ExperimentOutcome run_timing(const ExperimentSpec& spec,
                                    const Scenario& scenario,
                                    const ModelSet& models,
                                    std::size_t repetitions = 128) {
  const std::vector<TimingRow> rows =
      measure_timing(spec, scenario, models, repetitions);
  std::filesystem::create_directories(spec.out_dir);
  std::ostringstream csv;
  csv << "solver,runs,mean_seconds,speedup_vs_exact\n";
  for (const TimingRow& r : rows)
    csv << solver_name(r.solver) << ',' << r.runs << ','
        << detail::fmt_double(r.mean_seconds) << ','
        << detail::fmt_double(r.speedup_vs_exact) << '\n';
  const std::string csv_path = spec.out_dir + "/timing.csv";
  detail::write_text(csv_path, csv.str());
  ExperimentOutcome out;
  out.files = {csv_path};
  out.revalidated = true;  // timing rows carry no assignments to re-check
  detail::write_manifest(spec, scenario, "timing", out.files, out.revalidated);
  return out;
}

}  // namespace vrsplit

#endif  // VRSPLIT_EXPERIMENT_HPP
