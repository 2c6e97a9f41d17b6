#pragma once

// Experiment driver behind the `hsu` command line: VCA/FCLS-initialised
// unmixing runs, coarse-to-fine hyperparameter search, and seeded
// repetitions summarised as SAD/RMSE tables.

#include "hsu/evaluation.hpp"
#include "hsu/graph.hpp"
#include "hsu/initializers.hpp"
#include "hsu/io.hpp"
#include "hsu/kv.hpp"
#include "hsu/solvers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hsu {

// Keys: lambda, alpha, xi, sigma, epsilon, max_iters, rel_tol, armijo_step,
// armijo_shrink, armijo_c, armijo_max_shrinks, h_refresh_period, edc_floor,
// sum_to_one, asc_delta, reweight. Missing keys keep their defaults.
SolverConfig solver_config_from_kv(const KvDocument& doc);
KvDocument solver_config_to_kv(const SolverConfig& config);

// Keys: graph_mode (spectral | spectral_spatial), graph_k, graph_sigma, graph_radius.
GraphSpec graph_spec_from_kv(const KvDocument& doc);
void graph_spec_to_kv(const GraphSpec& spec, KvDocument& doc);

struct UnmixRun {
  InitPair init;
  SolveResult result;
};

// VCA + FCLS initialisation from `seed`, then solve().
UnmixRun run_unmix(const HyperCube& x, Index k, Variant v, const SolverConfig& config, const GraphSpec& graph,
                   std::uint64_t seed);

// Coarse decade grid 1e-3 .. 1e2.
std::vector<double> default_coarse_grid();
// `points` log-spaced values over [center / sqrt(10), center * sqrt(10)].
std::vector<double> fine_grid(double center, int points);

struct BenchOptions {
  std::vector<Variant> variants = {Variant::nmf};
  std::vector<double> lambda_grid = default_coarse_grid();
  std::vector<double> alpha_grid = default_coarse_grid();  // ssnmf, glnmf
  int fine_points = 5;
  int tuning_repetitions = 1;
  int repetitions = 5;
  std::uint64_t seed = 0;
  SolverConfig base;
  GraphSpec graph;
  bool include_vca = true;
};

struct GridPoint {
  double lambda = 0.0;
  double alpha = 0.0;
  double score = 0.0;  // mean SAD over the tuning runs; inf if they all failed
};

struct VariantOutcome {
  std::string method;
  double lambda = 0.0;
  double alpha = 0.0;
  std::vector<GridPoint> grid;             // every point evaluated, in order
  std::vector<BenchmarkReport> runs;       // successful repetitions
  std::vector<std::uint64_t> run_seeds;    // seed of each successful run
  std::vector<std::string> failures;       // one message per failed run
  ReportColumn column;                     // mean over successful runs
};

struct BenchResult {
  std::vector<std::string> endmember_names;
  std::vector<VariantOutcome> outcomes;  // VCA baseline first when included
  KvDocument provenance;
  std::string report_csv;
};

// Grid search per variant on the first tuning_repetitions seeds, then
// `repetitions` runs with seeds seed + i at the winning weights. Variants
// without weights skip the search; a one-point grid skips refinement.
BenchResult run_bench(const HyperCube& x, const GroundTruth& gt, const BenchOptions& options);

// Mean per-endmember SAD/RMSE over reports; runs = reports.size().
ReportColumn mean_column(const std::string& method, const std::vector<BenchmarkReport>& reports, int failures);

}  // namespace hsu
