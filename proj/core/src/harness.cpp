#include "hsu/harness.hpp"

#include "hsu/error.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace hsu {
namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

struct RunOutcome {
  bool ok = false;
  BenchmarkReport report;
  std::string error;
};

RunOutcome scored_run(const HyperCube& x, const GroundTruth& gt, Variant v, const SolverConfig& config,
                      const GraphSpec& graph, const LaplacianPair* laplacian, std::uint64_t seed) {
  RunOutcome out;
  try {
    const InitPair init = init_pair(x, gt.m.count(), seed);
    SolverConfig c = config;
    c.seed = seed;
    SolveContext ctx;
    LaplacianPair local;
    if (needs_graph(v)) {
      if (!laplacian) {
        local = build_graph(x, graph);
        laplacian = &local;
      }
      ctx.graph = laplacian;
    }
    const SolveResult r = solve(x.data, v, c, init.endmembers, init.abundances, ctx);
    out.report = evaluate(gt, r.endmembers, r.abundances);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

using RunCache = std::map<std::tuple<double, double, std::uint64_t>, RunOutcome>;

const RunOutcome& cached_run(RunCache& cache, const HyperCube& x, const GroundTruth& gt, Variant v,
                             const SolverConfig& config, const GraphSpec& graph, const LaplacianPair* laplacian,
                             std::uint64_t seed) {
  const auto key = std::make_tuple(config.lambda, config.alpha, seed);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, scored_run(x, gt, v, config, graph, laplacian, seed)).first;
  return it->second;
}

double tuning_score(RunCache& cache, const HyperCube& x, const GroundTruth& gt, Variant v,
                    const SolverConfig& config, const BenchOptions& o, const LaplacianPair* laplacian) {
  double sum = 0.0;
  int ok = 0;
  for (int i = 0; i < o.tuning_repetitions; ++i) {
    const RunOutcome& r =
        cached_run(cache, x, gt, v, config, o.graph, laplacian, o.seed + static_cast<std::uint64_t>(i));
    if (r.ok) {
      sum += r.report.mean_sad;
      ++ok;
    }
  }
  return ok > 0 ? sum / ok : std::numeric_limits<double>::infinity();
}

}  // namespace

SolverConfig solver_config_from_kv(const KvDocument& doc) {
  SolverConfig c;
  c.lambda = doc.get_double("lambda", c.lambda);
  c.alpha = doc.get_double("alpha", c.alpha);
  c.xi = doc.get_double("xi", c.xi);
  if (doc.contains("sigma")) c.sigma = doc.get_double("sigma");
  c.epsilon = doc.get_double("epsilon", c.epsilon);
  c.max_iters = static_cast<int>(doc.get_int("max_iters", c.max_iters));
  c.rel_tol = doc.get_double("rel_tol", c.rel_tol);
  c.armijo.initial_step = doc.get_double("armijo_step", c.armijo.initial_step);
  c.armijo.shrink = doc.get_double("armijo_shrink", c.armijo.shrink);
  c.armijo.sufficient_decrease = doc.get_double("armijo_c", c.armijo.sufficient_decrease);
  c.armijo.max_shrinks = static_cast<int>(doc.get_int("armijo_max_shrinks", c.armijo.max_shrinks));
  c.h_refresh_period = static_cast<int>(doc.get_int("h_refresh_period", c.h_refresh_period));
  c.edc_floor = doc.get_double("edc_floor", c.edc_floor);
  c.sum_to_one = doc.get_bool("sum_to_one", c.sum_to_one);
  if (doc.contains("asc_delta")) c.asc_delta = doc.get_double("asc_delta");
  c.reweight = doc.get_bool("reweight", c.reweight);
  c.validate();
  return c;
}

KvDocument solver_config_to_kv(const SolverConfig& c) {
  KvDocument doc;
  doc.set("lambda", c.lambda);
  doc.set("alpha", c.alpha);
  doc.set("xi", c.xi);
  if (c.sigma) doc.set("sigma", *c.sigma);
  doc.set("epsilon", c.epsilon);
  doc.set("max_iters", c.max_iters);
  doc.set("rel_tol", c.rel_tol);
  doc.set("armijo_step", c.armijo.initial_step);
  doc.set("armijo_shrink", c.armijo.shrink);
  doc.set("armijo_c", c.armijo.sufficient_decrease);
  doc.set("armijo_max_shrinks", c.armijo.max_shrinks);
  doc.set("h_refresh_period", c.h_refresh_period);
  doc.set("edc_floor", c.edc_floor);
  doc.set("sum_to_one", c.sum_to_one);
  if (c.asc_delta) doc.set("asc_delta", *c.asc_delta);
  doc.set("reweight", c.reweight);
  return doc;
}

GraphSpec graph_spec_from_kv(const KvDocument& doc) {
  GraphSpec g;
  const std::string mode = doc.get_string("graph_mode", "spectral");
  if (mode == "spectral") {
    g.mode = GraphSpec::Mode::spectral;
  } else if (mode == "spectral_spatial") {
    g.mode = GraphSpec::Mode::spectral_spatial;
  } else {
    throw ParseError("unknown graph_mode '" + mode + "'");
  }
  g.k_neighbors = doc.get_int("graph_k", g.k_neighbors);
  g.sigma_w = doc.get_double("graph_sigma", g.sigma_w);
  g.spatial_radius = doc.get_double("graph_radius", g.spatial_radius);
  return g;
}

void graph_spec_to_kv(const GraphSpec& g, KvDocument& doc) {
  doc.set("graph_mode", std::string(g.mode == GraphSpec::Mode::spectral ? "spectral" : "spectral_spatial"));
  doc.set("graph_k", static_cast<std::int64_t>(g.k_neighbors));
  doc.set("graph_sigma", g.sigma_w);
  doc.set("graph_radius", g.spatial_radius);
}

UnmixRun run_unmix(const HyperCube& x, Index k, Variant v, const SolverConfig& config, const GraphSpec& graph,
                   std::uint64_t seed) {
  UnmixRun run;
  run.init = init_pair(x, k, seed);
  SolverConfig c = config;
  c.seed = seed;
  SolveContext ctx;
  LaplacianPair laplacian;
  if (needs_graph(v)) {
    laplacian = build_graph(x, graph);
    ctx.graph = &laplacian;
  }
  run.result = solve(x.data, v, c, run.init.endmembers, run.init.abundances, ctx);
  return run;
}

std::vector<double> default_coarse_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}; }

std::vector<double> fine_grid(double center, int points) {
  if (points < 1) throw InvalidArgument("fine_grid: need at least one point");
  if (points == 1) return {center};
  std::vector<double> out;
  for (int i = 0; i < points; ++i) {
    const double e = -0.5 + static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back(center * std::pow(10.0, e));
  }
  return out;
}

ReportColumn mean_column(const std::string& method, const std::vector<BenchmarkReport>& reports, int failures) {
  ReportColumn c;
  c.method = method;
  c.runs = static_cast<int>(reports.size());
  c.failures = failures;
  if (reports.empty()) return c;
  c.sad = Vector::Zero(reports.front().sad.size());
  c.rmse = Vector::Zero(reports.front().rmse.size());
  for (const auto& r : reports) {
    c.sad += r.sad;
    c.rmse += r.rmse;
  }
  c.sad /= static_cast<double>(reports.size());
  c.rmse /= static_cast<double>(reports.size());
  return c;
}

BenchResult run_bench(const HyperCube& x, const GroundTruth& gt, const BenchOptions& o) {
  if (o.repetitions < 1) throw InvalidArgument("bench: repetitions must be >= 1");
  if (o.tuning_repetitions < 1) throw InvalidArgument("bench: tuning_repetitions must be >= 1");
  if (o.lambda_grid.empty() || o.alpha_grid.empty()) throw InvalidArgument("bench: empty grid");
  if (gt.m.bands() != x.bands() || gt.a.pixels() != x.pixels()) {
    throw ShapeError("bench: ground truth does not match the cube");
  }
  o.base.validate();
  const Index k = gt.m.count();

  BenchResult out;
  out.endmember_names = gt.m.names;
  KvDocument& prov = out.provenance;
  prov.set("seed", o.seed);
  prov.set("repetitions", o.repetitions);
  prov.set("tuning_repetitions", o.tuning_repetitions);
  prov.set("fine_points", o.fine_points);
  prov.set("K", static_cast<std::int64_t>(k));
  std::string methods;
  for (Variant v : o.variants) methods += (methods.empty() ? "" : ",") + std::string(to_string(v));
  prov.set("variants", methods);
  prov.set("lambda_grid", join_doubles(o.lambda_grid));
  prov.set("alpha_grid", join_doubles(o.alpha_grid));
  prov.set("selection", std::string("mean_sad"));
  const KvDocument base = solver_config_to_kv(o.base);
  for (const auto& [key, value] : base.entries()) prov.set(key, value);
  graph_spec_to_kv(o.graph, prov);

  const auto rep_seed = [&](int i) { return o.seed + static_cast<std::uint64_t>(i); };

  if (o.include_vca) {
    VariantOutcome vo;
    vo.method = "vca";
    for (int i = 0; i < o.repetitions; ++i) {
      try {
        const InitPair init = init_pair(x, k, rep_seed(i));
        vo.runs.push_back(evaluate(gt, init.endmembers, init.abundances));
        vo.run_seeds.push_back(rep_seed(i));
      } catch (const Error& e) {
        vo.failures.push_back(e.what());
      }
    }
    vo.column = mean_column(vo.method, vo.runs, static_cast<int>(vo.failures.size()));
    out.outcomes.push_back(std::move(vo));
  }

  LaplacianPair laplacian;
  bool have_graph = false;
  for (Variant v : o.variants) {
    if (needs_graph(v) && !have_graph) {
      laplacian = build_graph(x, o.graph);
      have_graph = true;
    }
    const LaplacianPair* lp = needs_graph(v) ? &laplacian : nullptr;

    VariantOutcome vo;
    vo.method = std::string(to_string(v));
    SolverConfig config = o.base;
    RunCache cache;
    auto score_at = [&](double lambda, double alpha) {
      SolverConfig c = config;
      c.lambda = lambda;
      c.alpha = alpha;
      GridPoint p{lambda, alpha, tuning_score(cache, x, gt, v, c, o, lp)};
      vo.grid.push_back(p);
      return p;
    };
    auto search = [&](const std::vector<double>& lambdas, const std::vector<double>& alphas) {
      GridPoint best{0.0, 0.0, std::numeric_limits<double>::infinity()};
      bool first = true;
      for (double l : lambdas) {
        for (double a : alphas) {
          const GridPoint p = score_at(l, a);
          if (first || p.score < best.score) best = p;
          first = false;
        }
      }
      return best;
    };

    if (uses_lambda(v)) {
      const std::vector<double> alphas = uses_alpha(v) ? o.alpha_grid : std::vector<double>{config.alpha};
      GridPoint best = search(o.lambda_grid, alphas);
      if (o.lambda_grid.size() > 1 && o.fine_points > 1) {
        best = search(fine_grid(best.lambda, o.fine_points), {best.alpha});
      }
      if (uses_alpha(v) && o.alpha_grid.size() > 1 && o.fine_points > 1) {
        best = search({best.lambda}, fine_grid(best.alpha, o.fine_points));
      }
      config.lambda = best.lambda;
      config.alpha = best.alpha;
    }
    vo.lambda = config.lambda;
    vo.alpha = config.alpha;
    prov.set("winner." + vo.method, "lambda=" + format_double(vo.lambda) + " alpha=" + format_double(vo.alpha));

    for (int i = 0; i < o.repetitions; ++i) {
      const RunOutcome& r = cached_run(cache, x, gt, v, config, o.graph, lp, rep_seed(i));
      if (r.ok) {
        vo.runs.push_back(r.report);
        vo.run_seeds.push_back(rep_seed(i));
      } else {
        vo.failures.push_back(r.error);
      }
    }
    vo.column = mean_column(vo.method, vo.runs, static_cast<int>(vo.failures.size()));
    out.outcomes.push_back(std::move(vo));
  }

  std::vector<ReportColumn> columns;
  for (const auto& vo : out.outcomes) {
    ReportColumn c = vo.column;
    if (c.runs == 0) {
      c.sad = Vector::Constant(k, std::numeric_limits<double>::quiet_NaN());
      c.rmse = c.sad;
    }
    columns.push_back(std::move(c));
  }
  out.report_csv = format_report_csv(out.endmember_names, columns, prov);
  return out;
}

}  // namespace hsu
