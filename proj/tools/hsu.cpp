// hsu: synthetic scene generation, unmixing, ground-truth labeling,
// evaluation and benchmarking from the command line.
//
// Exit status: 0 success, 1 usage error, 2 runtime failure.

#include "hsu/error.hpp"
#include "hsu/evaluation.hpp"
#include "hsu/harness.hpp"
#include "hsu/io.hpp"
#include "hsu/kv.hpp"
#include "hsu/labeling.hpp"
#include "hsu/solvers.hpp"
#include "hsu/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Thrown for bad flag values detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
};

hsu::KvDocument load_config(const std::string& path) {
  return path.empty() ? hsu::KvDocument{} : hsu::KvDocument::read_file(path);
}

std::uint64_t seed_of(const Common& c, const hsu::KvDocument& cfg) {
  return c.seed ? *c.seed : cfg.get_uint("seed", 0);
}

hsu::Variant variant_of(const std::string& tag) {
  try {
    return hsu::parse_variant(tag);
  } catch (const hsu::InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

hsu::HyperCube load_input_cube(const std::string& base, const std::string& preset) {
  hsu::HyperCube x = hsu::load_cube(base);
  if (!preset.empty()) x = hsu::apply_band_removal(x, hsu::band_removal_preset(preset));
  return x;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string history_csv(const hsu::SolveResult& r) {
  std::ostringstream out;
  out << "iteration,objective,reconstruction\n";
  for (std::size_t i = 0; i < r.objective_history.size(); ++i) {
    out << i << "," << hsu::format_double(r.objective_history[i]) << ","
        << hsu::format_double(r.reconstruction_history[i]) << "\n";
  }
  return out.str();
}

int cmd_generate(const Common& c) {
  if (c.out.empty()) throw UsageError("generate: --out is required");
  const hsu::KvDocument cfg = load_config(c.config);
  hsu::SceneConfig sc = hsu::SceneConfig::from_kv(cfg);
  if (c.seed) sc.seed = *c.seed;
  const hsu::SyntheticScene scene = hsu::generate_scene(sc);

  ensure_parent(c.out);
  hsu::save_cube(scene.x, c.out);
  hsu::GroundTruth gt{scene.m_true, scene.a_true, {}};
  hsu::save_ground_truth(gt, c.out + ".gt", scene.x.rows, scene.x.cols);
  hsu::KvDocument meta = sc.to_kv();
  meta.set("achieved_snr_db", scene.achieved_snr_db);
  meta.set("noise_power", scene.noise_power);
  meta.write_file(c.out + ".scene.cfg");
  std::cout << "scene " << scene.x.rows << "x" << scene.x.cols << "x" << scene.x.bands() << " K=" << sc.k
            << " achieved_snr_db=" << hsu::format_double(scene.achieved_snr_db) << "\n";
  return 0;
}

int cmd_unmix(const Common& c, const std::string& cube_path, std::int64_t k_flag, const std::string& variant_flag) {
  if (cube_path.empty() || c.out.empty()) throw UsageError("unmix: --cube and --out are required");
  const hsu::KvDocument cfg = load_config(c.config);
  const hsu::Variant v = variant_of(variant_flag.empty() ? cfg.get_string("variant", "nmf") : variant_flag);
  const hsu::Index k = k_flag > 0 ? k_flag : cfg.get_int("K", 0);
  if (k < 2) throw UsageError("unmix: endmember count --k must be >= 2");
  const hsu::SolverConfig config = hsu::solver_config_from_kv(cfg);
  const hsu::GraphSpec graph = hsu::graph_spec_from_kv(cfg);
  const std::uint64_t seed = seed_of(c, cfg);

  const hsu::HyperCube x = load_input_cube(cube_path, c.preset);
  const hsu::UnmixRun run = hsu::run_unmix(x, k, v, config, graph, seed);

  ensure_parent(c.out);
  hsu::GroundTruth est{run.result.endmembers, run.result.abundances, {}};
  hsu::save_ground_truth(est, c.out, x.rows, x.cols);
  hsu::write_text_file(c.out + ".history.csv", history_csv(run.result));

  hsu::KvDocument prov = hsu::solver_config_to_kv(config);
  hsu::graph_spec_to_kv(graph, prov);
  prov.set("cube", cube_path);
  prov.set("preset", c.preset);
  prov.set("variant", std::string(hsu::to_string(v)));
  prov.set("K", static_cast<std::int64_t>(k));
  prov.set("seed", seed);
  prov.set("iterations", run.result.diagnostics.iterations);
  prov.set("converged", run.result.diagnostics.converged);
  prov.set("asc_delta_used", run.result.diagnostics.asc_delta);
  if (v == hsu::Variant::cenmf) prov.set("sigma_used", run.result.diagnostics.sigma);
  for (std::size_t i = 0; i < run.result.diagnostics.notes.size(); ++i) {
    prov.set("note." + std::to_string(i + 1), run.result.diagnostics.notes[i]);
  }
  prov.write_file(c.out + ".run.cfg");
  std::cout << hsu::to_string(v) << ": " << run.result.diagnostics.iterations << " iterations, objective "
            << hsu::format_double(run.result.objective_history.back()) << "\n";
  return 0;
}

hsu::AbundanceMethod method_from(const hsu::KvDocument& cfg) {
  hsu::AbundanceMethod m;
  const std::string kind = cfg.get_string("method", "fcls");
  if (kind == "fcls") {
    m.kind = hsu::AbundanceMethod::Kind::fcls;
  } else if (kind == "solver") {
    m.kind = hsu::AbundanceMethod::Kind::constrained_solver;
  } else {
    throw UsageError("unknown abundance method '" + kind + "' (fcls | solver)");
  }
  m.variant = variant_of(cfg.get_string("variant", "nmf"));
  m.config = hsu::solver_config_from_kv(cfg);
  m.graph = hsu::graph_spec_from_kv(cfg);
  m.uniform_init = cfg.get_bool("uniform_init", false);
  return m;
}

int cmd_label(const Common& c, const std::string& cube_path, const std::string& seeds_path,
              const std::string& labels_path) {
  if (cube_path.empty() || c.out.empty()) throw UsageError("label: --cube and --out are required");
  if (seeds_path.empty() == labels_path.empty()) throw UsageError("label: give exactly one of --seeds or --labels");
  const hsu::KvDocument cfg = load_config(c.config);
  const hsu::HyperCube x = load_input_cube(cube_path, c.preset);
  ensure_parent(c.out);

  if (!labels_path.empty()) {
    const hsu::LabelGrid grid = hsu::read_label_grid(labels_path);
    if (grid.rows != x.rows || grid.cols != x.cols) throw hsu::ShapeError("label grid size differs from the cube");
    hsu::HycOptions o;
    const std::string mode = cfg.get_string("hyc_mode", "fixed");
    if (mode == "fixed") {
      o.mode = hsu::HycOptions::Mode::fixed_endmembers;
    } else if (mode == "refine") {
      o.mode = hsu::HycOptions::Mode::refine_endmembers;
    } else {
      throw UsageError("unknown hyc_mode '" + mode + "' (fixed | refine)");
    }
    o.base = variant_of(cfg.get_string("variant", "nmf"));
    o.config = hsu::solver_config_from_kv(cfg);
    o.alpha = cfg.get_double("anchor_alpha", 1.0);
    o.median = cfg.get_bool("median", false);
    o.purity = cfg.get_double("purity", o.purity);
    o.graph = hsu::graph_spec_from_kv(cfg);
    const hsu::GroundTruth gt = hsu::hyc_transform(x, hsu::labels_from_grid(grid.values), o);
    hsu::save_ground_truth(gt, c.out, x.rows, x.cols);
    std::cout << "classes " << gt.m.count() << ", " << gt.notes.front() << "\n";
    return 0;
  }

  const hsu::EndmemberSeeds seeds = hsu::read_seeds(seeds_path, x.cols);
  hsu::VerifyCriteria crit;
  crit.min_correlation = cfg.get_double("min_correlation", crit.min_correlation);
  crit.max_reconstruction_rmse = cfg.get_double("max_rmse", crit.max_reconstruction_rmse);
  crit.probe_count = cfg.get_int("probes", crit.probe_count);
  crit.max_rounds = static_cast<int>(cfg.get_int("rounds", crit.max_rounds));
  crit.seed = seed_of(c, cfg);
  const hsu::LabelingResult res = hsu::label_ground_truth(x, seeds, method_from(cfg), crit);
  hsu::save_ground_truth(res.gt, c.out, x.rows, x.cols);

  hsu::KvDocument rep;
  rep.set("verified", res.verified);
  rep.set("best_round", res.best_round + 1);
  for (std::size_t i = 0; i < res.rounds.size(); ++i) {
    const auto& r = res.rounds[i];
    rep.set("round." + std::to_string(i + 1),
            "correlation=" + hsu::format_double(r.correlation) +
                " reconstruction_rmse=" + hsu::format_double(r.reconstruction_rmse) +
                (r.passed ? " passed" : " failed"));
  }
  rep.write_file(c.out + ".label.cfg");
  std::cout << (res.verified ? "verified" : "unverified") << " after " << res.rounds.size() << " round(s)\n";
  return res.verified ? 0 : kExitRuntime;
}

int cmd_evaluate(const Common& c, const std::string& gt_path, const std::string& est_path) {
  if (gt_path.empty() || est_path.empty()) throw UsageError("evaluate: --gt and --est are required");
  const hsu::GroundTruth gt = hsu::load_ground_truth(gt_path);
  const hsu::GroundTruth est = hsu::load_ground_truth(est_path);
  const hsu::BenchmarkReport r = hsu::evaluate(gt, est.m, est.a);
  hsu::ReportColumn col{fs::path(est_path).filename().string(), r.sad, r.rmse, 1, 0};
  hsu::KvDocument prov;
  prov.set("gt", gt_path);
  prov.set("est", est_path);
  const std::string csv = hsu::format_report_csv(r.names, {col}, prov);
  if (!c.out.empty()) {
    ensure_parent(c.out);
    hsu::write_text_file(c.out, csv);
  }
  std::cout << csv;
  return 0;
}

std::vector<double> grid_of(const std::string& spec) {
  if (spec.empty() || spec == "default") return hsu::default_coarse_grid();
  std::vector<double> g;
  for (const auto& t : hsu::split_list(spec)) {
    try {
      g.push_back(hsu::parse_double(t));
    } catch (const hsu::ParseError&) {
      throw UsageError("bad --grid value '" + t + "'");
    }
  }
  if (g.empty()) throw UsageError("empty --grid");
  return g;
}

int cmd_bench(const Common& c, const std::string& cube_path, const std::string& gt_path,
              const std::string& variants, std::optional<int> reps, const std::string& grid) {
  if (cube_path.empty() || gt_path.empty() || c.out.empty()) {
    throw UsageError("bench: --cube, --gt and --out are required");
  }
  const hsu::KvDocument cfg = load_config(c.config);
  hsu::BenchOptions o;
  o.variants.clear();
  for (const auto& t : hsu::split_list(variants.empty() ? cfg.get_string("variants", "nmf") : variants)) {
    o.variants.push_back(variant_of(t));
  }
  o.lambda_grid = grid_of(grid.empty() ? cfg.get_string("grid", "") : grid);
  o.alpha_grid = grid_of(cfg.get_string("alpha_grid", ""));
  o.fine_points = static_cast<int>(cfg.get_int("fine_points", o.fine_points));
  o.tuning_repetitions = static_cast<int>(cfg.get_int("tuning_repetitions", o.tuning_repetitions));
  o.repetitions = reps ? *reps : static_cast<int>(cfg.get_int("repetitions", o.repetitions));
  o.seed = seed_of(c, cfg);
  o.base = hsu::solver_config_from_kv(cfg);
  o.graph = hsu::graph_spec_from_kv(cfg);
  o.include_vca = cfg.get_bool("include_vca", true);
  if (o.repetitions < 1) throw UsageError("bench: --reps must be >= 1");

  const hsu::HyperCube x = load_input_cube(cube_path, c.preset);
  hsu::GroundTruth gt = hsu::load_ground_truth(gt_path);
  if (!c.preset.empty()) {
    const auto& list = hsu::band_removal_preset(c.preset);
    if (gt.m.bands() == list.original_bands) {
      hsu::HyperCube m(gt.m.data, 1, gt.m.count());
      gt.m = hsu::EndmemberMatrix(hsu::apply_band_removal(m, list).data, gt.m.names);
    }
  }

  hsu::BenchResult res = hsu::run_bench(x, gt, o);
  const fs::path dir(c.out);
  fs::create_directories(dir / "runs");
  hsu::KvDocument prov = res.provenance;
  prov.set("cube", cube_path);
  prov.set("gt", gt_path);
  prov.set("preset", c.preset);
  std::vector<hsu::ReportColumn> columns;
  for (const auto& vo : res.outcomes) {
    hsu::ReportColumn col = vo.column;
    if (col.runs == 0) {
      col.sad = hsu::Vector::Constant(gt.m.count(), std::numeric_limits<double>::quiet_NaN());
      col.rmse = col.sad;
    }
    columns.push_back(col);
    for (std::size_t i = 0; i < vo.runs.size(); ++i) {
      hsu::KvDocument rp;
      rp.set("method", vo.method);
      rp.set("seed", vo.run_seeds[i]);
      rp.set("lambda", vo.lambda);
      rp.set("alpha", vo.alpha);
      const hsu::ReportColumn one{vo.method, vo.runs[i].sad, vo.runs[i].rmse, 1, 0};
      hsu::write_text_file((dir / "runs" / (vo.method + "_" + std::to_string(vo.run_seeds[i]) + ".csv")).string(),
                           hsu::format_report_csv(res.endmember_names, {one}, rp));
    }
    for (const auto& f : vo.failures) std::cerr << vo.method << ": run failed: " << f << "\n";
  }
  const std::string csv = hsu::format_report_csv(res.endmember_names, columns, prov);
  hsu::write_text_file((dir / "report.csv").string(), csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral unmixing toolkit"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "key = value configuration file");
    sub->add_option("--seed", common.seed, "random seed (overrides the config)");
    sub->add_option("--out", common.out, "output path or base name");
    sub->add_option("--preset", common.preset, "band-removal preset applied to the input cube");
  };

  std::string cube, gt, est, seeds, labels, variant, grid;
  std::int64_t k = 0;
  std::optional<int> reps;

  auto* gen = app.add_subcommand("generate", "write a synthetic scene and its ground truth");
  add_common(gen);

  auto* unmix = app.add_subcommand("unmix", "VCA/FCLS initialisation followed by an NMF-family solve");
  add_common(unmix);
  unmix->add_option("--cube", cube, "input cube base name");
  unmix->add_option("--k", k, "endmember count");
  unmix->add_option("--variant", variant, "solver variant");

  auto* label = app.add_subcommand("label", "produce ground truth from seed pixels or a class-label grid");
  add_common(label);
  label->add_option("--cube", cube, "input cube base name");
  label->add_option("--seeds", seeds, "seed pixel file");
  label->add_option("--labels", labels, "integer class-label grid");

  auto* eval = app.add_subcommand("evaluate", "score estimated endmembers/abundances against ground truth");
  add_common(eval);
  eval->add_option("--gt", gt, "ground-truth base name");
  eval->add_option("--est", est, "estimate base name");

  auto* bench = app.add_subcommand("bench", "grid search and repeated runs, summarised as a report table");
  add_common(bench);
  bench->add_option("--cube", cube, "input cube base name");
  bench->add_option("--gt", gt, "ground-truth base name");
  bench->add_option("--variant", variant, "comma-separated solver variants");
  bench->add_option("--reps", reps, "repetitions at the selected weights");
  bench->add_option("--grid", grid, "'default' or comma-separated lambda values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(common);
    if (unmix->parsed()) return cmd_unmix(common, cube, k, variant);
    if (label->parsed()) return cmd_label(common, cube, seeds, labels);
    if (eval->parsed()) return cmd_evaluate(common, gt, est);
    if (bench->parsed()) return cmd_bench(common, cube, gt, variant, reps, grid);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hsu::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
