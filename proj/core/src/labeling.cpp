#include "hsu/labeling.hpp"

#include "hsu/error.hpp"
#include "hsu/evaluation.hpp"
#include "hsu/initializers.hpp"
#include "hsu/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace hsu {
namespace {

constexpr std::uint64_t kProbeStream = 0x9B0BE;

double column_angle_or_zero(const Matrix& x, Index i, Index j) {
  const double ni = x.col(i).norm();
  const double nj = x.col(j).norm();
  if (!(ni > 0.0) || !(nj > 0.0)) return 0.0;
  return sad(x.col(i), x.col(j));
}

// Per-band NNLS: min ||X - M A|| over M >= 0 with A fixed.
Matrix refit_endmembers(const Matrix& x, const Matrix& a) {
  const Matrix gram = a * a.transpose();
  const Matrix rhs = a * x.transpose();  // K x L
  Matrix m(x.rows(), a.rows());
  for (Index l = 0; l < x.rows(); ++l) m.row(l) = nnls_gram(gram, rhs.col(l)).transpose();
  return m;
}

bool better(const VerificationReport& a, const VerificationReport& b) {
  if (a.passed != b.passed) return a.passed;
  return a.correlation > b.correlation;
}

std::vector<Index> purest_pixels(const HyperCube& x, const std::vector<Index>& pixels, double fraction) {
  Vector mean = Vector::Zero(x.bands());
  for (Index n : pixels) mean += x.data.col(n);
  mean /= static_cast<double>(pixels.size());
  std::vector<std::pair<double, Index>> ranked;
  ranked.reserve(pixels.size());
  for (Index n : pixels) ranked.emplace_back(sad(mean, x.data.col(n)), n);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pixels.size())));
  std::vector<Index> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void ClassLabelMap::validate() const {
  for (Index n = 0; n < y.cols(); ++n) {
    const auto ones = (y.col(n).array() == 1.0).count();
    const auto zeros = (y.col(n).array() == 0.0).count();
    if (ones != 1 || ones + zeros != y.rows()) {
      throw InvalidArgument("class labels: column " + std::to_string(n) + " is not one-hot");
    }
  }
  if (!class_values.empty() && static_cast<Index>(class_values.size()) != y.rows()) {
    throw ShapeError("class labels: class_values length differs from the class count");
  }
}

ClassLabelMap labels_from_grid(const std::vector<int>& grid) {
  std::map<int, Index> rows;
  for (int v : grid) rows.emplace(v, 0);
  ClassLabelMap out;
  Index r = 0;
  for (auto& [value, row] : rows) {
    row = r++;
    out.class_values.push_back(value);
  }
  out.y = Matrix::Zero(r, static_cast<Index>(grid.size()));
  for (std::size_t n = 0; n < grid.size(); ++n) out.y(rows.at(grid[n]), static_cast<Index>(n)) = 1.0;
  return out;
}

EndmemberMatrix label_endmembers(const HyperCube& x, const EndmemberSeeds& seeds, bool median) {
  if (seeds.empty()) throw InvalidArgument("label_endmembers: no seeds");
  Matrix m(x.bands(), static_cast<Index>(seeds.size()));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const EndmemberSeed& s = seeds[k];
    const auto col = static_cast<Index>(k);
    names.push_back(s.name.empty() ? "#" + std::to_string(k + 1) : s.name);
    if (s.signature) {
      if (s.signature->size() != x.bands()) throw ShapeError("label_endmembers: signature length differs from L");
      m.col(col) = *s.signature;
      continue;
    }
    if (s.pixels.empty()) throw InvalidArgument("label_endmembers: seed '" + names.back() + "' has no pixels");
    for (Index p : s.pixels) {
      if (p < 0 || p >= x.pixels()) throw InvalidArgument("label_endmembers: pixel index out of range");
    }
    if (!median) {
      Vector sum = Vector::Zero(x.bands());
      for (Index p : s.pixels) sum += x.data.col(p);
      m.col(col) = sum / static_cast<double>(s.pixels.size());
    } else {
      std::vector<double> vals(s.pixels.size());
      for (Index l = 0; l < x.bands(); ++l) {
        for (std::size_t i = 0; i < s.pixels.size(); ++i) vals[i] = x.data(l, s.pixels[i]);
        std::sort(vals.begin(), vals.end());
        const std::size_t h = vals.size() / 2;
        m(l, col) = vals.size() % 2 ? vals[h] : 0.5 * (vals[h - 1] + vals[h]);
      }
    }
    m.col(col) = m.col(col).cwiseMax(0.0);
  }
  return EndmemberMatrix(std::move(m), std::move(names));
}

AbundanceMatrix label_abundances(const HyperCube& x, const EndmemberMatrix& m, const AbundanceMethod& method) {
  if (method.kind == AbundanceMethod::Kind::fcls) return fcls(x, m);

  SolverConfig config = method.config;
  config.update_endmembers = false;
  const Index k = m.count();
  AbundanceMatrix a0 = method.uniform_init
                           ? AbundanceMatrix(Matrix::Constant(k, x.pixels(), 1.0 / static_cast<double>(k)))
                           : fcls(x, m);
  SolveContext ctx;
  LaplacianPair graph;
  if (needs_graph(method.variant)) {
    graph = build_graph(x, method.graph);
    ctx.graph = &graph;
  }
  return solve(x.data, method.variant, config, m, a0, ctx).abundances;
}

VerificationReport verify_labeling(const HyperCube& x, const GroundTruth& gt, const VerifyCriteria& criteria) {
  if (criteria.probe_count < 2) throw InvalidArgument("verify_labeling: probe_count must be >= 2");
  if (gt.m.bands() != x.bands() || gt.a.pixels() != x.pixels() || gt.m.count() != gt.a.count()) {
    throw ShapeError("verify_labeling: ground truth does not match the cube");
  }
  const Index n = x.pixels();
  std::vector<Index> probes(static_cast<std::size_t>(n));
  std::iota(probes.begin(), probes.end(), 0);
  if (criteria.probe_count < n) {
    Rng rng = make_rng(criteria.seed, kProbeStream);
    for (Index i = 0; i < criteria.probe_count; ++i) {
      const auto j = i + static_cast<Index>(rng() % static_cast<std::uint64_t>(n - i));
      std::swap(probes[static_cast<std::size_t>(i)], probes[static_cast<std::size_t>(j)]);
    }
    probes.resize(static_cast<std::size_t>(criteria.probe_count));
    std::sort(probes.begin(), probes.end());
  }

  std::vector<double> spectral;
  std::vector<double> abundance;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::size_t j = i + 1; j < probes.size(); ++j) {
      spectral.push_back(-column_angle_or_zero(x.data, probes[i], probes[j]));
      abundance.push_back(-rmse(gt.a.data.col(probes[i]), gt.a.data.col(probes[j])));
    }
  }

  VerificationReport r;
  r.pairs = static_cast<Index>(spectral.size());
  r.correlation = spearman(spectral, abundance);
  Matrix resid = x.data;
  resid.noalias() -= gt.m.data * gt.a.data;
  r.reconstruction_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(x.data.size()));
  r.passed = r.correlation >= criteria.min_correlation && r.reconstruction_rmse <= criteria.max_reconstruction_rmse;
  return r;
}

LabelingResult label_ground_truth(const HyperCube& x, const EndmemberSeeds& seeds, const AbundanceMethod& method,
                                  const VerifyCriteria& criteria) {
  if (criteria.max_rounds < 1) throw InvalidArgument("label_ground_truth: max_rounds must be >= 1");
  LabelingResult out;
  GroundTruth current;
  current.m = label_endmembers(x, seeds);
  for (int round = 0; round < criteria.max_rounds; ++round) {
    if (round > 0) current.m = EndmemberMatrix(refit_endmembers(x.data, current.a.data), current.m.names);
    current.a = label_abundances(x, current.m, method);
    const VerificationReport rep = verify_labeling(x, current, criteria);
    out.rounds.push_back(rep);
    if (round == 0 || better(rep, out.rounds[static_cast<std::size_t>(out.best_round)])) {
      out.best_round = round;
      out.gt = current;
    }
    if (rep.passed) break;
  }
  out.verified = out.rounds[static_cast<std::size_t>(out.best_round)].passed;
  out.gt.notes.clear();
  out.gt.notes.push_back("rounds=" + std::to_string(out.rounds.size()) +
                         " best_round=" + std::to_string(out.best_round + 1) +
                         (out.verified ? " verified" : " unverified"));
  return out;
}

GroundTruth hyc_transform(const HyperCube& x, const ClassLabelMap& labels, const HycOptions& options) {
  labels.validate();
  if (labels.y.cols() != x.pixels()) throw ShapeError("hyc_transform: label map size differs from the cube");
  if (!(options.alpha >= 0.0)) throw InvalidArgument("hyc_transform: alpha must be >= 0");
  if (!(options.purity > 0.0 && options.purity <= 1.0)) throw InvalidArgument("hyc_transform: purity must be in (0, 1]");

  EndmemberSeeds seeds(static_cast<std::size_t>(labels.y.rows()));
  for (Index k = 0; k < labels.y.rows(); ++k) {
    auto& s = seeds[static_cast<std::size_t>(k)];
    s.name = labels.class_values.empty() ? "#" + std::to_string(k + 1)
                                         : "class " + std::to_string(labels.class_values[static_cast<std::size_t>(k)]);
    for (Index n = 0; n < labels.y.cols(); ++n) {
      if (labels.y(k, n) == 1.0) s.pixels.push_back(n);
    }
    if (s.pixels.empty()) throw InvalidArgument("hyc_transform: class " + s.name + " has no pixels");
    if (options.purity < 1.0) s.pixels = purest_pixels(x, s.pixels, options.purity);
  }

  GroundTruth gt;
  const EndmemberMatrix m0 = label_endmembers(x, seeds, options.median);
  const AbundanceMatrix f = fcls(x, m0);
  const AbundanceMatrix a0((f.data + options.alpha * labels.y) / (1.0 + options.alpha));

  SolverConfig config = options.config;
  config.update_endmembers = options.mode == HycOptions::Mode::refine_endmembers;
  SolveContext ctx;
  ctx.anchor = &labels.y;
  ctx.anchor_weight = options.alpha;
  LaplacianPair graph;
  if (needs_graph(options.base)) {
    graph = build_graph(x, options.graph);
    ctx.graph = &graph;
  }
  SolveResult r = solve(x.data, options.base, config, m0, a0, ctx);
  gt.m = std::move(r.endmembers);
  gt.a = std::move(r.abundances);
  gt.notes.push_back("hyc alpha=" + std::to_string(options.alpha) + " iterations=" +
                     std::to_string(r.diagnostics.iterations));
  return gt;
}

}  // namespace hsu
