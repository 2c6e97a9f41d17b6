#include "hsu/graph.hpp"

#include "hsu/error.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace hsu {
namespace {

struct Edge {
  Index from;
  Index to;
  double dist_sq;
};

using Candidate = std::pair<double, Index>;  // (squared distance, index); lexicographic order breaks ties low

void keep_nearest(std::vector<Candidate>& cands, Index k) {
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end());
  cands.resize(keep);
}

std::vector<Edge> spectral_edges(const Matrix& x, Index k) {
  const Index n = x.cols();
  const Vector norms = x.colwise().squaredNorm().transpose();
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n * k));
  constexpr Index kBlock = 256;
  std::vector<Candidate> cands;
  for (Index j0 = 0; j0 < n; j0 += kBlock) {
    const Index b = std::min(kBlock, n - j0);
    const Matrix gram = x.transpose() * x.middleCols(j0, b);  // N x b
    for (Index jj = 0; jj < b; ++jj) {
      const Index j = j0 + jj;
      cands.clear();
      for (Index i = 0; i < n; ++i) {
        if (i == j) continue;
        cands.emplace_back(std::max(0.0, norms(i) + norms(j) - 2.0 * gram(i, jj)), i);
      }
      keep_nearest(cands, k);
      for (const auto& [d, i] : cands) {
        edges.push_back({j, i, (x.col(i) - x.col(j)).squaredNorm()});
      }
    }
  }
  return edges;
}

std::vector<Edge> spatial_edges(const HyperCube& cube, Index k, double radius) {
  const Index rows = cube.rows;
  const Index cols = cube.cols;
  const auto reach = static_cast<Index>(std::floor(radius));
  std::vector<Edge> edges;
  std::vector<Candidate> cands;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index j = r * cols + c;
      cands.clear();
      for (Index dr = -reach; dr <= reach; ++dr) {
        for (Index dc = -reach; dc <= reach; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (static_cast<double>(dr * dr + dc * dc) > radius * radius) continue;
          const Index rr = r + dr;
          const Index cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const Index i = rr * cols + cc;
          cands.emplace_back((cube.data.col(i) - cube.data.col(j)).squaredNorm(), i);
        }
      }
      keep_nearest(cands, k);
      for (const auto& [d, i] : cands) edges.push_back({j, i, d});
    }
  }
  return edges;
}

}  // namespace

LaplacianPair build_graph(const HyperCube& x, const GraphSpec& spec) {
  x.validate();
  const Index n = x.pixels();
  if (spec.k_neighbors < 1) throw InvalidArgument("build_graph: k_neighbors must be >= 1");
  if (n < spec.k_neighbors + 1) {
    throw InvalidArgument("build_graph: need at least k_neighbors + 1 pixels");
  }
  if (spec.mode == GraphSpec::Mode::spectral_spatial && !(spec.spatial_radius >= 1.0)) {
    throw InvalidArgument("build_graph: spatial_radius must be >= 1");
  }

  const std::vector<Edge> edges = spec.mode == GraphSpec::Mode::spectral
                                      ? spectral_edges(x.data, spec.k_neighbors)
                                      : spatial_edges(x, spec.k_neighbors, spec.spatial_radius);

  LaplacianPair out;
  double sigma = spec.sigma_w;
  if (!(sigma > 0.0)) {
    std::vector<double> dist;
    dist.reserve(edges.size());
    for (const auto& e : edges) dist.push_back(std::sqrt(e.dist_sq));
    if (!dist.empty()) {
      const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
      std::nth_element(dist.begin(), mid, dist.end());
      sigma = *mid;
      if (!(sigma > 0.0)) sigma = *std::max_element(dist.begin(), dist.end());
    }
    if (!(sigma > 0.0)) {
      sigma = 1.0;
      out.notes.push_back("all neighbour distances are zero; uniform weights");
    }
  }
  out.sigma_w = sigma;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges.size() * 2);
  const double s2 = sigma * sigma;
  for (const auto& e : edges) {
    const double w = std::exp(-e.dist_sq / s2);
    trips.emplace_back(e.from, e.to, w);
    trips.emplace_back(e.to, e.from, w);
  }
  out.weights.resize(n, n);
  out.weights.setFromTriplets(trips.begin(), trips.end(),
                              [](double a, double b) { return std::max(a, b); });
  out.weights.makeCompressed();

  out.degree = Vector::Zero(n);
  for (Index c = 0; c < out.weights.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(out.weights, c); it; ++it) out.degree(c) += it.value();
  }
  SparseMatrix d(n, n);
  d.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Index i = 0; i < n; ++i) d.insert(i, i) = out.degree(i);
  out.laplacian = d - out.weights;
  out.laplacian.makeCompressed();
  return out;
}

double graph_smoothness(const Matrix& a, const SparseMatrix& laplacian) {
  if (a.cols() != laplacian.rows()) throw ShapeError("graph_smoothness: A and L sizes differ");
  return (a * laplacian).cwiseProduct(a).sum();
}

}  // namespace hsu
