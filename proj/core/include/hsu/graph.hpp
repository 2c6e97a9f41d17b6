#pragma once

// Pixel-affinity graphs for the graph-regularised solvers.

#include "hsu/model.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace hsu {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct GraphSpec {
  enum class Mode {
    spectral,          // k-NN over all pixels by spectral distance
    spectral_spatial,  // k-NN restricted to pixels within spatial_radius on the grid
  };
  Mode mode = Mode::spectral;
  Index k_neighbors = 8;
  double sigma_w = 0.0;         // heat-kernel bandwidth; <= 0 selects the median neighbour distance
  double spatial_radius = 2.0;  // Euclidean grid distance, in pixels
};

struct LaplacianPair {
  SparseMatrix weights;    // W, N x N, symmetric, zero diagonal
  Vector degree;           // diag(D), column sums of W
  SparseMatrix laplacian;  // D - W
  double sigma_w = 0.0;    // bandwidth actually used
  std::vector<std::string> notes;
};

// W_ij = exp(-||x_i - x_j||^2 / sigma_w^2) for j among the k nearest
// candidates of i, symmetrised by max. Ties in distance go to the lower index.
LaplacianPair build_graph(const HyperCube& x, const GraphSpec& spec);

// Tr(A L A') for a K x N matrix A.
double graph_smoothness(const Matrix& a, const SparseMatrix& laplacian);

}  // namespace hsu
