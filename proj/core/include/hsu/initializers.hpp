#pragma once

// Geometric endmember extraction (VCA) and constrained least-squares
// abundance estimation (NNLS, FCLS).

#include "hsu/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hsu {

// Lawson-Hanson nonnegative least squares, min ||A x - b|| s.t. x >= 0,
// driven by the Gram form G = A'A, c = A'b so one factorisation of G can be
// shared across many right-hand sides.
Vector nnls_gram(const Matrix& gram, const Vector& rhs, double tol = 1e-10);
Vector nnls(const Matrix& a, const Vector& b, double tol = 1e-10);

// Exact minimiser of 0.5 a'G a - c'a over the probability simplex
// {a >= 0, sum(a) = 1}, by a primal active-set method. Equivalent to
// min ||x - M a||^2 on the simplex when G = M'M and c = M'x.
Vector simplex_least_squares(const Matrix& gram, const Vector& rhs);

struct FclsOptions {
  enum class Method {
    active_set,  // exact simplex-constrained solve
    asc_nnls,    // NNLS on the delta-augmented system (soft sum-to-one)
  };
  Method method = Method::active_set;
  double asc_delta = 0.0;  // asc_nnls only; <= 0 selects default_asc_delta(X)
};

struct FclsReport {
  bool underdetermined = false;  // K > L + 1
  bool regularized = false;      // M'M was rank deficient, a ridge was added
  std::vector<std::string> notes;
};

// Per-pixel fully constrained least squares. Columns of the result are on
// the simplex (exactly for active_set, approximately for asc_nnls).
AbundanceMatrix fcls(const Matrix& x, const EndmemberMatrix& endmembers,
                     const FclsOptions& options = {}, FclsReport* report = nullptr);
AbundanceMatrix fcls(const HyperCube& x, const EndmemberMatrix& endmembers,
                     const FclsOptions& options = {}, FclsReport* report = nullptr);

struct VcaResult {
  EndmemberMatrix endmembers;      // L x K, columns copied from X
  std::vector<Index> pixel_indices;
  double estimated_snr_db = 0.0;   // inf without residual noise; NaN when unusable
  bool used_projective = false;    // false: PCA projection to K-1 dims
};

// Vertex component analysis. Throws InvalidArgument unless 2 <= K <= min(L, N)
// and DegenerateError when the data spans fewer than K directions.
VcaResult vca(const Matrix& x, Index count, std::uint64_t seed);
VcaResult vca(const HyperCube& x, Index count, std::uint64_t seed);

struct InitPair {
  EndmemberMatrix endmembers;
  AbundanceMatrix abundances;
  std::vector<Index> pixel_indices;
};

// VCA endmembers followed by FCLS abundances.
InitPair init_pair(const HyperCube& x, Index count, std::uint64_t seed);

struct PcaBasis {
  Matrix basis;  // L x d, orthonormal columns, leading principal directions
  Vector mean;   // L
};

PcaBasis principal_subspace(const Matrix& x, Index dims);

}  // namespace hsu
