#pragma once

// Endmember and abundance accuracy metrics.

#include "hsu/model.hpp"

#include <string>
#include <vector>

namespace hsu {

// Spectral angle in radians, in [0, pi]. Throws ShapeError on a length
// mismatch and InvalidArgument on a zero vector.
double sad(const Vector& m, const Vector& m_hat);

// sqrt(mean((a - a_hat)^2)). Throws ShapeError on a length mismatch.
double rmse(const Vector& a, const Vector& a_hat);

// C(i, j) = sad(gt column i, est column j).
Matrix sad_matrix(const Matrix& m_gt, const Matrix& m_est);

// Assignment of estimated to reference endmembers minimising total SAD.
// perm[k] is the estimated column matched to reference column k. Among
// optimal assignments (within 1e-12) the lexicographically smallest wins.
std::vector<Index> match_endmembers(const Matrix& m_gt, const Matrix& m_est);

struct BenchmarkReport {
  std::vector<std::string> names;  // reference endmember names
  std::vector<Index> permutation;
  Vector sad;   // K, radians
  Vector rmse;  // K
  double mean_sad = 0.0;
  double mean_rmse = 0.0;
  bool abundances_projected = true;  // estimated A was normalised to sum to one first
};

// Matches endmembers by SAD and scores the matched abundance rows by RMSE.
BenchmarkReport evaluate(const GroundTruth& gt, const EndmemberMatrix& m_est, const AbundanceMatrix& a_est,
                         bool project_abundances = true);

// Spearman rank correlation with average ranks for ties; 0 when either
// sequence is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hsu
