#pragma once

// Linear mixing model X ~ M A and the matrix machinery every solver shares.
//
// Layout: a cube is stored as an L x N matrix with one pixel spectrum per
// column. Pixels are numbered row-major over the image grid, so pixel
// (r, c) is column r * cols + c.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hsu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Additive guard applied to every multiplicative-update denominator.
inline constexpr double kDenominatorGuard = 1e-12;

struct HyperCube {
  Matrix data;                      // L x N reflectance
  Index rows = 0;                   // image grid height
  Index cols = 0;                   // image grid width
  std::vector<int> band_ids;        // 1-based original band numbers, length L
  std::vector<double> wavelengths;  // empty, or one value (nm) per band

  HyperCube() = default;
  // Band ids default to 1..L. Throws ShapeError if rows * cols != N.
  HyperCube(Matrix data, Index rows, Index cols);

  Index bands() const { return data.rows(); }
  Index pixels() const { return data.cols(); }

  // Checks the shape invariants. Nonnegativity is not enforced here because
  // noisy synthetic cubes are allowed to dip below zero.
  void validate() const;
  bool is_nonnegative() const;
};

struct EndmemberMatrix {
  Matrix data;  // L x K
  std::vector<std::string> names;

  EndmemberMatrix() = default;
  explicit EndmemberMatrix(Matrix data, std::vector<std::string> names = {});

  Index bands() const { return data.rows(); }
  Index count() const { return data.cols(); }
};

struct AbundanceMatrix {
  Matrix data;  // K x N

  AbundanceMatrix() = default;
  explicit AbundanceMatrix(Matrix data) : data(std::move(data)) {}

  Index count() const { return data.rows(); }
  Index pixels() const { return data.cols(); }

  // Largest |1 - column sum| over all columns.
  double max_sum_deviation() const;
};

std::vector<std::string> default_endmember_names(Index count);

// Reference endmembers and abundances of a scene.
struct GroundTruth {
  EndmemberMatrix m;
  AbundanceMatrix a;
  std::vector<std::string> notes;
};

struct LossKind {
  enum class Tag { frobenius, l21, correntropy };
  Tag tag = Tag::frobenius;
  double sigma = 0.0;  // correntropy bandwidth, reflectance units

  static LossKind frobenius() { return {Tag::frobenius, 0.0}; }
  static LossKind l21() { return {Tag::l21, 0.0}; }
  // Throws InvalidArgument unless sigma > 0.
  static LossKind correntropy(double sigma);
};

// Returns M * A. Throws ShapeError on an inner-dimension mismatch.
Matrix reconstruct(const EndmemberMatrix& endmembers, const AbundanceMatrix& abundances);

// frobenius:   0.5 * ||X - Xhat||_F^2
// l21:         sum over bands of the residual row 2-norm
// correntropy: sum over bands of -exp(-||residual row||^2 / sigma^2), in [-L, 0]
double loss(const Matrix& x, const Matrix& xhat, const LossKind& kind);

// Per-row squared residual norms ||x^l - xhat^l||^2.
Vector residual_row_norms_sq(const Matrix& x, const Matrix& xhat);

// Divides every column by its sum. Throws DegenerateError on an all-zero column.
AbundanceMatrix project_sum_to_one(const AbundanceMatrix& abundances);

struct AscSystem {
  Matrix x;  // (L+1) x N, last row delta
  Matrix m;  // (L+1) x K, last row delta
};

// Appends a constant row delta to X and M so that a least-squares fit of the
// augmented system penalises delta^2 * (1 - sum(a))^2. Throws unless delta > 0.
AscSystem augment_asc(const Matrix& x, const Matrix& m, double delta);

// 15 x mean(X), the default sum-to-one strength.
double default_asc_delta(const Matrix& x);

}  // namespace hsu
