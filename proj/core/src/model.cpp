#include "hsu/model.hpp"

#include "hsu/error.hpp"

#include <cmath>

namespace hsu {

HyperCube::HyperCube(Matrix d, Index r, Index c) : data(std::move(d)), rows(r), cols(c) {
  band_ids.resize(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < band_ids.size(); ++i) band_ids[i] = static_cast<int>(i) + 1;
  validate();
}

void HyperCube::validate() const {
  if (rows < 0 || cols < 0 || rows * cols != data.cols()) {
    throw ShapeError("cube grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " does not match pixel count " + std::to_string(data.cols()));
  }
  if (static_cast<Index>(band_ids.size()) != data.rows()) {
    throw ShapeError("band_ids has " + std::to_string(band_ids.size()) + " entries for " +
                     std::to_string(data.rows()) + " bands");
  }
  if (!wavelengths.empty() && static_cast<Index>(wavelengths.size()) != data.rows()) {
    throw ShapeError("wavelengths length does not match band count");
  }
}

bool HyperCube::is_nonnegative() const { return data.size() == 0 || data.minCoeff() >= 0.0; }

EndmemberMatrix::EndmemberMatrix(Matrix d, std::vector<std::string> n)
    : data(std::move(d)), names(std::move(n)) {
  if (names.empty()) names = default_endmember_names(data.cols());
  if (static_cast<Index>(names.size()) != data.cols()) {
    throw ShapeError("endmember names do not match endmember count");
  }
}

double AbundanceMatrix::max_sum_deviation() const {
  if (data.cols() == 0) return 0.0;
  return (data.colwise().sum().array() - 1.0).abs().maxCoeff();
}

std::vector<std::string> default_endmember_names(Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) names.push_back("#" + std::to_string(k + 1));
  return names;
}

LossKind LossKind::correntropy(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("correntropy bandwidth must be > 0");
  return {Tag::correntropy, sigma};
}

Matrix reconstruct(const EndmemberMatrix& endmembers, const AbundanceMatrix& abundances) {
  if (endmembers.count() != abundances.count()) {
    throw ShapeError("reconstruct: M has " + std::to_string(endmembers.count()) +
                     " columns but A has " + std::to_string(abundances.count()) + " rows");
  }
  return endmembers.data * abundances.data;
}

Vector residual_row_norms_sq(const Matrix& x, const Matrix& xhat) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) {
    throw ShapeError("residual: shape mismatch");
  }
  const Matrix r = x - xhat;
  return r.rowwise().squaredNorm();
}

double loss(const Matrix& x, const Matrix& xhat, const LossKind& kind) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) {
    throw ShapeError("loss: shape mismatch");
  }
  switch (kind.tag) {
    case LossKind::Tag::frobenius:
      return 0.5 * (x - xhat).squaredNorm();
    case LossKind::Tag::l21:
      return residual_row_norms_sq(x, xhat).array().sqrt().sum();
    case LossKind::Tag::correntropy: {
      if (!(kind.sigma > 0.0)) throw InvalidArgument("correntropy bandwidth must be > 0");
      const double s2 = kind.sigma * kind.sigma;
      return -(-residual_row_norms_sq(x, xhat).array() / s2).exp().sum();
    }
  }
  return 0.0;
}

AbundanceMatrix project_sum_to_one(const AbundanceMatrix& abundances) {
  Matrix out = abundances.data;
  for (Index n = 0; n < out.cols(); ++n) {
    const double s = out.col(n).sum();
    if (!(s > 0.0)) {
      throw DegenerateError("project_sum_to_one: column " + std::to_string(n) + " sums to zero");
    }
    out.col(n) /= s;
  }
  return AbundanceMatrix(std::move(out));
}

AscSystem augment_asc(const Matrix& x, const Matrix& m, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("augment_asc: delta must be > 0");
  if (x.rows() != m.rows()) throw ShapeError("augment_asc: X and M band counts differ");
  AscSystem out;
  out.x.resize(x.rows() + 1, x.cols());
  out.x.topRows(x.rows()) = x;
  out.x.row(x.rows()).setConstant(delta);
  out.m.resize(m.rows() + 1, m.cols());
  out.m.topRows(m.rows()) = m;
  out.m.row(m.rows()).setConstant(delta);
  return out;
}

double default_asc_delta(const Matrix& x) {
  const double mean = x.size() == 0 ? 0.0 : x.mean();
  return mean > 0.0 ? 15.0 * mean : 15.0;
}

}  // namespace hsu
