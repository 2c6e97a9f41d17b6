#include "hsu/error.hpp"
#include "hsu/initializers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hsu {
namespace {

std::vector<Index> collect(const std::vector<bool>& mask) {
  std::vector<Index> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) idx.push_back(static_cast<Index>(i));
  }
  return idx;
}

Matrix gather(const Matrix& g, const std::vector<Index>& idx) {
  const Index f = static_cast<Index>(idx.size());
  Matrix out(f, f);
  for (Index i = 0; i < f; ++i) {
    for (Index j = 0; j < f; ++j) out(i, j) = g(idx[i], idx[j]);
  }
  return out;
}

// Unconstrained least squares restricted to the passive set.
Vector solve_passive(const Matrix& gram, const Vector& rhs, const std::vector<bool>& passive) {
  const auto idx = collect(passive);
  Vector out = Vector::Zero(rhs.size());
  if (idx.empty()) return out;
  const Matrix g = gather(gram, idx);
  Vector c(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) c(static_cast<Index>(i)) = rhs(idx[i]);
  Vector s;
  Eigen::LDLT<Matrix> ldlt(g);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      ldlt.vectorD().minCoeff() > 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    s = ldlt.solve(c);
  } else {
    s = g.completeOrthogonalDecomposition().solve(c);
  }
  for (std::size_t i = 0; i < idx.size(); ++i) out(idx[i]) = s(static_cast<Index>(i));
  return out;
}

}  // namespace

Vector nnls_gram(const Matrix& gram, const Vector& rhs, double tol) {
  const Index n = rhs.size();
  if (gram.rows() != n || gram.cols() != n) throw ShapeError("nnls: Gram/rhs size mismatch");
  const double scale = std::max({1.0, rhs.cwiseAbs().maxCoeff(), gram.diagonal().cwiseAbs().maxCoeff()});
  const double thr = tol * scale;

  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);
  Vector w = rhs - gram * x;
  const int max_outer = static_cast<int>(3 * n + 10);

  for (int outer = 0; outer < max_outer; ++outer) {
    Index j = -1;
    double best = thr;
    for (Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (!passive[u] && !blocked[u] && w(i) > best) {
        best = w(i);
        j = i;
      }
    }
    if (j < 0) break;
    passive[static_cast<std::size_t>(j)] = true;

    Vector s = solve_passive(gram, rhs, passive);
    if (s(j) <= 0.0) {
      // Rounding made the entering variable non-improving; never retry it.
      passive[static_cast<std::size_t>(j)] = false;
      blocked[static_cast<std::size_t>(j)] = true;
      continue;
    }
    for (int inner = 0; inner < max_outer; ++inner) {
      bool feasible = true;
      double alpha = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && s(i) <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, x(i) / (x(i) - s(i)));
        }
      }
      if (feasible) break;
      x += alpha * (s - x);
      for (Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (passive[u] && x(i) <= thr * 1e-6) {
          passive[u] = false;
          x(i) = 0.0;
        }
      }
      s = solve_passive(gram, rhs, passive);
    }
    x = s;
    for (Index i = 0; i < n; ++i) {
      if (!passive[static_cast<std::size_t>(i)]) x(i) = 0.0;
    }
    w = rhs - gram * x;
    std::fill(blocked.begin(), blocked.end(), false);
  }
  return x.cwiseMax(0.0);
}

Vector nnls(const Matrix& a, const Vector& b, double tol) {
  if (a.rows() != b.size()) throw ShapeError("nnls: A and b row counts differ");
  return nnls_gram(a.transpose() * a, a.transpose() * b, tol);
}

Vector simplex_least_squares(const Matrix& gram, const Vector& rhs) {
  const Index k = rhs.size();
  if (k == 0) throw ShapeError("simplex_least_squares: empty problem");
  if (gram.rows() != k || gram.cols() != k) throw ShapeError("simplex_least_squares: size mismatch");
  if (k == 1) return Vector::Ones(1);

  const double scale = std::max({1.0, rhs.cwiseAbs().maxCoeff(), gram.cwiseAbs().maxCoeff()});
  const double mu_tol = 1e-13 * scale;

  Vector a = Vector::Constant(k, 1.0 / static_cast<double>(k));
  std::vector<bool> free(static_cast<std::size_t>(k), true);
  const int max_iter = static_cast<int>(50 * k + 100);

  for (int iter = 0; iter < max_iter; ++iter) {
    const auto idx = collect(free);
    const Index f = static_cast<Index>(idx.size());

    // Minimiser on the face {a_i = 0 for bound i, sum(a) = 1}:
    // [G_FF -1; 1' 0] [z; nu] = [c_F; 1]
    Matrix kkt = Matrix::Zero(f + 1, f + 1);
    kkt.topLeftCorner(f, f) = gather(gram, idx);
    kkt.topRightCorner(f, 1).setConstant(-1.0);
    kkt.bottomLeftCorner(1, f).setConstant(1.0);
    Vector r(f + 1);
    for (Index i = 0; i < f; ++i) r(i) = rhs(idx[static_cast<std::size_t>(i)]);
    r(f) = 1.0;
    const Vector sol = kkt.fullPivLu().solve(r);
    const double nu = sol(f);

    bool feasible = true;
    double alpha = 1.0;
    Index blocking = -1;
    for (Index i = 0; i < f; ++i) {
      const Index g = idx[static_cast<std::size_t>(i)];
      const double z = sol(i);
      if (z < 0.0) {
        feasible = false;
        const double step = a(g) / (a(g) - z);
        if (step < alpha) {
          alpha = step;
          blocking = g;
        }
      }
    }

    if (feasible) {
      a.setZero();
      for (Index i = 0; i < f; ++i) a(idx[static_cast<std::size_t>(i)]) = sol(i);
      // Multipliers of the active bounds: mu_j = (G a - c)_j - nu.
      const Vector grad = gram * a - rhs;
      Index release = -1;
      double most_negative = -mu_tol;
      for (Index j = 0; j < k; ++j) {
        if (free[static_cast<std::size_t>(j)]) continue;
        const double mu = grad(j) - nu;
        if (mu < most_negative) {
          most_negative = mu;
          release = j;
        }
      }
      if (release < 0) break;
      free[static_cast<std::size_t>(release)] = true;
    } else {
      Vector z = Vector::Zero(k);
      for (Index i = 0; i < f; ++i) z(idx[static_cast<std::size_t>(i)]) = sol(i);
      a += alpha * (z - a);
      for (Index j = 0; j < k; ++j) {
        if (free[static_cast<std::size_t>(j)] && (j == blocking || a(j) <= 0.0)) {
          free[static_cast<std::size_t>(j)] = false;
          a(j) = 0.0;
        }
      }
    }
  }
  a = a.cwiseMax(0.0);
  return a / a.sum();
}

}  // namespace hsu
