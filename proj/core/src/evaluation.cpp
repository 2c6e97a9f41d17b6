#include "hsu/evaluation.hpp"

#include "hsu/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace hsu {
namespace {

constexpr double kMatchTolerance = 1e-12;
constexpr Index kMaxMatchSize = 20;

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double sad(const Vector& m, const Vector& m_hat) {
  if (m.size() != m_hat.size()) throw ShapeError("sad: spectra differ in length");
  const double nm = m.norm();
  const double nh = m_hat.norm();
  if (!(nm > 0.0) || !(nh > 0.0)) throw InvalidArgument("sad: zero spectrum");
  const double c = m.dot(m_hat) / (nm * nh);
  return std::clamp(std::acos(std::clamp(c, -1.0, 1.0)), 0.0, std::numbers::pi);
}

double rmse(const Vector& a, const Vector& a_hat) {
  if (a.size() != a_hat.size()) throw ShapeError("rmse: rows differ in length");
  if (a.size() == 0) return 0.0;
  return std::sqrt((a - a_hat).squaredNorm() / static_cast<double>(a.size()));
}

Matrix sad_matrix(const Matrix& m_gt, const Matrix& m_est) {
  if (m_gt.rows() != m_est.rows()) throw ShapeError("sad_matrix: band counts differ");
  Matrix c(m_gt.cols(), m_est.cols());
  for (Index i = 0; i < m_gt.cols(); ++i) {
    for (Index j = 0; j < m_est.cols(); ++j) c(i, j) = sad(m_gt.col(i), m_est.col(j));
  }
  return c;
}

std::vector<Index> match_endmembers(const Matrix& m_gt, const Matrix& m_est) {
  if (m_gt.cols() != m_est.cols()) {
    throw ShapeError("match_endmembers: " + std::to_string(m_gt.cols()) + " reference vs " +
                     std::to_string(m_est.cols()) + " estimated endmembers");
  }
  const Index k = m_gt.cols();
  if (k > kMaxMatchSize) throw InvalidArgument("match_endmembers: K > 20 not supported");
  const Matrix cost = sad_matrix(m_gt, m_est);

  // rest[mask]: least cost of assigning references popcount(mask).. to the
  // estimated columns not in mask.
  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<double> rest(full + 1, std::numeric_limits<double>::infinity());
  rest[full] = 0.0;
  for (std::size_t mask = full; mask-- > 0;) {
    const auto i = static_cast<Index>(std::popcount(mask));
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < k; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      best = std::min(best, cost(i, j) + rest[mask | (std::size_t{1} << j)]);
    }
    rest[mask] = best;
  }

  std::vector<Index> perm(static_cast<std::size_t>(k));
  std::size_t mask = 0;
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      if (mask & bit) continue;
      if (cost(i, j) + rest[mask | bit] <= rest[mask] + kMatchTolerance) {
        perm[static_cast<std::size_t>(i)] = j;
        mask |= bit;
        break;
      }
    }
  }
  return perm;
}

BenchmarkReport evaluate(const GroundTruth& gt, const EndmemberMatrix& m_est, const AbundanceMatrix& a_est,
                         bool project_abundances) {
  const Index k = gt.m.count();
  if (m_est.count() != k || a_est.count() != k || gt.a.count() != k) {
    throw ShapeError("evaluate: endmember counts differ");
  }
  if (m_est.bands() != gt.m.bands()) throw ShapeError("evaluate: band counts differ");
  if (a_est.pixels() != gt.a.pixels()) throw ShapeError("evaluate: pixel counts differ");

  Matrix a = a_est.data;
  if (project_abundances) {
    a = a.cwiseMax(0.0);
    for (Index n = 0; n < a.cols(); ++n) {
      const double s = a.col(n).sum();
      if (s > 0.0) a.col(n) /= s;
    }
  }

  BenchmarkReport r;
  r.names = gt.m.names;
  r.permutation = match_endmembers(gt.m.data, m_est.data);
  r.abundances_projected = project_abundances;
  r.sad.resize(k);
  r.rmse.resize(k);
  for (Index i = 0; i < k; ++i) {
    const Index j = r.permutation[static_cast<std::size_t>(i)];
    r.sad(i) = sad(gt.m.data.col(i), m_est.data.col(j));
    r.rmse(i) = rmse(gt.a.data.row(i).transpose(), a.row(j).transpose());
  }
  r.mean_sad = r.sad.mean();
  r.mean_rmse = r.rmse.mean();
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ShapeError("spearman: lengths differ");
  if (x.size() < 2) return 0.0;
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace hsu
