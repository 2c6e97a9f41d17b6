#include "hsu/initializers.hpp"

#include "hsu/error.hpp"
#include "hsu/random.hpp"

#include <cmath>
#include <limits>

namespace hsu {
namespace {

constexpr std::uint64_t kVcaStream = 0x7CA;

// Leading eigenvectors (descending eigenvalue) of a symmetric matrix.
Matrix leading_eigenvectors(const Matrix& sym, Index count) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw DegenerateError("eigen-decomposition failed");
  const Index n = sym.rows();
  Matrix out(n, count);
  for (Index i = 0; i < count; ++i) out.col(i) = eig.eigenvectors().col(n - 1 - i);
  return out;
}

}  // namespace

AbundanceMatrix fcls(const Matrix& x, const EndmemberMatrix& endmembers, const FclsOptions& options,
                     FclsReport* report) {
  const Matrix& m = endmembers.data;
  if (m.rows() != x.rows()) {
    throw ShapeError("fcls: endmembers have " + std::to_string(m.rows()) + " bands, cube has " +
                     std::to_string(x.rows()));
  }
  const Index k = m.cols();
  const Index n = x.cols();
  if (k == 0) throw ShapeError("fcls: no endmembers");

  FclsReport local;
  FclsReport& rep = report ? *report : local;
  rep = {};
  if (k > m.rows() + 1) {
    rep.underdetermined = true;
    rep.notes.push_back("more endmembers than bands + 1; solution is not unique");
  }

  Matrix out(k, n);
  if (options.method == FclsOptions::Method::asc_nnls) {
    const double delta = options.asc_delta > 0.0 ? options.asc_delta : default_asc_delta(x);
    const AscSystem sys = augment_asc(x, m, delta);
    const Matrix gram = sys.m.transpose() * sys.m;
    const Matrix rhs = sys.m.transpose() * sys.x;
    for (Index j = 0; j < n; ++j) out.col(j) = nnls_gram(gram, rhs.col(j), 1e-10);
    return AbundanceMatrix(std::move(out));
  }

  Matrix gram = m.transpose() * m;
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  if (qr.rank() < k) {
    const double ridge = 1e-10 * std::max(gram.trace() / static_cast<double>(k), 1e-300);
    gram.diagonal().array() += ridge;
    rep.regularized = true;
    rep.notes.push_back("endmember matrix has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(k) + "; ridge-regularised solve");
  }
  const Matrix rhs = m.transpose() * x;
  for (Index j = 0; j < n; ++j) out.col(j) = simplex_least_squares(gram, rhs.col(j));
  return AbundanceMatrix(std::move(out));
}

AbundanceMatrix fcls(const HyperCube& x, const EndmemberMatrix& endmembers, const FclsOptions& options,
                     FclsReport* report) {
  return fcls(x.data, endmembers, options, report);
}

PcaBasis principal_subspace(const Matrix& x, Index dims) {
  if (dims < 0 || dims > x.rows()) throw InvalidArgument("principal_subspace: bad dimension count");
  PcaBasis out;
  out.mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - out.mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(x.cols());
  out.basis = leading_eigenvectors(cov, dims);
  return out;
}

VcaResult vca(const Matrix& x, Index count, std::uint64_t seed) {
  const Index bands = x.rows();
  const Index pixels = x.cols();
  if (count < 2 || count > std::min(bands, pixels)) {
    throw InvalidArgument("vca: endmember count " + std::to_string(count) + " outside [2, min(L, N)]");
  }
  const double n = static_cast<double>(pixels);

  const Vector mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - mean;
  const Matrix ud = leading_eigenvectors(centered * centered.transpose() / n, count);
  const Matrix xp = ud.transpose() * centered;

  // Signal-to-noise estimate deciding between the projective and PCA branches.
  const double power_y = x.squaredNorm() / n;
  const double power_x = xp.squaredNorm() / n + mean.squaredNorm();
  const double noise_power = power_y - power_x;
  const double signal_power = power_x - static_cast<double>(count) / static_cast<double>(bands) * power_y;
  const double snr = noise_power > 0.0 ? 10.0 * std::log10(signal_power / noise_power)
                                       : std::numeric_limits<double>::infinity();
  const double snr_threshold = 15.0 + 10.0 * std::log10(static_cast<double>(count));

  VcaResult result;
  result.estimated_snr_db = snr;

  Matrix y(count, pixels);
  if (snr >= snr_threshold) {
    result.used_projective = true;
    const Matrix ud_full = leading_eigenvectors(x * x.transpose() / n, count);
    const Matrix proj = ud_full.transpose() * x;
    const Vector u = proj.rowwise().mean();
    const Eigen::RowVectorXd scale = u.transpose() * proj;
    for (Index j = 0; j < pixels; ++j) {
      if (!(std::abs(scale(j)) > 0.0)) {
        throw DegenerateError("vca: pixel " + std::to_string(j) + " projects to zero");
      }
      y.col(j) = proj.col(j) / scale(j);
    }
  } else {
    const Matrix xs = xp.topRows(count - 1);
    const double c = xs.colwise().norm().maxCoeff();
    y.topRows(count - 1) = xs;
    y.row(count - 1).setConstant(c > 0.0 ? c : 1.0);
  }

  Rng rng = make_rng(seed, kVcaStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double y_scale = y.colwise().norm().maxCoeff();

  Matrix selected(count, 0);
  for (Index i = 0; i < count; ++i) {
    Vector w(count);
    for (Index r = 0; r < count; ++r) w(r) = normal(rng);

    Vector f;
    if (i == 0) {
      f = w;
      f(count - 1) = 0.0;
    } else {
      Eigen::HouseholderQR<Matrix> qr(selected);
      const Matrix q = qr.householderQ() * Matrix::Identity(count, i);
      f = w - q * (q.transpose() * w);
    }
    const double fn = f.norm();
    if (!(fn > 0.0)) throw DegenerateError("vca: projection direction vanished");
    f /= fn;

    const Eigen::RowVectorXd v = (f.transpose() * y).cwiseAbs();
    Index best = 0;
    double best_val = v(0);
    for (Index j = 1; j < pixels; ++j) {
      if (v(j) > best_val) {
        best_val = v(j);
        best = j;
      }
    }
    if (!(best_val > 1e-10 * y_scale)) {
      throw DegenerateError("vca: data subspace has rank < " + std::to_string(count));
    }
    result.pixel_indices.push_back(best);
    selected.conservativeResize(count, i + 1);
    selected.col(i) = y.col(best);
  }

  Matrix m(bands, count);
  for (Index i = 0; i < count; ++i) m.col(i) = x.col(result.pixel_indices[static_cast<std::size_t>(i)]);
  result.endmembers = EndmemberMatrix(std::move(m));
  return result;
}

VcaResult vca(const HyperCube& x, Index count, std::uint64_t seed) { return vca(x.data, count, seed); }

InitPair init_pair(const HyperCube& x, Index count, std::uint64_t seed) {
  VcaResult v = vca(x, count, seed);
  InitPair out;
  out.abundances = fcls(x, v.endmembers);
  out.endmembers = std::move(v.endmembers);
  out.pixel_indices = std::move(v.pixel_indices);
  return out;
}

}  // namespace hsu
