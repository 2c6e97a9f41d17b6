#include "hsu/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hsu {
namespace {

constexpr std::array<std::string_view, 11> kVariantNames = {
    "nmf", "l1", "l12", "gnmf", "dgs", "rrlbs", "ssnmf", "glnmf", "cenmf", "mvcnmf", "edcnmf"};

double factorial(Index n) {
  double f = 1.0;
  for (Index i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

double objective_from_band(Variant v, const Vector& band, const Matrix& x, const SolverState& s,
                           const SolverConfig& c, const SolveContext& ctx, const PcaBasis* pca);

double resolve_delta(const SolverConfig& c, const Matrix& x) {
  if (!c.sum_to_one) return 0.0;
  return c.asc_delta ? *c.asc_delta : default_asc_delta(x);
}

// Squared residual of the sum-to-one row: delta^2 sum_n (1 - sum_k A_kn)^2.
double asc_residual_sq(const Matrix& a, double delta) {
  return delta * delta * (1.0 - a.colwise().sum().array()).square().sum();
}

Matrix residual(const Matrix& x, const Matrix& m, const Matrix& a) {
  Matrix r = x;
  r.noalias() -= m * a;
  return r;
}

Vector row_squared_norms(const Matrix& r) {
  Vector out = Vector::Zero(r.rows());
  for (Index n = 0; n < r.cols(); ++n) out += r.col(n).cwiseAbs2();
  return out;
}

Vector band_residual_sq(const Matrix& x, const Matrix& m, const Matrix& a) {
  return row_squared_norms(residual(x, m, a));
}

// X A' for s.a, reusing the product stored by the last recorded step.
Matrix cached_xat(const SolverState& s, const Matrix& x) {
  if (s.xat.rows() == x.rows() && s.xat.cols() == s.a.rows() && s.xat_source.rows() == s.a.rows() &&
      s.xat_source.cols() == s.a.cols() && s.xat_source == s.a) {
    return s.xat;
  }
  Matrix xat(x.rows(), s.a.rows());
  xat.noalias() = x * s.a.transpose();
  return xat;
}

// ||x_l - M a_l||^2 per band from X A' and A A', without forming the residual.
Vector gram_band_residual_sq(const Matrix& x, const Matrix& m, const Matrix& a, const Matrix& xat) {
  const Matrix mg = m * (a * a.transpose());
  const Vector cross = m.cwiseProduct(xat).rowwise().sum();
  const Vector quad = mg.cwiseProduct(m).rowwise().sum();
  return (row_squared_norms(x) - 2.0 * cross + quad).cwiseMax(0.0);
}

// (1 - h_n) (A_kn + xi)^(-h_n), the derivative of sum (A + xi)^(1 - h).
Matrix adaptive_sparsity_gradient(const Matrix& a, const Vector& h, double xi) {
  Matrix g(a.rows(), a.cols());
  for (Index n = 0; n < a.cols(); ++n) {
    const double hn = h(n);
    for (Index k = 0; k < a.rows(); ++k) g(k, n) = (1.0 - hn) * std::pow(a(k, n) + xi, -hn);
  }
  return g;
}

double adaptive_sparsity(const Matrix& a, const Vector& h, double xi) {
  double s = 0.0;
  for (Index n = 0; n < a.cols(); ++n) {
    for (Index k = 0; k < a.rows(); ++k) s += std::pow(a(k, n) + xi, 1.0 - h(n));
  }
  return s;
}

double half_power_sum(const Matrix& a, double xi) { return (a.array() + xi).sqrt().sum(); }

const LaplacianPair& require_graph(Variant v, const SolveContext& ctx) {
  if (!ctx.graph) throw InvalidArgument(std::string(to_string(v)) + " requires a graph Laplacian");
  return *ctx.graph;
}

void check_shapes(const SolverState& s, const Matrix& x) {
  if (s.m.rows() != x.rows() || s.a.cols() != x.cols() || s.m.cols() != s.a.rows()) {
    throw ShapeError("solver state does not match the data shape");
  }
}

void check_finite(const SolverState& s) {
  if (!s.m.allFinite()) throw DivergenceError("M", s.iter);
  if (!s.a.allFinite()) throw DivergenceError("A", s.iter);
}

double anchor_coefficient(Variant v) {
  return (v == Variant::rrlbs || v == Variant::cenmf) ? 2.0 : 1.0;
}

void add_anchor_terms(Matrix& num, Matrix& den, const Matrix& a, const SolveContext& ctx) {
  if (!ctx.anchor || ctx.anchor_weight == 0.0) return;
  if (ctx.anchor->rows() != a.rows() || ctx.anchor->cols() != a.cols()) {
    throw ShapeError("anchor matrix shape differs from A");
  }
  num += 2.0 * ctx.anchor_weight * *ctx.anchor;
  den += 2.0 * ctx.anchor_weight * a;
}

// Multiplicative abundance update for every MU-based variant. u == nullptr
// means unit channel weights.
Matrix update_abundances(const Matrix& x, const Matrix& m, const Matrix& a, Variant v, const SolverConfig& c,
                         const SolveContext& ctx, const Vector& h, const Vector* u, double u_asc,
                         double delta) {
  const Matrix um = u ? Matrix(u->asDiagonal() * m) : m;
  Matrix num = um.transpose() * x;
  Matrix den = (um.transpose() * m) * a;
  if (c.sum_to_one) {
    const double w = delta * delta * u_asc;
    num.array() += w;
    den.rowwise() += w * a.colwise().sum();
  }

  switch (v) {
    case Variant::nmf:
    case Variant::edcnmf:
      break;
    case Variant::l1:
    case Variant::cenmf:
      den.array() += c.lambda;
      break;
    case Variant::l12:
      den += (0.5 * c.lambda * (a.array() + c.xi).pow(-0.5)).matrix();
      break;
    case Variant::dgs:
    case Variant::rrlbs:
      den += c.lambda * adaptive_sparsity_gradient(a, h, c.xi);
      break;
    case Variant::gnmf:
    case Variant::ssnmf:
    case Variant::glnmf: {
      const LaplacianPair& g = require_graph(v, ctx);
      num += c.lambda * (a * g.weights);
      den += c.lambda * Matrix(a.array().rowwise() * g.degree.transpose().array());
      if (v == Variant::ssnmf) den.array() += c.alpha;
      if (v == Variant::glnmf) den += (0.5 * c.alpha * (a.array() + c.xi).pow(-0.5)).matrix();
      break;
    }
    case Variant::mvcnmf:
      throw InvalidArgument("mvcnmf has no multiplicative abundance update");
  }
  add_anchor_terms(num, den, a, ctx);
  return (a.array() * num.array() / (den.array() + kDenominatorGuard)).matrix();
}

// Multiplicative endmember update of Lee and Seung, optionally channel
// weighted and with an extra numerator shift.
Matrix update_endmembers(const Matrix& xat, const Matrix& m, const Matrix& a, const Vector* u,
                         const Matrix* numerator_shift = nullptr) {
  Matrix num = xat;
  Matrix den = m * (a * a.transpose());
  if (numerator_shift) num -= *numerator_shift;
  if (u) {
    num = u->asDiagonal() * num;
    den = u->asDiagonal() * den;
  }
  return (m.array() * num.array() / (den.array() + kDenominatorGuard)).matrix();
}

void record(SolverState& s, Variant v, const Matrix& x, const SolverConfig& c, const SolveContext& ctx,
            const PcaBasis* pca) {
  s.xat_source = s.a;
  s.xat.noalias() = x * s.a.transpose();
  const Vector band = gram_band_residual_sq(x, s.m, s.a, s.xat);
  s.objective_history.push_back(objective_from_band(v, band, x, s, c, ctx, pca));
  s.reconstruction_history.push_back(0.5 * band.sum());
}

double mvc_f(const Matrix& x, const Matrix& m, const Matrix& a, const SolverConfig& c, const PcaBasis& pca,
             const SolveContext& ctx) {
  double f = mvc_objective(x, m, a, c, pca);
  if (ctx.anchor && ctx.anchor_weight != 0.0) f += ctx.anchor_weight * (a - *ctx.anchor).squaredNorm();
  return f;
}

Matrix mvc_volume_matrix(const Matrix& m, const PcaBasis& pca) {
  const Index k = m.cols();
  Matrix z(k, k);
  z.row(0).setOnes();
  z.bottomRows(k - 1) = pca.basis.transpose() * (m.colwise() - pca.mean);
  return z;
}

void check_pca(const PcaBasis& pca, const Matrix& m) {
  if (pca.basis.rows() != m.rows() || pca.basis.cols() != m.cols() - 1 || pca.mean.size() != m.rows()) {
    throw ShapeError("mvcnmf: PCA basis must be L x (K-1) with an L-vector mean");
  }
}

}  // namespace

std::string_view to_string(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

Variant parse_variant(std::string_view tag) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == tag) return kAllVariants[i];
  }
  throw InvalidArgument("unknown solver variant '" + std::string(tag) + "'");
}

bool needs_graph(Variant v) { return v == Variant::gnmf || v == Variant::ssnmf || v == Variant::glnmf; }
bool uses_lambda(Variant v) { return v != Variant::nmf; }
bool uses_alpha(Variant v) { return v == Variant::ssnmf || v == Variant::glnmf; }
bool is_multiplicative(Variant v) { return v != Variant::mvcnmf; }

void SolverConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be >= 0");
  if (!(xi > 0.0)) throw InvalidArgument("xi must be > 0");
  if (sigma && !(*sigma > 0.0)) throw InvalidArgument("sigma must be > 0");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
  if (!(rel_tol >= 0.0)) throw InvalidArgument("rel_tol must be >= 0");
  if (!(armijo.shrink > 0.0 && armijo.shrink < 1.0)) throw InvalidArgument("armijo shrink must be in (0, 1)");
  if (!(armijo.sufficient_decrease > 0.0 && armijo.sufficient_decrease < 1.0)) {
    throw InvalidArgument("armijo sufficient-decrease constant must be in (0, 1)");
  }
  if (!(armijo.initial_step > 0.0)) throw InvalidArgument("armijo initial step must be > 0");
  if (armijo.max_shrinks < 1) throw InvalidArgument("armijo max_shrinks must be >= 1");
  if (h_refresh_period < 1) throw InvalidArgument("h_refresh_period must be >= 1");
  if (!(edc_floor >= 0.0)) throw InvalidArgument("edc_floor must be >= 0");
  if (asc_delta && !(*asc_delta > 0.0)) throw InvalidArgument("asc_delta must be > 0");
}

double gini_sparsity(const Vector& a) {
  if (a.size() == 0) throw InvalidArgument("gini_sparsity: empty vector");
  if (a.minCoeff() < 0.0) throw InvalidArgument("gini_sparsity: negative entry");
  const double l1 = a.sum();
  if (!(l1 > 0.0)) throw InvalidArgument("gini_sparsity: zero vector");
  std::vector<double> sorted(a.data(), a.data() + a.size());
  std::sort(sorted.begin(), sorted.end());
  const double k = static_cast<double>(sorted.size());
  double s = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double rank = static_cast<double>(i + 1);
    s += (sorted[i] / l1) * ((k - rank + 0.5) / k);
  }
  return 1.0 - 2.0 * s;
}

Vector dgmap_from_abundances(const Matrix& a) {
  Vector h(a.cols());
  for (Index n = 0; n < a.cols(); ++n) {
    const Vector col = a.col(n).cwiseMax(0.0);
    h(n) = col.sum() > 0.0 ? gini_sparsity(col) : 0.0;
  }
  return h;
}

double simplex_volume(const Matrix& projected) {
  const Index k = projected.cols();
  if (projected.rows() != k - 1) throw ShapeError("simplex_volume: expected a (K-1) x K matrix");
  if (k < 2) throw ShapeError("simplex_volume: need at least two vertices");
  const Matrix edges = projected.rightCols(k - 1).colwise() - projected.col(0);
  return std::abs(edges.determinant()) / factorial(k - 1);
}

double edc_dissimilarity(const Matrix& m) {
  const Index k = m.cols();
  const Matrix grad = m.bottomRows(m.rows() - 1) - m.topRows(m.rows() - 1);
  double phi = 0.0;
  for (Index i = 0; i + 1 < k; ++i) {
    for (Index j = i + 1; j < k; ++j) phi += (grad.col(i) - grad.col(j)).squaredNorm();
  }
  return phi;
}

Matrix edc_dissimilarity_gradient(const Matrix& m) {
  const Index l = m.rows();
  const Index k = m.cols();
  if (l < 2) throw InvalidArgument("edc: need at least two bands");
  // MT = K M - (M 1) 1'
  const Matrix mt = static_cast<double>(k) * m - m.rowwise().sum() * Eigen::RowVectorXd::Ones(k);
  const Matrix dm = mt.bottomRows(l - 1) - mt.topRows(l - 1);  // D (M T)
  Matrix out = Matrix::Zero(l, k);                              // D' D M T
  out.bottomRows(l - 1) += dm;
  out.topRows(l - 1) -= dm;
  return 2.0 * out;
}

double mvc_objective(const Matrix& x, const Matrix& m, const Matrix& a, const SolverConfig& config,
                     const PcaBasis& pca) {
  check_pca(pca, m);
  const Index k = m.cols();
  double f = 0.5 * residual(x, m, a).squaredNorm();
  if (config.sum_to_one) f += 0.5 * asc_residual_sq(a, resolve_delta(config, x));
  const double det = mvc_volume_matrix(m, pca).determinant();
  f += config.lambda / (2.0 * factorial(k - 1)) * det * det;
  return f;
}

Matrix mvc_gradient_m(const Matrix& x, const Matrix& m, const Matrix& a, const SolverConfig& config,
                      const PcaBasis& pca) {
  check_pca(pca, m);
  const Index k = m.cols();
  Matrix g = -residual(x, m, a) * a.transpose();
  if (config.lambda != 0.0) {
    const Matrix z = mvc_volume_matrix(m, pca);
    Eigen::FullPivLU<Matrix> lu(z);
    if (lu.isInvertible()) {
      const double det = lu.determinant();
      // d det^2 / dZ = 2 det^2 Z^{-T}; rows 1.. of Z are P'(M - mu 1').
      const Matrix dz = 2.0 * det * det * lu.inverse().transpose();
      g += config.lambda / (2.0 * factorial(k - 1)) * pca.basis * dz.bottomRows(k - 1);
    }
  }
  return g;
}

Matrix mvc_gradient_a(const Matrix& x, const Matrix& m, const Matrix& a, const SolverConfig& config) {
  Matrix g = -m.transpose() * residual(x, m, a);
  if (config.sum_to_one) {
    const double delta = resolve_delta(config, x);
    const Eigen::RowVectorXd shortfall = a.colwise().sum().array() - 1.0;
    g.rowwise() += delta * delta * shortfall;
  }
  return g;
}

double objective(Variant v, const Matrix& x, const SolverState& s, const SolverConfig& c,
                 const SolveContext& ctx, const PcaBasis* pca) {
  return objective_from_band(v, band_residual_sq(x, s.m, s.a), x, s, c, ctx, pca);
}

namespace {

double objective_from_band(Variant v, const Vector& band, const Matrix& x, const SolverState& s,
                           const SolverConfig& c, const SolveContext& ctx, const PcaBasis* pca) {
  const Matrix& a = s.a;
  const double delta = resolve_delta(c, x);
  double j = 0.0;

  if (v == Variant::mvcnmf) {
    if (!pca) throw InvalidArgument("mvcnmf objective needs the PCA basis");
    j = mvc_objective(x, s.m, a, c, *pca);
  } else {
    const double asc = c.sum_to_one ? asc_residual_sq(a, delta) : 0.0;
    switch (v) {
      case Variant::rrlbs: {
        j = (band.array() + c.epsilon).sqrt().sum();
        if (c.sum_to_one) j += std::sqrt(asc + c.epsilon);
        j += 2.0 * c.lambda * adaptive_sparsity(a, s.h, c.xi);
        break;
      }
      case Variant::cenmf: {
        const double sigma = c.sigma.value_or(1.0);
        const double s2 = sigma * sigma;
        j = -s2 * (-band.array() / s2).exp().sum();
        if (c.sum_to_one) j -= s2 * std::exp(-asc / s2);
        j += 2.0 * c.lambda * a.sum();
        break;
      }
      default: {
        j = 0.5 * (band.sum() + asc);
        switch (v) {
          case Variant::l1:
            j += c.lambda * a.sum();
            break;
          case Variant::l12:
            j += c.lambda * half_power_sum(a, c.xi);
            break;
          case Variant::dgs:
            j += c.lambda * adaptive_sparsity(a, s.h, c.xi);
            break;
          case Variant::gnmf:
          case Variant::ssnmf:
          case Variant::glnmf: {
            const LaplacianPair& g = require_graph(v, ctx);
            j += 0.5 * c.lambda * graph_smoothness(a, g.laplacian);
            if (v == Variant::ssnmf) j += c.alpha * a.sum();
            if (v == Variant::glnmf) j += c.alpha * half_power_sum(a, c.xi);
            break;
          }
          case Variant::edcnmf:
            j += 0.5 * c.lambda * edc_dissimilarity(s.m);
            break;
          default:
            break;
        }
      }
    }
  }
  if (ctx.anchor && ctx.anchor_weight != 0.0) {
    j += anchor_coefficient(v) * ctx.anchor_weight * (a - *ctx.anchor).squaredNorm();
  }
  return j;
}

}  // namespace

SolverState make_state(const EndmemberMatrix& m0, const AbundanceMatrix& a0, Variant v,
                       const SolveContext& context) {
  if (m0.count() != a0.count()) throw ShapeError("initial M and A disagree on K");
  SolverState s;
  s.m = m0.data;
  s.a = a0.data;
  s.u = Vector::Ones(m0.bands());
  s.h = Vector::Zero(a0.pixels());
  if (v == Variant::dgs) {
    if (context.dgmap) {
      if (context.dgmap->size() != a0.pixels()) throw ShapeError("DgMap length differs from pixel count");
      s.h = *context.dgmap;
    } else {
      s.h = dgmap_from_abundances(a0.data);
    }
  }
  return s;
}

SolverState multiplicative_step(const SolverState& state, const Matrix& x, Variant v, const SolverConfig& c,
                                const SolveContext& ctx) {
  switch (v) {
    case Variant::nmf:
    case Variant::l1:
    case Variant::l12:
    case Variant::gnmf:
    case Variant::dgs:
    case Variant::ssnmf:
    case Variant::glnmf:
      break;
    default:
      throw InvalidArgument(std::string(to_string(v)) + " is not a plain multiplicative variant");
  }
  check_shapes(state, x);
  if (needs_graph(v)) require_graph(v, ctx);
  if (v == Variant::dgs && state.h.size() != x.cols()) throw ShapeError("dgs: DgMap length differs from N");

  const double delta = resolve_delta(c, x);
  SolverState next = state;
  if (c.update_endmembers) next.m = update_endmembers(cached_xat(state, x), state.m, state.a, nullptr);
  next.a = update_abundances(x, next.m, state.a, v, c, ctx, state.h, nullptr, 1.0, delta);
  next.iter = state.iter + 1;
  check_finite(next);
  record(next, v, x, c, ctx, nullptr);
  return next;
}

SolverState cenmf_step(const SolverState& state, const Matrix& x, const SolverConfig& c,
                       const SolveContext& ctx) {
  if (!c.sigma || !(*c.sigma > 0.0)) throw InvalidArgument("cenmf: sigma must be > 0");
  check_shapes(state, x);
  const double delta = resolve_delta(c, x);
  const double s2 = *c.sigma * *c.sigma;

  SolverState next = state;
  if (c.reweight) {
    next.u = (-band_residual_sq(x, state.m, state.a).array() / s2).exp().matrix();
    next.u_asc = c.sum_to_one ? std::exp(-asc_residual_sq(state.a, delta) / s2) : 1.0;
  } else if (next.u.size() != x.rows()) {
    next.u = Vector::Ones(x.rows());
  }
  if (c.update_endmembers) next.m = update_endmembers(cached_xat(state, x), state.m, state.a, &next.u);
  next.a = update_abundances(x, next.m, state.a, Variant::cenmf, c, ctx, state.h, &next.u, next.u_asc, delta);
  next.iter = state.iter + 1;
  check_finite(next);
  record(next, Variant::cenmf, x, c, ctx, nullptr);
  return next;
}

SolverState rrlbs_step(const SolverState& state, const Matrix& x, const SolverConfig& c,
                       const SolveContext& ctx) {
  check_shapes(state, x);
  if (state.h.size() != x.cols()) throw ShapeError("rrlbs: DgMap length differs from N");
  const double delta = resolve_delta(c, x);

  SolverState next = state;
  if (c.reweight) {
    next.u = (0.5 / (band_residual_sq(x, state.m, state.a).array() + c.epsilon).sqrt()).matrix();
    next.u_asc = c.sum_to_one ? 0.5 / std::sqrt(asc_residual_sq(state.a, delta) + c.epsilon) : 1.0;
  } else if (next.u.size() != x.rows()) {
    next.u = Vector::Ones(x.rows());
  }
  if (c.update_endmembers) next.m = update_endmembers(cached_xat(state, x), state.m, state.a, &next.u);
  next.a = update_abundances(x, next.m, state.a, Variant::rrlbs, c, ctx, state.h, &next.u, next.u_asc, delta);
  next.iter = state.iter + 1;
  check_finite(next);
  record(next, Variant::rrlbs, x, c, ctx, nullptr);
  if (next.iter % c.h_refresh_period == 0) next.h = dgmap_from_abundances(next.a);
  return next;
}

SolverState mvcnmf_step(const SolverState& state, const Matrix& x, const SolverConfig& c, const PcaBasis& pca,
                        const SolveContext& ctx) {
  check_shapes(state, x);
  check_pca(pca, state.m);
  const ArmijoParams& ar = c.armijo;
  SolverState next = state;

  // Projected Armijo search along the negative gradient, projecting onto the
  // nonnegative orthant: accept when f(new) - f(old) <= c <grad, new - old>.
  auto search = [&](const Matrix& current, const Matrix& grad, auto&& eval, const char* factor) {
    const double f0 = eval(current);
    double t = ar.initial_step;
    for (int i = 0; i < ar.max_shrinks; ++i, t *= ar.shrink) {
      const Matrix candidate = (current - t * grad).cwiseMax(0.0);
      const double f1 = eval(candidate);
      if (std::isfinite(f1) && f1 - f0 <= ar.sufficient_decrease * grad.cwiseProduct(candidate - current).sum()) {
        return candidate;
      }
    }
    throw StallError(std::string("mvcnmf: Armijo search on ") + factor + " failed after " +
                         std::to_string(ar.max_shrinks) + " shrinks",
                     state);
  };

  if (c.update_endmembers) {
    const Matrix grad_m = mvc_gradient_m(x, state.m, state.a, c, pca);
    next.m = search(state.m, grad_m,
                    [&](const Matrix& m) { return mvc_f(x, m, state.a, c, pca, ctx); }, "M");
  }
  Matrix grad_a = mvc_gradient_a(x, next.m, state.a, c);
  if (ctx.anchor && ctx.anchor_weight != 0.0) grad_a += 2.0 * ctx.anchor_weight * (state.a - *ctx.anchor);
  next.a = search(state.a, grad_a, [&](const Matrix& a) { return mvc_f(x, next.m, a, c, pca, ctx); }, "A");

  next.iter = state.iter + 1;
  check_finite(next);
  record(next, Variant::mvcnmf, x, c, ctx, &pca);
  return next;
}

SolverState edcnmf_step(const SolverState& state, const Matrix& x, const SolverConfig& c,
                        const SolveContext& ctx) {
  check_shapes(state, x);
  if (x.rows() < 2) throw InvalidArgument("edcnmf: need at least two bands");
  const double delta = resolve_delta(c, x);
  SolverState next = state;
  if (c.update_endmembers) {
    const Matrix shift = 0.5 * c.lambda * edc_dissimilarity_gradient(state.m);
    next.m = update_endmembers(cached_xat(state, x), state.m, state.a, nullptr, &shift);
    next.m = next.m.unaryExpr([&](double v) { return v < 0.0 ? c.edc_floor : v; });
  }
  next.a = update_abundances(x, next.m, state.a, Variant::edcnmf, c, ctx, state.h, nullptr, 1.0, delta);
  next.iter = state.iter + 1;
  check_finite(next);
  record(next, Variant::edcnmf, x, c, ctx, nullptr);
  return next;
}

SolverState step(const SolverState& state, const Matrix& x, Variant v, const SolverConfig& config,
                 const SolveContext& context, const PcaBasis* pca) {
  switch (v) {
    case Variant::cenmf:
      return cenmf_step(state, x, config, context);
    case Variant::rrlbs:
      return rrlbs_step(state, x, config, context);
    case Variant::mvcnmf:
      if (!pca) throw InvalidArgument("mvcnmf step needs the PCA basis");
      return mvcnmf_step(state, x, config, *pca, context);
    case Variant::edcnmf:
      return edcnmf_step(state, x, config, context);
    default:
      return multiplicative_step(state, x, v, config, context);
  }
}

SolveResult solve(const Matrix& x_in, Variant v, const SolverConfig& config_in, const EndmemberMatrix& m0,
                  const AbundanceMatrix& a0, const SolveContext& context) {
  config_in.validate();
  if (m0.bands() != x_in.rows()) throw ShapeError("solve: M0 band count differs from X");
  if (a0.pixels() != x_in.cols()) throw ShapeError("solve: A0 pixel count differs from X");
  if (m0.count() != a0.count()) throw ShapeError("solve: M0 and A0 disagree on K");
  if (needs_graph(v)) require_graph(v, context);

  SolveResult result;
  SolveDiagnostics& diag = result.diagnostics;

  const Matrix x = x_in.cwiseMax(0.0);
  diag.clamped_negative_inputs = (x_in.array() < 0.0).count();
  if (diag.clamped_negative_inputs > 0) {
    diag.notes.push_back(std::to_string(diag.clamped_negative_inputs) + " negative input entries treated as 0");
  }

  SolverConfig config = config_in;
  if (config.sum_to_one && !config.asc_delta) config.asc_delta = default_asc_delta(x);
  diag.asc_delta = config.sum_to_one ? *config.asc_delta : 0.0;

  if (v == Variant::cenmf && !config.sigma) {
    const double rms = std::sqrt(band_residual_sq(x, m0.data, a0.data).mean());
    if (rms > 0.0) {
      config.sigma = rms;
    } else {
      config.sigma = 1.0;
      diag.notes.push_back("zero initial residual; correntropy bandwidth set to 1");
    }
  }
  diag.sigma = config.sigma.value_or(0.0);

  std::optional<PcaBasis> pca;
  if (v == Variant::mvcnmf) {
    if (m0.count() < 2) throw InvalidArgument("mvcnmf needs K >= 2");
    pca = principal_subspace(x, m0.count() - 1);
  }
  const PcaBasis* pca_ptr = pca ? &*pca : nullptr;

  diag.clamped_negative_init = (m0.data.array() < 0.0).count() + (a0.data.array() < 0.0).count();
  if (diag.clamped_negative_init > 0) {
    diag.notes.push_back(std::to_string(diag.clamped_negative_init) + " negative initial entries treated as 0");
  }
  SolverState state = make_state(EndmemberMatrix(m0.data.cwiseMax(0.0), m0.names),
                                 AbundanceMatrix(a0.data.cwiseMax(0.0)), v, context);
  record(state, v, x, config, context, pca_ptr);

  for (int it = 0; it < config.max_iters; ++it) {
    state = step(state, x, v, config, context, pca_ptr);
    const auto& hist = state.objective_history;
    const double prev = hist[hist.size() - 2];
    const double cur = hist.back();
    const double denom = std::max(std::abs(prev), 1e-300);
    if (std::abs(prev - cur) / denom < config.rel_tol) {
      diag.converged = true;
      break;
    }
  }
  diag.iterations = state.iter;

  result.endmembers = EndmemberMatrix(state.m, m0.names);
  result.abundances = AbundanceMatrix(state.a);
  if (config.project_output && config.sum_to_one && state.iter > 0) {
    Matrix& a = result.abundances.data;
    Index empty = 0;
    for (Index n = 0; n < a.cols(); ++n) {
      const double sum = a.col(n).sum();
      if (sum > 0.0) {
        a.col(n) /= sum;
      } else {
        a.col(n).setConstant(1.0 / static_cast<double>(a.rows()));
        ++empty;
      }
    }
    if (empty > 0) diag.notes.push_back(std::to_string(empty) + " all-zero abundance columns set to 1/K");
  }
  result.objective_history = std::move(state.objective_history);
  result.reconstruction_history = std::move(state.reconstruction_history);
  return result;
}

}  // namespace hsu
