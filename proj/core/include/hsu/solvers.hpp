#pragma once

// NMF-family unmixing solvers sharing one state/step/solve interface.
//
// Every step takes a state and returns the next one with the objective at
// the new iterate appended to objective_history. With sum_to_one enabled the
// steps work on the delta-augmented system ([X; delta 1'], [M; delta 1']),
// realised in closed form (M'X and M'MA each gain delta^2 terms) rather than
// by copying X.
//
// Objectives recorded per variant (R = X - MA, including the delta row;
// Psi_p(A) = sum (A + xi)^p):
//   nmf     0.5 ||R||^2
//   l1      0.5 ||R||^2 + lambda sum A
//   l12     0.5 ||R||^2 + lambda Psi_1/2
//   dgs     0.5 ||R||^2 + lambda sum (A + xi)^(1 - H)
//   gnmf    0.5 ||R||^2 + lambda/2 Tr(A L A')
//   ssnmf   gnmf + alpha sum A
//   glnmf   gnmf + alpha Psi_1/2
//   rrlbs   sum_l sqrt(||r^l||^2 + eps) + 2 lambda sum (A + xi)^(1 - H)
//   cenmf   sigma^2 sum_l -exp(-||r^l||^2 / sigma^2) + 2 lambda sum A
//   mvcnmf  0.5 ||R||^2 + lambda / (2 (K-1)!) det^2([1'; P'(M - mu 1')])
//   edcnmf  0.5 ||R||^2 + lambda/2 Phi(M)
// These are the scalings under which each printed update rule is a descent
// step. An anchor term (weight alpha_a) adds alpha_a ||A - Y||^2 (doubled for
// rrlbs and cenmf) and gains +2 alpha_a Y / +2 alpha_a A in the A update.

#include "hsu/error.hpp"
#include "hsu/graph.hpp"
#include "hsu/initializers.hpp"
#include "hsu/model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hsu {

enum class Variant { nmf, l1, l12, gnmf, dgs, rrlbs, ssnmf, glnmf, cenmf, mvcnmf, edcnmf };

inline constexpr std::array<Variant, 11> kAllVariants = {
    Variant::nmf,   Variant::l1,    Variant::l12,   Variant::gnmf,   Variant::dgs,    Variant::rrlbs,
    Variant::ssnmf, Variant::glnmf, Variant::cenmf, Variant::mvcnmf, Variant::edcnmf};

std::string_view to_string(Variant v);
// Throws InvalidArgument for an unknown tag.
Variant parse_variant(std::string_view tag);

bool needs_graph(Variant v);
bool uses_lambda(Variant v);
bool uses_alpha(Variant v);  // second weight: ssnmf, glnmf
bool is_multiplicative(Variant v);

struct ArmijoParams {
  double initial_step = 1.0;
  double shrink = 0.5;                // in (0, 1)
  double sufficient_decrease = 1e-4;  // in (0, 1)
  int max_shrinks = 50;
};

struct SolverConfig {
  double lambda = 0.0;
  double alpha = 0.0;
  double xi = 1e-8;
  std::optional<double> sigma;  // cenmf bandwidth; unset: RMS residual row norm at init
  double epsilon = 1e-8;        // rrlbs reweighting guard
  int max_iters = 500;
  double rel_tol = 1e-6;
  ArmijoParams armijo;
  std::uint64_t seed = 0;
  int h_refresh_period = 30;
  double edc_floor = 1e-9;
  bool sum_to_one = true;
  std::optional<double> asc_delta;  // unset: 15 x mean(X)
  bool reweight = true;             // false: rrlbs/cenmf keep state.u as given
  bool update_endmembers = true;    // false: abundance-only solve, M frozen
  bool project_output = true;

  // Throws InvalidArgument on any violated positivity constraint.
  void validate() const;
};

struct SolverState {
  Matrix m;      // L x K
  Matrix a;      // K x N
  Vector h;      // N, DgMap; H = 1_K h'
  Vector u;      // L, diagonal channel weights
  double u_asc = 1.0;  // weight of the sum-to-one channel
  int iter = 0;
  std::vector<double> objective_history;
  std::vector<double> reconstruction_history;  // 0.5 ||X - MA||_F^2, bands only
  Matrix xat;         // X A' stored by the last recorded step
  Matrix xat_source;  // the A that xat was computed from
};

// Optional side inputs for a step or solve.
struct SolveContext {
  const LaplacianPair* graph = nullptr;  // required by gnmf, ssnmf, glnmf
  const Vector* dgmap = nullptr;         // fixed DgMap for dgs; default: Gini of the initial A
  const Matrix* anchor = nullptr;        // K x N target Y for anchored abundance labeling
  double anchor_weight = 0.0;
};

// Armijo search exhausted its shrinks; the state before the failing update is kept.
class StallError : public Error {
 public:
  StallError(const std::string& what, SolverState state) : Error(what), state_(std::move(state)) {}
  const SolverState& state() const noexcept { return state_; }

 private:
  SolverState state_;
};

// --- building blocks -------------------------------------------------------

// Gini index of a nonnegative vector: 1 - 2 sum_k (a_(k)/||a||_1) (K - k + 0.5)/K
// over the ascending order statistics. Throws InvalidArgument for a zero vector.
double gini_sparsity(const Vector& a);

// h_n = gini_sparsity(a_n) for every column; all-zero columns map to 0.
Vector dgmap_from_abundances(const Matrix& a);

// Volume of the simplex spanned by the columns of a (K-1) x K matrix.
double simplex_volume(const Matrix& projected);

// Sum over endmember pairs of ||D m_i - D m_j||^2 with D the first difference.
double edc_dissimilarity(const Matrix& m);
// 2 D'D M T with T = K I - 1 1'.
Matrix edc_dissimilarity_gradient(const Matrix& m);

double mvc_objective(const Matrix& x, const Matrix& m, const Matrix& a, const SolverConfig& config,
                     const PcaBasis& pca);
Matrix mvc_gradient_m(const Matrix& x, const Matrix& m, const Matrix& a, const SolverConfig& config,
                      const PcaBasis& pca);
Matrix mvc_gradient_a(const Matrix& x, const Matrix& m, const Matrix& a, const SolverConfig& config);

// The recorded objective of a variant at a state (see the table above).
double objective(Variant v, const Matrix& x, const SolverState& state, const SolverConfig& config,
                 const SolveContext& context = {}, const PcaBasis* pca = nullptr);

// --- steps -------------------------------------------------------------------

// nmf, l1, l12, gnmf, dgs, ssnmf, glnmf.
SolverState multiplicative_step(const SolverState& state, const Matrix& x, Variant v,
                                const SolverConfig& config, const SolveContext& context = {});
SolverState cenmf_step(const SolverState& state, const Matrix& x, const SolverConfig& config,
                       const SolveContext& context = {});
SolverState rrlbs_step(const SolverState& state, const Matrix& x, const SolverConfig& config,
                       const SolveContext& context = {});
SolverState mvcnmf_step(const SolverState& state, const Matrix& x, const SolverConfig& config,
                        const PcaBasis& pca, const SolveContext& context = {});
SolverState edcnmf_step(const SolverState& state, const Matrix& x, const SolverConfig& config,
                        const SolveContext& context = {});

// Dispatches to the step for v. pca is only read by mvcnmf.
SolverState step(const SolverState& state, const Matrix& x, Variant v, const SolverConfig& config,
                 const SolveContext& context = {}, const PcaBasis* pca = nullptr);

// Fresh state: u = 1, h = 0 (dgs: the context DgMap, or Gini of a0).
SolverState make_state(const EndmemberMatrix& m0, const AbundanceMatrix& a0, Variant v,
                       const SolveContext& context = {});

// --- driver ------------------------------------------------------------------

struct SolveDiagnostics {
  int iterations = 0;
  bool converged = false;           // relative objective change fell below rel_tol
  Index clamped_negative_inputs = 0;  // entries of X below zero, treated as 0
  Index clamped_negative_init = 0;    // entries of M0 and A0 below zero, treated as 0
  double asc_delta = 0.0;
  double sigma = 0.0;
  std::vector<std::string> notes;
};

struct SolveResult {
  EndmemberMatrix endmembers;
  AbundanceMatrix abundances;
  std::vector<double> objective_history;       // entry 0 is the initial objective
  std::vector<double> reconstruction_history;
  SolveDiagnostics diagnostics;
};

// Iterates until |dJ|/|J| < rel_tol or max_iters. X entries below zero are
// clamped to zero for the multiplicative rules. Divergence and Armijo stalls
// propagate as DivergenceError / StallError.
SolveResult solve(const Matrix& x, Variant v, const SolverConfig& config, const EndmemberMatrix& m0,
                  const AbundanceMatrix& a0, const SolveContext& context = {});

}  // namespace hsu
