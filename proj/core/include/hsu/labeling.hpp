#pragma once

// Ground-truth production for real scenes: endmembers from hand-picked seed
// pixels, abundances by a constrained solve with the endmembers fixed, and
// a quantitative check that similar pixels received similar abundances.
// Class-label maps can also be turned into abundance ground truth by an
// unmixing solve anchored to the one-hot labels.

#include "hsu/graph.hpp"
#include "hsu/model.hpp"
#include "hsu/solvers.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hsu {

struct EndmemberSeed {
  std::string name;
  std::vector<Index> pixels;        // column indices into X
  std::optional<Vector> signature;  // used verbatim when set
};
using EndmemberSeeds = std::vector<EndmemberSeed>;

// One-hot class labels, K x N.
struct ClassLabelMap {
  Matrix y;
  std::vector<int> class_values;  // original label value of each row

  // Throws InvalidArgument unless every column has exactly one 1.
  void validate() const;
};

// Distinct label values are mapped to rows in ascending order.
ClassLabelMap labels_from_grid(const std::vector<int>& grid);

// Mean (or per-band median) of each seed's pixels, clamped at zero.
// Throws InvalidArgument for a seed with no source or a bad pixel index.
EndmemberMatrix label_endmembers(const HyperCube& x, const EndmemberSeeds& seeds, bool median = false);

struct AbundanceMethod {
  enum class Kind { fcls, constrained_solver };
  Kind kind = Kind::fcls;
  Variant variant = Variant::nmf;
  SolverConfig config;     // update_endmembers is forced off
  GraphSpec graph;         // used when the variant needs a graph
  bool uniform_init = false;  // start from 1/K instead of the FCLS solution
};

AbundanceMatrix label_abundances(const HyperCube& x, const EndmemberMatrix& m, const AbundanceMethod& method);

struct VerifyCriteria {
  double min_correlation = 0.5;
  double max_reconstruction_rmse = std::numeric_limits<double>::infinity();
  Index probe_count = 200;
  int max_rounds = 3;
  std::uint64_t seed = 0;
};

struct VerificationReport {
  double correlation = 0.0;          // Spearman between -SAD and -RMSE over probe pairs
  double reconstruction_rmse = 0.0;  // sqrt(mean((X - MA)^2))
  Index pairs = 0;
  bool passed = false;
};

// Samples probe_count distinct pixels and correlates spectral similarity
// with abundance similarity over all unordered probe pairs. Throws
// InvalidArgument unless probe_count >= 2.
VerificationReport verify_labeling(const HyperCube& x, const GroundTruth& gt, const VerifyCriteria& criteria);

struct LabelingResult {
  GroundTruth gt;                            // best round
  std::vector<VerificationReport> rounds;
  int best_round = 0;                        // 0-based
  bool verified = false;
};

// Labels endmembers and abundances, verifies, and while the criteria fail
// refits M by per-band NNLS on the current A and relabels A, up to
// max_rounds. Keeps the best round by (passed, correlation).
LabelingResult label_ground_truth(const HyperCube& x, const EndmemberSeeds& seeds, const AbundanceMethod& method,
                                  const VerifyCriteria& criteria);

struct HycOptions {
  enum class Mode { fixed_endmembers, refine_endmembers };
  Mode mode = Mode::fixed_endmembers;
  Variant base = Variant::nmf;
  SolverConfig config;
  double alpha = 0.0;  // anchor weight
  bool median = false;
  double purity = 1.0;  // fraction of class pixels kept, those closest in SAD to the class mean
  GraphSpec graph;
};

// Class means as candidate endmembers, then an abundance solve with the
// extra term alpha ||A - Y||^2. The solve starts from (F + alpha Y)/(1 + alpha)
// with F the FCLS abundances. Throws InvalidArgument for an empty class or a
// purity outside (0, 1].
GroundTruth hyc_transform(const HyperCube& x, const ClassLabelMap& labels, const HycOptions& options);

}  // namespace hsu
