#pragma once

#include "flatflow/distance.hpp"
#include "flatflow/energy.hpp"
#include "flatflow/grid.hpp"

#include <vector>

namespace flatflow {

enum class StepMode { VolumeConstrained, Unconstrained };

struct StepConfig {
  double h = 0.0;  ///< time step
  PerimeterKind kind = PerimeterKind::Isotropic;
  double inner_tol = 1e-5;  ///< primal-dual gap tolerance, length^(d-1)
  int inner_max_iters = 100000;
  int lambda_tol = 0;  ///< accepted volume mismatch before fix-up, in cells
  StepMode mode = StepMode::VolumeConstrained;
  /// Half-width of the initial multiplier bracket is bracket_scale / sqrt(h).
  double bracket_scale = 1.0;

  void validate() const;
};

/// One dual field per pair term of the perimeter stencil, each in [-1, 1].
using DualField = std::vector<Field<double>>;

/// Primal iterate, dual field and certified gap of a relaxed solve.
struct InnerSolution {
  ScalarField u;
  DualField q;
  double gap = 0.0;  ///< length^(d-1)
  int iterations = 0;
};

/// Starting point for inner_solve; either part may be left empty.
struct WarmStart {
  Field<double> u;
  DualField q;
};

/// Minimizes TV(u) + sum_cells u g dx^d over u in [0,1] with a diagonally
/// preconditioned primal-dual iteration until the duality gap is at most tol.
/// Throws ConvergenceError when max_iters is exhausted.
InnerSolution inner_solve(const ScalarField& g, PerimeterKind kind, double tol, int max_iters,
                          const WarmStart* warm = nullptr);

/// Duality gap of a primal candidate u against dual q (length^(d-1)).
double duality_gap(const Field<double>& u, const DualField& q, const ScalarField& g, PerimeterKind kind);

/// {u > level}; cells exactly at the level are included when g < 0.
BinarySet threshold(const ScalarField& u, const ScalarField& g, double level = 0.5);

/// Potential (dbar - lambda h) / h of the relaxed step problem. Larger lambda
/// favours larger sets; a stationary circle of radius r has lambda = 1/r.
ScalarField step_potential(const SignedDistanceField& driving, double lambda, double h);

/// Solution of the total-variation denoising problem whose super-level sets
/// are relaxed minimizers for every multiplier at once: {entry < lambda}
/// minimizes the step functional with potential step_potential(lambda).
struct ParametricRelaxation {
  ScalarField entry;  ///< multiplier (1/length) at which each cell joins the set
  DualField q;
  double gap = 0.0;  ///< denoising gap, length^(d-1)
  int iterations = 0;
};

ParametricRelaxation parametric_relaxation(const SignedDistanceField& driving, double h, PerimeterKind kind,
                                           double tol, int max_iters);

/// {entry < lambda}; cells with entry exactly lambda follow the threshold tie rule.
BinarySet level_set(const ParametricRelaxation& r, const SignedDistanceField& driving, double lambda, double h);

struct StepOutcome {
  BinarySet set;
  double lambda = 0.0;
  double inner_gap = 0.0;      ///< relaxed gap at the accepted multiplier
  double threshold_gap = 0.0;  ///< gap of the thresholded set against the same dual
  int flipped_cells = 0;
  double fixup_potential = 0.0;  ///< sum of |g| dx^d over flipped cells
  double energy = 0.0;
  int lambda_evaluations = 0;
  int monotonicity_violations = 0;
  int inner_iterations = 0;
  /// At a jump of the volume the fixed-up level sets on both sides and the
  /// previous set compete after swap descent; true when the previous set won
  /// unchanged. The gap and fix-up fields describe the fixed-up level set with
  /// the smaller allowance, whose bound covers the returned set as well.
  bool kept_previous = false;
  /// Volume-preserving one-in/one-out swaps, each strictly lowering the
  /// energy, applied after a fix-up or to the previous set.
  int descent_swaps = 0;
};

/// P(E) + (1/h) sum_E dbar dx^d.
double step_energy(const BinarySet& e, const SignedDistanceField& driving, double h, PerimeterKind kind);

/// Bound on energy(outcome) - energy(any admissible competitor) for one step:
/// max(inner_gap, threshold_gap) + flipped_cells * 2d * dx^(d-1) + fixup_potential.
double fixup_allowance(const StepOutcome& outcome, const GridDomain& domain);

StepOutcome lambda_search(const BinarySet& f, double target_volume, const StepConfig& cfg);
StepOutcome mm_step(const BinarySet& f, const StepConfig& cfg);

}  // namespace flatflow
