#pragma once

#include "flatflow/energy.hpp"
#include "flatflow/grid.hpp"
#include "flatflow/mm_step.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace flatflow {

struct FlowConfig {
  StepConfig step;     ///< h, perimeter kind, mode and solver tolerances
  double t_end = 0.0;  ///< final time T; the run takes floor(T / h) steps
  /// The set must stay this many cells away from a Neumann box edge.
  int containment_margin = 2;
  /// Snapshots: every step up to this one, then geometrically spaced steps.
  int early_snapshots = 10;
  double snapshot_growth = 1.5;

  void validate() const;
  int steps() const;
};

/// Extremes of the density ratios over sampled boundary cells, each divided
/// by its halfplane value (pi/2 for volume, 2 for perimeter).
struct DensityExtremes {
  double volume_min = 0.0;
  double volume_max = 0.0;
  double perimeter_min = 0.0;
  double perimeter_max = 0.0;
  int samples = 0;
};

/// Record k describes the state E_k at time k h and, for k >= 1, the step
/// E_{k-1} -> E_k. Record 0 carries the initial state with zero step fields.
struct StepRecord {
  int k = 0;
  double time = 0.0;
  Index volume_cells = 0;
  double perimeter_before = 0.0;
  double perimeter_after = 0.0;
  double lambda = 0.0;
  double dissipation_term = 0.0;  ///< (1/h) sum over E_k sym.diff. E_{k-1} of |dbar_{E_{k-1}}|
  double eps_fix = 0.0;           ///< allowance of the step, see fixup_allowance
  double dissipation_slack = 0.0; ///< P_before + eps_fix - P_after - dissipation_term
  double inner_gap = 0.0;
  double threshold_gap = 0.0;
  double fixup_potential = 0.0;
  int flipped_cells = 0;
  bool kept_previous = false;  ///< the step returned E_{k-1} unchanged at a volume jump
  int descent_swaps = 0;       ///< energy-lowering one-in/one-out swaps after the fix-up
  int lambda_evaluations = 0;
  int inner_iterations = 0;
  double el_residual_median = 0.0;  ///< |dbar/h + H - lambda| over interface faces
  double el_residual_p90 = 0.0;
  double mean_curvature = 0.0;      ///< face-weighted mean of H
  // Squared L2 norms over the interface faces (length units).
  double curvature_sq = 0.0;             ///< ||H||^2
  double curvature_minus_lambda_sq = 0.0;  ///< ||H - lambda||^2
  double velocity_sq = 0.0;              ///< ||dbar / h||^2
  double sup_boundary_distance = 0.0;
  double sup_curvature = 0.0;
  double diameter = 0.0;
  double enclosing_radius = 0.0;  ///< about the centroid of E_0
  double isoperimetric_ratio = 0.0;
  int components = 0;
  double sym_diff_initial = 0.0;  ///< |E_k sym.diff. E_0|
  DensityExtremes density_half;   ///< at r = sqrt(h)/2
  DensityExtremes density_full;   ///< at r = sqrt(h)

  bool dissipation_ok() const { return dissipation_slack >= -1e-12 * (1.0 + perimeter_before); }
};

struct Snapshot {
  int k = 0;
  double time = 0.0;
  BinarySet set;
};

struct FlowTrajectory {
  FlowConfig config;
  std::vector<StepRecord> records;  ///< indices 0..steps(); fewer when an unconstrained set vanishes
  std::vector<BinarySet> states;    ///< E_0..E_K
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
  double centre_x = 0.0;  ///< centroid of E_0, centre of enclosing_radius
  double centre_y = 0.0;
};

/// Called after each completed record; may be empty.
using FlowObserver = std::function<void(const StepRecord&)>;

/// Iterates mm_step from e0. Throws ContainmentError if the set reaches the
/// containment margin of a Neumann box; solver errors propagate.
FlowTrajectory run(const BinarySet& e0, const FlowConfig& cfg, const FlowObserver& observer = {});

/// Step indices kept as snapshots for a run of `steps` steps.
std::vector<int> snapshot_steps(int steps, int early, double growth);

/// max over snapshot pairs with s - t >= h of |E_t sym.diff. E_s| / sqrt(s - t).
double holder_modulus(std::span<const Snapshot> snapshots, double h);
double holder_modulus(const FlowTrajectory& tr);

/// Density ratios of s at radius r over boundary cells (at most max_samples,
/// evenly strided); balls that leave a Neumann box are skipped.
DensityExtremes density_ratios(const BinarySet& s, double r, PerimeterKind kind, int max_samples = 400);

struct DensityReport {
  int k = 0;
  double r_half = 0.0;
  double r_full = 0.0;
  DensityExtremes half;
  DensityExtremes full;
  double distance_scaled = 0.0;   ///< sup_boundary_distance / sqrt(h)
  double curvature_scaled = 0.0;  ///< sup_curvature * sqrt(h)
};
DensityReport density_report(const FlowTrajectory& tr, int k);

struct MultiplierReport {
  double max_abs_lambda_sqrt_h = 0.0;
  double h_sq_plus_lambda_sq = 0.0;  ///< sum_k h (||H||^2 + lambda^2)
  double h_minus_lambda_sq = 0.0;    ///< sum_k h ||H - lambda||^2
  double velocity_sq = 0.0;          ///< sum_k h ||dbar / h||^2
  double perimeter_drop = 0.0;       ///< P(E_0) - P(E_K)
  double dissipation_constant = 0.0; ///< h_minus_lambda_sq / perimeter_drop (0 when no drop)
};
MultiplierReport multiplier_report(const FlowTrajectory& tr);

/// Space-time test function phi(x, y, t).
struct TestFunction {
  std::string name;
  std::function<double(double, double, double)> value;
};

/// Polynomial and trigonometric family on the box, times (1 - t/T)^2.
std::vector<TestFunction> standard_test_family(const GridDomain& domain, double t_end);

struct WeakFormResidual {
  double curvature_identity = 0.0;  ///< max over phi, normalized
  double transport_identity = 0.0;
  double residual = 0.0;            ///< max of the two
  std::vector<double> per_function; ///< max of both identities per test function
};

/// Discrete residuals of the two identities of the distributional
/// formulation. The velocity on the new interface is +dbar_{E_{k-1}}/h
/// (outward normal velocity); both residuals are divided by
/// sum_k h sum_faces |phi| dx.
WeakFormResidual weak_form_residual(const FlowTrajectory& tr, std::span<const TestFunction> family);

struct BallSnapshot {
  int k = 0;
  double time = 0.0;
  double isoperimetric_ratio = 0.0;
  double floor_ratio = 0.0;  ///< digital disk of the same volume
  int components = 0;
  std::vector<double> component_ratios;
  std::vector<double> component_floors;
};

struct BallConvergenceReport {
  std::vector<BallSnapshot> series;
  double final_ratio = 0.0;
  double final_floor = 0.0;
  int final_components = 0;
};

/// Smallest isoperimetric ratio among digital disks of about the given volume
/// (a few sub-cell centre offsets), the grid floor of the ratio.
double disk_floor_ratio(const GridDomain& domain, double volume, PerimeterKind kind);

BallConvergenceReport ball_convergence_report(const FlowTrajectory& tr);

/// Growth bound on the enclosing radius: enclosing_radius(k) <= enclosing_radius(0)
/// + sum_{j<=k} h |lambda_j| + slack, reported as the worst excess.
double enclosing_radius_excess(const FlowTrajectory& tr, double slack);

/// max_k P(E_k) - P(E_0) - sum_{j<=k} eps_fix_j; non-positive when the
/// perimeter never exceeds its initial value beyond the logged allowances.
double perimeter_excess(const FlowTrajectory& tr);

/// Radius sqrt(|E_k| / pi) against the shrinking circle sqrt(r0^2 - 2t), with
/// r0 taken from |E_0|; steps with closed-form radius below r_min are skipped. A set
/// that vanishes while the circle is still above r_min counts as error 1.
struct CircleTrackingReport {
  double r0 = 0.0;
  double max_relative_error = 0.0;
  int steps_compared = 0;
};
CircleTrackingReport circle_tracking_report(const FlowTrajectory& tr, double r_min);

/// Run-level scalars gathered from the records and reports above.
struct TrajectorySummary {
  int steps = 0;
  Index initial_cells = 0;
  bool volume_conserved = true;  ///< every state has the initial cell count
  int dissipation_failures = 0;
  double min_dissipation_slack = 0.0;
  double perimeter_excess = 0.0;
  int total_flipped_cells = 0;
  int max_flipped_cells = 0;
  int kept_previous_steps = 0;
  double holder_modulus = 0.0;  ///< 0 with fewer than two snapshots
  double max_distance_scaled = 0.0;   ///< max_k sup_boundary_distance / sqrt(h)
  double max_curvature_scaled = 0.0;  ///< max_k sup_curvature * sqrt(h)
  double max_el_residual_median = 0.0;
  double max_el_scale = 0.0;  ///< max_k (|lambda| + sup|H|)
  double density_min = 0.0;   ///< smallest of all density ratios, both radii, all steps
  double density_max = 0.0;
  double max_sym_diff_initial = 0.0;
  double max_diameter = 0.0;
  double enclosing_excess = 0.0;  ///< enclosing_radius_excess with slack sqrt(2) dx
  MultiplierReport multiplier;
};
TrajectorySummary summarize(const FlowTrajectory& tr);

}  // namespace flatflow
