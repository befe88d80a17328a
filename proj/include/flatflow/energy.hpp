#pragma once

#include "flatflow/distance.hpp"
#include "flatflow/grid.hpp"

#include <optional>
#include <span>
#include <vector>

namespace flatflow {

/// Anisotropic4 counts exposed faces. Isotropic is a weighted sum of
/// absolute differences over a 16-cell neighbourhood whose weights make the
/// directional perimeter nearly independent of the interface orientation.
/// Both satisfy the coarea formula, so relaxed and binary values agree.
enum class PerimeterKind { Anisotropic4, Isotropic };

/// One pairwise term w * |u(iy + dy, ix + dx) - u(iy, ix)|.
struct PairTerm {
  int dy;
  int dx;
  double weight;
};

std::span<const PairTerm> pair_stencil(PerimeterKind kind);

/// Contiguous stretch of pairs (first + t, partner + t), t < length, in
/// row-major cell indices.
struct PairRun {
  Index first;
  Index partner;
  Index length;
};

/// All pairs of one stencil term on an ny x nx grid as contiguous runs.
std::vector<PairRun> pair_runs(const PairTerm& term, Index ny, Index nx, Boundary bc);

/// Perimeter per unit length of a straight interface with normal angle theta.
double directional_perimeter(PerimeterKind kind, double theta);

/// Weighted pair differences K u, one field per stencil term, in cell units.
/// Pairs leaving a Neumann grid contribute zero; periodic grids wrap around.
void pair_differences(const Field<double>& u, PerimeterKind kind, Boundary bc, std::vector<Field<double>>& out);

/// Negative adjoint of pair_differences: <K u, q> = -<u, div q>.
void pair_divergence(const std::vector<Field<double>>& q, PerimeterKind kind, Boundary bc, Field<double>& out);

/// Discrete total variation of a relaxed indicator, in cell units (multiply by
/// the face area to get a length).
double total_variation(const Field<double>& u, PerimeterKind kind, Boundary bc);

/// Per-cell perimeter contribution (length units); each cell owns the pair
/// terms that start at it.
Field<double> perimeter_contributions(const BinarySet& s, PerimeterKind kind);

/// Perimeter of s, optionally localized to the cells of a window.
double perimeter(const BinarySet& s, PerimeterKind kind, std::optional<CellBox> window = std::nullopt);

/// Curvature sample on one interface-adjacent cell.
struct BoundaryBandSample {
  Index cell;
  double curvature;  ///< 1/length, positive for convex sets
  double distance;   ///< signed distance of the driving set at the cell
  int exposed_faces;
};

/// Width (in cells) of the Gaussian applied to the signed distance before the
/// five-point Laplacian. The raw Laplacian of a distance to a digital set is
/// concentrated at staircase corners; smoothing at this width restores a
/// pointwise estimate.
inline constexpr double kCurvatureSmoothingCells = 2.5;

/// Smoothed Laplacian of the signed distance of s; meaningful near the interface.
ScalarField curvature_field(const SignedDistanceField& d);

/// True for cells with a face neighbour of the opposite phase.
MaskArray interface_cells(const BinarySet& s);

std::vector<BoundaryBandSample> curvature_estimate(const BinarySet& s);
/// As above, with `distance` taken from a different driving set.
std::vector<BoundaryBandSample> curvature_estimate(const BinarySet& s, const SignedDistanceField& driving);

/// A face separating a set cell from a complement cell.
struct InterfaceFace {
  Index inside;
  Index outside;
  double x;  ///< face midpoint
  double y;
};

/// Interface faces of s; on Neumann grids faces with a cell closer than
/// `margin` cells to the box edge are skipped.
std::vector<InterfaceFace> interface_faces(const BinarySet& s, Index margin = 0);

/// Face-weighted mean of the sampled curvature (the discrete average curvature).
double mean_curvature(const std::vector<BoundaryBandSample>& samples);

/// P^2 / (4 pi |s|).
double isoperimetric_ratio(const BinarySet& s, PerimeterKind kind = PerimeterKind::Isotropic);

/// Four-connected components; labels are 0 outside the set and 1..count inside.
struct Components {
  Field<int> labels;
  int count = 0;
};
Components label_components(const BinarySet& s);
BinarySet component(const Components& c, const GridDomain& domain, int label);

}  // namespace flatflow
