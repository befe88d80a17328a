#pragma once

#include "flatflow/grid.hpp"

#include <cstdint>
#include <vector>

namespace flatflow {

/// Exact Euclidean signed distance of a binary set, negative inside.
///
/// Distances are measured between cell centers of opposite phase and then
/// shifted by half a cell, so the zero level sits on the faces separating the
/// set from its complement and every cell satisfies |d| >= dx/2.
class SignedDistanceField {
 public:
  SignedDistanceField(ScalarField values, std::uint64_t source);

  const GridDomain& domain() const { return values_.domain(); }
  const ScalarField& field() const { return values_; }
  const Field<double>& values() const { return values_.values(); }
  double operator()(Index iy, Index ix) const { return values_(iy, ix); }
  double at(Index id) const { return values_.at(id); }
  /// Fingerprint of the set the field was computed from.
  std::uint64_t source() const { return source_; }

 private:
  ScalarField values_;
  std::uint64_t source_;
};

/// Squared distance, in cells, from every cell center to the nearest center of
/// a site cell. Separable lower-envelope transform; sites must be non-empty.
Field<double> squared_distance_to_sites(const MaskArray& sites, Boundary bc);

SignedDistanceField signed_distance(const BinarySet& f);

/// Cells with |d| <= width, ordered by |d| (ties by cell id).
std::vector<Index> restrict_to_band(const SignedDistanceField& d, double width);

}  // namespace flatflow
