#pragma once

#include "flatflow/grid.hpp"
#include "flatflow/mm_step.hpp"

#include <cstdint>
#include <random>

namespace flatflow {

/// Largest grid the enumeration accepts.
inline constexpr Index kOracleMaxCells = 25;

struct OracleResult {
  BinarySet best_mask;
  double best_energy = 0.0;
  std::uint64_t num_candidates = 0;
  int ties = 0;  ///< masks whose energy equals best_energy (within rounding)
};

/// Exhaustive minimum of the Anisotropic4 step energy over all masks with
/// exactly target_cells set cells. Among equal energies the mask whose
/// row-major bit string is lexicographically smallest wins.
OracleResult brute_force_min(const BinarySet& f, double h, Index target_cells);

/// Energy tolerance under which two oracle candidates count as tied.
double oracle_tie_tolerance(double energy);

/// Random side x side instance (dx = 1), cells set with
/// probability 0.4 (redrawn while empty or full), h log-uniform in [0.2, 5].
struct OracleCase {
  BinarySet f;
  double h = 1.0;
};
OracleCase random_oracle_case(std::mt19937_64& rng, Index side);

/// mm_step (Anisotropic4, lambda_tol = 0) against the enumeration.
struct OracleComparison {
  double solver_energy = 0.0;
  double oracle_energy = 0.0;
  /// inner_tol + flipped_cells * 2d dx^(d-1) + inner_gap
  double tolerance = 0.0;
  bool energy_ok = false;
  int ties = 0;
  int flipped_cells = 0;
  /// Masks are compared only for a unique optimum reached without fix-up.
  bool mask_checked = false;
  bool mask_ok = true;
  std::uint64_t candidates = 0;
};
OracleComparison compare_with_oracle(const OracleCase& c, double inner_tol);

}  // namespace flatflow
