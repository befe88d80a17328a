#include "flatflow/oracle.hpp"

#include "flatflow/distance.hpp"
#include "flatflow/energy.hpp"
#include "flatflow/error.hpp"
#include "flatflow/mm_step.hpp"

#include <bit>
#include <cmath>
#include <vector>

namespace flatflow {

double oracle_tie_tolerance(double energy) { return 1e-9 * (1.0 + std::abs(energy)); }

namespace {

// a precedes b when, at the first cell where they differ, a is unset.
bool lex_smaller(std::uint32_t a, std::uint32_t b) {
  const std::uint32_t diff = a ^ b;
  if (diff == 0) {
    return false;
  }
  const std::uint32_t first = diff & (~diff + 1);
  return (a & first) == 0;
}

}  // namespace

OracleResult brute_force_min(const BinarySet& f, double h, Index target_cells) {
  const auto& d = f.domain();
  const Index n = d.cells();
  if (n > kOracleMaxCells) {
    throw DomainError("oracle grid too large: at most 25 cells");
  }
  if (target_cells <= 0 || target_cells >= n) {
    throw DomainError("oracle target must lie strictly between 0 and the cell count");
  }
  if (!(h > 0.0)) {
    throw DomainError("time step must be positive");
  }
  const SignedDistanceField df = signed_distance(f);
  const Index nx = d.nx();
  const Index ny = d.ny();

  // Face pairs as bit masks: bit i of `right` pairs cell i with i + 1, etc.
  std::uint32_t right = 0;
  std::uint32_t down = 0;
  std::uint32_t wrap_right = 0;
  std::uint32_t wrap_down = 0;
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) {
      const auto bit = std::uint32_t{1} << d.id(iy, ix);
      if (ix + 1 < nx) {
        right |= bit;
      } else if (d.boundary() == Boundary::Periodic) {
        wrap_right |= bit;
      }
      if (iy + 1 < ny) {
        down |= bit;
      } else if (d.boundary() == Boundary::Periodic) {
        wrap_down |= bit;
      }
    }
  }
  const auto snx = static_cast<unsigned>(nx);
  const auto shift_y = static_cast<unsigned>(nx * (ny - 1));
  auto faces = [&](std::uint32_t m) {
    int count = std::popcount((m ^ (m >> 1)) & right) + std::popcount((m ^ (m >> snx)) & down);
    if (wrap_right != 0) {
      count += std::popcount((m ^ (m << (snx - 1))) & wrap_right);
    }
    if (wrap_down != 0) {
      count += std::popcount((m ^ (m << shift_y)) & wrap_down);
    }
    return count;
  };
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    weight[static_cast<std::size_t>(i)] = df.at(i) * d.cell_volume() / h;
  }
  auto energy = [&](std::uint32_t m) {
    double e = faces(m) * d.face_area();
    for (std::uint32_t rest = m; rest != 0; rest &= rest - 1) {
      e += weight[static_cast<std::size_t>(std::countr_zero(rest))];
    }
    return e;
  };

  const std::uint32_t limit = std::uint32_t{1} << n;
  std::uint32_t m = (std::uint32_t{1} << target_cells) - 1;
  std::uint32_t best = m;
  double best_energy = energy(m);
  std::uint64_t candidates = 0;
  int ties = 0;
  while (m < limit) {
    ++candidates;
    const double e = energy(m);
    const double tol = oracle_tie_tolerance(best_energy);
    if (e < best_energy - tol) {
      best = m;
      best_energy = e;
      ties = 1;
    } else if (e <= best_energy + tol) {
      ++ties;
      if (lex_smaller(m, best)) {
        best = m;
        best_energy = std::min(best_energy, e);
      }
    }
    // Gosper's hack: next integer with the same popcount.
    const std::uint32_t c = m & (~m + 1);
    const std::uint32_t r = m + c;
    if (r >= limit || r == 0) {
      break;
    }
    m = (((r ^ m) >> 2) / c) | r;
  }

  MaskArray mask = MaskArray::Zero(ny, nx);
  for (Index i = 0; i < n; ++i) {
    mask.data()[i] = ((best >> i) & 1U) != 0 ? 1 : 0;
  }
  BinarySet out(d, std::move(mask));
  const double e = step_energy(out, df, h, PerimeterKind::Anisotropic4);
  return OracleResult{std::move(out), e, candidates, ties};
}

OracleCase random_oracle_case(std::mt19937_64& rng, Index side) {
  if (side * side > kOracleMaxCells) {
    throw DomainError("random_oracle_case: grid too large for the oracle");
  }
  const GridDomain d(side, side, 1.0);
  MaskArray m(side, side);
  BinarySet f(d);
  do {
    for (Index i = 0; i < d.cells(); ++i) {
      m.data()[i] = rng() % 100 < 40 ? 1 : 0;
    }
    f = BinarySet(d, m);
  } while (f.empty() || f.full());
  // 53 random bits -> [0, 1)
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return {f, 0.2 * std::pow(25.0, u)};
}

OracleComparison compare_with_oracle(const OracleCase& c, double inner_tol) {
  StepConfig cfg;
  cfg.h = c.h;
  cfg.kind = PerimeterKind::Anisotropic4;
  cfg.inner_tol = inner_tol;
  cfg.lambda_tol = 0;
  const StepOutcome o = mm_step(c.f, cfg);
  const OracleResult r = brute_force_min(c.f, c.h, c.f.count());
  const GridDomain& d = c.f.domain();
  OracleComparison out;
  out.solver_energy = o.energy;
  out.oracle_energy = r.best_energy;
  out.tolerance = inner_tol + o.flipped_cells * 2.0 * GridDomain::dimension * d.face_area() + o.inner_gap;
  out.energy_ok = o.energy <= r.best_energy + out.tolerance + oracle_tie_tolerance(r.best_energy);
  out.ties = r.ties;
  out.flipped_cells = o.flipped_cells;
  out.mask_checked = r.ties == 1 && o.flipped_cells == 0;
  out.mask_ok = !out.mask_checked || o.set == r.best_mask;
  out.candidates = r.num_candidates;
  return out;
}

}  // namespace flatflow
