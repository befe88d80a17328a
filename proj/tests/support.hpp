#pragma once

#include "flatflow/grid.hpp"

#include <cstdint>
#include <random>

namespace flatflow::testing {

// cells whose centre lies within r of (cx, cy)
inline BinarySet disk(const GridDomain& d, double cx, double cy, double r) {
  MaskArray m = MaskArray::Zero(d.ny(), d.nx());
  for (Index iy = 0; iy < d.ny(); ++iy) {
    for (Index ix = 0; ix < d.nx(); ++ix) {
      const double x = d.center_x(ix) - cx;
      const double y = d.center_y(iy) - cy;
      m(iy, ix) = x * x + y * y <= r * r ? 1 : 0;
    }
  }
  return BinarySet(d, std::move(m));
}

inline BinarySet centred_disk(const GridDomain& d, double r) { return disk(d, 0.5 * d.width(), 0.5 * d.height(), r); }

inline BinarySet block(const GridDomain& d, Index x0, Index y0, Index w, Index h) {
  MaskArray m = MaskArray::Zero(d.ny(), d.nx());
  m.block(y0, x0, h, w).setOnes();
  return BinarySet(d, std::move(m));
}

// lower half of the rows
inline BinarySet halfplane(const GridDomain& d) { return block(d, 0, 0, d.nx(), d.ny() / 2); }

inline BinarySet random_set(const GridDomain& d, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution coin(p);
  MaskArray m(d.ny(), d.nx());
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng) ? 1 : 0;
  return BinarySet(d, std::move(m));
}

// random set that is neither empty nor full
inline BinarySet random_proper_set(const GridDomain& d, std::mt19937_64& rng, double p = 0.5) {
  for (;;) {
    BinarySet s = random_set(d, rng, p);
    if (!s.empty() && !s.full()) return s;
  }
}

}  // namespace flatflow::testing
