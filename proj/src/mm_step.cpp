#include "flatflow/mm_step.hpp"

#include "flatflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace flatflow {

void StepConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw DomainError("time step must be positive");
  }
  if (!(inner_tol > 0.0)) {
    throw DomainError("inner tolerance must be positive");
  }
  if (inner_max_iters <= 0) {
    throw DomainError("inner iteration limit must be positive");
  }
  if (lambda_tol < 0) {
    throw DomainError("volume tolerance must be non-negative");
  }
  if (!(bracket_scale > 0.0)) {
    throw DomainError("bracket scale must be positive");
  }
}

namespace {

// Pair stencil bound to one grid: weights plus contiguous index runs.
class PairOperator {
 public:
  PairOperator(PerimeterKind kind, Index ny, Index nx, Boundary bc) : ny_(ny), nx_(nx) {
    for (const PairTerm& t : pair_stencil(kind)) {
      weights_.push_back(t.weight);
      runs_.push_back(pair_runs(t, ny, nx, bc));
    }
  }

  std::size_t terms() const { return weights_.size(); }
  double weight(std::size_t k) const { return weights_[k]; }

  // Calls fn(i, j) for every pair of term k.
  template <class Fn>
  void for_pairs(std::size_t k, Fn&& fn) const {
    for (const PairRun& r : runs_[k]) {
      for (Index t = 0; t < r.length; ++t) {
        fn(r.first + t, r.partner + t);
      }
    }
  }

  // div = -K^T q
  void divergence(const DualField& q, Field<double>& div) const {
    div.setZero(ny_, nx_);
    double* out = div.data();
    for (std::size_t k = 0; k < terms(); ++k) {
      const double w = weights_[k];
      const double* src = q[k].data();
      for_pairs(k, [&](Index i, Index j) {
        const double v = w * src[i];
        out[i] += v;
        out[j] -= v;
      });
    }
  }

  double weight_sum() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

  double norm_bound() const {
    double total = 0.0;
    for (double w : weights_) {
      total += 4.0 * w * w;
    }
    return total;
  }

 private:
  Index ny_;
  Index nx_;
  std::vector<double> weights_;
  std::vector<std::vector<PairRun>> runs_;
};

DualField zero_dual(PerimeterKind kind, Index ny, Index nx) {
  return DualField(pair_stencil(kind).size(), Field<double>::Zero(ny, nx));
}

bool dual_matches(const DualField& q, PerimeterKind kind, Index ny, Index nx) {
  if (q.size() != pair_stencil(kind).size()) {
    return false;
  }
  return std::all_of(q.begin(), q.end(), [&](const Field<double>& f) { return f.rows() == ny && f.cols() == nx; });
}

void clip_dual(DualField& q) {
  for (auto& f : q) {
    f = f.max(-1.0).min(1.0);
  }
}

// Gap in cell units for the scaled problem TV(u) + <c, u> over u in [0,1].
double scaled_gap(const Field<double>& u, const DualField& q, const Field<double>& c, PerimeterKind kind, Boundary bc,
                  Field<double>& div) {
  const double primal = total_variation(u, kind, bc) + (u * c).sum();
  pair_divergence(q, kind, bc, div);
  const double dual = (c - div).min(0.0).sum();
  return primal - dual;
}

}  // namespace

double duality_gap(const Field<double>& u, const DualField& q, const ScalarField& g, PerimeterKind kind) {
  const auto& d = g.domain();
  Field<double> div;
  return scaled_gap(u, q, g.values() * d.dx(), kind, d.boundary(), div) * d.face_area();
}

InnerSolution inner_solve(const ScalarField& g, PerimeterKind kind, double tol, int max_iters,
                          const WarmStart* warm) {
  const auto& d = g.domain();
  const Boundary bc = d.boundary();
  const Index ny = d.ny();
  const Index nx = d.nx();
  // Work in cell units: divide the energy by the face area.
  const Field<double> c = g.values() * d.dx();
  const double scaled_tol = tol / d.face_area();
  const auto stencil = pair_stencil(kind);

  Field<double> u;
  if (warm != nullptr && warm->u.rows() == ny && warm->u.cols() == nx) {
    u = warm->u.max(0.0).min(1.0);
  } else {
    u = (c < 0.0).cast<double>();
  }
  DualField q;
  if (warm != nullptr && dual_matches(warm->q, kind, ny, nx)) {
    q = warm->q;
    clip_dual(q);
  } else {
    q = zero_dual(kind, ny, nx);
  }

  // Diagonal preconditioning: each row of K holds +-w_k twice, each column at
  // most 2 sum_k w_k in absolute value.
  const PairOperator op(kind, ny, nx, bc);
  const double tau = 1.0 / (2.0 * op.weight_sum());
  constexpr int kCheckEvery = 10;

  Field<double> ubar = u;
  Field<double> div;
  double gap = scaled_gap(u, q, c, kind, bc, div);
  int it = 0;
  while (gap > scaled_tol && it < max_iters) {
    for (int inner = 0; inner < kCheckEvery && it < max_iters; ++inner, ++it) {
      const double* ub = ubar.data();
      for (std::size_t k = 0; k < op.terms(); ++k) {
        const double w = op.weight(k);
        const double sigma = 1.0 / (2.0 * w);
        double* qk = q[k].data();
        op.for_pairs(k, [&](Index i, Index j) {
          qk[i] = std::clamp(qk[i] + sigma * w * (ub[j] - ub[i]), -1.0, 1.0);
        });
      }
      op.divergence(q, div);
      double* uu = u.data();
      double* bb = ubar.data();
      const double* dv = div.data();
      const double* cc = c.data();
      for (Index i = 0; i < u.size(); ++i) {
        const double next = std::clamp(uu[i] + tau * (dv[i] - cc[i]), 0.0, 1.0);
        bb[i] = 2.0 * next - uu[i];
        uu[i] = next;
      }
    }
    gap = scaled_gap(u, q, c, kind, bc, div);
  }
  if (gap > scaled_tol) {
    throw ConvergenceError("inner solve did not reach the gap tolerance", gap * d.face_area(), it);
  }
  return InnerSolution{ScalarField(d, std::move(u)), std::move(q), gap * d.face_area(), it};
}

ScalarField step_potential(const SignedDistanceField& driving, double lambda, double h) {
  return ScalarField(driving.domain(), (driving.values() - lambda * h) / h);
}

ParametricRelaxation parametric_relaxation(const SignedDistanceField& driving, double h, PerimeterKind kind,
                                           double tol, int max_iters) {
  const auto& d = driving.domain();
  const Boundary bc = d.boundary();
  // Denoise f = -dx dbar / h: min TV(w) + |w - f|^2 / 2, by accelerated
  // projected gradient on the dual, w = f + div q.
  const Field<double> f = -driving.values() * (d.dx() / h);
  const double scaled_tol = tol / d.face_area();
  const Index ny = d.ny();
  const Index nx = d.nx();
  const PairOperator op(kind, ny, nx, bc);
  const double step = 1.0 / op.norm_bound();
  const double f_norm = 0.5 * f.square().sum();

  // Start from the dual saturated along the gradient of f.
  DualField q;
  pair_differences(f, kind, bc, q);
  for (auto& qk : q) {
    qk = qk.sign();
  }
  DualField y = q;
  DualField next = q;
  Field<double> w;
  Field<double> div;
  double t = 1.0;
  auto gap_of = [&](const DualField& dual) {
    op.divergence(dual, div);
    w = f + div;
    return total_variation(w, kind, bc) + 0.5 * div.square().sum() - f_norm + 0.5 * w.square().sum();
  };

  constexpr int kCheckEvery = 10;
  double gap = gap_of(q);
  int it = 0;
  while (gap > scaled_tol && it < max_iters) {
    for (int inner = 0; inner < kCheckEvery && it < max_iters; ++inner, ++it) {
      op.divergence(y, div);
      w = f + div;
      const double* wv = w.data();
      // Projected gradient step into `next`, extrapolation written over y.
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      double restart = 0.0;
      for (std::size_t k = 0; k < op.terms(); ++k) {
        const double wk = op.weight(k);
        double* yk = y[k].data();
        const double* qk = q[k].data();
        double* nk = next[k].data();
        op.for_pairs(k, [&](Index i, Index j) {
          const double v = std::clamp(yk[i] + step * wk * (wv[j] - wv[i]), -1.0, 1.0);
          restart += (yk[i] - v) * (v - qk[i]);
          nk[i] = v;
          yk[i] = v + beta * (v - qk[i]);
        });
      }
      std::swap(q, next);
      if (restart > 0.0) {
        // Momentum points uphill: restart the acceleration.
        t = 1.0;
        y = q;
      } else {
        t = t_next;
      }
    }
    gap = gap_of(q);
  }
  ParametricRelaxation out{ScalarField(d, -w / d.dx()), std::move(q), gap * d.face_area(), it};
  return out;
}

BinarySet level_set(const ParametricRelaxation& r, const SignedDistanceField& driving, double lambda, double h) {
  require_same_domain(r.entry.domain(), driving.domain(), "level_set");
  const auto& e = r.entry.values();
  const Field<double> g = driving.values() - lambda * h;
  MaskArray mask = ((e < lambda) || ((e == lambda) && (g < 0.0))).cast<std::uint8_t>();
  return BinarySet(driving.domain(), std::move(mask));
}

BinarySet threshold(const ScalarField& u, const ScalarField& g, double level) {
  require_same_domain(u.domain(), g.domain(), "threshold");
  const auto& v = u.values();
  MaskArray mask = ((v > level) || ((v == level) && (g.values() < 0.0))).cast<std::uint8_t>();
  return BinarySet(u.domain(), std::move(mask));
}

double step_energy(const BinarySet& e, const SignedDistanceField& driving, double h, PerimeterKind kind) {
  require_same_domain(e.domain(), driving.domain(), "step_energy");
  const double dissipation = (e.mask() != 0).select(driving.values(), 0.0).sum();
  return perimeter(e, kind) + dissipation * e.domain().cell_volume() / h;
}

double fixup_allowance(const StepOutcome& outcome, const GridDomain& domain) {
  return std::max(outcome.inner_gap, outcome.threshold_gap) +
         outcome.flipped_cells * 2.0 * GridDomain::dimension * domain.face_area() + outcome.fixup_potential;
}

namespace {

// Flip `count` cells of the wrong phase, interface cells with smallest |g| first.
int fix_volume(MaskArray& mask, const GridDomain& d, const ScalarField& g, Index count, bool remove,
               double& potential_cost) {
  const BinarySet current(d, mask);
  const MaskArray band = interface_cells(current);
  const std::uint8_t phase = remove ? 1 : 0;
  std::vector<Index> candidates;
  std::vector<Index> fallback;
  for (Index i = 0; i < d.cells(); ++i) {
    if (mask.data()[i] != phase) {
      continue;
    }
    (band.data()[i] != 0 ? candidates : fallback).push_back(i);
  }
  auto by_potential = [&g](Index a, Index b) {
    const double ga = std::abs(g.at(a));
    const double gb = std::abs(g.at(b));
    return ga < gb || (ga == gb && a < b);
  };
  std::sort(candidates.begin(), candidates.end(), by_potential);
  std::sort(fallback.begin(), fallback.end(), by_potential);
  candidates.insert(candidates.end(), fallback.begin(), fallback.end());
  if (static_cast<Index>(candidates.size()) < count) {
    throw SolverError("volume fix-up ran out of candidate cells");
  }
  for (Index k = 0; k < count; ++k) {
    const Index i = candidates[static_cast<std::size_t>(k)];
    mask.data()[i] = remove ? 0 : 1;
    potential_cost += std::abs(g.at(i)) * d.cell_volume();
  }
  return static_cast<int>(count);
}

// Change of the step energy when cell (iy, ix) switches phase.
double flip_delta(const MaskArray& m, const GridDomain& d, const SignedDistanceField& df, double h, PerimeterKind kind,
                  Index iy, Index ix) {
  const bool periodic = d.boundary() == Boundary::Periodic;
  const std::uint8_t u = m(iy, ix);
  double pairs = 0.0;
  for (const PairTerm& t : pair_stencil(kind)) {
    for (int sign : {1, -1}) {
      Index py = iy + sign * t.dy;
      Index px = ix + sign * t.dx;
      if (periodic) {
        py = (py % d.ny() + d.ny()) % d.ny();
        px = (px % d.nx() + d.nx()) % d.nx();
      } else if (py < 0 || py >= d.ny() || px < 0 || px >= d.nx()) {
        continue;
      }
      // |u_p - u| goes from 0 to 1 or from 1 to 0
      pairs += t.weight * (m(py, px) == u ? 1.0 : -1.0);
    }
  }
  const double linear = df.at(iy * d.nx() + ix) * d.cell_volume() / h;
  return pairs * d.face_area() + (u != 0 ? -linear : linear);
}

// Volume-preserving descent: swap one cell in and one out while that strictly
// lowers the step energy. Candidates are the interface cells with the most
// negative single-flip changes; the pair change is evaluated exactly.
int swap_descent(MaskArray& m, const GridDomain& d, const SignedDistanceField& df, double h, PerimeterKind kind) {
  constexpr std::size_t kShortlist = 12;
  const double tiny = 1e-12 * d.face_area();
  int swaps = 0;
  const Index limit = d.cells();
  while (swaps < limit) {
    const MaskArray band = interface_cells(BinarySet(d, m));
    std::vector<std::pair<double, Index>> adds;
    std::vector<std::pair<double, Index>> removes;
    for (Index i = 0; i < d.cells(); ++i) {
      if (band.data()[i] == 0) {
        continue;
      }
      const double delta = flip_delta(m, d, df, h, kind, i / d.nx(), i % d.nx());
      (m.data()[i] != 0 ? removes : adds).push_back({delta, i});
    }
    auto shortlist = [&](std::vector<std::pair<double, Index>>& v) {
      const std::size_t k = std::min(kShortlist, v.size());
      std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
      v.resize(k);
    };
    shortlist(adds);
    shortlist(removes);
    double best = -tiny;
    Index best_add = -1;
    Index best_remove = -1;
    for (const auto& [da, a] : adds) {
      if (removes.empty() || da + removes.front().first >= best + 8.0 * d.face_area()) {
        continue;
      }
      m.data()[a] = 1;
      for (const auto& [dr0, r] : removes) {
        const double total = da + flip_delta(m, d, df, h, kind, r / d.nx(), r % d.nx());
        if (total < best) {
          best = total;
          best_add = a;
          best_remove = r;
        }
      }
      m.data()[a] = 0;
    }
    if (best_add < 0) {
      break;
    }
    m.data()[best_add] = 1;
    m.data()[best_remove] = 0;
    ++swaps;
  }
  return swaps;
}

// The level sets of the denoising solution must resolve multipliers far more
// finely than the certified gap of a single step does.
constexpr double kParametricTolFactor = 1e-4;

struct Evaluation {
  double lambda = 0.0;
  Index cells = 0;
};

}  // namespace

StepOutcome lambda_search(const BinarySet& f, double target_volume, const StepConfig& cfg) {
  cfg.validate();
  const auto& d = f.domain();
  if (f.empty() || f.full()) {
    throw DomainError("minimizing movement step needs a set that is neither empty nor the full grid");
  }
  const double target_real = target_volume / d.cell_volume();
  const auto target = static_cast<Index>(std::llround(target_real));
  if (std::abs(target_real - double(target)) > 1e-6 || target <= 0 || target >= d.cells()) {
    throw DomainError("target volume must be a whole number of cells strictly inside (0, grid volume)");
  }

  const SignedDistanceField df = signed_distance(f);
  const ParametricRelaxation par =
      parametric_relaxation(df, cfg.h, cfg.kind, kParametricTolFactor * cfg.inner_tol, cfg.inner_max_iters);

  StepOutcome out{f};
  out.inner_iterations = par.iterations;
  // Accuracy of the entry multipliers implied by the denoising gap.
  const double spread = std::sqrt(2.0 * std::max(par.gap, 0.0) / d.face_area()) / d.dx();

  auto certify = [&](const BinarySet& candidate, double lambda) {
    const ScalarField g = step_potential(df, lambda, cfg.h);
    // Near a jump of the volume every blend of the two adjacent level sets is a
    // relaxed minimizer; blend over the accuracy of the entry multipliers.
    const double blend = std::max(spread, 1e-12);
    WarmStart warm{(0.5 + (lambda - par.entry.values()) / (2.0 * blend)).max(0.0).min(1.0), par.q};
    InnerSolution sol = inner_solve(g, cfg.kind, cfg.inner_tol, cfg.inner_max_iters, &warm);
    out.inner_iterations += sol.iterations;
    out.inner_gap = sol.gap;
    out.threshold_gap = duality_gap(candidate.mask().cast<double>(), sol.q, g, cfg.kind);
    return sol;
  };

  if (cfg.mode == StepMode::Unconstrained) {
    const BinarySet guess = level_set(par, df, 0.0, cfg.h);
    InnerSolution sol = certify(guess, 0.0);
    out.set = threshold(sol.u, step_potential(df, 0.0, cfg.h));
    out.threshold_gap = duality_gap(out.set.mask().cast<double>(), sol.q, step_potential(df, 0.0, cfg.h), cfg.kind);
    out.lambda = 0.0;
    out.energy = step_energy(out.set, df, cfg.h, cfg.kind);
    out.lambda_evaluations = 1;
    return out;
  }

  std::vector<Evaluation> history;
  auto evaluate = [&](double lambda) {
    const Index cells = level_set(par, df, lambda, cfg.h).count();
    for (const auto& e : history) {
      if ((e.lambda < lambda && e.cells > cells) || (e.lambda > lambda && e.cells < cells)) {
        ++out.monotonicity_violations;
      }
    }
    history.push_back({lambda, cells});
    return Evaluation{lambda, cells};
  };

  const double half = cfg.bracket_scale / std::sqrt(cfg.h);
  const double initial_width = 2.0 * half;
  const Index tol = cfg.lambda_tol;
  auto matches = [&](const Evaluation& e) { return std::abs(e.cells - target) <= tol; };

  // Volume is non-decreasing in lambda: lo must give at most the target, hi at least.
  Evaluation lo = evaluate(-half);
  Evaluation hi = evaluate(half);
  int doublings = 0;
  double reach = half;
  while (lo.cells > target && !matches(lo)) {
    if (++doublings > 60) {
      throw SolverError("multiplier bracket expansion failed");
    }
    reach *= 2.0;
    lo = evaluate(-reach);
  }
  reach = half;
  while (hi.cells < target && !matches(hi)) {
    if (++doublings > 60) {
      throw SolverError("multiplier bracket expansion failed");
    }
    reach *= 2.0;
    hi = evaluate(reach);
  }

  std::optional<Evaluation> chosen;
  if (matches(lo)) {
    chosen = lo;
  } else if (matches(hi)) {
    chosen = hi;
  }
  while (!chosen && hi.lambda - lo.lambda >= 1e-12 * initial_width) {
    const Evaluation mid = evaluate(0.5 * (lo.lambda + hi.lambda));
    if (matches(mid)) {
      chosen = mid;
    } else if (mid.cells < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Entry multipliers closer than this are indistinguishable: a target that is
  // only attained between them is a jump of the volume, not a plateau.
  const double resolution = std::max(2.0 * spread, 1e-12 * initial_width);
  double lambda = 0.5 * (lo.lambda + hi.lambda);
  bool attained = false;
  if (chosen) {
    double below = chosen->lambda;
    double above = chosen->lambda;
    auto refine = [&](double inside, double outside) {
      while (std::abs(outside - inside) >= 1e-12 * initial_width) {
        const Evaluation mid = evaluate(0.5 * (inside + outside));
        (matches(mid) ? inside : outside) = mid.lambda;
      }
      return inside;
    };
    if (!matches(lo)) {
      below = refine(chosen->lambda, lo.lambda);
    }
    if (!matches(hi)) {
      above = refine(chosen->lambda, hi.lambda);
    }
    // Every multiplier in the attaining interval is admissible; report its
    // midpoint, the estimate least biased by lattice pinning.
    lambda = 0.5 * (below + above);
    attained = above - below > resolution;
  }

  if (attained) {
    const BinarySet candidate = level_set(par, df, lambda, cfg.h);
    certify(candidate, lambda);
    out.lambda = lambda;
    MaskArray mask = candidate.mask();
    const Index mismatch = candidate.count() - target;
    if (mismatch != 0) {
      out.flipped_cells = fix_volume(mask, d, step_potential(df, lambda, cfg.h), std::abs(mismatch), mismatch > 0,
                                     out.fixup_potential);
      out.descent_swaps = swap_descent(mask, d, df, cfg.h, cfg.kind);
    }
    out.set = BinarySet(d, std::move(mask));
    out.energy = step_energy(out.set, df, cfg.h, cfg.kind);
    out.lambda_evaluations = static_cast<int>(history.size());
    return out;
  }

  // A jump: fix up both adjacent level sets against one dual certificate.
  // Those two and the previous set are polished by swap descent; the cheapest
  // of the three is returned.
  const ScalarField g = step_potential(df, lambda, cfg.h);
  const BinarySet sides[2] = {level_set(par, df, lambda - 0.5 * resolution, cfg.h),
                              level_set(par, df, lambda + 0.5 * resolution, cfg.h)};
  const InnerSolution sol = certify(sides[0], lambda);
  out.lambda = lambda;
  out.lambda_evaluations = static_cast<int>(history.size());
  struct Fixed {
    BinarySet set;
    double threshold_gap;
    int flips;
    double potential;
    double energy;
    int swaps;
  };
  std::vector<Fixed> fixed;
  for (const BinarySet& side : sides) {
    MaskArray mask = side.mask();
    const Index mismatch = side.count() - target;
    double potential = 0.0;
    int flips = 0;
    if (mismatch != 0) {
      flips = fix_volume(mask, d, g, std::abs(mismatch), mismatch > 0, potential);
    }
    const int swaps = swap_descent(mask, d, df, cfg.h, cfg.kind);
    BinarySet set(d, std::move(mask));
    const double e = step_energy(set, df, cfg.h, cfg.kind);
    fixed.push_back(
        {std::move(set), duality_gap(side.mask().cast<double>(), sol.q, g, cfg.kind), flips, potential, e, swaps});
  }
  auto allowance = [&](const Fixed& x) {
    return std::max(out.inner_gap, x.threshold_gap) + x.flips * 2.0 * GridDomain::dimension * d.face_area() +
           x.potential;
  };
  const Fixed& cert = allowance(fixed[0]) <= allowance(fixed[1]) ? fixed[0] : fixed[1];
  out.threshold_gap = cert.threshold_gap;
  out.flipped_cells = cert.flips;
  out.fixup_potential = cert.potential;
  const Fixed& cheap = fixed[0].energy <= fixed[1].energy ? fixed[0] : fixed[1];
  MaskArray polished = f.mask();
  const int prev_swaps = swap_descent(polished, d, df, cfg.h, cfg.kind);
  BinarySet prev(d, std::move(polished));
  const double e_prev = step_energy(prev, df, cfg.h, cfg.kind);
  if (e_prev < cheap.energy) {
    out.set = std::move(prev);
    out.energy = e_prev;
    out.descent_swaps = prev_swaps;
    out.kept_previous = prev_swaps == 0;
  } else {
    out.set = cheap.set;
    out.energy = cheap.energy;
    out.descent_swaps = cheap.swaps;
  }
  return out;
}

StepOutcome mm_step(const BinarySet& f, const StepConfig& cfg) {
  return lambda_search(f, volume(f), cfg);
}

}  // namespace flatflow
