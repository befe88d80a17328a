#include "flatflow/flow.hpp"

#include "flatflow/distance.hpp"
#include "flatflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace flatflow {

void FlowConfig::validate() const {
  step.validate();
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw DomainError("flow: t_end must be positive");
  }
  if (steps() < 1) {
    throw DomainError("flow: t_end shorter than one time step");
  }
  if (containment_margin < 0) {
    throw DomainError("flow: containment_margin must be non-negative");
  }
  if (early_snapshots < 0 || !(snapshot_growth > 1.0)) {
    throw DomainError("flow: snapshot schedule needs early_snapshots >= 0 and growth > 1");
  }
}

int FlowConfig::steps() const {
  return static_cast<int>(std::floor(t_end / step.h * (1.0 + 1e-12)));
}

std::vector<int> snapshot_steps(int steps, int early, double growth) {
  std::vector<int> out;
  for (int k = 0; k <= std::min(early, steps); ++k) {
    out.push_back(k);
  }
  double next = std::max(1, early);
  while (true) {
    next = std::max(next + 1.0, std::ceil(next * growth));
    if (next >= steps) {
      break;
    }
    out.push_back(static_cast<int>(next));
  }
  if (out.back() != steps) {
    out.push_back(steps);
  }
  return out;
}

namespace {

struct FaceSample {
  double x;
  double y;
  double curvature;
  double distance;  // of the previous state, averaged over the two cells
};

std::vector<FaceSample> face_samples(const BinarySet& s, const SignedDistanceField& previous) {
  const Index margin = s.domain().boundary() == Boundary::Neumann ? 2 : 0;
  const ScalarField h = curvature_field(signed_distance(s));
  std::vector<FaceSample> out;
  for (const InterfaceFace& f : interface_faces(s, margin)) {
    out.push_back({f.x, f.y, 0.5 * (h.at(f.inside) + h.at(f.outside)),
                   0.5 * (previous.at(f.inside) + previous.at(f.outside))});
  }
  return out;
}

double mean_of(const std::vector<FaceSample>& faces) {
  if (faces.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const FaceSample& f : faces) {
    sum += f.curvature;
  }
  return sum / static_cast<double>(faces.size());
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) {
    return 0.0;
  }
  const auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(pos), v.end());
  return v[pos];
}

struct Point {
  double x;
  double y;
};

// Corners of all interface cells.
std::vector<Point> interface_corners(const BinarySet& s) {
  const GridDomain& d = s.domain();
  const MaskArray iface = interface_cells(s);
  std::vector<Point> pts;
  for (Index iy = 0; iy < d.ny(); ++iy) {
    for (Index ix = 0; ix < d.nx(); ++ix) {
      if (iface(iy, ix) && s(iy, ix)) {
        for (int c = 0; c < 4; ++c) {
          pts.push_back({static_cast<double>(ix + (c & 1)) * d.dx(), static_cast<double>(iy + (c >> 1)) * d.dx()});
        }
      }
    }
  }
  return pts;
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double hull_diameter(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() < 2) {
    return 0.0;
  }
  // monotone chain
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      best = std::max(best, std::hypot(hull[i].x - hull[j].x, hull[i].y - hull[j].y));
    }
  }
  return best;
}

double enclosing_radius(const std::vector<Point>& pts, double cx, double cy) {
  double r = 0.0;
  for (const Point& p : pts) {
    r = std::max(r, std::hypot(p.x - cx, p.y - cy));
  }
  return r;
}

void check_containment(const BinarySet& s, int margin, int k) {
  const GridDomain& d = s.domain();
  if (d.boundary() != Boundary::Neumann || margin == 0) {
    return;
  }
  const Index m = margin;
  for (Index iy = 0; iy < d.ny(); ++iy) {
    for (Index ix = 0; ix < d.nx(); ++ix) {
      if (s(iy, ix) && (ix < m || iy < m || ix >= d.nx() - m || iy >= d.ny() - m)) {
        std::ostringstream msg;
        msg << "flow: set reached the " << margin << "-cell box margin at step " << k << " (cell " << iy << "," << ix
            << "); enlarge the box";
        throw ContainmentError(msg.str());
      }
    }
  }
}

// Fields that depend on the state alone.
void describe_state(StepRecord& r, const BinarySet& s, const FlowTrajectory& tr) {
  const double h = tr.config.step.h;
  const std::vector<Point> corners = interface_corners(s);
  r.volume_cells = s.count();
  r.diameter = hull_diameter(corners);
  r.enclosing_radius = enclosing_radius(corners, tr.centre_x, tr.centre_y);
  r.isoperimetric_ratio = isoperimetric_ratio(s);
  r.components = label_components(s).count;
  r.sym_diff_initial = sym_diff_volume(s, tr.states.front());
  r.density_half = density_ratios(s, 0.5 * std::sqrt(h), tr.config.step.kind);
  r.density_full = density_ratios(s, std::sqrt(h), tr.config.step.kind);
}

}  // namespace

FlowTrajectory run(const BinarySet& e0, const FlowConfig& cfg, const FlowObserver& observer) {
  cfg.validate();
  if (e0.empty() || e0.full()) {
    throw DomainError("flow: initial set must be neither empty nor full");
  }
  const GridDomain& dom = e0.domain();
  const double h = cfg.step.h;
  const int steps = cfg.steps();
  const PerimeterKind kind = cfg.step.kind;

  FlowTrajectory tr;
  tr.config = cfg;
  if (std::sqrt(h) < 3.0 * dom.dx()) {
    std::ostringstream msg;
    msg << "sqrt(h) = " << std::sqrt(h) << " is below 3 dx = " << 3.0 * dom.dx()
        << "; interfaces are likely pinned to the lattice";
    tr.warnings.push_back(msg.str());
  }
  check_containment(e0, cfg.containment_margin, 0);

  double sx = 0.0;
  double sy = 0.0;
  for (Index iy = 0; iy < dom.ny(); ++iy) {
    for (Index ix = 0; ix < dom.nx(); ++ix) {
      if (e0(iy, ix)) {
        sx += dom.center_x(ix);
        sy += dom.center_y(iy);
      }
    }
  }
  tr.centre_x = sx / static_cast<double>(e0.count());
  tr.centre_y = sy / static_cast<double>(e0.count());
  tr.states.reserve(static_cast<std::size_t>(steps) + 1);
  tr.states.push_back(e0);

  StepRecord r0;
  r0.perimeter_before = r0.perimeter_after = perimeter(e0, kind);
  describe_state(r0, e0, tr);
  tr.records.push_back(r0);
  if (observer) {
    observer(r0);
  }

  const Index target = e0.count();
  for (int k = 1; k <= steps; ++k) {
    const BinarySet& prev = tr.states.back();
    const SignedDistanceField dprev = signed_distance(prev);
    StepOutcome out = mm_step(prev, cfg.step);
    if (cfg.step.mode == StepMode::VolumeConstrained && out.set.count() != target) {
      throw SolverError("flow: volume not conserved at step " + std::to_string(k));
    }
    if (cfg.step.mode == StepMode::Unconstrained && out.set.empty()) {
      // extinction: the trajectory ends with the last non-empty state
      tr.warnings.push_back("set vanished at step " + std::to_string(k) + "; trajectory ends at step " +
                            std::to_string(k - 1));
      break;
    }
    if (out.set.empty() || out.set.full()) {
      throw SolverError("flow: set became empty or full at step " + std::to_string(k));
    }
    check_containment(out.set, cfg.containment_margin, k);

    StepRecord r;
    r.k = k;
    r.time = k * h;
    r.perimeter_before = tr.records.back().perimeter_after;
    r.perimeter_after = perimeter(out.set, kind);
    r.lambda = out.lambda;
    double diss = 0.0;
    for (Index i = 0; i < dom.cells(); ++i) {
      if (out.set.at(i) != prev.at(i)) {
        diss += std::abs(dprev.at(i));
      }
    }
    r.dissipation_term = diss * dom.cell_volume() / h;
    r.eps_fix = fixup_allowance(out, dom);
    r.dissipation_slack = r.perimeter_before + r.eps_fix - r.perimeter_after - r.dissipation_term;
    r.inner_gap = out.inner_gap;
    r.threshold_gap = out.threshold_gap;
    r.fixup_potential = out.fixup_potential;
    r.flipped_cells = out.flipped_cells;
    r.kept_previous = out.kept_previous;
    r.descent_swaps = out.descent_swaps;
    r.lambda_evaluations = out.lambda_evaluations;
    r.inner_iterations = out.inner_iterations;

    const std::vector<FaceSample> faces = face_samples(out.set, dprev);
    std::vector<double> res;
    res.reserve(faces.size());
    for (const FaceSample& f : faces) {
      const double v = f.distance / h;
      res.push_back(std::abs(v + f.curvature - r.lambda));
      r.curvature_sq += f.curvature * f.curvature * dom.face_area();
      r.curvature_minus_lambda_sq += (f.curvature - r.lambda) * (f.curvature - r.lambda) * dom.face_area();
      r.velocity_sq += v * v * dom.face_area();
      r.sup_boundary_distance = std::max(r.sup_boundary_distance, std::abs(f.distance));
      r.sup_curvature = std::max(r.sup_curvature, std::abs(f.curvature));
    }
    r.el_residual_median = quantile(res, 0.5);
    r.el_residual_p90 = quantile(res, 0.9);
    r.mean_curvature = mean_of(faces);

    tr.states.push_back(std::move(out.set));
    describe_state(r, tr.states.back(), tr);
    tr.records.push_back(r);
    if (observer) {
      observer(r);
    }
  }

  const int done = static_cast<int>(tr.records.size()) - 1;
  for (int k : snapshot_steps(done, cfg.early_snapshots, cfg.snapshot_growth)) {
    tr.snapshots.push_back({k, k * h, tr.states[static_cast<std::size_t>(k)]});
  }
  return tr;
}

double holder_modulus(std::span<const Snapshot> snapshots, double h) {
  if (snapshots.size() < 2) {
    throw DomainError("holder_modulus: needs at least two snapshots");
  }
  double best = 0.0;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    for (std::size_t j = 0; j < snapshots.size(); ++j) {
      const double gap = std::abs(snapshots[j].time - snapshots[i].time);
      if (i == j || gap < h * (1.0 - 1e-9)) {
        continue;
      }
      best = std::max(best, sym_diff_volume(snapshots[i].set, snapshots[j].set) / std::sqrt(gap));
    }
  }
  return best;
}

double holder_modulus(const FlowTrajectory& tr) { return holder_modulus(tr.snapshots, tr.config.step.h); }

DensityExtremes density_ratios(const BinarySet& s, double r, PerimeterKind kind, int max_samples) {
  const GridDomain& d = s.domain();
  const bool periodic = d.boundary() == Boundary::Periodic;
  const Field<double> contrib = perimeter_contributions(s, kind);
  const std::vector<InterfaceFace> faces = interface_faces(s);
  DensityExtremes out;
  if (faces.empty() || !(r > 0.0)) {
    return out;
  }
  std::vector<const InterfaceFace*> usable;
  for (const InterfaceFace& f : faces) {
    if (periodic ||
        (f.x - r >= 0.0 && f.y - r >= 0.0 && f.x + r <= d.width() && f.y + r <= d.height())) {
      usable.push_back(&f);
    }
  }
  if (usable.empty()) {
    return out;
  }
  const std::size_t stride =
      std::max<std::size_t>(1, (usable.size() + static_cast<std::size_t>(max_samples) - 1) / static_cast<std::size_t>(max_samples));
  const double half_ball = 0.5 * std::numbers::pi;
  const Index reach = static_cast<Index>(std::ceil(r / d.dx())) + 1;
  bool first = true;
  for (std::size_t n = 0; n < usable.size(); n += stride) {
    const InterfaceFace& f = *usable[n];
    const Index cx = static_cast<Index>(std::floor(f.x / d.dx()));
    const Index cy = static_cast<Index>(std::floor(f.y / d.dx()));
    Index inside = 0;
    Index outside = 0;
    double per = 0.0;
    for (Index iy = cy - reach; iy <= cy + reach; ++iy) {
      for (Index ix = cx - reach; ix <= cx + reach; ++ix) {
        if (std::hypot(d.center_x(ix) - f.x, d.center_y(iy) - f.y) > r) {
          continue;
        }
        Index wy = iy;
        Index wx = ix;
        if (periodic) {
          wy = ((iy % d.ny()) + d.ny()) % d.ny();
          wx = ((ix % d.nx()) + d.nx()) % d.nx();
        } else if (iy < 0 || ix < 0 || iy >= d.ny() || ix >= d.nx()) {
          continue;
        }
        (s(wy, wx) ? inside : outside) += 1;
        per += contrib(wy, wx);
      }
    }
    const double vol = static_cast<double>(std::min(inside, outside)) * d.cell_volume() / (r * r) / half_ball;
    const double p = per / r / 2.0;
    if (first) {
      out.volume_min = out.volume_max = vol;
      out.perimeter_min = out.perimeter_max = p;
      first = false;
    }
    out.volume_min = std::min(out.volume_min, vol);
    out.volume_max = std::max(out.volume_max, vol);
    out.perimeter_min = std::min(out.perimeter_min, p);
    out.perimeter_max = std::max(out.perimeter_max, p);
    ++out.samples;
  }
  return out;
}

DensityReport density_report(const FlowTrajectory& tr, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= tr.records.size()) {
    throw DomainError("density_report: step out of range");
  }
  const StepRecord& r = tr.records[static_cast<std::size_t>(k)];
  const double sh = std::sqrt(tr.config.step.h);
  DensityReport out;
  out.k = k;
  out.r_half = 0.5 * sh;
  out.r_full = sh;
  out.half = r.density_half;
  out.full = r.density_full;
  out.distance_scaled = r.sup_boundary_distance / sh;
  out.curvature_scaled = r.sup_curvature * sh;
  return out;
}

MultiplierReport multiplier_report(const FlowTrajectory& tr) {
  const double h = tr.config.step.h;
  MultiplierReport out;
  for (std::size_t k = 1; k < tr.records.size(); ++k) {
    const StepRecord& r = tr.records[k];
    out.max_abs_lambda_sqrt_h = std::max(out.max_abs_lambda_sqrt_h, std::abs(r.lambda) * std::sqrt(h));
    out.h_sq_plus_lambda_sq += h * (r.curvature_sq + r.lambda * r.lambda);
    out.h_minus_lambda_sq += h * r.curvature_minus_lambda_sq;
    out.velocity_sq += h * r.velocity_sq;
  }
  if (!tr.records.empty()) {
    out.perimeter_drop = tr.records.front().perimeter_after - tr.records.back().perimeter_after;
  }
  if (out.perimeter_drop > 0.0) {
    out.dissipation_constant = out.h_minus_lambda_sq / out.perimeter_drop;
  }
  return out;
}

std::vector<TestFunction> standard_test_family(const GridDomain& domain, double t_end) {
  const double cx = 0.5 * domain.width();
  const double cy = 0.5 * domain.height();
  const double kx = 2.0 * std::numbers::pi / domain.width();
  const double ky = 2.0 * std::numbers::pi / domain.height();
  const double scale = 1.0 / (domain.width() * domain.width() + domain.height() * domain.height());
  auto cutoff = [t_end](double t) {
    const double s = std::max(0.0, 1.0 - t / t_end);
    return s * s;
  };
  std::vector<TestFunction> out;
  out.push_back({"one", [=](double, double, double t) { return cutoff(t); }});
  out.push_back({"x", [=](double x, double, double t) { return (x - cx) * cutoff(t); }});
  out.push_back({"y", [=](double, double y, double t) { return (y - cy) * cutoff(t); }});
  out.push_back({"r2", [=](double x, double y, double t) {
                   return ((x - cx) * (x - cx) + (y - cy) * (y - cy)) * scale * cutoff(t);
                 }});
  out.push_back({"sin_x", [=](double x, double, double t) { return std::sin(kx * x) * cutoff(t); }});
  out.push_back({"cos_x", [=](double x, double, double t) { return std::cos(kx * x) * cutoff(t); }});
  out.push_back({"sin_y", [=](double, double y, double t) { return std::sin(ky * y) * cutoff(t); }});
  out.push_back({"cos_y", [=](double, double y, double t) { return std::cos(ky * y) * cutoff(t); }});
  return out;
}

WeakFormResidual weak_form_residual(const FlowTrajectory& tr, std::span<const TestFunction> family) {
  if (tr.states.size() < 2) {
    throw DomainError("weak_form_residual: trajectory has no steps");
  }
  const GridDomain& d = tr.states.front().domain();
  const double h = tr.config.step.h;
  const std::size_t nf = family.size();
  std::vector<double> ra(nf, 0.0);
  std::vector<double> rb(nf, 0.0);
  std::vector<double> norm(nf, 0.0);

  // Time derivative term on the piecewise constant flow, plus the initial datum.
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const BinarySet& s = tr.states[k];
    const double t0 = static_cast<double>(k) * h;
    for (Index iy = 0; iy < d.ny(); ++iy) {
      for (Index ix = 0; ix < d.nx(); ++ix) {
        if (!s(iy, ix)) {
          continue;
        }
        const double x = d.center_x(ix);
        const double y = d.center_y(iy);
        for (std::size_t j = 0; j < nf; ++j) {
          double term = 0.0;
          if (k + 1 < tr.states.size()) {
            term += family[j].value(x, y, t0 + h) - family[j].value(x, y, t0);
          }
          if (k == 0) {
            term += family[j].value(x, y, 0.0);
          }
          rb[j] += term * d.cell_volume();
        }
      }
    }
  }

  for (std::size_t k = 1; k < tr.states.size(); ++k) {
    const double t = static_cast<double>(k) * h;
    const std::vector<FaceSample> faces = face_samples(tr.states[k], signed_distance(tr.states[k - 1]));
    const double hbar = mean_of(faces);
    for (const FaceSample& f : faces) {
      const double v = f.distance / h;
      for (std::size_t j = 0; j < nf; ++j) {
        const double phi = family[j].value(f.x, f.y, t);
        ra[j] += h * (v + f.curvature - hbar) * phi * d.face_area();
        rb[j] += h * v * phi * d.face_area();
        norm[j] += h * std::abs(phi) * d.face_area();
      }
    }
  }

  WeakFormResidual out;
  for (std::size_t j = 0; j < nf; ++j) {
    const double a = norm[j] > 0.0 ? std::abs(ra[j]) / norm[j] : 0.0;
    const double b = norm[j] > 0.0 ? std::abs(rb[j]) / norm[j] : 0.0;
    out.curvature_identity = std::max(out.curvature_identity, a);
    out.transport_identity = std::max(out.transport_identity, b);
    out.per_function.push_back(std::max(a, b));
  }
  out.residual = std::max(out.curvature_identity, out.transport_identity);
  return out;
}

double disk_floor_ratio(const GridDomain& domain, double vol, PerimeterKind kind) {
  const auto n = static_cast<Index>(std::llround(vol / domain.cell_volume()));
  if (n <= 0) {
    throw DomainError("disk_floor_ratio: volume must cover at least one cell");
  }
  const double rc = std::sqrt(static_cast<double>(n) / std::numbers::pi);
  const Index side = 2 * static_cast<Index>(std::ceil(rc)) + 8;
  const GridDomain box(side, side, domain.dx(), Boundary::Neumann);
  const std::vector<Index> order = [&] {
    std::vector<Index> v(static_cast<std::size_t>(box.cells()));
    for (Index i = 0; i < box.cells(); ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
  }();
  double best = 0.0;
  bool first = true;
  for (int oy = 0; oy < 4; ++oy) {
    for (int ox = 0; ox < 4; ++ox) {
      const double cx = 0.5 * static_cast<double>(side) + 0.25 * ox;
      const double cy = 0.5 * static_cast<double>(side) + 0.25 * oy;
      std::vector<double> dist(static_cast<std::size_t>(box.cells()));
      for (Index i = 0; i < box.cells(); ++i) {
        const double x = static_cast<double>(i % side) + 0.5;
        const double y = static_cast<double>(i / side) + 0.5;
        dist[static_cast<std::size_t>(i)] = std::hypot(x - cx, y - cy);
      }
      std::vector<Index> ids = order;
      std::partial_sort(ids.begin(), ids.begin() + n, ids.end(), [&](Index a, Index b) {
        const double da = dist[static_cast<std::size_t>(a)];
        const double db = dist[static_cast<std::size_t>(b)];
        return da < db || (da == db && a < b);
      });
      MaskArray m = MaskArray::Zero(side, side);
      for (Index i = 0; i < n; ++i) {
        m.data()[ids[static_cast<std::size_t>(i)]] = 1;
      }
      const double ratio = isoperimetric_ratio(BinarySet(box, std::move(m)), kind);
      best = first ? ratio : std::min(best, ratio);
      first = false;
    }
  }
  return best;
}

BallConvergenceReport ball_convergence_report(const FlowTrajectory& tr) {
  BallConvergenceReport out;
  for (const Snapshot& snap : tr.snapshots) {
    BallSnapshot b;
    b.k = snap.k;
    b.time = snap.time;
    b.isoperimetric_ratio = isoperimetric_ratio(snap.set);
    b.floor_ratio = disk_floor_ratio(snap.set.domain(), volume(snap.set), PerimeterKind::Isotropic);
    const Components c = label_components(snap.set);
    b.components = c.count;
    for (int l = 1; l <= c.count; ++l) {
      const BinarySet part = component(c, snap.set.domain(), l);
      b.component_ratios.push_back(isoperimetric_ratio(part));
      b.component_floors.push_back(disk_floor_ratio(part.domain(), volume(part), PerimeterKind::Isotropic));
    }
    out.series.push_back(std::move(b));
  }
  if (!out.series.empty()) {
    out.final_ratio = out.series.back().isoperimetric_ratio;
    out.final_floor = out.series.back().floor_ratio;
    out.final_components = out.series.back().components;
  }
  return out;
}

double enclosing_radius_excess(const FlowTrajectory& tr, double slack) {
  if (tr.records.empty()) {
    return 0.0;
  }
  const double h = tr.config.step.h;
  const double r0 = tr.records.front().enclosing_radius;
  double budget = 0.0;
  double worst = -slack;
  for (std::size_t k = 1; k < tr.records.size(); ++k) {
    budget += h * std::abs(tr.records[k].lambda);
    worst = std::max(worst, tr.records[k].enclosing_radius - (r0 + budget + slack));
  }
  return worst;
}

double perimeter_excess(const FlowTrajectory& tr) {
  if (tr.records.empty()) {
    return 0.0;
  }
  const double p0 = tr.records.front().perimeter_after;
  double allowance = 0.0;
  double worst = 0.0;
  for (std::size_t k = 1; k < tr.records.size(); ++k) {
    allowance += tr.records[k].eps_fix;
    worst = std::max(worst, tr.records[k].perimeter_after - p0 - allowance);
  }
  return worst;
}

CircleTrackingReport circle_tracking_report(const FlowTrajectory& tr, double r_min) {
  CircleTrackingReport out;
  if (tr.states.empty()) {
    return out;
  }
  out.r0 = std::sqrt(volume(tr.states.front()) / std::numbers::pi);
  for (std::size_t k = 1; k < tr.states.size(); ++k) {
    const double t = tr.records[k].time;
    const double r2 = out.r0 * out.r0 - 2.0 * t;
    if (r2 <= r_min * r_min) {
      break;
    }
    const double exact = std::sqrt(r2);
    const double r = std::sqrt(volume(tr.states[k]) / std::numbers::pi);
    out.max_relative_error = std::max(out.max_relative_error, std::abs(r - exact) / exact);
    ++out.steps_compared;
  }
  // an early extinction counts as radius zero where the circle still exists
  const std::size_t gone = tr.states.size();
  if (static_cast<int>(gone) <= tr.config.steps()) {
    const double r2 = out.r0 * out.r0 - 2.0 * static_cast<double>(gone) * tr.config.step.h;
    if (r2 > r_min * r_min) {
      out.max_relative_error = std::max(out.max_relative_error, 1.0);
      ++out.steps_compared;
    }
  }
  return out;
}

TrajectorySummary summarize(const FlowTrajectory& tr) {
  TrajectorySummary out;
  if (tr.records.empty()) {
    return out;
  }
  const double sh = std::sqrt(tr.config.step.h);
  const double dx = tr.states.front().domain().dx();
  out.steps = static_cast<int>(tr.records.size()) - 1;
  out.initial_cells = tr.records.front().volume_cells;
  out.min_dissipation_slack = tr.records.size() > 1 ? tr.records[1].dissipation_slack : 0.0;
  bool first_density = true;
  for (const StepRecord& r : tr.records) {
    out.volume_conserved = out.volume_conserved && r.volume_cells == out.initial_cells;
    for (const DensityExtremes* e : {&r.density_half, &r.density_full}) {
      if (e->samples == 0) {
        continue;
      }
      const double lo = std::min(e->volume_min, e->perimeter_min);
      const double hi = std::max(e->volume_max, e->perimeter_max);
      out.density_min = first_density ? lo : std::min(out.density_min, lo);
      out.density_max = first_density ? hi : std::max(out.density_max, hi);
      first_density = false;
    }
    out.max_sym_diff_initial = std::max(out.max_sym_diff_initial, r.sym_diff_initial);
    out.max_diameter = std::max(out.max_diameter, r.diameter);
    if (r.k == 0) {
      continue;
    }
    if (!r.dissipation_ok()) {
      ++out.dissipation_failures;
    }
    out.min_dissipation_slack = std::min(out.min_dissipation_slack, r.dissipation_slack);
    out.total_flipped_cells += r.flipped_cells;
    out.max_flipped_cells = std::max(out.max_flipped_cells, r.flipped_cells);
    out.kept_previous_steps += r.kept_previous ? 1 : 0;
    out.max_distance_scaled = std::max(out.max_distance_scaled, r.sup_boundary_distance / sh);
    out.max_curvature_scaled = std::max(out.max_curvature_scaled, r.sup_curvature * sh);
    out.max_el_residual_median = std::max(out.max_el_residual_median, r.el_residual_median);
    out.max_el_scale = std::max(out.max_el_scale, std::abs(r.lambda) + r.sup_curvature);
  }
  out.perimeter_excess = perimeter_excess(tr);
  out.holder_modulus = tr.snapshots.size() >= 2 ? holder_modulus(tr) : 0.0;
  out.enclosing_excess = enclosing_radius_excess(tr, std::sqrt(2.0) * dx);
  out.multiplier = multiplier_report(tr);
  return out;
}

}  // namespace flatflow
