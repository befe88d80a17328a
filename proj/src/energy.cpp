#include "flatflow/energy.hpp"

#include "flatflow/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>

namespace flatflow {

namespace {

constexpr PairTerm kFaceStencil[] = {{0, 1, 1.0}, {1, 0, 1.0}};

// Offsets of the 16-neighbourhood, grouped by symmetry class.
constexpr int kIsoOffsets[8][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}, {1, 2}, {2, 1}, {1, -2}, {2, -1}};
constexpr int kIsoGroup[8] = {0, 0, 1, 1, 2, 2, 2, 2};

// Weights per symmetry class: least-squares fit of the directional perimeter
// sum_k w_k |nu . e_k| to 1 over all normal directions.
std::array<PairTerm, 8> make_iso_stencil() {
  constexpr int samples = 3600;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(samples, 3);
  for (int s = 0; s < samples; ++s) {
    const double theta = 2.0 * std::numbers::pi * (s + 0.5) / samples;
    const double c = std::cos(theta);
    const double n = std::sin(theta);
    for (int k = 0; k < 8; ++k) {
      a(s, kIsoGroup[k]) += std::abs(kIsoOffsets[k][1] * c + kIsoOffsets[k][0] * n);
    }
  }
  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(samples));
  std::array<PairTerm, 8> out{};
  for (int k = 0; k < 8; ++k) {
    out[static_cast<std::size_t>(k)] = {kIsoOffsets[k][0], kIsoOffsets[k][1], w(kIsoGroup[k])};
  }
  return out;
}

}  // namespace

std::span<const PairTerm> pair_stencil(PerimeterKind kind) {
  if (kind == PerimeterKind::Anisotropic4) {
    return kFaceStencil;
  }
  static const std::array<PairTerm, 8> iso = make_iso_stencil();
  return iso;
}

double directional_perimeter(PerimeterKind kind, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  double g = 0.0;
  for (const PairTerm& t : pair_stencil(kind)) {
    g += t.weight * std::abs(t.dx * c + t.dy * s);
  }
  return g;
}

std::vector<PairRun> pair_runs(const PairTerm& t, Index ny, Index nx, Boundary bc) {
  std::vector<PairRun> runs;
  const Index adx = std::abs(t.dx);
  if (bc == Boundary::Neumann) {
    const Index x0 = std::max<Index>(0, -t.dx);
    for (Index iy = 0; iy + t.dy < ny; ++iy) {
      const Index first = iy * nx + x0;
      runs.push_back({first, first + t.dy * nx + t.dx, nx - adx});
    }
    return runs;
  }
  for (Index iy = 0; iy < ny; ++iy) {
    const Index py = ((iy + t.dy) % ny + ny) % ny;
    const Index row = iy * nx;
    const Index prow = py * nx;
    if (t.dx >= 0) {
      runs.push_back({row, prow + t.dx, nx - adx});
      if (adx > 0) {
        runs.push_back({row + nx - adx, prow, adx});
      }
    } else {
      runs.push_back({row, prow + nx - adx, adx});
      runs.push_back({row + adx, prow, nx - adx});
    }
  }
  return runs;
}

void pair_differences(const Field<double>& u, PerimeterKind kind, Boundary bc, std::vector<Field<double>>& out) {
  const auto stencil = pair_stencil(kind);
  const Index ny = u.rows();
  const Index nx = u.cols();
  out.resize(stencil.size());
  const double* src = u.data();
  for (std::size_t k = 0; k < stencil.size(); ++k) {
    const double w = stencil[k].weight;
    out[k].setZero(ny, nx);
    double* dst = out[k].data();
    for (const PairRun& r : pair_runs(stencil[k], ny, nx, bc)) {
      for (Index t = 0; t < r.length; ++t) {
        dst[r.first + t] = w * (src[r.partner + t] - src[r.first + t]);
      }
    }
  }
}

void pair_divergence(const std::vector<Field<double>>& q, PerimeterKind kind, Boundary bc, Field<double>& out) {
  const auto stencil = pair_stencil(kind);
  if (q.size() != stencil.size()) {
    throw DomainError("pair_divergence: dual field count does not match the stencil");
  }
  const Index ny = q.front().rows();
  const Index nx = q.front().cols();
  out.setZero(ny, nx);
  double* dst = out.data();
  for (std::size_t k = 0; k < stencil.size(); ++k) {
    const double w = stencil[k].weight;
    const double* src = q[k].data();
    for (const PairRun& r : pair_runs(stencil[k], ny, nx, bc)) {
      for (Index t = 0; t < r.length; ++t) {
        const double v = w * src[r.first + t];
        dst[r.first + t] += v;
        dst[r.partner + t] -= v;
      }
    }
  }
}

double total_variation(const Field<double>& u, PerimeterKind kind, Boundary bc) {
  std::vector<Field<double>> diffs;
  pair_differences(u, kind, bc, diffs);
  double tv = 0.0;
  for (const auto& d : diffs) {
    tv += d.abs().sum();
  }
  return tv;
}

Field<double> perimeter_contributions(const BinarySet& s, PerimeterKind kind) {
  std::vector<Field<double>> diffs;
  pair_differences(s.mask().cast<double>(), kind, s.domain().boundary(), diffs);
  Field<double> out = Field<double>::Zero(s.domain().ny(), s.domain().nx());
  for (const auto& d : diffs) {
    out += d.abs();
  }
  return out * s.domain().face_area();
}

double perimeter(const BinarySet& s, PerimeterKind kind, std::optional<CellBox> window) {
  const Field<double> c = perimeter_contributions(s, kind);
  if (!window) {
    return c.sum();
  }
  const auto& d = s.domain();
  const Index x0 = std::clamp<Index>(window->x0, 0, d.nx());
  const Index x1 = std::clamp<Index>(window->x1, 0, d.nx());
  const Index y0 = std::clamp<Index>(window->y0, 0, d.ny());
  const Index y1 = std::clamp<Index>(window->y1, 0, d.ny());
  if (x1 <= x0 || y1 <= y0) {
    return 0.0;
  }
  return c.block(y0, x0, y1 - y0, x1 - x0).sum();
}

namespace {

Index wrap_or_clamp(Index i, Index n, Boundary bc) {
  if (bc == Boundary::Periodic) {
    return ((i % n) + n) % n;
  }
  return std::clamp<Index>(i, 0, n - 1);
}

Field<double> gaussian_smooth(const Field<double>& f, double sigma, Boundary bc) {
  const Index radius = static_cast<Index>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (Index k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * double(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : kernel) {
    w /= total;
  }
  const Index ny = f.rows();
  const Index nx = f.cols();
  Field<double> tmp = Field<double>::Zero(ny, nx);
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * f(iy, wrap_or_clamp(ix + k, nx, bc));
      }
      tmp(iy, ix) = acc;
    }
  }
  Field<double> out = Field<double>::Zero(ny, nx);
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index k = -radius; k <= radius; ++k) {
      out.row(iy) += kernel[static_cast<std::size_t>(k + radius)] * tmp.row(wrap_or_clamp(iy + k, ny, bc));
    }
  }
  return out;
}

int exposed_faces(const BinarySet& s, Index iy, Index ix) {
  const auto& d = s.domain();
  const bool inside = s(iy, ix);
  const Index ny = d.ny();
  const Index nx = d.nx();
  const bool periodic = d.boundary() == Boundary::Periodic;
  int faces = 0;
  const Index offsets[4][2] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
  for (const auto& o : offsets) {
    Index jy = iy + o[0];
    Index jx = ix + o[1];
    if (periodic) {
      jy = (jy + ny) % ny;
      jx = (jx + nx) % nx;
    } else if (jy < 0 || jy >= ny || jx < 0 || jx >= nx) {
      continue;
    }
    if (s(jy, jx) != inside) {
      ++faces;
    }
  }
  return faces;
}

}  // namespace

ScalarField curvature_field(const SignedDistanceField& d) {
  const auto& dom = d.domain();
  const Boundary bc = dom.boundary();
  const Field<double> smooth = gaussian_smooth(d.values(), kCurvatureSmoothingCells, bc);
  const Index ny = dom.ny();
  const Index nx = dom.nx();
  Field<double> lap(ny, nx);
  const double inv = 1.0 / (dom.dx() * dom.dx());
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) {
      const double sum = smooth(iy, wrap_or_clamp(ix + 1, nx, bc)) + smooth(iy, wrap_or_clamp(ix - 1, nx, bc)) +
                         smooth(wrap_or_clamp(iy + 1, ny, bc), ix) + smooth(wrap_or_clamp(iy - 1, ny, bc), ix);
      lap(iy, ix) = (sum - 4.0 * smooth(iy, ix)) * inv;
    }
  }
  return ScalarField(dom, std::move(lap));
}

MaskArray interface_cells(const BinarySet& s) {
  const auto& d = s.domain();
  MaskArray out = MaskArray::Zero(d.ny(), d.nx());
  for (Index iy = 0; iy < d.ny(); ++iy) {
    for (Index ix = 0; ix < d.nx(); ++ix) {
      out(iy, ix) = exposed_faces(s, iy, ix) > 0 ? 1 : 0;
    }
  }
  return out;
}

std::vector<BoundaryBandSample> curvature_estimate(const BinarySet& s, const SignedDistanceField& driving) {
  require_same_domain(s.domain(), driving.domain(), "curvature_estimate");
  const SignedDistanceField own = signed_distance(s);
  const ScalarField h = curvature_field(own);
  const auto& d = s.domain();
  const Index margin = d.boundary() == Boundary::Neumann ? 2 : 0;
  std::vector<BoundaryBandSample> samples;
  for (Index iy = margin; iy < d.ny() - margin; ++iy) {
    for (Index ix = margin; ix < d.nx() - margin; ++ix) {
      const int faces = exposed_faces(s, iy, ix);
      if (faces == 0) {
        continue;
      }
      const Index id = d.id(iy, ix);
      samples.push_back({id, h.at(id), driving.at(id), faces});
    }
  }
  return samples;
}

std::vector<BoundaryBandSample> curvature_estimate(const BinarySet& s) {
  return curvature_estimate(s, signed_distance(s));
}

std::vector<InterfaceFace> interface_faces(const BinarySet& s, Index margin) {
  const auto& d = s.domain();
  const Index ny = d.ny();
  const Index nx = d.nx();
  const bool periodic = d.boundary() == Boundary::Periodic;
  if (periodic) {
    margin = 0;
  }
  auto inside_margin = [&](Index iy, Index ix) {
    return iy >= margin && iy < ny - margin && ix >= margin && ix < nx - margin;
  };
  std::vector<InterfaceFace> faces;
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) {
      const Index neighbours[2][2] = {{iy, ix + 1}, {iy + 1, ix}};
      for (int axis = 0; axis < 2; ++axis) {
        Index jy = neighbours[axis][0];
        Index jx = neighbours[axis][1];
        if (jx >= nx || jy >= ny) {
          if (!periodic) {
            continue;
          }
          jx %= nx;
          jy %= ny;
        }
        if (s(iy, ix) == s(jy, jx) || !inside_margin(iy, ix) || !inside_margin(jy, jx)) {
          continue;
        }
        const Index a = d.id(iy, ix);
        const Index b = d.id(jy, jx);
        const double x = axis == 0 ? (static_cast<double>(ix) + 1.0) * d.dx() : d.center_x(ix);
        const double y = axis == 1 ? (static_cast<double>(iy) + 1.0) * d.dx() : d.center_y(iy);
        faces.push_back(s.at(a) ? InterfaceFace{a, b, x, y} : InterfaceFace{b, a, x, y});
      }
    }
  }
  return faces;
}

double mean_curvature(const std::vector<BoundaryBandSample>& samples) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& sample : samples) {
    num += sample.curvature * sample.exposed_faces;
    den += sample.exposed_faces;
  }
  return den > 0.0 ? num / den : 0.0;
}

double isoperimetric_ratio(const BinarySet& s, PerimeterKind kind) {
  const double v = volume(s);
  if (!(v > 0.0)) {
    throw DomainError("isoperimetric ratio of an empty set");
  }
  const double p = perimeter(s, kind);
  return p * p / (4.0 * std::numbers::pi * v);
}

Components label_components(const BinarySet& s) {
  const auto& d = s.domain();
  const Index ny = d.ny();
  const Index nx = d.nx();
  const bool periodic = d.boundary() == Boundary::Periodic;
  Components out{Field<int>::Zero(ny, nx), 0};
  std::queue<std::pair<Index, Index>> queue;
  for (Index sy = 0; sy < ny; ++sy) {
    for (Index sx = 0; sx < nx; ++sx) {
      if (!s(sy, sx) || out.labels(sy, sx) != 0) {
        continue;
      }
      const int label = ++out.count;
      out.labels(sy, sx) = label;
      queue.emplace(sy, sx);
      while (!queue.empty()) {
        const auto [iy, ix] = queue.front();
        queue.pop();
        const Index offsets[4][2] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
        for (const auto& o : offsets) {
          Index jy = iy + o[0];
          Index jx = ix + o[1];
          if (periodic) {
            jy = (jy + ny) % ny;
            jx = (jx + nx) % nx;
          } else if (jy < 0 || jy >= ny || jx < 0 || jx >= nx) {
            continue;
          }
          if (s(jy, jx) && out.labels(jy, jx) == 0) {
            out.labels(jy, jx) = label;
            queue.emplace(jy, jx);
          }
        }
      }
    }
  }
  return out;
}

BinarySet component(const Components& c, const GridDomain& domain, int label) {
  return BinarySet(domain, (c.labels == label).cast<std::uint8_t>());
}

}  // namespace flatflow
