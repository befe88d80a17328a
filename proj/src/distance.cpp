#include "flatflow/distance.hpp"

#include "flatflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flatflow {

SignedDistanceField::SignedDistanceField(ScalarField values, std::uint64_t source)
    : values_(std::move(values)), source_(source) {}

namespace {

constexpr double kFar = 1e20;

// One-dimensional squared distance transform of a sampled function
// (lower envelope of parabolas rooted at every sample).
void envelope_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  auto intersect = [&f](int p, int q) {
    return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
  };
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = intersect(v[k], q);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k], q);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) {
      ++k;
    }
    const double d = q - v[k];
    out[q] = d * d + f[v[k]];
  }
}

// Transform every line along one axis. Periodic lines are unrolled three times
// and the middle copy is kept.
void transform_lines(Field<double>& g, bool along_x, bool periodic) {
  const Index lines = along_x ? g.rows() : g.cols();
  const Index len = along_x ? g.cols() : g.rows();
  const Index reps = periodic ? 3 : 1;
  const auto n = static_cast<std::size_t>(len * reps);
  std::vector<double> f(n);
  std::vector<double> out(n);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  for (Index line = 0; line < lines; ++line) {
    for (Index r = 0; r < reps; ++r) {
      for (Index i = 0; i < len; ++i) {
        f[static_cast<std::size_t>(r * len + i)] = along_x ? g(line, i) : g(i, line);
      }
    }
    envelope_1d(f, out, v, z);
    const Index offset = periodic ? len : 0;
    for (Index i = 0; i < len; ++i) {
      const double value = std::min(out[static_cast<std::size_t>(offset + i)], kFar);
      if (along_x) {
        g(line, i) = value;
      } else {
        g(i, line) = value;
      }
    }
  }
}

}  // namespace

Field<double> squared_distance_to_sites(const MaskArray& sites, Boundary bc) {
  if ((sites == 0).all()) {
    throw DomainError("distance to an empty site set is undefined");
  }
  Field<double> g = (sites != 0).select(Field<double>::Zero(sites.rows(), sites.cols()),
                                        Field<double>::Constant(sites.rows(), sites.cols(), kFar));
  const bool periodic = bc == Boundary::Periodic;
  transform_lines(g, false, periodic);
  transform_lines(g, true, periodic);
  return g;
}

SignedDistanceField signed_distance(const BinarySet& f) {
  const Index n = f.count();
  const auto& d = f.domain();
  if (n == 0 || n == d.cells()) {
    throw DomainError("signed distance needs a set that is neither empty nor the full grid");
  }
  const Field<double> to_inside = squared_distance_to_sites(f.mask(), d.boundary());
  const Field<double> to_outside = squared_distance_to_sites(f.complement().mask(), d.boundary());
  const double h = d.dx();
  Field<double> values = (f.mask() != 0)
                             .select(-(to_outside.sqrt() - 0.5) * h, (to_inside.sqrt() - 0.5) * h);
  return SignedDistanceField(ScalarField(d, std::move(values)), fingerprint(f));
}

std::vector<Index> restrict_to_band(const SignedDistanceField& d, double width) {
  if (!(width > 0.0)) {
    throw DomainError("band width must be positive");
  }
  std::vector<Index> cells;
  const Index total = d.domain().cells();
  for (Index i = 0; i < total; ++i) {
    if (std::abs(d.at(i)) <= width) {
      cells.push_back(i);
    }
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [&d](Index a, Index b) { return std::abs(d.at(a)) < std::abs(d.at(b)); });
  return cells;
}

}  // namespace flatflow
