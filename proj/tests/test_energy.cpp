#include "flatflow/distance.hpp"
#include "flatflow/energy.hpp"
#include "flatflow/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

using namespace flatflow;
using namespace flatflow::testing;

namespace {

constexpr PerimeterKind kBoth[] = {PerimeterKind::Anisotropic4, PerimeterKind::Isotropic};

double median_curvature(const std::vector<BoundaryBandSample>& s) {
  std::vector<double> h;
  for (const auto& x : s) h.push_back(x.curvature);
  std::nth_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(h.size() / 2), h.end());
  return h[h.size() / 2];
}

}  // namespace

TEST_CASE("face-counting perimeter") {
  const GridDomain d(8, 8, 1.0);
  CHECK(perimeter(block(d, 3, 3, 1, 1), PerimeterKind::Anisotropic4) == 4.0);
  for (Index a = 1; a <= 4; ++a) {
    for (Index b = 1; b <= 4; ++b) {
      CHECK(perimeter(block(d, 2, 2, a, b), PerimeterKind::Anisotropic4) == 2.0 * static_cast<double>(a + b));
    }
  }
  // an integer multiple of dx
  std::mt19937_64 rng(31);
  const GridDomain g(9, 7, 0.25);
  for (int t = 0; t < 50; ++t) {
    const double p = perimeter(random_set(g, rng), PerimeterKind::Anisotropic4) / g.dx();
    CHECK(p == std::round(p));
  }
}

TEST_CASE("isotropic perimeter of a digital disk") {
  const GridDomain d(64, 64, 1.0 / 64.0);
  const double r = 20.0 * d.dx();
  const double p = perimeter(centred_disk(d, r), PerimeterKind::Isotropic);
  CHECK(std::abs(p - 2.0 * std::numbers::pi * r) <= 0.03 * 2.0 * std::numbers::pi * r);
}

TEST_CASE("directional perimeter") {
  for (double th = 0.0; th < 2.0 * std::numbers::pi; th += 0.01) {
    CHECK(directional_perimeter(PerimeterKind::Anisotropic4, th) ==
          doctest::Approx(std::abs(std::cos(th)) + std::abs(std::sin(th))));
    CHECK(std::abs(directional_perimeter(PerimeterKind::Isotropic, th) - 1.0) <= 0.03);
  }
}

TEST_CASE("complement symmetry away from the box") {
  std::mt19937_64 rng(32);
  const GridDomain d(16, 16, 0.5);
  for (int t = 0; t < 30; ++t) {
    MaskArray m = MaskArray::Zero(16, 16);
    m.block(3, 3, 10, 10) = random_set(GridDomain(10, 10, 0.5), rng).mask();
    const BinarySet s(d, m);
    // the complement touches the box; compare inside a window holding all interface pairs
    const CellBox w{1, 1, 15, 15};
    for (PerimeterKind k : kBoth) {
      CHECK(perimeter(s, k) == doctest::Approx(perimeter(s.complement(), k, w)).epsilon(1e-12));
    }
  }
}

TEST_CASE("window monotonicity") {
  std::mt19937_64 rng(33);
  const GridDomain d(12, 12, 1.0);
  for (int t = 0; t < 30; ++t) {
    const BinarySet s = random_set(d, rng);
    const CellBox inner{2, 3, 7, 9};
    const CellBox outer{1, 1, 10, 11};
    for (PerimeterKind k : kBoth) {
      CHECK(perimeter(s, k, inner) <= perimeter(s, k, outer) + 1e-12);
      CHECK(perimeter(s, k, outer) <= perimeter(s, k) + 1e-12);
    }
  }
}

TEST_CASE("translation invariance") {
  std::mt19937_64 rng(34);
  const GridDomain d(14, 14, 1.0);
  for (int t = 0; t < 30; ++t) {
    MaskArray m = MaskArray::Zero(14, 14);
    m.block(4, 4, 6, 6) = random_set(GridDomain(6, 6, 1.0), rng).mask();
    const BinarySet s(d, m);
    for (PerimeterKind k : kBoth) {
      CHECK(perimeter(translated(s, 1, 0), k) == doctest::Approx(perimeter(s, k)).epsilon(1e-12));
      CHECK(perimeter(translated(s, 0, -1), k) == doctest::Approx(perimeter(s, k)).epsilon(1e-12));
      CHECK(perimeter(rotated90(s), k) == doctest::Approx(perimeter(s, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("face counting bounds the isotropic perimeter from above") {
  std::mt19937_64 rng(35);
  const GridDomain d(12, 12, 1.0);
  for (int t = 0; t < 100; ++t) {
    const BinarySet s = random_set(d, rng, 0.1 + 0.008 * t);
    CHECK(perimeter(s, PerimeterKind::Anisotropic4) >= perimeter(s, PerimeterKind::Isotropic) - 1e-12);
  }
}

TEST_CASE("face counting is within sqrt(2) of isotropic on resolved shapes") {
  // The 16-neighbour functional charges a lone cell far less than four faces,
  // so the bound only holds once features span a few cells.
  const GridDomain d(64, 64, 1.0);
  for (double r = 4.0; r <= 24.0; r += 2.5) {
    const BinarySet s = centred_disk(d, r);
    CHECK(perimeter(s, PerimeterKind::Anisotropic4) <= std::sqrt(2.0) * perimeter(s, PerimeterKind::Isotropic));
  }
  for (Index a = 3; a <= 20; a += 3) {
    const BinarySet s = block(d, 10, 12, a, 2 * a);
    CHECK(perimeter(s, PerimeterKind::Anisotropic4) <= std::sqrt(2.0) * perimeter(s, PerimeterKind::Isotropic));
  }
}

TEST_CASE("coarea: relaxed total variation integrates the level-set perimeters") {
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const GridDomain d(9, 8, 1.0);
  for (PerimeterKind k : kBoth) {
    for (int t = 0; t < 10; ++t) {
      Field<double> u(8, 9);
      for (Index i = 0; i < u.size(); ++i) u.data()[i] = uni(rng);
      std::set<double> levels(u.data(), u.data() + u.size());
      levels.insert(0.0);
      double integral = 0.0;
      double prev = 0.0;
      for (double s : levels) {
        if (s == 0.0) continue;
        MaskArray m = (u > 0.5 * (prev + s)).cast<std::uint8_t>();
        integral += (s - prev) * perimeter(BinarySet(d, m), k);
        prev = s;
      }
      CHECK(total_variation(u, k, Boundary::Neumann) == doctest::Approx(integral).epsilon(1e-12));
    }
  }
}

TEST_CASE("pair divergence is the negative adjoint") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> n;
  for (Boundary bc : {Boundary::Neumann, Boundary::Periodic}) {
    for (PerimeterKind k : kBoth) {
      Field<double> u(7, 10);
      for (Index i = 0; i < u.size(); ++i) u.data()[i] = n(rng);
      std::vector<Field<double>> q(pair_stencil(k).size(), Field<double>(7, 10));
      for (auto& f : q) for (Index i = 0; i < f.size(); ++i) f.data()[i] = n(rng);
      std::vector<Field<double>> ku;
      pair_differences(u, k, bc, ku);
      Field<double> div;
      pair_divergence(q, k, bc, div);
      double lhs = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) lhs += (ku[j] * q[j]).sum();
      CHECK(lhs == doctest::Approx(-(u * div).sum()).epsilon(1e-12));
    }
  }
}

TEST_CASE("curvature estimate") {
  const GridDomain d(64, 64, 1.0 / 64.0);

  SUBCASE("flat interface") {
    for (const auto& s : curvature_estimate(halfplane(d))) CHECK(std::abs(s.curvature) <= 1e-6);
  }
  SUBCASE("disk and its complement") {
    const double r = 16.0 * d.dx();
    const BinarySet disk16 = centred_disk(d, r);
    const auto in = curvature_estimate(disk16);
    CHECK(std::abs(median_curvature(in) - 1.0 / r) <= 0.15 / r);
    const auto out = curvature_estimate(disk16.complement());
    CHECK(std::abs(median_curvature(out) + 1.0 / r) <= 0.15 / r);
    CHECK(std::abs(mean_curvature(in) - 1.0 / r) <= 0.15 / r);
  }
  SUBCASE("samples sit on interface cells") {
    const BinarySet s = centred_disk(d, 10.0 * d.dx());
    const MaskArray band = interface_cells(s);
    for (const auto& x : curvature_estimate(s)) {
      CHECK(band.data()[x.cell] != 0);
      CHECK(x.exposed_faces >= 1);
    }
  }
  CHECK_THROWS_AS(curvature_estimate(BinarySet(d)), DomainError);
}

TEST_CASE("isoperimetric ratio") {
  const GridDomain d(96, 96, 1.0 / 96.0);
  CHECK(isoperimetric_ratio(centred_disk(d, 20.0 * d.dx())) <= 1.05);
  CHECK(isoperimetric_ratio(block(d, 20, 20, 40, 40), PerimeterKind::Anisotropic4) ==
        doctest::Approx(4.0 / std::numbers::pi));
  const BinarySet two = indicator_union(disk(d, 0.25, 0.5, 0.15), disk(d, 0.75, 0.5, 0.15));
  CHECK(std::abs(isoperimetric_ratio(two) - 2.0) <= 0.1);
  CHECK_THROWS_AS(isoperimetric_ratio(BinarySet(d)), DomainError);
}

TEST_CASE("isotropic square on a fine grid") {
  // corners cost a few cells' worth each, so the ratio only settles once the side is long
  const GridDomain d(256, 256, 1.0 / 256.0);
  CHECK(std::abs(isoperimetric_ratio(block(d, 28, 28, 200, 200)) - 4.0 / std::numbers::pi) <= 0.05 * 4.0 / std::numbers::pi);
}

TEST_CASE("four-connected components") {
  const GridDomain d(10, 10, 1.0);
  MaskArray m = MaskArray::Zero(10, 10);
  m(2, 2) = 1;
  m(3, 3) = 1;  // diagonal neighbour: separate component
  m.block(6, 5, 3, 4).setOnes();
  const Components c = label_components(BinarySet(d, m));
  CHECK(c.count == 3);
  Index cells = 0;
  for (int l = 1; l <= c.count; ++l) cells += component(c, d, l).count();
  CHECK(cells == 14);
}
