#include "flatflow/distance.hpp"
#include "flatflow/error.hpp"
#include "flatflow/mm_step.hpp"
#include "flatflow/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace flatflow;
using namespace flatflow::testing;

namespace {

std::uint64_t binomial(int n, int k) {
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

}  // namespace

TEST_CASE("single cell: box faces are free") {
  // On a 3x3 Neumann box a corner cell exposes two faces, the centre four,
  // so the four corners tie below the centre.
  const GridDomain d(3, 3, 1.0);
  const BinarySet f = block(d, 1, 1, 1, 1);
  const OracleResult r = brute_force_min(f, 1.0, 1);
  // smallest row-major bit string: the last corner
  CHECK(r.best_mask == block(d, 2, 2, 1, 1));
  CHECK(r.ties == 4);
  CHECK(r.num_candidates == 9);
  CHECK(r.best_energy == doctest::Approx(2.0 + std::sqrt(2.0) - 0.5));
}

TEST_CASE("single centre cell stays put") {
  // 5x5: the box is far enough that the smaller dissipation of the centre wins
  const GridDomain d(5, 5, 1.0);
  const BinarySet f = block(d, 2, 2, 1, 1);
  const OracleResult r = brute_force_min(f, 1.0, 1);
  CHECK(r.best_mask == f);
  CHECK(r.ties == 1);
  CHECK(r.best_energy == doctest::Approx(3.5));
}

TEST_CASE("large h: perimeter-optimal block") {
  const GridDomain d(4, 4, 1.0);
  const BinarySet f = block(d, 1, 0, 2, 2);
  const OracleResult r = brute_force_min(f, 1e6, 4);
  // a corner block: two of its sides lie on the box
  CHECK(perimeter(r.best_mask, PerimeterKind::Anisotropic4) == 4.0);
  bool is_block = false;
  for (Index y = 0; y < 3; ++y)
    for (Index x = 0; x < 3; ++x) is_block = is_block || r.best_mask == block(d, x, y, 2, 2);
  CHECK(is_block);
  CHECK(r.num_candidates == binomial(16, 4));
}

TEST_CASE("small h: the previous set wins") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 10; ++t) {
    const BinarySet f = random_proper_set(GridDomain(4, 4, 1.0), rng, 0.4);
    const OracleResult r = brute_force_min(f, 1e-6, f.count());
    CHECK(r.best_mask == f);
    CHECK(r.ties == 1);
  }
}

TEST_CASE("best energy bounds random candidates") {
  std::mt19937_64 rng(52);
  const GridDomain d(5, 5, 1.0);
  const BinarySet f = random_proper_set(d, rng, 0.4);
  const OracleResult r = brute_force_min(f, 1.3, f.count());
  const SignedDistanceField df = signed_distance(f);
  CHECK(r.num_candidates == binomial(25, static_cast<int>(f.count())));
  CHECK(r.best_energy == doctest::Approx(step_energy(r.best_mask, df, 1.3, PerimeterKind::Anisotropic4)));
  std::vector<int> idx(25);
  for (int i = 0; i < 25; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int t = 0; t < 300; ++t) {
    std::shuffle(idx.begin(), idx.end(), rng);
    MaskArray m = MaskArray::Zero(5, 5);
    for (Index i = 0; i < f.count(); ++i) m.data()[idx[static_cast<std::size_t>(i)]] = 1;
    CHECK(r.best_energy <= step_energy(BinarySet(d, m), df, 1.3, PerimeterKind::Anisotropic4) + 1e-12);
  }
}

TEST_CASE("deterministic and rotation equivariant") {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 10; ++t) {
    const OracleCase oc = random_oracle_case(rng, 4);
    const OracleResult a = brute_force_min(oc.f, oc.h, oc.f.count());
    const OracleResult b = brute_force_min(oc.f, oc.h, oc.f.count());
    CHECK(a.best_mask == b.best_mask);
    CHECK(a.best_energy == b.best_energy);
    const OracleResult rot = brute_force_min(rotated90(oc.f), oc.h, oc.f.count());
    CHECK(rot.best_energy == doctest::Approx(a.best_energy).epsilon(1e-12));
  }
}

TEST_CASE("oracle preconditions") {
  const BinarySet big = block(GridDomain(6, 5, 1.0), 0, 0, 2, 2);
  CHECK_THROWS_AS(brute_force_min(big, 1.0, 4), DomainError);
  const BinarySet f = block(GridDomain(4, 4, 1.0), 0, 0, 2, 2);
  CHECK_THROWS_AS(brute_force_min(f, 1.0, 0), DomainError);
  CHECK_THROWS_AS(brute_force_min(f, 1.0, 16), DomainError);
  CHECK_THROWS_AS(brute_force_min(f, 0.0, 4), DomainError);
}

TEST_CASE("random cases") {
  std::mt19937_64 a(54);
  std::mt19937_64 b(54);
  for (int t = 0; t < 50; ++t) {
    const OracleCase x = random_oracle_case(a, 5);
    const OracleCase y = random_oracle_case(b, 5);
    CHECK(x.f == y.f);
    CHECK(x.h == y.h);
    CHECK(!x.f.empty());
    CHECK(!x.f.full());
    CHECK(x.h >= 0.2);
    CHECK(x.h <= 5.0);
  }
}

TEST_CASE("solver agrees with the enumeration") {
  std::mt19937_64 rng(55);
  for (int t = 0; t < 30; ++t) {
    const OracleComparison c = compare_with_oracle(random_oracle_case(rng, t % 2 == 0 ? 4 : 5), 1e-5);
    CHECK(c.energy_ok);
    CHECK(c.mask_ok);
  }
}
