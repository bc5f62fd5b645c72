#include <catch_amalgamated.hpp>

#include "cbs/lattice2d.hpp"

using namespace cbs;
using namespace cbs::lattice2d;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Vec2 X(0.3, 0.15);
const Vec2 ALPHA(1.8, -1.9);
const Vec2 BETA(0.3, -0.3);
constexpr double K = 0.25;

}  // namespace

TEST_CASE("lattice and dual vectors") {
  const Lattice2D lat(Vec2(1.0, 0.0), Vec2(0.4, 0.9));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK_THAT(lat.dual().col(i).dot(lat.direct().col(j)), WithinAbs(i == j ? 2.0 * pi : 0.0, 1e-14));
  CHECK_THAT(lat.area(), WithinAbs(0.9, 1e-15));
  CHECK_THROWS_AS(Lattice2D(Vec2(1, 0), Vec2(2, 0)), NumericalError);
  CHECK(DualTruncation{3}.points(lat).size() == 49);
}

TEST_CASE("zone-face truncation is balanced") {
  const auto lat = Lattice2D::square(1.0);
  const auto terms = DualTruncation{2}.terms(lat, Vec2(pi, 0.3));
  double total = 0.0;
  Vec2 moment = Vec2::Zero();
  for (const auto& t : terms) {
    total += t.weight;
    moment += t.weight * (Vec2(pi, 0.0) + t.q);
  }
  CHECK_THAT(total, WithinAbs(25.0, 1e-12));
  CHECK(std::abs(moment.x()) < 1e-12);
  CHECK(DualTruncation{2}.terms(lat, Vec2(0.4, 0.3)).size() == 25);
}

TEST_CASE("truncated sums against an independent evaluation") {
  const auto lat = Lattice2D::square(1.0);
  const auto q = make_quasimomentum(ALPHA, BETA);
  // Frozen from a vectorised numpy evaluation of the same truncated sums.
  CHECK(std::abs(greens_gap(X, q, K, lat, {10}) - cplx(-0.1494775744759934, 0.017109707542696452)) < 1e-13);
  CHECK(std::abs(greens_bulk(X, q, K, lat, {10}) - cplx(-0.14714057392692442, -0.026419013622926937)) < 1e-13);
  CHECK(std::abs(greens_gap(X, q, K, lat, {40}) - cplx(-0.14957477434131786, 0.0170896387883284)) < 1e-13);
  CHECK(std::abs(greens_remainder(X, q, K, lat, {40}) - cplx(-0.0023377482315806164, 0.043528398396309474)) <
        1e-13);
}

TEST_CASE("gap sum splits into bulk plus remainder") {
  const auto lat = Lattice2D::square(1.0);
  for (int n : {2, 10, 33}) {
    for (const Vec2& x : {X, Vec2(-0.41, 0.07), Vec2(0.0, 0.5)}) {
      const auto q = make_quasimomentum(ALPHA, BETA);
      const cplx g = greens_gap(x, q, K, lat, {n});
      const cplx split = greens_bulk(x, q, K, lat, {n}) + greens_remainder(x, q, K, lat, {n});
      CHECK(std::abs(g - split) < 1e-13 * std::max(1.0, std::abs(g)));
    }
  }
  CHECK(greens_remainder(X, make_quasimomentum(ALPHA, Vec2::Zero()), K, lat, {10}) == cplx(0.0, 0.0));
}

TEST_CASE("conjugation and inversion symmetries") {
  const auto lat = Lattice2D::square(1.0);
  const DualTruncation tr{12};
  const cplx g = greens_gap(X, make_quasimomentum(ALPHA, BETA), K, lat, tr);
  const cplx flip_alpha = greens_gap(X, make_quasimomentum(-ALPHA, BETA), K, lat, tr);
  const cplx flip_all = greens_gap(-X, make_quasimomentum(-ALPHA, -BETA), K, lat, tr);
  CHECK(std::abs(flip_alpha - std::conj(g)) < 1e-14);
  CHECK(std::abs(flip_all - g) < 1e-14);
  // Flipping beta alone is not a symmetry.
  CHECK(std::abs(greens_gap(X, make_quasimomentum(ALPHA, -BETA), K, lat, tr) - g) > 1e-3);
}

TEST_CASE("Rayleigh singularities along the diagonal") {
  const auto lat = Lattice2D::square(1.0);
  const Vec2 dir = Vec2(1.0, 1.0).normalized();
  const double k = 0.05;
  const auto pts = rayleigh_singularities(Vec2(pi, pi), k, dir, lat, 40.0);
  const auto vals = rayleigh_values(pts);
  REQUIRE(vals.size() >= 3);
  // p = (pi(2m+1), -pi(2m+1)).
  for (int m = 0; m < 3; ++m) {
    const double c = pi * (2 * m + 1);
    CHECK_THAT(vals[static_cast<std::size_t>(m)], WithinRel(std::sqrt(2.0 * c * c - k * k), 1e-14));
  }
  for (const auto& p : pts) {
    const Vec2 pp = Vec2(pi, pi) + p.q;
    CHECK(std::abs(pp.dot(dir)) < 1e-10);
    const auto qz = make_quasimomentum(Vec2(pi, pi), p.beta_norm * dir);
    CHECK(std::abs(detail::gap_denominator(pp, qz.beta, k)) < 1e-10);
  }
  CHECK_THROWS_AS(rayleigh_singularities(Vec2(pi, pi), k, Vec2(1, 1), lat, 10.0), NumericalError);
}

TEST_CASE("guard fires next to a Rayleigh point") {
  const auto lat = Lattice2D::square(1.0);
  const Vec2 dir = Vec2(1.0, 1.0).normalized();
  const double k = 0.05;
  const double b = std::sqrt(2.0 * pi * pi - k * k);
  try {
    greens_gap(X, make_quasimomentum(Vec2(pi, pi), b * dir), k, lat, {4});
    FAIL("expected a RayleighSingular error");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == ErrorKind::RayleighSingular);
  }
  CHECK_NOTHROW(greens_gap(X, make_quasimomentum(Vec2(pi, pi), 0.9 * b * dir), k, lat, {4}));
}

TEST_CASE("truncation error decays algebraically") {
  const auto lat = Lattice2D::square(1.0);
  std::vector<int> ns;
  for (int n = 2; n <= 64; ++n) ns.push_back(n);
  const auto rep = truncation_convergence(X, make_quasimomentum(ALPHA, BETA), K, lat, ns, 512);
  REQUIRE(rep.rows.size() == ns.size());
  CHECK(rep.rows.back().error < 1e-3 * rep.rows.front().error);
  CHECK_THAT(rep.order, WithinAbs(3.0, 0.1));
  CHECK_THROWS_AS(truncation_convergence(X, make_quasimomentum(ALPHA, BETA), K, lat, {8}, 8), NumericalError);
}
