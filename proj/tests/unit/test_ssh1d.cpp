#include <catch_amalgamated.hpp>

#include "cbs/ssh1d.hpp"

using namespace cbs;
using namespace cbs::ssh1d;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Number of eigenvalues below x of the symmetric tridiagonal chain matrix,
// from the signs of the LDL^T pivots.
std::size_t sturm_count(const std::vector<double>& s, double x) {
  const std::size_t n = s.size() + 1;
  std::size_t below = 0;
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double diag = (i > 0 ? 1.0 / s[i - 1] : 0.0) + (i + 1 < n ? 1.0 / s[i] : 0.0);
    double off2 = i > 0 ? 1.0 / (s[i - 1] * s[i - 1]) : 0.0;
    d = diag - x - (i > 0 ? off2 / d : 0.0);
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++below;
  }
  return below;
}

double bisect_eigenvalue(const std::vector<double>& s, std::size_t index, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sturm_count(s, mid) > index ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// |u| shrinks by e^{-beta L} per cell: smallest modulus of the eigenvalues of
// the two-step recurrence matrix through one s1 and one s2 spacing.
double recurrence_beta(double lambda, double s1, double s2, double L) {
  auto step = [lambda](double back, double fwd) {
    Eigen::Matrix2d m;
    m << fwd * (1.0 / back + 1.0 / fwd - lambda), -fwd / back, 1.0, 0.0;
    return m;
  };
  const Eigen::Matrix2d T = step(s1, s2) * step(s2, s1);
  const auto ev = T.eigenvalues();
  return -std::log(std::min(std::abs(ev(0)), std::abs(ev(1)))) / L;
}

}  // namespace

TEST_CASE("defected chain layout") {
  const DefectedChain c(9, 1.0, 2.0);
  CHECK(c.dimers_per_side() == 2);
  CHECK(c.interface_index() == 4);
  CHECK(c.cell_length() == 5.0);
  CHECK(c.spacings() == std::vector<double>{1, 2, 1, 2, 2, 1, 2, 1});
  for (std::size_t n : {0u, 3u, 4u, 7u, 10u})
    CHECK_THROWS_AS(DefectedChain(n, 1.0, 2.0), NumericalError);
  CHECK_THROWS_AS(DefectedChain(9, -1.0, 2.0), NumericalError);
  CHECK_THROWS_AS(DefectedChain(9, 1.0, 2.0, 1.0, 1.0, 0.0), NumericalError);
}

TEST_CASE("finite capacitance matrix") {
  const auto C = finite_capacitance(DefectedChain(5, 1.0, 2.0));
  Eigen::MatrixXd expect(5, 5);
  expect << 1, -1, 0, 0, 0,
            -1, 1.5, -0.5, 0, 0,
            0, -0.5, 1.0, -0.5, 0,
            0, 0, -0.5, 1.5, -1,
            0, 0, 0, -1, 1;
  CHECK((C - expect).norm() == 0.0);
  CHECK((C * Eigen::VectorXd::Ones(5)).norm() < 1e-15);
  CHECK((C - C.transpose()).norm() == 0.0);
}

TEST_CASE("interface mode of the reference chain") {
  const DefectedChain chain(41, 1.0, 2.0, 1.0, 1.0, 1e-3);
  const auto m = interface_eigenpair(chain);
  const double closed = interface_lambda_closed_form(1.0, 2.0);
  CHECK_THAT(closed, WithinAbs(0.5 * (4.5 - std::sqrt(4.25)), 1e-15));
  // Printed anchors, 4 significant digits.
  CHECK_THAT(m.lambda, WithinAbs(1.2192, 1e-4));
  CHECK_THAT(m.omega, WithinAbs(0.03492, 1e-5));
  // Frozen from the bisection oracle.
  const double frozen_lambda = 1.2192191;
  const auto s = chain.spacings();
  const double bis = bisect_eigenvalue(s, sturm_count(s, m.gap_lo + 1e-12), m.gap_lo, m.gap_hi);
  CHECK_THAT(bis, WithinAbs(m.lambda, 1e-12));
  CHECK_THAT(m.lambda, WithinAbs(frozen_lambda, 1e-7));
  CHECK(m.in_gap_count == 1);
  CHECK(m.lambda > m.gap_lo);
  CHECK(m.lambda < m.gap_hi);
  CHECK_THAT(m.mode.norm(), WithinAbs(1.0, 1e-14));
  CHECK(m.mode(20) > 0.0);
  // Mirror symmetric about the defect.
  for (int i = 0; i < 20; ++i) CHECK_THAT(m.mode(i), WithinAbs(m.mode(40 - i), 1e-10));

  CHECK_THAT(m.predicted_beta, WithinAbs(0.1154091, 1e-7));
  CHECK_THAT(m.predicted_beta, WithinRel(recurrence_beta(m.lambda, 1.0, 2.0, 5.0), 1e-10));
  CHECK_THAT(m.fitted_beta, WithinRel(m.predicted_beta, 0.02));
}

TEST_CASE("bulk gap matches the open-chain spectrum") {
  // Gap edges of the periodic dimer at the zone edge: 1/s1 + 1/s2 -+ |1/s1 - 1/s2|.
  const auto [lo, hi] = bulk_gap(DefectedChain(9, 1.0, 2.0));
  CHECK_THAT(lo, WithinAbs(1.0, 1e-12));
  CHECK_THAT(hi, WithinAbs(2.0, 1e-12));
}

TEST_CASE("one gap mode for every size, converging geometrically") {
  double prev_err = 0.0;
  const double target = interface_lambda_closed_form(1.0, 2.0);
  for (std::size_t n : {9u, 21u, 41u, 81u}) {
    const auto m = interface_eigenpair(DefectedChain(n, 1.0, 2.0));
    CHECK(m.in_gap_count == 1);
    const double err = std::abs(m.lambda - target);
    if (n > 9 && prev_err > 1e-13) CHECK(err < 0.1 * prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-9);
}

TEST_CASE("decay rate round trip") {
  for (double lam : {1.05, 1.2192, 1.5, 1.9}) {
    const double delta = 1e-3;
    const double w = std::sqrt(delta * lam);
    const double b = predicted_decay_rate(w, delta, 1.0, 2.0, 5.0);
    CHECK_THAT(b, WithinRel(recurrence_beta(lam, 1.0, 2.0, 5.0), 1e-10));
  }
  CHECK_THROWS_AS(predicted_decay_rate(std::sqrt(1e-3 * 0.5), 1e-3, 1.0, 2.0, 5.0), NumericalError);
  CHECK_THROWS_AS(interface_eigenpair(DefectedChain(41, 1.0, 1.0)), NumericalError);
}

TEST_CASE("envelope check on the reference mode") {
  const DefectedChain chain(41, 1.0, 2.0);
  const auto m = interface_eigenpair(chain);
  const auto env = decay_envelope_check(m.mode, m.predicted_beta, chain.cell_length(), 3);
  CHECK(env.slope_left < 0.0);
  CHECK(env.slope_right < 0.0);
  CHECK_THAT(env.expected, WithinAbs(m.predicted_beta * 5.0, 1e-15));
  CHECK(env.rel_error_left < 0.02);
  CHECK(env.rel_error_right < 0.02);
  CHECK(env.fitted_cells >= 3);
  CHECK(env.max_violation < 1e-2);
}
