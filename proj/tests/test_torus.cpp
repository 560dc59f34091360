#include "doctest.h"

#include <cmath>
#include <random>

#include "dlab/generators.hpp"
#include "dlab/reverse.hpp"
#include "dlab/torus.hpp"
#include "oracles.hpp"

using namespace dlab;

namespace {

const double kGolden = 0.6180339887498949;

PhaseMatrix golden_pair() { return PhaseMatrix::pair(PhaseEntry::irrational("phi", kGolden)); }

std::vector<double> flat_angles(const TorusCloud& c) {
  std::vector<double> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto a = c.angles(i);
    out.insert(out.end(), a.begin(), a.end());
  }
  return out;
}

// m . column is an integer, checked in exact rational arithmetic.
bool annihilates(const std::vector<std::int64_t>& m, const PhaseMatrix& theta) {
  for (int l = 0; l < theta.d(); ++l) {
    Rational s(0);
    std::int64_t c = 0;
    for (int k = 0; k < theta.d(); ++k) {
      const auto& e = theta.entry(k, l);
      s += Rational(m[k]) * e.offset;
      c += m[k] * e.coeff;
    }
    if (c != 0 || s.denominator() != 1) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("word balls") {
  auto qi = PhaseMatrix::pair(PhaseEntry::rational(1, 4));
  CHECK(subgroup_ball(qi, 0).size() == 1);
  auto b1 = subgroup_ball(qi, 1);
  CHECK(b1.size() == 5);
  CHECK(b1.contains({{Rational(0), 0}, {Rational(0), 0}}));
  CHECK(b1.contains({{Rational(1, 4), 0}, {Rational(0), 0}}));
  CHECK(b1.contains({{Rational(-1, 4), 0}, {Rational(0), 0}}));
  CHECK(b1.contains({{Rational(0), 0}, {Rational(1, 4), 0}}));
  CHECK(b1.contains({{Rational(0), 0}, {Rational(3, 4), 0}}));
  CHECK_FALSE(b1.contains({{Rational(1, 4), 0}, {Rational(1, 4), 0}}));

  for (int m : {3, 5, 7}) {
    auto th = PhaseMatrix::pair(PhaseEntry::rational(1, m));
    auto big = subgroup_ball(th, 4 * m);
    CHECK(big.size() == static_cast<std::size_t>(m * m));
    CHECK(subgroup_ball(th, 4 * m + 3).size() == big.size());
  }

  // Nesting, exact for rational data.
  auto th3 = PhaseMatrix::from_upper(3, {PhaseEntry::rational(1, 5), PhaseEntry::rational(2, 7),
                                         PhaseEntry::rational(1, 3)});
  for (long n = 0; n < 6; ++n) {
    auto a = subgroup_ball(th3, n), b = subgroup_ball(th3, n + 1);
    bool nested = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::vector<TorusAngle> p(3);
      for (int k = 0; k < 3; ++k) p[k].offset = Rational(a.num[i * 3 + k], a.denom);
      nested = nested && b.contains(p);
    }
    CHECK(nested);
  }

  CHECK_THROWS_AS(subgroup_ball(golden_pair(), 2000, 1000), CapExceeded);
}

TEST_CASE("Hausdorff estimates") {
  // {identity} in d = 1: the antipode is at distance 2.
  auto e1 = hausdorff_to_torus(subgroup_ball(PhaseMatrix::zero(1), 3), 0.01);
  CHECK(e1.lower == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e1.upper >= 2.0 - 1e-12);

  // Uniform m-grid: analytic nearest-root distance.
  for (int m : {3, 4, 6}) {
    auto grid = subgroup_ball(PhaseMatrix::pair(PhaseEntry::rational(1, m)), 10 * m);
    const double truth = 2.0 * std::sin(oracle::kPi / (2.0 * m));
    for (double h : {0.01, 0.003}) {
      auto est = hausdorff_to_torus(grid, h);
      CHECK(est.lower <= truth + 1e-12);
      CHECK(est.upper >= truth - 1e-12);
      CHECK(est.upper - est.lower <= 2.0 * oracle::kPi * h);
    }
  }

  // Bracketing on a random finite d = 3 closure.
  auto th3 = PhaseMatrix::from_upper(3, {PhaseEntry::rational(1, 4), PhaseEntry::rational(1, 2),
                                         PhaseEntry::rational(1, 3)});
  auto cl = subgroup_ball(th3, 1000);
  const double truth = rational_eta_q(th3);
  auto est = hausdorff_to_torus(cl, 0.02);
  CHECK(est.lower <= truth + 1e-12);
  CHECK(est.upper >= truth - 1e-12);
  CHECK_THROWS_AS(hausdorff_to_torus(subgroup_ball(PhaseMatrix::zero(4), 1), 0.1), std::invalid_argument);
}

TEST_CASE("eta_Q for q = i against brute force") {
  auto qi = PhaseMatrix::pair(PhaseEntry::rational(1, 4));
  const double expected = 2.0 * std::sin(oracle::kPi / 8.0);
  auto closure = subgroup_ball(qi, 100);
  const double brute = oracle::chordal(oracle::grid_max_min(flat_angles(closure), 2, 400));
  CHECK(std::abs(brute - expected) <= 1e-6);
  auto rep = ergodicity_test(qi);
  REQUIRE(rep.eta_q.has_value());
  CHECK(std::abs(*rep.eta_q - expected) <= 1e-6);
  CHECK(std::abs(*rep.eta_q - brute) <= 1e-6);
}

TEST_CASE("ergodicity verdicts") {
  auto third = PhaseMatrix::pair(PhaseEntry::rational(1, 3));
  auto rep = ergodicity_test(third);
  CHECK(rep.verdict == Ergodicity::NonErgodic);
  CHECK(rep.witness == std::vector<std::int64_t>{3, 0});
  CHECK(annihilates(rep.witness, third));
  REQUIRE(rep.eta_q.has_value());
  CHECK(*rep.eta_q == doctest::Approx(1.0).epsilon(1e-12));

  auto g = ergodicity_test(golden_pair());
  CHECK(g.verdict == Ergodicity::Ergodic);
  CHECK(g.witness.empty());
  CHECK(*g.eta_q == 0.0);

  for (int d : {1, 2, 3}) {
    auto z = ergodicity_test(PhaseMatrix::zero(d));
    CHECK(z.verdict == Ergodicity::NonErgodic);
    CHECK(*z.eta_q == doctest::Approx(2.0).epsilon(1e-12));
  }

  CHECK(ergodicity_test(PhaseMatrix::pair(PhaseEntry::floating(0.3))).verdict == Ergodicity::UnknownFloat);

  // One shared irrational cannot make d = 3 ergodic: the coefficient matrix is
  // antisymmetric of odd size.
  auto mixed = PhaseMatrix::from_upper(3, {PhaseEntry::irrational("phi", kGolden), PhaseEntry::rational(1, 2),
                                           PhaseEntry::irrational("phi", kGolden, 2)});
  auto mr = ergodicity_test(mixed);
  CHECK(mr.verdict == Ergodicity::NonErgodic);
  CHECK(annihilates(mr.witness, mixed));
  CHECK_FALSE(mr.eta_q.has_value());

  auto two_tags = PhaseMatrix::from_upper(3, {PhaseEntry::irrational("phi", kGolden), PhaseEntry::rational(1, 2),
                                              PhaseEntry::irrational("sqrt2", 0.41421356237309515)});
  CHECK_THROWS_AS(ergodicity_test(two_tags), std::invalid_argument);
}

TEST_CASE("rational eta_Q matches the Hausdorff estimate on the stabilized cloud") {
  Rng rng = task_rng(51, 0);
  std::uniform_int_distribution<int> den(1, 6);
  for (int t = 0; t < 12; ++t) {
    const int d = 2 + t % 2;
    std::vector<PhaseEntry> up;
    for (int i = 0; i < d * (d - 1) / 2; ++i) {
      int q = d == 2 ? den(rng) : 1 + den(rng) % 4;
      up.push_back(PhaseEntry::rational(std::uniform_int_distribution<int>(0, q - 1)(rng), q));
    }
    auto th = PhaseMatrix::from_upper(d, up);
    auto rep = ergodicity_test(th);
    CHECK(rep.verdict == Ergodicity::NonErgodic);
    CHECK(annihilates(rep.witness, th));
    auto cl = subgroup_ball(th, 10000);
    CHECK(cl.layer.back() < 10000);  // closure reached
    auto est = hausdorff_to_torus(cl, 1.0 / (4.0 * static_cast<double>(cl.denom)));
    CHECK(std::abs(est.lower - *rep.eta_q) <= 1e-9);
    // Independent brute force, at twice the resolution in the plane.
    const long n = (d == 2 ? 8 : 4) * cl.denom;
    const double brute = oracle::chordal(oracle::grid_max_min(flat_angles(cl), d, n));
    CHECK(std::abs(brute - *rep.eta_q) <= 1e-9);
  }
}

TEST_CASE("closed-form word-ball distance against the 2-D sweep") {
  for (double alpha : {kGolden, 0.41421356237309515, 0.7182818284590451}) {
    auto th = PhaseMatrix::pair(PhaseEntry::irrational("a", alpha));
    for (long n : {0L, 1L, 2L, 3L, 7L, 12L, 25L}) {
      auto cl = subgroup_ball(th, n);
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < cl.size(); ++i) {
        auto a = cl.angles(i);
        xs.push_back(a[0]);
        ys.push_back(a[1]);
      }
      const double r = n == 0 ? 0.5 : oracle::covering_radius_2d(xs, ys);
      CHECK(std::abs(word_ball_hausdorff(th, n) - oracle::chordal(r)) <= 1e-9);
    }
  }
  // Rational data: the closure is reached at N = 2 floor(order / 2).
  auto qi = PhaseMatrix::pair(PhaseEntry::rational(1, 4));
  CHECK(word_ball_hausdorff(qi, 4) == doctest::Approx(2.0 * std::sin(oracle::kPi / 8)).epsilon(1e-14));
  CHECK(word_ball_hausdorff(PhaseMatrix::zero(1), 5) == 2.0);
}

TEST_CASE("find_N_eta") {
  auto g = golden_pair();
  auto half = find_N_eta(g, 0.5);
  CHECK(half.n_eta > 0);
  CHECK(half.hausdorff < 0.5);
  CHECK(half.hausdorff_prev >= 0.5);
  CHECK(word_ball_hausdorff(g, half.n_eta) < 0.5);
  CHECK(word_ball_hausdorff(g, half.n_eta - 1) >= 0.5);

  auto two = find_N_eta(g, 2.0);
  CHECK(two.n_eta >= 1);
  CHECK(find_N_eta(g, 2.5).n_eta == 0);

  auto qi = PhaseMatrix::pair(PhaseEntry::rational(1, 4));
  CHECK_THROWS_AS(find_N_eta(qi, 2.0 * std::sin(oracle::kPi / 8)), std::invalid_argument);
  CHECK(find_N_eta(qi, 0.8).n_eta == 4);
  CHECK_THROWS_AS(find_N_eta(PhaseMatrix::zero(1), 1.0), std::invalid_argument);

  // Monotone in eta over 20 ergodic instances.
  Rng rng = task_rng(52, 0);
  std::uniform_real_distribution<double> base(0.05, 0.95), et(0.05, 1.5);
  int violations = 0;
  for (int t = 0; t < 20; ++t) {
    auto th = PhaseMatrix::pair(PhaseEntry::irrational("x", base(rng)));
    double e1 = et(rng), e2 = et(rng);
    if (e1 > e2) std::swap(e1, e2);
    if (find_N_eta(th, e1).n_eta < find_N_eta(th, e2).n_eta) ++violations;
  }
  CHECK(violations == 0);

  // d = 3 through the grid certificate.
  auto th3 = PhaseMatrix::from_upper(3, {PhaseEntry::rational(1, 5), PhaseEntry::rational(1, 7),
                                         PhaseEntry::rational(1, 3)});
  const double eta = rational_eta_q(th3) + 0.3;
  auto r3 = find_N_eta(th3, eta);
  CHECK(r3.hausdorff < eta);
  CHECK(r3.hausdorff_prev >= eta);
  const double h = 0.25 * turns_from_chordal(eta);
  CHECK(hausdorff_to_torus(subgroup_ball(th3, r3.n_eta), h).upper < eta);
}

TEST_CASE("almost gauge certificate") {
  CHECK(almost_gauge_certificate(0.01, 0.1, 5).epsilon == doctest::Approx(0.15));
  CHECK(almost_gauge_certificate(0.0, 0.3, 7).epsilon == 0.3);
  auto n = find_N_eta(golden_pair(), 0.3);
  auto c = almost_gauge_certificate(0.002, 0.3, n.n_eta);
  CHECK(c.epsilon == doctest::Approx(static_cast<double>(n.n_eta) * 0.002 + 0.3));
}

TEST_CASE("planner") {
  auto g = golden_pair();
  auto p2 = eps_delta_plan(g, 2.0);
  CHECK(p2.budget == doctest::Approx(0.02));
  double prev_delta = 0.0;
  for (double eps : {0.9, 1.2, 1.6, 2.0}) {
    auto p = eps_delta_plan(g, eps);
    // Recomputed from the plan fields.
    const double used = p.n_eta * p.delta + std::sqrt(p.delta);
    CHECK(p.eta < eps * eps / 200.0);
    CHECK(used < eps * eps / 200.0);
    CHECK(10.0 * std::sqrt(used + p.eta) < eps);
    CHECK(p.residual > 0.0);
    CHECK(word_ball_hausdorff(g, p.n_eta) < p.eta);
    CHECK(p.delta >= prev_delta);
    prev_delta = p.delta;
  }
  CHECK_THROWS_AS(eps_delta_plan(PhaseMatrix::pair(PhaseEntry::rational(1, 3)), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eps_delta_plan(g, 2.5), std::invalid_argument);
}

TEST_CASE("gauge points of the reverse construction lie in the word ball") {
  auto th = PhaseMatrix::from_upper(3, {PhaseEntry::rational(1, 4), PhaseEntry::rational(1, 2),
                                        PhaseEntry::rational(3, 4)});
  UnitaryTuple w = weyl_tuple(th);
  const int m = 2;
  StepOptions so;
  so.ring_size = 8;
  so.half_width = 2;
  auto fwd = dilate_step(w.matrices(), th, m, so);
  ReverseOptions ro;
  ro.half_width = 2;
  auto r = reverse_dilate_step(w.matrices(), fwd.out, th, m, ro);
  for (const auto& gp : r.decomposition.blocks) {
    auto ball = subgroup_ball(th, std::abs(gp.ell));
    std::vector<TorusAngle> pt(3);
    for (int j = 0; j < 3; ++j) {
      pt[j].offset = Rational(gp.ell) * th.entry(j, m).offset;  // q_{j,m}^ell
      CHECK(std::abs(gp.lambda[j] - th.entry(j, m).power(gp.ell)) == 0.0);
    }
    CHECK(ball.contains(pt));
  }
}
