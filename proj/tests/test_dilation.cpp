#include "doctest.h"

#include <cmath>

#include "dlab/dilation.hpp"
#include "dlab/generators.hpp"

using namespace dlab;

namespace {

// Independent enumeration of the admissible window half widths.
long enumerate_window(double delta) {
  double r = 1.0 / std::sqrt(delta);
  for (long n = 0; n < 100000; ++n)
    if ((n + 1) / 2.0 < r && r < 2.0 * n + 1) return n;
  return -1;
}

struct RandomPair {
  CMatrix u, v;
  PhaseEntry q;
  double delta;
};

RandomPair random_pair(Rng& rng, std::ptrdiff_t m, double delta) {
  // Weyl base at 1/m, target phase nudged by less than delta/2.
  std::uniform_real_distribution<double> nudge(-0.25, 0.25);
  double turns = 1.0 / static_cast<double>(m) + nudge(rng) * delta / (2 * 3.14159265358979);
  auto base = PhaseMatrix::pair(PhaseEntry::rational(1, m));
  auto target = PhaseMatrix::pair(PhaseEntry::floating(turns));
  auto t = random_almost_tuple(rng, base, m, target, delta);
  // Pair orientation of dilate_pair: u = U_2, v = U_1, q = q_{2,1}.
  return {t[1], t[0], target.entry(1, 0), delta};
}

}  // namespace

TEST_CASE("choose_window examples") {
  CHECK(choose_window(0.04) == 3);
  CHECK(choose_window(0.25) == 1);
  CHECK(choose_window(0.999999) == 1);
  CHECK_THROWS_AS(choose_window(0.0), std::invalid_argument);
  CHECK_THROWS_AS(choose_window(1.0), std::invalid_argument);
  Rng rng = task_rng(9, 0);
  std::uniform_real_distribution<double> ld(-7.0, -0.01);
  for (int t = 0; t < 200; ++t) {
    double delta = std::pow(10.0, ld(rng));
    CHECK(choose_window(delta) == enumerate_window(delta));
    long n = choose_window(delta);
    CHECK(1.0 / (2.0 * n + 1) < std::sqrt(delta));
    CHECK(n * (n + 1.0) / (2.0 * n + 1) * delta < std::sqrt(delta));
  }
}

TEST_CASE("window isometry") {
  WindowIsometry w(3, 10, 4);
  CMatrix i = w.dense();
  CHECK((i.adjoint() * i - identity(3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(WindowIsometry(3, 9, 4), std::invalid_argument);
  CHECK(w.contains(0));
  CHECK(w.contains(6));  // centered -4
  CHECK_FALSE(w.contains(5));
}

TEST_CASE("compression of u (x) S is (2N/(2N+1)) u") {
  Rng rng = task_rng(9, 1);
  for (std::ptrdiff_t m : {1, 3, 8, 16})
    for (long N : {0, 1, 5, 20}) {
      long L = 2 * N + 2 + (m % 3);
      CMatrix u = haar_unitary(rng, m);
      auto us = WeightedShiftOperator::constant(L, 1, u);
      WindowIsometry w(m, L, N);
      CMatrix c = compress(us, w);
      double f = 2.0 * N / (2.0 * N + 1);
      CHECK((c - f * u).cwiseAbs().maxCoeff() <= 1e-12);
      if (m * L <= 400) CHECK((compress(us.densify(), w) - c).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("compression of a diagonal weighted operator is the window average") {
  Rng rng = task_rng(9, 2);
  const long L = 12, N = 4;
  WeightedShiftOperator b(L, 0, 2);
  CMatrix avg = CMatrix::Zero(2, 2);
  for (long c = -6; c <= 5; ++c) {
    CMatrix bk = random_gaussian(rng, 2, 2);
    b.set_weight(c, bk);
    if (std::abs(c) <= N) avg += bk;
  }
  avg /= 2.0 * N + 1;
  CHECK((compress(b, WindowIsometry(2, L, N)) - avg).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("exact Weyl pair on a compatible ring") {
  const long n = 8;
  CMatrix u = clock_matrix(n), v = shift_matrix(n);
  auto pd = dilate_pair(u, v, PhaseEntry::rational(1, n), 24);
  CHECK(pd.output_defect <= 1e-12);
  CHECK(pd.interior_defect <= 1e-12);
  WindowIsometry w(n, 24, 5);
  CMatrix cu = compress(pd.u_tilde, w);
  CHECK((cu - (10.0 / 11.0) * u).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(operator_norm(CMatrix(u - cu)) - 1.0 / 11.0) <= 1e-12);
  // Structured and dense defects agree.
  CMatrix U = pd.u_tilde.densify(), V = pd.v_tilde.densify();
  CHECK(operator_norm(CMatrix(V * U - unit_phase(1.0 / n) * U * V)) <= 1e-12);
}

TEST_CASE("commuting pair with q = 1") {
  Rng rng = task_rng(9, 3);
  CMatrix w = haar_unitary(rng, 4);
  CVector a(4), b(4);
  std::uniform_real_distribution<double> ud(0, 1);
  for (int i = 0; i < 4; ++i) {
    a(i) = unit_phase(ud(rng));
    b(i) = unit_phase(ud(rng));
  }
  CMatrix u = w * a.asDiagonal() * w.adjoint(), v = w * b.asDiagonal() * w.adjoint();
  for (long L : {4, 7, 10}) {
    auto pd = dilate_pair(u, v, PhaseEntry::rational(0, 1), L);
    CHECK(pd.output_defect <= 1e-12);
    for (const auto& [k, wk] : pd.v_tilde.weights()) CHECK((wk - v).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("generic pairs: seam, interior, telescoping and compression bounds") {
  Rng rng = task_rng(9, 4);
  std::uniform_real_distribution<double> ld(-3.0, -1.0);
  for (int t = 0; t < 20; ++t) {
    double delta = std::pow(10.0, ld(rng));
    auto p = random_pair(rng, 3 + t % 4, delta);
    long N = choose_window(delta);
    long L = 2 * N + 2 + t % 3;
    auto pd = dilate_pair(p.u, p.v, p.q, L);
    CHECK(std::abs(pd.input_defect - delta) <= 1e-8 * delta);
    CHECK(pd.interior_defect <= 1e-12);
    CHECK(pd.wrap_defect <= L * delta + std::abs(p.q.power(L) - 1.0) + 1e-10);
    // Dense seam formula.
    CMatrix uL = unitary_power(p.u, L);
    double seam = operator_norm(CMatrix(p.q.power(L) * uL * p.v * uL.adjoint() - p.v));
    CHECK(std::abs(seam - pd.wrap_defect) <= 1e-10);
    ConjugateOrbit orbit(p.u, p.v, p.q, 0, L / 2);
    for (long k = 0; k <= L / 2; ++k) CHECK(operator_norm(CMatrix(p.v - orbit(k))) <= k * delta + 1e-10);
    WindowIsometry w(p.u.rows(), L, N);
    double ev = operator_norm(CMatrix(p.v - compress(pd.v_tilde, w)));
    CHECK(ev <= N * (N + 1.0) / (2.0 * N + 1) * delta + 1e-9);
    CHECK(ev < std::sqrt(delta));
  }
}

TEST_CASE("dilate_step specializes to dilate_pair for d = 2") {
  Rng rng = task_rng(9, 5);
  auto base = PhaseMatrix::pair(PhaseEntry::rational(1, 5));
  auto target = PhaseMatrix::pair(PhaseEntry::floating(0.2 + 0.001));
  auto t = random_almost_tuple(rng, base, 5, target, 0.02);
  StepOptions so;
  so.ring_size = 12;
  so.half_width = 4;
  auto step = dilate_step(t.matrices(), target, 1, so);
  auto pd = dilate_pair(t[1], t[0], target.entry(1, 0), 12);
  CHECK((step.out[1].densify() - pd.u_tilde.densify()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((step.out[0].densify() - pd.v_tilde.densify()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(step.cert.ledger.all_pass());
  CHECK(std::abs(step.cert.defect_out(0, 1) - pd.output_defect) <= 1e-12);
  CHECK_THROWS_AS(dilate_step(t.matrices(), target, 2, so), std::out_of_range);
}

TEST_CASE("dilate_step preserves defects of untouched pairs (d = 3)") {
  Rng rng = task_rng(9, 6);
  auto base = PhaseMatrix::from_upper(3, {PhaseEntry::rational(1, 2), PhaseEntry::rational(0, 1),
                                          PhaseEntry::rational(1, 2)});
  auto target = PhaseMatrix::from_upper(3, {PhaseEntry::floating(0.5), PhaseEntry::floating(0.001),
                                            PhaseEntry::irrational("a", 0.5 + 0.0007)});
  for (int t = 0; t < 5; ++t) {
    auto u = random_almost_tuple(rng, base, 4, target, 0.01);
    for (int m : {1, 2}) {
      auto step = dilate_step(u.matrices(), target, m);
      CHECK(step.cert.preservation_max <= 1e-10);
      CHECK(step.cert.interior_max <= 1e-12);
      // Oracle: each block of an untouched pair is a conjugate of the original commutator.
      int i = m == 1 ? 0 : 0, j = m == 1 ? 2 : 1;
      auto ui = step.out[i], uj = step.out[j];
      auto comm = ws_sub(ws_mul(uj, ui), ws_scale(ws_mul(ui, uj), target.q(i, j)));
      double orig = operator_norm(CMatrix(u[j] * u[i] - target.q(i, j) * u[i] * u[j]));
      for (const auto& [k, w] : comm.weights()) CHECK(std::abs(operator_norm(w) - orig) <= 1e-10);
    }
  }
}

TEST_CASE("exact input on a compatible ring stays exact") {
  auto theta = PhaseMatrix::from_upper(3, {PhaseEntry::rational(1, 2), PhaseEntry::rational(1, 3),
                                           PhaseEntry::rational(0, 1)});
  auto w = weyl_tuple(theta);
  StepOptions so;
  so.half_width = 2;
  auto s2 = dilate_step(w.matrices(), theta, 1, so);
  CHECK(s2.cert.ring_size % 2 == 0);
  CHECK(max_defect(s2.cert.defect_out) <= 1e-12);
  // Generators 1..m commute exactly; the rest keep their (zero) defects.
  DilationOptions dopt;
  dopt.half_width = 2;
  auto full = dilate_full(w, theta, dopt);
  CHECK(max_defect(full.cert.defect_out) <= 1e-12);
  CHECK(full.cert.ledger.all_pass());
  for (const auto& st : full.cert.steps) {
    CHECK(std::abs(st.raw_errors[st.m] - 1.0 / 5.0) <= 1e-12);
    for (int j = 0; j < 3; ++j)
      if (j != st.m) CHECK(st.errors[j] <= 1e-12);
  }
  CHECK_THROWS_AS(dilate_full(w, theta), std::invalid_argument);
}

TEST_CASE("dilate_full on a Weyl pair near an irrational target") {
  const long n = 8;
  UnitaryTuple w({clock_matrix(n).adjoint(), shift_matrix(n)});
  // w realizes 1/8; the target is a nearby irrational phase.
  double alpha = 1.0 / n + 0.0016;
  auto theta = PhaseMatrix::pair(PhaseEntry::irrational("a", alpha));
  double delta = std::abs(unit_phase(1.0 / n) - unit_phase(alpha));
  auto full = dilate_full(w, theta);
  CHECK(full.cert.delta == doctest::Approx(delta).epsilon(1e-10));
  CHECK(full.cert.total_error < std::sqrt(delta));
  CHECK(full.cert.ledger.all_pass());
  CHECK(full.cert.ring_sizes.front() == 2 * choose_window(delta) + 2);
}

TEST_CASE("dilate_full on random d = 3 tuples") {
  Rng rng = task_rng(9, 7);
  auto base = PhaseMatrix::from_upper(3, {PhaseEntry::rational(1, 2), PhaseEntry::rational(0, 1),
                                          PhaseEntry::rational(1, 2)});
  for (int t = 0; t < 3; ++t) {
    auto u = random_almost_tuple(rng, base, 4, base, 0.01);
    auto full = dilate_full(u, base);
    CHECK(full.cert.half_width == 5);
    CHECK(full.cert.ring_sizes == std::vector<long>{12, 12});
    CHECK(full.cert.total_error < 0.2);
    CHECK(full.cert.total_error <= full.cert.error_sum + 1e-12);
    CHECK(full.cert.ledger.all_pass());
    // Structured total agrees with a dense evaluation through the composite window.
    CMatrix iota = WindowIsometry(48, 12, 5).dense() * full.iota;
    OperatorTuple dense = densify(full.v_theta);
    double e = 0;
    for (int j = 0; j < 3; ++j) e = std::max(e, operator_norm(CMatrix(u[j] - iota.adjoint() * dense[j] * iota)));
    CHECK(std::abs(e - full.cert.total_error) <= 1e-12);
  }
}

TEST_CASE("universal surrogate") {
  auto theta = PhaseMatrix::pair(PhaseEntry::rational(1, 3));
  auto g1 = universal_surrogate(theta, 1);
  auto w = weyl_tuple(theta);
  CHECK(tuple_distance(g1.matrices(), w.matrices()) == 0.0);
  auto g4 = universal_surrogate(theta, 4);
  CHECK(g4.dim() == 48);
  CHECK(max_defect(commutation_defect(g4, theta)) <= 1e-12);
  CHECK_THROWS(universal_surrogate(PhaseMatrix::pair(PhaseEntry::irrational("a", 0.3)), 2));
}
