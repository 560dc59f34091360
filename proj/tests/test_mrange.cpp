#include "doctest.h"

#include <cmath>

#include "dlab/mrange.hpp"
#include "dlab/random.hpp"
#include "oracles.hpp"

using namespace dlab;

namespace {

CMatrix clock(long n) {
  CMatrix c = CMatrix::Zero(n, n);
  for (long k = 0; k < n; ++k) c(k, k) = unit_phase(static_cast<double>(k) / n);
  return c;
}

CMatrix diag(const std::vector<cplx>& z) {
  CMatrix c = CMatrix::Zero(static_cast<long>(z.size()), static_cast<long>(z.size()));
  for (std::size_t k = 0; k < z.size(); ++k) c(k, k) = z[k];
  return c;
}

std::vector<oracle::Point> eigen_polygon(const CMatrix& normal) {
  Eigen::ComplexEigenSolver<CMatrix> es(normal);
  std::vector<oracle::Point> pts(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  return oracle::convex_hull(pts);
}

// d = 1 normal pairs: the one-sided distance is attained at level 1 and equals
// the largest distance from a spectral point of A to the spectral hull of B.
double normal_oracle(const CMatrix& a, const CMatrix& b) {
  const auto hull = eigen_polygon(b);
  Eigen::ComplexEigenSolver<CMatrix> es(a);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    worst = std::max(worst, oracle::polygon_distance(es.eigenvalues()(k), hull));
  return worst;
}

OperatorTuple haar_tuple(Rng& rng, int d, long m) {
  OperatorTuple t;
  for (int i = 0; i < d; ++i) t.push_back(haar_unitary(rng, m));
  return t;
}

OperatorTuple compress_tuple(const OperatorTuple& a, const CMatrix& v) {
  OperatorTuple out;
  for (const auto& ai : a) out.push_back(v.adjoint() * ai * v);
  return out;
}

CMatrix direct_sum(const CMatrix& a, const CMatrix& b) {
  CMatrix out = CMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace

TEST_CASE("Choi matrices of elementary maps") {
  Rng rng = task_rng(3, 0);
  CMatrix v = random_isometry(rng, 5, 2);
  auto c = ChoiMatrix::compression(v);
  CHECK(c.is_ucp());
  CMatrix y = random_gaussian(rng, 5, 5);
  CHECK((c.apply(y) - v.adjoint() * y * v).cwiseAbs().maxCoeff() <= 1e-12);
  auto t = ChoiMatrix::tracial(5, 3);
  CHECK(t.is_ucp());
  CHECK((t.apply(y) - y.trace() / 5.0 * identity(3)).cwiseAbs().maxCoeff() <= 1e-12);

  // The projection leaves UCP maps in place and lands on UCP maps.
  auto p = project_ucp(c.J, 5, 2);
  CHECK((p.J - c.J).norm() <= 1e-9);
  auto q = project_ucp(random_hermitian(rng, 10), 5, 2);
  CHECK(q.is_ucp());
}

TEST_CASE("level-1 support functions") {
  CHECK(support_level1({identity(3)}, {1.0}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(support_level1({clock(4)}, {1.0}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(support_level1({clock(4)}, {0.0}), std::invalid_argument);

  // Regular pentagon: h(c) = max_k Re(conj(c) w^k).
  const auto dirs = dual_directions(1, 720);
  double worst = 0.0;
  for (const auto& c : dirs) {
    double h = -INFINITY;
    for (int k = 0; k < 5; ++k) h = std::max(h, (std::conj(c[0]) * unit_phase(k / 5.0)).real());
    worst = std::max(worst, std::abs(support_level1({clock(5)}, c) - h));
  }
  CHECK(worst <= 1e-10);

  // Support points reconstruct W_1(C_5) as a polygon.
  std::vector<oracle::Point> pts;
  for (const auto& c : dirs) pts.push_back(support_point({clock(5)}, c)[0]);
  CHECK(oracle::polygon_hausdorff(oracle::convex_hull(pts), eigen_polygon(clock(5))) <= 1e-3);
}

TEST_CASE("support functions are monotone under direct sums") {
  Rng rng = task_rng(4, 0);
  for (int t = 0; t < 5; ++t) {
    auto a = haar_tuple(rng, 2, 3);
    auto c = haar_tuple(rng, 2, 2);
    OperatorTuple b{direct_sum(a[0], c[0]), direct_sum(a[1], c[1])};
    for (const auto& dir : dual_directions(2, 200)) CHECK(support_level1(a, dir) <= support_level1(b, dir) + 1e-10);
  }
}

TEST_CASE("level-1 Hausdorff distance") {
  Rng rng = task_rng(5, 0);
  auto a = haar_tuple(rng, 2, 3);
  CHECK(w1_hausdorff(a, a, 64).value == 0.0);
  CHECK(w1_hausdorff({identity(1)}, {-identity(1)}, 16).value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(w1_hausdorff(a, a, 7), std::invalid_argument);

  // Gauge rotation of a d = 1 normal range is a planar rotation of its hull.
  for (double turns : {1.0 / 8, 0.05, 0.3}) {
    CMatrix c4 = clock(4), rot = unit_phase(turns) * clock(4);
    auto w = w1_hausdorff({c4}, {rot}, 360);
    CHECK(std::abs(w.value - oracle::polygon_hausdorff(eigen_polygon(c4), eigen_polygon(rot))) <= 1e-6);
    CHECK(w.meta.resolution > 0.0);
  }
  CMatrix p = diag({1.0, cplx(0, 1), -1.0});
  CMatrix q = diag({0.5, cplx(-0.2, 0.7), cplx(0.1, -0.9), -0.8});
  CHECK(std::abs(w1_hausdorff({p}, {q}, 720).value - oracle::polygon_hausdorff(eigen_polygon(p), eigen_polygon(q))) <=
        1e-6);
}

TEST_CASE("lambda_max does not increase under id (x) compression") {
  Rng rng = task_rng(6, 0);
  for (int t = 0; t < 40; ++t) {
    const long m = 3 + t % 3, n = 1 + t % 2, k = 2;
    auto a = haar_tuple(rng, 2, m);
    OperatorTuple dir{random_gaussian(rng, k, k), random_gaussian(rng, k, k)};
    CMatrix v = random_isometry(rng, m, n);
    auto x = compress_tuple(a, v);
    auto cert = evaluate_certificate(a, x, dir);
    CHECK(cert.lambda_target <= cert.lambda_source + 1e-9);
  }
}

TEST_CASE("membership verdicts are sound") {
  int members = 0, rejected = 0;
  for (int s = 0; s < 50; ++s) {
    Rng rng = task_rng(8, s);
    const int d = 1 + s % 3;
    const long m = 3 + s % 3;
    const long n = std::min<long>(m, 1 + (s / 3) % 3);
    auto a = haar_tuple(rng, d, m);
    auto x = compress_tuple(a, random_isometry(rng, m, n));

    auto r = ucp_membership(a, x);
    CHECK(r.status == Membership::Member);
    if (r.status == Membership::Member) {
      ++members;
      CHECK(r.residual <= 1e-7);
      CHECK(r.choi.is_ucp());
      auto back = r.choi.apply(a);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(operator_norm(CMatrix(back[i] - x[i])) <= 1e-7);
    }

    // UCP maps are contractive, so a target of norm 1.2 is outside W_n.
    auto y = x;
    y[0] *= 1.2 / operator_norm(y[0]);
    auto q = ucp_membership(a, y, kMembershipTol, kMembershipMaxIter, s);
    CHECK(q.status == Membership::NonMember);
    if (q.status == Membership::NonMember) {
      ++rejected;
      auto again = evaluate_certificate(a, y, q.certificate.direction);
      CHECK(again.lambda_target > again.lambda_source + 1e-8);
    }
  }
  CHECK(members == 50);
  CHECK(rejected == 50);

  // The tracial state is UCP.
  Rng rng = task_rng(9, 0);
  auto a = haar_tuple(rng, 2, 4);
  OperatorTuple tr{a[0].trace() / 4.0 * identity(1), a[1].trace() / 4.0 * identity(1)};
  CHECK(ucp_membership(a, tr).status == Membership::Member);
  CHECK_THROWS_AS(ucp_membership(a, {identity(2)}), std::invalid_argument);
}

TEST_CASE("relaxed dilation distance estimates") {
  Rng rng = task_rng(10, 0);
  auto a = haar_tuple(rng, 2, 3);
  CHECK(drd_estimate(a, a).value <= 1e-7);
  const cplx z1 = unit_phase(0.1), z2 = unit_phase(0.35);
  CHECK(drd_estimate({z1 * identity(1)}, {z2 * identity(1)}).value == doctest::Approx(std::abs(z1 - z2)).epsilon(1e-9));

  auto est = dmr_one_sided(a, a, 2, 6, 1);
  CHECK(est.lower == 0.0);
  CHECK(est.upper <= kMembershipTol);

  auto e1 = dmr_one_sided({identity(1)}, {-identity(1)}, 1, 8);
  CHECK(e1.lower == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(e1.upper == doctest::Approx(2.0).epsilon(1e-9));

  // A summand dilates into the sum.
  auto c = haar_tuple(rng, 2, 2);
  OperatorTuple b{direct_sum(a[0], c[0]), direct_sum(a[1], c[1])};
  CHECK(dmr_one_sided(a, b, 2, 6).upper <= kMembershipTol);

  CHECK_THROWS_AS(dmr_one_sided(a, b, 4, 4), CapExceeded);
}

TEST_CASE("d_rD and d_mr agree on normal d = 1 pairs") {
  struct Pair {
    CMatrix a, b;
  };
  std::vector<Pair> pairs{
      {identity(1), -identity(1)},
      {clock(4), clock(3)},
      {clock(5), unit_phase(0.1) * clock(5)},
      {diag({1.0, cplx(0, 1), -1.0}), diag({0.5, cplx(-0.2, 0.7), cplx(0.1, -0.9), -0.8})},
  };
  for (const auto& p : pairs) {
    const double truth = normal_oracle(p.a, p.b);
    auto drd = drd_estimate({p.a}, {p.b});
    auto dmr = dmr_one_sided({p.a}, {p.b}, 2, 24, 3);
    CHECK(drd.choi.is_ucp());
    CHECK(std::abs(drd.value - dmr.upper) <= 1e-3);
    CHECK(std::abs(drd.value - truth) <= 1e-3);
    CHECK(drd.value >= dmr.lower - 1e-6);
    CHECK(dmr.lower <= truth + 1e-9);
  }
}

TEST_CASE("estimates are deterministic") {
  Rng rng = task_rng(11, 0);
  auto a = haar_tuple(rng, 2, 3);
  auto b = haar_tuple(rng, 2, 2);
  auto e1 = dmr_one_sided(a, b, 2, 4, 77);
  auto e2 = dmr_one_sided(a, b, 2, 4, 77);
  CHECK(e1.upper == e2.upper);
  CHECK(e1.lower == e2.lower);
  CHECK(e1.lower <= drd_estimate(a, b).value + 1e-6);
}
