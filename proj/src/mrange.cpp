#include "dlab/mrange.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dlab/parallel.hpp"
#include "dlab/random.hpp"

namespace dlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_square_tuple(const OperatorTuple& t, const char* what) {
  if (t.empty()) throw std::invalid_argument(std::string(what) + ": empty tuple");
  for (const auto& m : t)
    if (m.rows() != m.cols() || m.rows() != t.front().rows())
      throw std::invalid_argument(std::string(what) + ": tuple entries must be square of a common size");
}

CMatrix hermitian_part(const CMatrix& a) { return (a + a.adjoint()) / 2.0; }

CMatrix psd_clip(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix partial_trace_input(const CMatrix& j, std::ptrdiff_t m, std::ptrdiff_t n) {
  CMatrix t = CMatrix::Zero(n, n);
  for (std::ptrdiff_t a = 0; a < m; ++a) t += j.block(a * n, a * n, n, n);
  return t;
}

// Makes a PSD Choi matrix exactly unital by the congruence I (x) T^{-1/2}.
CMatrix normalize_unital(const CMatrix& j, std::ptrdiff_t m, std::ptrdiff_t n) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(partial_trace_input(j, m, n)));
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 1e-300 ? 1.0 / std::sqrt(ev(i)) : 0.0;
  CMatrix s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  CMatrix out(j.rows(), j.cols());
  for (std::ptrdiff_t a = 0; a < m; ++a)
    for (std::ptrdiff_t b = 0; b < m; ++b) out.block(a * n, b * n, n, n) = s * j.block(a * n, b * n, n, n) * s;
  return hermitian_part(out);
}

ChoiMatrix repair(const CMatrix& j, std::ptrdiff_t m, std::ptrdiff_t n) {
  return ChoiMatrix{m, n, normalize_unital(psd_clip(hermitian_part(j)), m, n)};
}

double tuple_gap(const OperatorTuple& x, const OperatorTuple& y) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, operator_norm(CMatrix(x[i] - y[i])));
  return worst;
}

// ---------------------------------------------------------------------------
// Real coordinates of Hermitian matrices, orthonormal for the Frobenius product:
// diagonal entries, then sqrt(2) Re and sqrt(2) Im of each strict upper entry.

struct HermCoords {
  std::ptrdiff_t N;
  std::ptrdiff_t size() const { return N * N; }

  Eigen::VectorXd to_vec(const CMatrix& h) const {
    Eigen::VectorXd v(N * N);
    std::ptrdiff_t k = 0;
    for (std::ptrdiff_t r = 0; r < N; ++r) v(k++) = h(r, r).real();
    for (std::ptrdiff_t r = 0; r < N; ++r)
      for (std::ptrdiff_t c = r + 1; c < N; ++c) {
        v(k++) = std::sqrt(2.0) * h(r, c).real();
        v(k++) = std::sqrt(2.0) * h(r, c).imag();
      }
    return v;
  }

  CMatrix to_mat(const Eigen::VectorXd& v) const {
    CMatrix h(N, N);
    std::ptrdiff_t k = 0;
    for (std::ptrdiff_t r = 0; r < N; ++r) h(r, r) = v(k++);
    for (std::ptrdiff_t r = 0; r < N; ++r)
      for (std::ptrdiff_t c = r + 1; c < N; ++c) {
        cplx z(v(k), v(k + 1));
        z /= std::sqrt(2.0);
        k += 2;
        h(r, c) = z;
        h(c, r) = std::conj(z);
      }
    return h;
  }
};

// Affine set {J Hermitian : phi_J(I) = I, phi_J(A_i) = X_i} and its Frobenius projection.
class AffineChoiSet {
 public:
  AffineChoiSet(const OperatorTuple& a, const OperatorTuple& x) : m_(a.front().rows()), n_(x.front().rows()) {
    coords_.N = m_ * n_;
    OperatorTuple inputs{identity(m_)};
    OperatorTuple targets{identity(n_)};
    inputs.insert(inputs.end(), a.begin(), a.end());
    targets.insert(targets.end(), x.begin(), x.end());
    const std::ptrdiff_t K = static_cast<std::ptrdiff_t>(inputs.size()) * n_ * n_ * 2;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(K, coords_.size());
    b_.resize(K);
    auto row = [&](std::size_t i, std::ptrdiff_t s, std::ptrdiff_t t, int part) {
      return ((static_cast<std::ptrdiff_t>(i) * n_ + s) * n_ + t) * 2 + part;
    };
    // A unit J entry at ((a, s), (b, t)) with coefficient z adds Y_ab z to phi(Y)(s, t).
    auto add_entry = [&](std::ptrdiff_t col, std::ptrdiff_t r, std::ptrdiff_t c, cplx z) {
      const std::ptrdiff_t a = r / n_, s = r % n_, b = c / n_, t = c % n_;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const cplx val = inputs[i](a, b) * z;
        M(row(i, s, t, 0), col) += val.real();
        M(row(i, s, t, 1), col) += val.imag();
      }
    };
    const std::ptrdiff_t N = coords_.N;
    std::ptrdiff_t col = 0;
    for (std::ptrdiff_t r = 0; r < N; ++r) add_entry(col++, r, r, 1.0);
    const double h = 1.0 / std::sqrt(2.0);
    for (std::ptrdiff_t r = 0; r < N; ++r)
      for (std::ptrdiff_t c = r + 1; c < N; ++c) {
        add_entry(col, r, c, h);
        add_entry(col, c, r, h);
        ++col;
        add_entry(col, r, c, cplx(0, h));
        add_entry(col, c, r, cplx(0, -h));
        ++col;
      }
    for (std::size_t i = 0; i < targets.size(); ++i)
      for (std::ptrdiff_t s = 0; s < n_; ++s)
        for (std::ptrdiff_t t = 0; t < n_; ++t) {
          b_(row(i, s, t, 0)) = targets[i](s, t).real();
          b_(row(i, s, t, 1)) = targets[i](s, t).imag();
        }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
    pinv_ = cod.pseudoInverse();
    M_ = std::move(M);
  }

  const HermCoords& coords() const { return coords_; }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const { return v - pinv_ * (M_ * v - b_); }

 private:
  std::ptrdiff_t m_, n_;
  HermCoords coords_;
  Eigen::MatrixXd M_, pinv_;
  Eigen::VectorXd b_;
};

// ---------------------------------------------------------------------------
// Certificates

CMatrix direction_sum(const OperatorTuple& dir, const OperatorTuple& t) {
  CMatrix h = CMatrix::Zero(dir.front().rows() * t.front().rows(), dir.front().rows() * t.front().rows());
  for (std::size_t i = 0; i < t.size(); ++i) h += kron(dir[i], t[i]);
  return hermitian_part(2.0 * h);
}

// Top eigenvector of H = sum B_i (x) T_i + h.c., returned with the gradient of
// lambda_max with respect to each B_i.
double top_with_gradient(const OperatorTuple& dir, const OperatorTuple& t, OperatorTuple& grad) {
  const std::ptrdiff_t k = dir.front().rows(), n = t.front().rows();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(direction_sum(dir, t));
  const Eigen::Index top = es.eigenvalues().size() - 1;
  CVector w = es.eigenvectors().col(top);
  CMatrix W(k, n);
  for (std::ptrdiff_t r = 0; r < k; ++r)
    for (std::ptrdiff_t s = 0; s < n; ++s) W(r, s) = w(r * n + s);
  grad.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) grad[i] = 2.0 * (W.conjugate() * t[i] * W.transpose()).conjugate();
  return es.eigenvalues()(top);
}

double frobenius(const OperatorTuple& t) {
  double s = 0.0;
  for (const auto& m : t) s += m.squaredNorm();
  return std::sqrt(s);
}

void normalize(OperatorTuple& t) {
  const double f = frobenius(t);
  if (f > 0)
    for (auto& m : t) m /= f;
}

// ---------------------------------------------------------------------------
// Smoothed distance objective

struct Smoothed {
  double value;
  CMatrix grad;
};

// mu log sum exp over the spectra of the Hermitian dilations of R_i = Psi(B_i) - X_i.
Smoothed smoothed_objective(const CMatrix& j, const OperatorTuple& x, const OperatorTuple& b, double mu,
                            std::ptrdiff_t m, std::ptrdiff_t n) {
  const ChoiMatrix c{m, n, j};
  std::vector<Eigen::VectorXd> evs;
  std::vector<CMatrix> vecs;
  double top = -INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CMatrix r = c.apply(b[i]) - x[i];
    CMatrix h = CMatrix::Zero(2 * n, 2 * n);
    h.topRightCorner(n, n) = r;
    h.bottomLeftCorner(n, n) = r.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    evs.push_back(es.eigenvalues());
    vecs.push_back(es.eigenvectors());
    top = std::max(top, es.eigenvalues().maxCoeff());
  }
  double z = 0.0;
  for (const auto& ev : evs) z += (ev.array() - top).unaryExpr([&](double v) { return std::exp(v / mu); }).sum();
  Smoothed out{top + mu * std::log(z), CMatrix::Zero(m * n, m * n)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    CMatrix gr = CMatrix::Zero(n, n);
    for (Eigen::Index q = 0; q < evs[i].size(); ++q) {
      const double p = std::exp((evs[i](q) - top) / mu) / z;
      if (p < 1e-300) continue;
      gr += 2.0 * p * vecs[i].col(q).head(n) * vecs[i].col(q).tail(n).adjoint();
    }
    for (std::ptrdiff_t a = 0; a < m; ++a)
      for (std::ptrdiff_t bb = 0; bb < m; ++bb) out.grad.block(a * n, bb * n, n, n) += std::conj(b[i](a, bb)) * gr;
  }
  out.grad = hermitian_part(out.grad);
  return out;
}

double exact_objective(const ChoiMatrix& c, const OperatorTuple& x, const OperatorTuple& b) {
  return tuple_gap(c.apply(b), x);
}

}  // namespace

// ---------------------------------------------------------------------------
// ChoiMatrix

CMatrix ChoiMatrix::apply(const CMatrix& y) const {
  if (y.rows() != m || y.cols() != m) throw std::invalid_argument("ChoiMatrix::apply: input dimension mismatch");
  CMatrix out = CMatrix::Zero(n, n);
  for (std::ptrdiff_t a = 0; a < m; ++a)
    for (std::ptrdiff_t b = 0; b < m; ++b)
      if (y(a, b) != cplx(0)) out += y(a, b) * J.block(a * n, b * n, n, n);
  return out;
}

OperatorTuple ChoiMatrix::apply(const OperatorTuple& y) const {
  OperatorTuple out;
  for (const auto& t : y) out.push_back(apply(t));
  return out;
}

double ChoiMatrix::unitality_defect() const {
  return operator_norm(CMatrix(partial_trace_input(J, m, n) - identity(n)));
}

double ChoiMatrix::min_eigenvalue() const { return lambda_min(hermitian_part(J)); }

bool ChoiMatrix::is_ucp(double tol) const {
  return (J - J.adjoint()).cwiseAbs().maxCoeff() <= tol && min_eigenvalue() >= -tol && unitality_defect() <= tol;
}

ChoiMatrix ChoiMatrix::compression(const CMatrix& v) {
  const std::ptrdiff_t m = v.rows(), n = v.cols();
  CVector x(m * n);
  for (std::ptrdiff_t a = 0; a < m; ++a) x.segment(a * n, n) = v.row(a).adjoint();
  return ChoiMatrix{m, n, x * x.adjoint()};
}

ChoiMatrix ChoiMatrix::tracial(std::ptrdiff_t m, std::ptrdiff_t n) {
  return ChoiMatrix{m, n, identity(m * n) / static_cast<double>(m)};
}

ChoiMatrix project_ucp(const CMatrix& j, std::ptrdiff_t m, std::ptrdiff_t n, int max_iter) {
  if (j.rows() != m * n || j.cols() != m * n) throw std::invalid_argument("project_ucp: dimension mismatch");
  auto affine = [&](const CMatrix& y) {
    CMatrix out = y;
    const CMatrix excess = (partial_trace_input(y, m, n) - identity(n)) / static_cast<double>(m);
    for (std::ptrdiff_t a = 0; a < m; ++a) out.block(a * n, a * n, n, n) -= excess;
    return out;
  };
  CMatrix x = affine(hermitian_part(j));
  CMatrix p = CMatrix::Zero(x.rows(), x.cols());
  for (int it = 0; it < max_iter; ++it) {
    CMatrix y = psd_clip(x + p);
    p += x - y;
    CMatrix xn = affine(y);
    const double moved = (xn - y).norm();
    x = std::move(xn);
    if (moved <= 1e-13) break;
  }
  return repair(x, m, n);
}

// ---------------------------------------------------------------------------
// Level one

CMatrix direction_operator(const OperatorTuple& a, const std::vector<cplx>& c) {
  require_square_tuple(a, "direction_operator");
  if (c.size() != a.size()) throw std::invalid_argument("direction_operator: direction length differs from d");
  CMatrix h = CMatrix::Zero(a.front().rows(), a.front().cols());
  for (std::size_t i = 0; i < a.size(); ++i) h += std::conj(c[i]) * a[i];
  return hermitian_part(h);
}

namespace {

void require_nonzero(const std::vector<cplx>& c) {
  double s = 0.0;
  for (auto z : c) s += std::abs(z);
  if (!(s > 0.0)) throw std::invalid_argument("support_level1: zero direction");
}

}  // namespace

double support_level1(const OperatorTuple& a, const std::vector<cplx>& c) {
  require_nonzero(c);
  return lambda_max(direction_operator(a, c));
}

std::vector<cplx> support_point(const OperatorTuple& a, const std::vector<cplx>& c) {
  require_nonzero(c);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(direction_operator(a, c));
  CVector w = es.eigenvectors().col(es.eigenvalues().size() - 1);
  std::vector<cplx> x;
  for (const auto& ai : a) x.push_back(w.dot(ai * w));
  return x;
}

std::vector<std::vector<cplx>> dual_directions(int d, long K) {
  if (d < 1 || K < 1) throw std::invalid_argument("dual_directions: need d >= 1 and K >= 1");
  std::vector<std::vector<cplx>> out;
  out.reserve(K);
  if (d == 1) {
    for (long k = 0; k < K; ++k) out.push_back({unit_phase(static_cast<double>(k) / static_cast<double>(K))});
    return out;
  }
  // Additive recurrence with the generalized golden ratio in dimension 2d - 1.
  const int dim = 2 * d - 1;
  double phi = 2.0;
  for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
  std::vector<double> alpha(dim);
  for (int i = 0; i < dim; ++i) alpha[i] = std::fmod(std::pow(1.0 / phi, i + 1), 1.0);
  std::vector<double> u(dim), cuts(d + 1);
  for (long k = 0; k < K; ++k) {
    for (int i = 0; i < dim; ++i) u[i] = std::fmod(0.5 + alpha[i] * static_cast<double>(k + 1), 1.0);
    cuts[0] = 0.0;
    cuts[d] = 1.0;
    for (int i = 1; i < d; ++i) cuts[i] = u[d + i - 1];
    std::sort(cuts.begin(), cuts.end());
    std::vector<cplx> c(d);
    for (int i = 0; i < d; ++i) c[i] = (cuts[i + 1] - cuts[i]) * unit_phase(u[i]);
    out.push_back(std::move(c));
  }
  return out;
}

W1Hausdorff w1_hausdorff(const OperatorTuple& a, const OperatorTuple& b, long K) {
  require_square_tuple(a, "w1_hausdorff");
  require_square_tuple(b, "w1_hausdorff");
  if (a.size() != b.size()) throw std::invalid_argument("w1_hausdorff: tuples differ in length");
  if (K < 8) throw std::invalid_argument("w1_hausdorff: need at least 8 directions");
  const int d = static_cast<int>(a.size());
  const auto dirs = dual_directions(d, K);
  std::vector<double> gap(dirs.size());
  parallel_chunks(dirs.size(), [&](int, std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k)
      gap[k] = std::abs(support_level1(a, dirs[k]) - support_level1(b, dirs[k]));
  });
  W1Hausdorff out;
  const std::size_t best = std::max_element(gap.begin(), gap.end()) - gap.begin();
  out.value = gap[best];
  out.direction = dirs[best];
  out.meta.directions = K;
  if (d == 1) {
    double ra = operator_norm(a[0]), rb = operator_norm(b[0]);
    out.meta.scheme = "equally spaced unit phases, golden-section refinement of the best samples";
    out.meta.resolution = (ra + rb) * kPi / static_cast<double>(K);
    auto f = [&](double t) {
      std::vector<cplx> c{unit_phase(t)};
      return std::abs(support_level1(a, c) - support_level1(b, c));
    };
    std::vector<std::size_t> order(gap.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + 3, order.end(),
                      [&](std::size_t p, std::size_t q) { return gap[p] > gap[q]; });
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int r = 0; r < 3; ++r) {
      const double t0 = static_cast<double>(order[r]) / static_cast<double>(K);
      double lo = t0 - 1.0 / K, hi = t0 + 1.0 / K;
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = f(x1), f2 = f(x2);
      for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + g * (hi - lo);
          f2 = f(x2);
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - g * (hi - lo);
          f1 = f(x1);
        }
      }
      const double t = f1 > f2 ? x1 : x2;
      if (std::max(f1, f2) > out.value) {
        out.value = std::max(f1, f2);
        out.direction = {unit_phase(t)};
      }
    }
  } else {
    out.meta.scheme = "Kronecker sequence on the dual l1 sphere";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Certificates

SeparationCertificate evaluate_certificate(const OperatorTuple& a, const OperatorTuple& x,
                                           const OperatorTuple& direction) {
  require_square_tuple(direction, "evaluate_certificate");
  if (direction.size() != a.size() || x.size() != a.size())
    throw std::invalid_argument("evaluate_certificate: tuple lengths differ");
  SeparationCertificate c;
  c.direction = direction;
  c.lambda_target = lambda_max(direction_sum(direction, x));
  c.lambda_source = lambda_max(direction_sum(direction, a));
  c.gap = c.lambda_target - c.lambda_source;
  double norm_sum = 0.0;
  for (const auto& bi : direction) norm_sum += operator_norm(bi);
  c.distance_bound = norm_sum > 0 && c.gap > kCertificateGap ? c.gap / (2.0 * norm_sum) : 0.0;
  return c;
}

SeparationCertificate search_certificate(const OperatorTuple& a, const OperatorTuple& x, std::uint64_t seed,
                                         int restarts, int steps) {
  require_square_tuple(a, "search_certificate");
  require_square_tuple(x, "search_certificate");
  if (a.size() != x.size()) throw std::invalid_argument("search_certificate: tuple lengths differ");
  const std::size_t d = a.size();
  const std::ptrdiff_t n = x.front().rows();
  const std::ptrdiff_t k = std::max<std::ptrdiff_t>(2, n);

  std::vector<OperatorTuple> starts;
  // Norm probes: E_12 on one coordinate compares ||X_i|| with ||A_i||.
  for (std::size_t i = 0; i < d; ++i) {
    OperatorTuple t(d, CMatrix::Zero(k, k));
    t[i](0, 1) = 1.0;
    starts.push_back(t);
  }
  {
    OperatorTuple t(d, CMatrix::Zero(k, k));
    for (std::size_t i = 0; i < d; ++i) t[i].topLeftCorner(n, n) = x[i].conjugate();
    starts.push_back(t);
  }
  Rng rng = task_rng(seed, 0);
  for (int r = 0; r < restarts; ++r) {
    OperatorTuple t;
    for (std::size_t i = 0; i < d; ++i) t.push_back(random_gaussian(rng, k, k));
    starts.push_back(t);
  }

  SeparationCertificate best;
  best.gap = -INFINITY;
  for (auto& b : starts) {
    normalize(b);
    if (frobenius(b) == 0.0) continue;
    OperatorTuple gx, ga;
    double gap = top_with_gradient(b, x, gx) - top_with_gradient(b, a, ga);
    double step = 0.5;
    for (int s = 0; s < steps && step > 1e-10; ++s) {
      OperatorTuple trial = b;
      for (std::size_t i = 0; i < d; ++i) trial[i] += step * (gx[i] - ga[i]);
      normalize(trial);
      OperatorTuple tx, ta;
      const double g = top_with_gradient(trial, x, tx) - top_with_gradient(trial, a, ta);
      if (g > gap) {
        b = std::move(trial);
        gap = g;
        gx = std::move(tx);
        ga = std::move(ta);
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    auto cert = evaluate_certificate(a, x, b);
    if (cert.distance_bound > best.distance_bound || (best.distance_bound == 0.0 && cert.gap > best.gap))
      best = std::move(cert);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Membership

const char* to_string(Membership m) {
  switch (m) {
    case Membership::Member:
      return "member";
    case Membership::NonMember:
      return "non-member";
    case Membership::Undecided:
      return "undecided";
  }
  return "undecided";
}

namespace {

// Gauss-Newton on a factor J = K K* (K of size mn x rank) for the constraints
// phi_J(I) = I, phi_J(A_i) = X_i, started from the top eigenpairs of a PSD
// iterate. The factor keeps J positive. Matching the rank of the solution
// matters: extra near-zero columns make the Jacobian ill-conditioned.
CMatrix polish_factor(const OperatorTuple& a, const OperatorTuple& x, const CMatrix& y, std::ptrdiff_t rank,
                      int iters) {
  const std::ptrdiff_t m = a.front().rows(), n = x.front().rows(), N = m * n;
  OperatorTuple inputs{identity(m)}, targets{identity(n)};
  inputs.insert(inputs.end(), a.begin(), a.end());
  targets.insert(targets.end(), x.begin(), x.end());
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(inputs.size()) * n * n * 2;

  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(y));
  const std::ptrdiff_t r = rank;
  CMatrix K = es.eigenvectors().rightCols(r) * es.eigenvalues().tail(r).cwiseMax(0.0).cwiseSqrt().asDiagonal();
  auto reshape = [&](const CVector& u) {
    CMatrix U(m, n);
    for (std::ptrdiff_t a0 = 0; a0 < m; ++a0) U.row(a0) = u.segment(a0 * n, n).transpose();
    return U;
  };
  auto put = [&](Eigen::Ref<Eigen::VectorXd> col, std::size_t i, const CMatrix& val) {
    for (std::ptrdiff_t s = 0; s < n; ++s)
      for (std::ptrdiff_t t = 0; t < n; ++t) {
        const std::ptrdiff_t r = ((static_cast<std::ptrdiff_t>(i) * n + s) * n + t) * 2;
        col(r) = val(s, t).real();
        col(r + 1) = val(s, t).imag();
      }
  };
  auto residual = [&](const CMatrix& k) {
    const ChoiMatrix c{m, n, k * k.adjoint()};
    Eigen::VectorXd f(rows);
    for (std::size_t i = 0; i < inputs.size(); ++i) put(f, i, CMatrix(c.apply(inputs[i]) - targets[i]));
    return f;
  };
  Eigen::VectorXd F = residual(K);
  Eigen::MatrixXd Jac(rows, 2 * N * r);
  for (int it = 0; it < iters && F.cwiseAbs().maxCoeff() > 1e-15; ++it) {
    // d(K K*) for a unit change of K(p, q) is e_p k_q* + k_q e_p* (real part)
    // and i (e_p k_q* - k_q e_p*) (imaginary part); phi of u v* is U^T Y conj(V).
    for (std::ptrdiff_t q = 0; q < r; ++q) {
      const CMatrix Kq = reshape(K.col(q));
      for (std::ptrdiff_t p = 0; p < N; ++p) {
        const std::ptrdiff_t a0 = p / n, s0 = p % n;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          CMatrix first = CMatrix::Zero(n, n), second = CMatrix::Zero(n, n);
          first.row(s0) = inputs[i].row(a0) * Kq.conjugate();
          second.col(s0) = Kq.transpose() * inputs[i].col(a0);
          put(Jac.col(2 * (q * N + p)), i, CMatrix(first + second));
          put(Jac.col(2 * (q * N + p) + 1), i, CMatrix(cplx(0, 1) * (first - second)));
        }
      }
    }
    // Levenberg-Marquardt with damping ||F||: locally quadratic under an error
    // bound even when the solution set is degenerate.
    Eigen::MatrixXd G = Jac * Jac.transpose();
    G.diagonal().array() += F.norm();
    const Eigen::VectorXd step = -Jac.transpose() * G.ldlt().solve(F);
    CMatrix dK(N, r);
    for (std::ptrdiff_t q = 0; q < r; ++q)
      for (std::ptrdiff_t p = 0; p < N; ++p) dK(p, q) = cplx(step(2 * (q * N + p)), step(2 * (q * N + p) + 1));
    // Backtrack on the residual norm.
    double t = 1.0;
    bool moved = false;
    for (int h = 0; h < 30; ++h, t *= 0.5) {
      CMatrix trial = K + t * dK;
      Eigen::VectorXd ft = residual(trial);
      if (ft.norm() < F.norm()) {
        K = std::move(trial);
        F = std::move(ft);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return K * K.adjoint();
}

}  // namespace

MembershipResult ucp_membership(const OperatorTuple& a, const OperatorTuple& x, double tol, int max_iter,
                                std::uint64_t seed) {
  require_square_tuple(a, "ucp_membership");
  require_square_tuple(x, "ucp_membership");
  if (a.size() != x.size()) throw std::invalid_argument("ucp_membership: dimension mismatch (tuple lengths)");
  const std::ptrdiff_t m = a.front().rows(), n = x.front().rows();
  require_dense_cap(m * n, "ucp_membership");

  MembershipResult res;
  res.residual = INFINITY;
  // A cheap separation attempt first: a certificate settles the question at once.
  res.certificate = search_certificate(a, x, seed, 2, 60);
  if (res.certificate.gap > kCertificateGap) {
    res.has_certificate = true;
    res.status = Membership::NonMember;
    return res;
  }
  AffineChoiSet aff(a, x);
  const HermCoords& hc = aff.coords();
  auto accept = [&](const ChoiMatrix& c) {
    const double r = tuple_gap(c.apply(a), x);
    if (r < res.residual) {
      res.residual = r;
      res.choi = c;
    }
    return r <= tol;
  };
  Eigen::VectorXd v = aff.project(hc.to_vec(ChoiMatrix::tracial(m, n).J));
  Eigen::VectorXd p = Eigen::VectorXd::Zero(v.size());
  for (int it = 1; it <= max_iter; ++it) {
    CMatrix y = psd_clip(hc.to_mat(v + p));
    Eigen::VectorXd yv = hc.to_vec(y);
    p += v - yv;
    v = aff.project(yv);
    res.iterations = it;
    bool done = (it % 10 == 0 || it == max_iter) && accept(repair(y, m, n));
    // Alternating projections slow down when the feasible set is thin; a
    // factor-space Newton polish from the current iterate finishes the job.
    if (!done && (it % 250 == 0 || it == max_iter)) {
      // Full-rank polish first; its eigenvalues then suggest the rank of the
      // solution, and a polish at that rank converges fast when it is regular.
      const CMatrix full = polish_factor(a, x, repair(y, m, n).J, m * n, 60);
      done = accept(repair(full, m, n));
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMatrix>(full, Eigen::EigenvaluesOnly).eigenvalues();
      std::vector<std::ptrdiff_t> ranks;
      for (double rel : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const std::ptrdiff_t r = (ev.array() > rel * ev.maxCoeff()).count();
        if (r > 0 && r < m * n && std::find(ranks.begin(), ranks.end(), r) == ranks.end()) ranks.push_back(r);
      }
      // Low ranks too: a local floor at a higher rank is common for compressions.
      for (std::ptrdiff_t r = 1; r <= std::min<std::ptrdiff_t>(3, m * n - 1); ++r)
        if (std::find(ranks.begin(), ranks.end(), r) == ranks.end()) ranks.push_back(r);
      for (auto r : ranks)
        if (!done) done = accept(repair(polish_factor(a, x, full, r, 60), m, n));
    }
    if (done) {
      res.status = Membership::Member;
      return res;
    }
  }
  res.certificate = search_certificate(a, x, seed);
  res.has_certificate = res.certificate.gap > kCertificateGap;
  res.status = res.has_certificate ? Membership::NonMember : Membership::Undecided;
  return res;
}

// ---------------------------------------------------------------------------
// Distances

UcpDistance ucp_distance(const OperatorTuple& x, const OperatorTuple& b) {
  require_square_tuple(x, "ucp_distance");
  require_square_tuple(b, "ucp_distance");
  if (x.size() != b.size()) throw std::invalid_argument("ucp_distance: tuple lengths differ");
  const std::ptrdiff_t m = b.front().rows(), n = x.front().rows();
  require_dense_cap(m * n, "ucp_distance");

  UcpDistance best{INFINITY, {}, 0};
  auto consider = [&](const ChoiMatrix& c) {
    const double v = exact_objective(c, x, b);
    if (v < best.value) {
      best.value = v;
      best.choi = c;
    }
  };
  consider(ChoiMatrix::tracial(m, n));
  if (m == n) consider(ChoiMatrix::compression(identity(m)));

  CMatrix cur = best.choi.J;
  double L = 1.0;
  for (double mu : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6}) {
    // Accelerated projected gradient with backtracking on the step 1/L.
    CMatrix prev = cur, y = cur;
    double t = 1.0;
    for (int it = 0; it < 150; ++it) {
      Smoothed s = smoothed_objective(y, x, b, mu, m, n);
      CMatrix next;
      for (int bt = 0; bt < 40; ++bt) {
        next = project_ucp(y - s.grad / L, m, n).J;
        const CMatrix diff = next - y;
        const double model = s.value + (s.grad.adjoint() * diff).trace().real() + 0.5 * L * diff.squaredNorm();
        if (smoothed_objective(next, x, b, mu, m, n).value <= model + 1e-15) break;
        L *= 2.0;
      }
      ++best.iterations;
      consider(ChoiMatrix{m, n, next});
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / tn) * (next - prev);
      const double moved = (next - prev).norm();
      prev = next;
      t = tn;
      L *= 0.95;
      if (moved < 1e-12) break;
    }
    cur = best.choi.J;
  }
  return best;
}

UcpDistance drd_estimate(const OperatorTuple& a, const OperatorTuple& b) { return ucp_distance(a, b); }

OperatorTuple eigenspace_compression(const OperatorTuple& a, const std::vector<cplx>& c, std::ptrdiff_t n) {
  const std::ptrdiff_t m = a.front().rows();
  if (n < 1 || n > m) throw std::invalid_argument("eigenspace_compression: level outside [1, dim]");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(direction_operator(a, c));
  CMatrix v = es.eigenvectors().rightCols(n);
  OperatorTuple out;
  for (const auto& ai : a) out.push_back(v.adjoint() * ai * v);
  return out;
}

OneSidedEstimate dmr_one_sided(const OperatorTuple& a, const OperatorTuple& b, int n, long samples,
                               std::uint64_t seed) {
  require_square_tuple(a, "dmr_one_sided");
  require_square_tuple(b, "dmr_one_sided");
  if (a.size() != b.size()) throw std::invalid_argument("dmr_one_sided: tuples differ in length");
  if (n > 3) throw CapExceeded("dmr_one_sided: level cap is 3");
  if (n < 1 || samples < 1) throw std::invalid_argument("dmr_one_sided: need n >= 1 and samples >= 1");
  const int d = static_cast<int>(a.size());
  const int top = static_cast<int>(std::min<std::ptrdiff_t>(n, a.front().rows()));

  // Level 1 uses the deterministic dual directions; higher levels Gaussian ones.
  struct Task {
    int level;
    std::vector<cplx> c;
  };
  std::vector<Task> tasks;
  for (const auto& c : dual_directions(d, samples)) tasks.push_back({1, c});
  for (int k = 2; k <= top; ++k) {
    Rng rng = task_rng(seed, static_cast<std::uint64_t>(k));
    std::normal_distribution<double> g;
    for (long s = 0; s < samples; ++s) {
      std::vector<cplx> c(d);
      for (auto& z : c) z = cplx(g(rng), g(rng));
      tasks.push_back({k, c});
    }
  }
  std::vector<double> up(tasks.size()), lo(tasks.size());
  parallel_chunks(tasks.size(), [&](int, std::size_t b0, std::size_t b1) {
    for (std::size_t t = b0; t < b1; ++t) {
      OperatorTuple x = eigenspace_compression(a, tasks[t].c, tasks[t].level);
      // Feasibility first: a member contributes only its residual.
      const auto mem = ucp_membership(b, x, kMembershipTol, kMembershipMaxIter, splitmix64(seed + t));
      up[t] = mem.status == Membership::Member ? mem.residual : ucp_distance(x, b).value;
      lo[t] = search_certificate(b, x, splitmix64(seed ^ t), 4, 100).distance_bound;
    }
  });
  OneSidedEstimate out;
  out.level = top;
  out.samples = samples;
  out.upper = *std::max_element(up.begin(), up.end());
  out.lower = *std::max_element(lo.begin(), lo.end());
  out.meta.scheme = "level 1: dual directions; levels 2..n: Gaussian directions; top eigenspace compression";
  out.meta.directions = static_cast<long>(tasks.size());
  out.meta.seed = seed;
  return out;
}

}  // namespace dlab
