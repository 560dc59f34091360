#include "dlab/tuples.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dlab {

double tuple_distance(const OperatorTuple& a, const OperatorTuple& b) {
  if (a.size() != b.size()) throw std::invalid_argument("tuple_distance: tuple lengths differ");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols())
      throw std::invalid_argument("tuple_distance: shape mismatch at generator " + std::to_string(i + 1));
    best = std::max(best, operator_norm(CMatrix(a[i] - b[i])));
  }
  return best;
}

UnitaryTuple::UnitaryTuple(OperatorTuple matrices, double unitarity_tol)
    : matrices_(std::move(matrices)), tol_(unitarity_tol) {
  if (matrices_.empty()) throw std::invalid_argument("UnitaryTuple: empty tuple");
  const auto n = matrices_.front().rows();
  for (std::size_t i = 0; i < matrices_.size(); ++i) {
    auto& m = matrices_[i];
    const std::string who = "UnitaryTuple: generator " + std::to_string(i + 1);
    if (m.rows() != n || m.cols() != n) throw std::invalid_argument(who + " has inconsistent shape");
    if (!all_finite(m)) throw std::invalid_argument(who + " has non-finite entries");
    double drift = unitarity_defect(m);
    if (drift <= tol_) continue;
    if (drift <= kRepairTol) {
      m = polar_unitary(m);
      repaired_ = true;
      continue;
    }
    throw std::invalid_argument(who + " is not unitary (drift " + std::to_string(drift) + ")");
  }
}

namespace {

void require_theta(std::size_t d, const PhaseMatrix& theta) {
  if (static_cast<int>(d) != theta.d())
    throw std::invalid_argument("commutation_defect: tuple has " + std::to_string(d) +
                                " generators but phase matrix is " + std::to_string(theta.d()) + "x" +
                                std::to_string(theta.d()));
}

}  // namespace

Eigen::MatrixXd commutation_defect(const OperatorTuple& u, const PhaseMatrix& theta) {
  require_theta(u.size(), theta);
  const int d = theta.d();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) {
      CMatrix diff = u[l] * u[k] - theta.q(k, l) * (u[k] * u[l]);
      out(k, l) = out(l, k) = operator_norm(diff);
    }
  return out;
}

Eigen::MatrixXd commutation_defect(const UnitaryTuple& u, const PhaseMatrix& theta) {
  return commutation_defect(u.matrices(), theta);
}

Eigen::MatrixXd commutation_defect(const std::vector<WeightedShiftOperator>& u, const PhaseMatrix& theta) {
  require_theta(u.size(), theta);
  const int d = theta.d();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) {
      auto lk = ws_mul(u[l], u[k]);
      auto kl = ws_scale(ws_mul(u[k], u[l]), theta.q(k, l));
      out(k, l) = out(l, k) = ws_norm(ws_sub(lk, kl));
    }
  return out;
}

double max_defect(const Eigen::MatrixXd& defects) { return defects.size() == 0 ? 0.0 : defects.maxCoeff(); }

CMatrix clock_matrix(long n) {
  CMatrix c = CMatrix::Zero(n, n);
  for (long t = 0; t < n; ++t) c(t, t) = unit_phase(static_cast<double>(t) / static_cast<double>(n));
  return c;
}

CMatrix shift_matrix(long n) {
  CMatrix s = CMatrix::Zero(n, n);
  for (long t = 0; t < n; ++t) s((t + 1) % n, t) = 1.0;
  return s;
}

UnitaryTuple weyl_tuple(const PhaseMatrix& theta) {
  const int d = theta.d();
  OperatorTuple gens(d, CMatrix::Identity(1, 1));
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) {
      const PhaseEntry& e = theta.entry(k, l);
      if (e.kind != PhaseKind::Rational)
        throw std::invalid_argument("weyl_tuple: entry (" + std::to_string(k + 1) + "," + std::to_string(l + 1) +
                                    ") is not rational");
      const long n = e.offset.denominator();
      if (n == 1) continue;
      long p = static_cast<long>(ring_mod(e.offset.numerator(), n));
      require_dense_cap(gens.front().rows() * n, "weyl_tuple");
      // U_l U_k = w^p U_k U_l with U_k = C^{-p}, U_l = S.
      CMatrix factor_k = unitary_power(clock_matrix(n), -p);
      CMatrix factor_l = shift_matrix(n);
      for (int i = 0; i < d; ++i) {
        const CMatrix& f = i == k ? factor_k : i == l ? factor_l : identity(n);
        gens[i] = kron(gens[i], f);
      }
    }
  return UnitaryTuple(std::move(gens));
}

OperatorTuple gauge_rotate(const OperatorTuple& u, const std::vector<std::complex<double>>& lambda) {
  if (lambda.size() != u.size())
    throw std::invalid_argument("gauge_rotate: lambda has " + std::to_string(lambda.size()) + " entries for " +
                                std::to_string(u.size()) + " generators");
  OperatorTuple out;
  out.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (std::abs(std::abs(lambda[i]) - 1.0) > 1e-12)
      throw std::invalid_argument("gauge_rotate: lambda_" + std::to_string(i + 1) + " is not unimodular");
    out.push_back(lambda[i] * u[i]);
  }
  return out;
}

UnitaryTuple gauge_rotate(const UnitaryTuple& u, const std::vector<std::complex<double>>& lambda) {
  return UnitaryTuple(gauge_rotate(u.matrices(), lambda), u.unitarity_tol());
}

std::vector<CornerBlocks> corner_extract(const OperatorTuple& w, const CMatrix& iota) {
  const auto K = iota.rows(), H = iota.cols();
  if (H > K) throw std::invalid_argument("corner_extract: isometry maps into a smaller space");
  double iso = operator_norm(CMatrix(iota.adjoint() * iota - identity(H)));
  if (iso > 1e-12)
    throw std::invalid_argument("corner_extract: iota is not an isometry (defect " + std::to_string(iso) + ")");

  // Full unitary [iota, iota_perp] from a Householder QR of iota.
  Eigen::HouseholderQR<CMatrix> qr(iota);
  CMatrix full = qr.householderQ();
  CMatrix perp = full.rightCols(K - H);

  std::vector<CornerBlocks> out;
  for (const auto& wi : w) {
    if (wi.rows() != K || wi.cols() != K) throw std::invalid_argument("corner_extract: generator shape mismatch");
    CornerBlocks b;
    b.principal = iota.adjoint() * wi * iota;
    b.upper = iota.adjoint() * wi * perp;
    b.lower = perp.adjoint() * wi * iota;
    b.complement = perp.adjoint() * wi * perp;
    b.norm_upper = K > H ? operator_norm(b.upper) : 0.0;
    b.norm_lower = K > H ? operator_norm(b.lower) : 0.0;
    CMatrix defect = identity(H) - b.principal.adjoint() * b.principal;
    CMatrix yy = K > H ? CMatrix(b.lower.adjoint() * b.lower) : CMatrix(CMatrix::Zero(H, H));
    b.identity_residual = operator_norm(CMatrix(yy - defect));

    CMatrix basis(K, K);
    basis << iota, perp;
    CMatrix blocks(K, K);
    blocks.topLeftCorner(H, H) = b.principal;
    if (K > H) {
      blocks.topRightCorner(H, K - H) = b.upper;
      blocks.bottomLeftCorner(K - H, H) = b.lower;
      blocks.bottomRightCorner(K - H, K - H) = b.complement;
    }
    b.reassembly_error = (basis * blocks * basis.adjoint() - wi).cwiseAbs().maxCoeff();
    out.push_back(std::move(b));
  }
  return out;
}

CornerBoundCheck corner_defect_bound_check(const CMatrix& v, const CMatrix& v_compressed, double delta,
                                           const CMatrix* upper, const CMatrix* lower) {
  CornerBoundCheck c;
  if (v.rows() != v.cols() || v.rows() != v_compressed.rows() || v.cols() != v_compressed.cols())
    throw std::invalid_argument("corner_defect_bound_check: shape mismatch");
  c.distance = operator_norm(CMatrix(v - v_compressed));
  double drift = unitarity_defect(v);
  if (drift > kUnitarityTol) {
    c.precondition_ok = false;
    c.precondition_note = "v is not unitary (drift " + std::to_string(drift) + ")";
  } else if (c.distance > delta + 1e-12) {
    c.precondition_ok = false;
    c.precondition_note = "||v - v'|| = " + std::to_string(c.distance) + " exceeds delta";
  }
  const auto n = v.rows();
  CMatrix defect = identity(n) - v_compressed.adjoint() * v_compressed;
  const double defect_norm = operator_norm(defect);
  c.corner_norm = std::sqrt(defect_norm);
  c.corner_bound = std::sqrt(2.0 * delta);
  // Compared squared: the square root of a roundoff-level defect is ~1e-8.
  c.corner_pass = defect_norm <= 2.0 * delta + 1e-10;

  if (upper && lower) {
    const auto extra = lower->rows();
    CMatrix e = CMatrix::Zero(n + extra, n + upper->cols());
    e.topLeftCorner(n, n) = v_compressed - v;
    e.topRightCorner(n, upper->cols()) = *upper;
    e.bottomLeftCorner(extra, n) = *lower;
    c.block_norm = operator_norm(e);
    c.block_bound = std::sqrt(2.0 * delta) + delta;
    c.block_pass = *c.block_norm <= *c.block_bound + 1e-10;
  }
  return c;
}

}  // namespace dlab
