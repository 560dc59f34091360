#include "dlab/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dlab {

bool all_finite(const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

double operator_norm(const CMatrix& m) {
  if (m.size() == 0) throw std::invalid_argument("operator_norm: empty matrix");
  if (!all_finite(m)) throw std::invalid_argument("operator_norm: non-finite entry");
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  CMatrix gram = m.rows() >= m.cols() ? CMatrix(m.adjoint() * m) : CMatrix(m * m.adjoint());
  double top = lambda_max(gram);
  return std::sqrt(std::max(0.0, top));
}

double lambda_max(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double lambda_min(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix identity(std::ptrdiff_t n) { return CMatrix::Identity(n, n); }

CMatrix polar_unitary(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double unitarity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("unitarity_defect: non-square matrix");
  return operator_norm(CMatrix(m.adjoint() * m - identity(m.rows())));
}

CMatrix unitary_power(const CMatrix& u, long k) {
  CMatrix base = k >= 0 ? u : CMatrix(u.adjoint());
  CMatrix out = identity(u.rows());
  for (long e = k >= 0 ? k : -k; e > 0; e >>= 1) {
    if (e & 1) out = out * base;
    if (e > 1) base = base * base;
  }
  return out;
}

cplx unit_phase(double turns) {
  double t = turns - std::floor(turns);
  return std::polar(1.0, 2.0 * std::numbers::pi * t);
}

void require_dense_cap(std::ptrdiff_t dim, const char* what) {
  if (dim > kDenseCap)
    throw CapExceeded(std::string(what) + ": dense dimension " + std::to_string(dim) +
                      " exceeds cap " + std::to_string(kDenseCap));
}

// ---------------------------------------------------------------------------
// WeightedShiftOperator

WeightedShiftOperator::WeightedShiftOperator(long ring_size, long offset, std::ptrdiff_t block_dim)
    : ring_size_(ring_size), offset_(0), block_dim_(block_dim) {
  if (ring_size <= 0) throw std::invalid_argument("WeightedShiftOperator: ring size must be positive");
  if (block_dim <= 0) throw std::invalid_argument("WeightedShiftOperator: block dimension must be positive");
  offset_ = ring_mod(offset, ring_size);
}

void WeightedShiftOperator::set_weight(long k, CMatrix w) {
  if (w.rows() != block_dim_ || w.cols() != block_dim_)
    throw std::invalid_argument("WeightedShiftOperator: weight has wrong shape");
  if (!all_finite(w)) throw std::invalid_argument("WeightedShiftOperator: non-finite weight");
  weights_[ring_mod(k, ring_size_)] = std::move(w);
}

const CMatrix* WeightedShiftOperator::weight(long k) const {
  auto it = weights_.find(ring_mod(k, ring_size_));
  return it == weights_.end() ? nullptr : &it->second;
}

WeightedShiftOperator WeightedShiftOperator::constant(long ring_size, long offset, const CMatrix& block) {
  WeightedShiftOperator out(ring_size, offset, block.rows());
  for (long k = 0; k < ring_size; ++k) out.set_weight(k, block);
  return out;
}

CMatrix WeightedShiftOperator::densify() const {
  require_dense_cap(total_dim(), "WeightedShiftOperator::densify");
  const long L = ring_size_;
  CMatrix out = CMatrix::Zero(total_dim(), total_dim());
  for (const auto& [k, w] : weights_) {
    long row = ring_mod(k + offset_, L);
    for (Eigen::Index i = 0; i < block_dim_; ++i)
      for (Eigen::Index j = 0; j < block_dim_; ++j) out(i * L + row, j * L + k) = w(i, j);
  }
  return out;
}

double ws_norm(const WeightedShiftOperator& a) {
  double best = 0.0;
  for (const auto& [k, w] : a.weights()) best = std::max(best, operator_norm(w));
  return best;
}

namespace {

void require_compatible(const WeightedShiftOperator& a, const WeightedShiftOperator& b, const char* op) {
  if (a.ring_size() != b.ring_size() || a.block_dim() != b.block_dim())
    throw std::invalid_argument(std::string(op) + ": ring size or block dimension mismatch");
}

}  // namespace

WeightedShiftOperator ws_mul(const WeightedShiftOperator& a, const WeightedShiftOperator& b) {
  require_compatible(a, b, "ws_mul");
  const long L = a.ring_size();
  WeightedShiftOperator out(L, a.offset() + b.offset(), a.block_dim());
  // (A_{j+q} (x) E) (B_j (x) E_{j+q,j}) with q the offset of b.
  for (const auto& [j, bw] : b.weights()) {
    const CMatrix* aw = a.weight(j + b.offset());
    if (aw) out.set_weight(j, (*aw) * bw);
  }
  return out;
}

WeightedShiftOperator ws_sub(const WeightedShiftOperator& a, const WeightedShiftOperator& b) {
  require_compatible(a, b, "ws_sub");
  if (a.offset() != b.offset())
    throw std::invalid_argument("ws_sub: offset mismatch (" + std::to_string(a.offset()) + " vs " +
                                std::to_string(b.offset()) + "); densify instead");
  WeightedShiftOperator out = a;
  for (const auto& [k, bw] : b.weights()) {
    const CMatrix* aw = a.weight(k);
    out.set_weight(k, aw ? CMatrix(*aw - bw) : CMatrix(-bw));
  }
  return out;
}

WeightedShiftOperator ws_add(const WeightedShiftOperator& a, const WeightedShiftOperator& b) {
  return ws_sub(a, ws_scale(b, -1.0));
}

WeightedShiftOperator ws_adjoint(const WeightedShiftOperator& a) {
  const long L = a.ring_size();
  WeightedShiftOperator out(L, -a.offset(), a.block_dim());
  for (const auto& [k, w] : a.weights()) out.set_weight(k + a.offset(), w.adjoint());
  return out;
}

WeightedShiftOperator ws_scale(const WeightedShiftOperator& a, cplx s) {
  WeightedShiftOperator out(a.ring_size(), a.offset(), a.block_dim());
  for (const auto& [k, w] : a.weights()) out.set_weight(k, s * w);
  return out;
}

// ---------------------------------------------------------------------------
// WeightedShiftOperator2D

WeightedShiftOperator2D::WeightedShiftOperator2D(long ring1, long ring2, long offset1, long offset2,
                                                 std::ptrdiff_t block_dim)
    : ring1_(ring1), ring2_(ring2), offset1_(0), offset2_(0), block_dim_(block_dim) {
  if (ring1 <= 0 || ring2 <= 0) throw std::invalid_argument("WeightedShiftOperator2D: ring sizes must be positive");
  if (block_dim <= 0) throw std::invalid_argument("WeightedShiftOperator2D: block dimension must be positive");
  offset1_ = ring_mod(offset1, ring1);
  offset2_ = ring_mod(offset2, ring2);
}

void WeightedShiftOperator2D::set_weight(long k, long r, CMatrix w) {
  if (w.rows() != block_dim_ || w.cols() != block_dim_)
    throw std::invalid_argument("WeightedShiftOperator2D: weight has wrong shape");
  weights_[{ring_mod(k, ring1_), ring_mod(r, ring2_)}] = std::move(w);
}

const CMatrix* WeightedShiftOperator2D::weight(long k, long r) const {
  auto it = weights_.find({ring_mod(k, ring1_), ring_mod(r, ring2_)});
  return it == weights_.end() ? nullptr : &it->second;
}

CMatrix WeightedShiftOperator2D::densify() const {
  require_dense_cap(total_dim(), "WeightedShiftOperator2D::densify");
  const long L1 = ring1_, L2 = ring2_;
  CMatrix out = CMatrix::Zero(total_dim(), total_dim());
  for (const auto& [kr, w] : weights_) {
    auto [k, r] = kr;
    long row_k = ring_mod(k + offset1_, L1), row_r = ring_mod(r + offset2_, L2);
    for (Eigen::Index i = 0; i < block_dim_; ++i)
      for (Eigen::Index j = 0; j < block_dim_; ++j)
        out((i * L1 + row_k) * L2 + row_r, (j * L1 + k) * L2 + r) = w(i, j);
  }
  return out;
}

double ws2_norm(const WeightedShiftOperator2D& a) {
  double best = 0.0;
  for (const auto& [kr, w] : a.weights()) best = std::max(best, operator_norm(w));
  return best;
}

namespace {

void require_compatible2(const WeightedShiftOperator2D& a, const WeightedShiftOperator2D& b, const char* op) {
  if (a.ring1() != b.ring1() || a.ring2() != b.ring2() || a.block_dim() != b.block_dim())
    throw std::invalid_argument(std::string(op) + ": ring sizes or block dimension mismatch");
}

}  // namespace

WeightedShiftOperator2D ws2_mul(const WeightedShiftOperator2D& a, const WeightedShiftOperator2D& b) {
  require_compatible2(a, b, "ws2_mul");
  WeightedShiftOperator2D out(a.ring1(), a.ring2(), a.offset1() + b.offset1(), a.offset2() + b.offset2(),
                              a.block_dim());
  for (const auto& [kr, bw] : b.weights()) {
    const CMatrix* aw = a.weight(kr.first + b.offset1(), kr.second + b.offset2());
    if (aw) out.set_weight(kr.first, kr.second, (*aw) * bw);
  }
  return out;
}

WeightedShiftOperator2D ws2_sub(const WeightedShiftOperator2D& a, const WeightedShiftOperator2D& b) {
  require_compatible2(a, b, "ws2_sub");
  if (a.offset1() != b.offset1() || a.offset2() != b.offset2())
    throw std::invalid_argument("ws2_sub: offset mismatch; densify instead");
  WeightedShiftOperator2D out = a;
  for (const auto& [kr, bw] : b.weights()) {
    const CMatrix* aw = a.weight(kr.first, kr.second);
    out.set_weight(kr.first, kr.second, aw ? CMatrix(*aw - bw) : CMatrix(-bw));
  }
  return out;
}

WeightedShiftOperator2D ws2_adjoint(const WeightedShiftOperator2D& a) {
  WeightedShiftOperator2D out(a.ring1(), a.ring2(), -a.offset1(), -a.offset2(), a.block_dim());
  for (const auto& [kr, w] : a.weights())
    out.set_weight(kr.first + a.offset1(), kr.second + a.offset2(), w.adjoint());
  return out;
}

}  // namespace dlab
