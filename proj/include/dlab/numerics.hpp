// Dense complex kernels and cyclic weighted-shift operators.
//
// A WeightedShiftOperator on C^m (x) C^L stores the blocks of
//
//     A = sum_k A_k (x) E_{k+p, k}
//
// over the cyclic ring Z_L, where E_{i,j} are matrix units. Such operators
// are permutation-structured (each block row and block column holds at most
// one nonzero block), so norms and products can be evaluated blockwise
// without materializing the (m L) x (m L) matrix.

#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dlab {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Dense materialization is refused above this total dimension.
inline constexpr std::ptrdiff_t kDenseCap = 4096;

/// Thrown when a size cap would be exceeded.
class CapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

bool all_finite(const CMatrix& m);

/// Largest singular value. Computed from the spectrum of M*M (or MM*,
/// whichever is smaller); relative accuracy is well below 1e-10.
double operator_norm(const CMatrix& m);

/// Smallest and largest eigenvalue of a Hermitian matrix.
double lambda_max(const CMatrix& hermitian);
double lambda_min(const CMatrix& hermitian);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix identity(std::ptrdiff_t n);

/// Unitary polar factor of a square matrix.
CMatrix polar_unitary(const CMatrix& m);

/// ||M*M - I||, the unitarity drift of a square matrix.
double unitarity_defect(const CMatrix& m);

/// Integer power of a unitary; negative exponents use the adjoint.
CMatrix unitary_power(const CMatrix& u, long k);

/// exp(2 pi i t) with the argument reduced mod 1 first.
cplx unit_phase(double turns);

/// Residue of k in [0, L).
inline long ring_mod(long k, long L) {
  long r = k % L;
  return r < 0 ? r + L : r;
}

/// Centered representative of a residue: in [-floor(L/2), L - 1 - floor(L/2)].
inline long ring_centered(long residue, long L) {
  long r = ring_mod(residue, L);
  long half = L / 2;
  return r >= L - half ? r - L : r;
}

class WeightedShiftOperator {
 public:
  WeightedShiftOperator(long ring_size, long offset, std::ptrdiff_t block_dim);

  long ring_size() const { return ring_size_; }
  long offset() const { return offset_; }
  std::ptrdiff_t block_dim() const { return block_dim_; }
  std::ptrdiff_t total_dim() const { return block_dim_ * ring_size_; }

  /// Sets the block mapping ring index k to k + offset.
  void set_weight(long k, CMatrix w);
  /// Block at source index k, or nullptr for a zero block.
  const CMatrix* weight(long k) const;
  const std::map<long, CMatrix>& weights() const { return weights_; }

  /// Operator u (x) S^offset with a constant block.
  static WeightedShiftOperator constant(long ring_size, long offset, const CMatrix& block);

  /// Row/column ordering is the Kronecker one: index = i * L + k.
  CMatrix densify() const;

 private:
  long ring_size_;
  long offset_;
  std::ptrdiff_t block_dim_;
  std::map<long, CMatrix> weights_;
};

double ws_norm(const WeightedShiftOperator& a);
WeightedShiftOperator ws_mul(const WeightedShiftOperator& a, const WeightedShiftOperator& b);
/// Requires equal offsets; throws std::invalid_argument otherwise.
WeightedShiftOperator ws_sub(const WeightedShiftOperator& a, const WeightedShiftOperator& b);
WeightedShiftOperator ws_add(const WeightedShiftOperator& a, const WeightedShiftOperator& b);
WeightedShiftOperator ws_adjoint(const WeightedShiftOperator& a);
WeightedShiftOperator ws_scale(const WeightedShiftOperator& a, cplx s);

/// Two-ring version: A = sum_{k,r} A_{k,r} (x) E_{k+p1,k} (x) E_{r+p2,r}.
class WeightedShiftOperator2D {
 public:
  WeightedShiftOperator2D(long ring1, long ring2, long offset1, long offset2,
                          std::ptrdiff_t block_dim);

  long ring1() const { return ring1_; }
  long ring2() const { return ring2_; }
  long offset1() const { return offset1_; }
  long offset2() const { return offset2_; }
  std::ptrdiff_t block_dim() const { return block_dim_; }
  std::ptrdiff_t total_dim() const { return block_dim_ * ring1_ * ring2_; }

  void set_weight(long k, long r, CMatrix w);
  const CMatrix* weight(long k, long r) const;
  const std::map<std::pair<long, long>, CMatrix>& weights() const { return weights_; }

  /// Index ordering: (i * L1 + k) * L2 + r.
  CMatrix densify() const;

 private:
  long ring1_, ring2_;
  long offset1_, offset2_;
  std::ptrdiff_t block_dim_;
  std::map<std::pair<long, long>, CMatrix> weights_;
};

double ws2_norm(const WeightedShiftOperator2D& a);
WeightedShiftOperator2D ws2_mul(const WeightedShiftOperator2D& a, const WeightedShiftOperator2D& b);
WeightedShiftOperator2D ws2_sub(const WeightedShiftOperator2D& a, const WeightedShiftOperator2D& b);
WeightedShiftOperator2D ws2_adjoint(const WeightedShiftOperator2D& a);

void require_dense_cap(std::ptrdiff_t dim, const char* what);

}  // namespace dlab
