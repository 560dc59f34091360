// Unitary tuples, commutation defects, gauge rotations, Weyl constructors and
// the corner identities of a unitary dilated from a contraction.

#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "dlab/numerics.hpp"
#include "dlab/phase.hpp"

namespace dlab {

/// A d-tuple of square matrices of a common size; no unitarity implied.
using OperatorTuple = std::vector<CMatrix>;

/// max_i ||a_i - b_i||.
double tuple_distance(const OperatorTuple& a, const OperatorTuple& b);

/// Default accepted drift ||U*U - I||.
inline constexpr double kUnitarityTol = 1e-10;
/// Drift above kUnitarityTol but below this is repaired by polar projection.
inline constexpr double kRepairTol = 1e-6;

class UnitaryTuple {
 public:
  /// Validates every generator; inputs with drift in (tol, 1e-6] are
  /// re-unitarized, larger drift throws std::invalid_argument.
  explicit UnitaryTuple(OperatorTuple matrices, double unitarity_tol = kUnitarityTol);

  int d() const { return static_cast<int>(matrices_.size()); }
  std::ptrdiff_t dim() const { return matrices_.front().rows(); }
  double unitarity_tol() const { return tol_; }
  bool repaired() const { return repaired_; }

  const CMatrix& operator[](int i) const { return matrices_[i]; }
  const OperatorTuple& matrices() const { return matrices_; }

 private:
  OperatorTuple matrices_;
  double tol_;
  bool repaired_ = false;
};

/// d x d matrix of defects ||U_l U_k - e^{i theta_{k,l}} U_k U_l||.
Eigen::MatrixXd commutation_defect(const OperatorTuple& u, const PhaseMatrix& theta);
Eigen::MatrixXd commutation_defect(const UnitaryTuple& u, const PhaseMatrix& theta);

/// Same defects for a tuple of cyclic weighted-shift operators, computed
/// blockwise. Generators must share ring size and block dimension.
Eigen::MatrixXd commutation_defect(const std::vector<WeightedShiftOperator>& u, const PhaseMatrix& theta);

/// Largest off-diagonal entry.
double max_defect(const Eigen::MatrixXd& defects);

/// Clock diag(1, w, ..., w^{n-1}) with w = exp(2 pi i / n).
CMatrix clock_matrix(long n);
/// Cyclic shift e_t -> e_{t+1 mod n}.
CMatrix shift_matrix(long n);

/// Exactly Theta-commuting tensor product of clock/shift factors, one factor
/// per pair k < l with nonzero phase. Requires every entry rational.
UnitaryTuple weyl_tuple(const PhaseMatrix& theta);

/// (lambda_1 U_1, ..., lambda_d U_d); each |lambda_i| must be 1.
UnitaryTuple gauge_rotate(const UnitaryTuple& u, const std::vector<std::complex<double>>& lambda);
OperatorTuple gauge_rotate(const OperatorTuple& u, const std::vector<std::complex<double>>& lambda);

struct CornerBlocks {
  CMatrix principal;   ///< iota* W iota
  CMatrix upper;       ///< x = iota* W iota_perp
  CMatrix lower;       ///< y = iota_perp* W iota
  CMatrix complement;  ///< z = iota_perp* W iota_perp
  double norm_upper = 0.0;
  double norm_lower = 0.0;
  /// ||y*y - (1 - v'*v')||
  double identity_residual = 0.0;
  /// Entrywise difference between the reassembled block matrix and W.
  double reassembly_error = 0.0;
};

/// Splits each generator of W along iota (K x H isometry) and its orthogonal
/// complement. Throws std::invalid_argument when ||iota* iota - I|| > 1e-12.
std::vector<CornerBlocks> corner_extract(const OperatorTuple& w, const CMatrix& iota);

struct CornerBoundCheck {
  bool precondition_ok = true;  ///< ||v - v'|| <= delta and v unitary
  std::string precondition_note;
  double distance = 0.0;        ///< ||v - v'||
  double corner_norm = 0.0;     ///< ||1 - v'*v'||^{1/2}
  double corner_bound = 0.0;    ///< sqrt(2 delta)
  bool corner_pass = true;
  std::optional<double> block_norm;   ///< ||E|| when corners were supplied
  std::optional<double> block_bound;  ///< sqrt(2 delta) + delta
  bool block_pass = true;
};

/// Checks ||y|| <= sqrt(2 delta) through ||1 - v'*v'||^{1/2}, and the bound on
/// E = [[v' - v, x], [y, 0]] when x and y are given.
CornerBoundCheck corner_defect_bound_check(const CMatrix& v, const CMatrix& v_compressed, double delta,
                                           const CMatrix* upper = nullptr, const CMatrix* lower = nullptr);

}  // namespace dlab
