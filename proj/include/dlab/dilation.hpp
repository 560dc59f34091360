// Forward dilation on cyclic rings.
//
// A pair (u, v) with ||vu - q uv|| = delta is dilated to
//
//     u~ = u (x) S,     v~ = sum_c q^c u^c v u^-c (x) p_c
//
// on C^m (x) C^L, where S is the cyclic shift and c runs over the centered
// residues of Z_L. Every block of v~u~ - q u~v~ vanishes except the one that
// crosses the seam of the ring; that block has norm ||q^L u^L v u^-L - v||.
// Compressing to the flat window xi_N = (2N+1)^{-1/2} sum_{|c|<=N} e_c gives
// back u and v up to 1/(2N+1) and N(N+1)/(2N+1) delta respectively.
//
// For tuples the same construction is applied generator by generator: at step
// m the generator U_m is paired with the shift and every other U_j takes the
// role of v with phase q_{m,j}.

#pragma once

#include <optional>
#include <vector>

#include "dlab/ledger.hpp"
#include "dlab/numerics.hpp"
#include "dlab/phase.hpp"
#include "dlab/tuples.hpp"

namespace dlab {

using StructuredTuple = std::vector<WeightedShiftOperator>;

OperatorTuple densify(const StructuredTuple& t);

/// iota = id_m (x) xi_N with xi_N centered at ring index 0.
class WindowIsometry {
 public:
  WindowIsometry(std::ptrdiff_t base_dim, long ring_size, long half_width);

  std::ptrdiff_t base_dim() const { return base_dim_; }
  long ring_size() const { return ring_size_; }
  long half_width() const { return half_width_; }
  /// Whether ring residue k lies in the support of xi_N.
  bool contains(long residue) const;
  /// (m L) x m matrix in the Kronecker ordering of WeightedShiftOperator.
  CMatrix dense() const;

 private:
  std::ptrdiff_t base_dim_;
  long ring_size_;
  long half_width_;
};

/// Defects at or below this are treated as exact commutation.
inline constexpr double kExactDefect = 1e-12;

/// Least N with (N+1)/2 < delta^{-1/2} < 2N+1. Throws for delta outside (0,1).
long choose_window(double delta);

/// iota* A iota.
CMatrix compress(const WeightedShiftOperator& a, const WindowIsometry& w);
CMatrix compress(const CMatrix& a, const WindowIsometry& w);
OperatorTuple compress(const StructuredTuple& t, const WindowIsometry& w);

/// Compression of the second ring only: (id (x) id (x) xi_N)* A (id (x) id (x) xi_N).
WeightedShiftOperator compress_second(const WeightedShiftOperator2D& a, long half_width);

/// The conjugates W(j) = q^j u^j v u^-j for j in [lo, hi].
class ConjugateOrbit {
 public:
  ConjugateOrbit(const CMatrix& u, const CMatrix& v, const PhaseEntry& q, long lo, long hi);
  const CMatrix& operator()(long j) const;
  long lo() const { return lo_; }
  long hi() const { return hi_; }

 private:
  long lo_, hi_;
  std::vector<CMatrix> w_;
};

struct PairDilation {
  WeightedShiftOperator u_tilde;
  WeightedShiftOperator v_tilde;
  double input_defect = 0.0;     ///< ||vu - q uv||
  double interior_defect = 0.0;  ///< largest block of v~u~ - q u~v~ away from the seam
  double wrap_defect = 0.0;      ///< the seam block
  double output_defect = 0.0;    ///< ||v~u~ - q u~v~||
};

/// Requires unitary u, v of a common size and L >= 4.
PairDilation dilate_pair(const CMatrix& u, const CMatrix& v, const PhaseEntry& q, long ring_size);

struct StepOptions {
  long ring_size = 0;   ///< 0 selects the default ring
  long half_width = -1; ///< -1 selects choose_window(delta)
  /// Composite window of all earlier steps, D_{m-1} x D_1. Compression
  /// errors are measured after this compression; identity when absent.
  const CMatrix* prior_iota = nullptr;
  /// Defects of the original tuple; default is the defect of the step input.
  const Eigen::MatrixXd* reference_defects = nullptr;
};

struct StepCertificate {
  int m = 0;  ///< 0-based generator index that receives the shift
  long ring_size = 0;
  long half_width = 0;
  double delta = 0.0;               ///< reference defect used for the window
  Eigen::MatrixXd defect_in;        ///< defects of the step input
  Eigen::MatrixXd defect_out;       ///< defects of the structured output
  std::vector<double> wrap;         ///< seam block for each pair (m, j)
  double interior_max = 0.0;        ///< largest non-seam block over pairs (m, j)
  double preservation_max = 0.0;    ///< max |defect_out - defect_in| over pairs avoiding m
  std::vector<double> errors;       ///< per generator, localized by prior_iota
  std::vector<double> raw_errors;   ///< per generator, without localization
  double step_error = 0.0;          ///< max of errors
  Ledger ledger;
};

struct StepResult {
  StructuredTuple out;
  StepCertificate cert;
};

/// One application of the per-generator dilation at index m (0-based, m >= 1).
StepResult dilate_step(const OperatorTuple& u, const PhaseMatrix& theta, int m, const StepOptions& opt = {});

/// Default ring for step m: the least multiple of the rational denominators of
/// column m that is >= 2N+2, or 2N+2 when the column has non-rational entries.
long default_ring_size(const PhaseMatrix& theta, int m, long half_width, std::ptrdiff_t base_dim);

struct DilationOptions {
  long ring_size = 0;   ///< fixed ring for every step; 0 selects per-step defaults
  long half_width = -1; ///< -1 selects choose_window(delta)
};

struct DilationCertificate {
  double delta = 0.0;
  long half_width = 0;
  std::vector<long> ring_sizes;
  Eigen::MatrixXd defect_in;
  Eigen::MatrixXd defect_out;  ///< of V_Theta, computed blockwise
  std::vector<StepCertificate> steps;
  double error_sum = 0.0;             ///< sum of step errors
  double total_error = 0.0;           ///< ||U - iota* V iota||
  std::vector<double> total_per_generator;
  Ledger ledger;
};

struct FullDilation {
  StructuredTuple v_theta;
  std::vector<OperatorTuple> inputs;          ///< U^(1), ..., U^(d-1): dense input of each step
  std::vector<StructuredTuple> step_outputs;  ///< structured output of each step
  CMatrix iota;                               ///< composite window into the input of the last step
  DilationCertificate cert;
};

/// Iterates dilate_step for m = 2, ..., d.
FullDilation dilate_full(const UnitaryTuple& u, const PhaseMatrix& theta, const DilationOptions& opt = {});

/// Direct sum over the uniform g^d grid of gauge rotations of weyl_tuple(theta).
UnitaryTuple universal_surrogate(const PhaseMatrix& theta, int grid);

}  // namespace dlab
