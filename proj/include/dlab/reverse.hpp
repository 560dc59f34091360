// Reverse dilation: a second shift applied on top of a forward step.
//
// For a step that paired U_m with the shift, the doubled tuple lives on
// C^D (x) C^L1 (x) C^L2 and has
//
//     U^^_m = U_m (x) S (x) S,
//     U^^_j = sum_{k,r} c_j^{k-r} U_m^{k-r} U_j U_m^{r-k} (x) p_k (x) p_r,
//
// with c_j the phase used by the forward step and k, r centered ring indices.
// The diagonals H_l = span{e_k (x) e_{k+l}} reduce the tuple. With L2 | L1
// the permutation (k, r) -> (l, k), l = r - k mod L2, splits it exactly into
// L2 blocks on C^D (x) C^L1. In block l the generator U_m carries the shift
// and every other U_j becomes c_j^{-l} U_m^{-l} U_j U_m^l (x) id, which is
// unitarily equivalent to a gauge rotation of U.

#pragma once

#include <vector>

#include "dlab/dilation.hpp"

namespace dlab {

struct GaugeBlock {
  long ell = 0;
  std::vector<cplx> lambda;  ///< lambda_j = c_j^{-ell}, lambda_m = 1
  StructuredTuple block;     ///< tuple on C^D (x) C^L1
  /// max over j != m and ring indices of ||block weight - c_j^{-ell} U_m^{-ell} U_j U_m^{ell}||
  double rotation_deviation = 0.0;
};

struct BlockDecomposition {
  long ring1 = 0, ring2 = 0;
  std::ptrdiff_t base_dim = 0;
  std::vector<GaugeBlock> blocks;
  /// Lattice index (i L1 + k) L2 + r to block-ordered index l (D L1) + i L1 + k.
  std::vector<long> permutation;
};

struct ReverseStepResult {
  int m = 0;
  std::vector<WeightedShiftOperator2D> doubled;
  BlockDecomposition decomposition;
  std::vector<PhaseEntry> phases;  ///< c_j for each generator (zero phase at m)
  double delta_in = 0.0;           ///< max_j ||U_j U_m - c_j U_m U_j|| of the step input
  long half_width = 0;
  std::vector<double> errors;      ///< ||U^_j - iota* U^^_j iota|| per generator
  double compression_error = 0.0;
  Ledger ledger;
};

struct ReverseOptions {
  long ring2 = 0;        ///< 0: same as the forward ring
  long half_width = -1;  ///< -1: choose_window(delta_in)
};

/// Builds the doubled tuple from the dense step input `u` and checks that
/// `u_hat` is the forward step output at index m (throws std::invalid_argument
/// otherwise).
ReverseStepResult reverse_dilate_step(const OperatorTuple& u, const StructuredTuple& u_hat, const PhaseMatrix& theta,
                                      int m, const ReverseOptions& opt = {});

/// d = 2 form: u receives the shift, v the conjugates, vu = q uv.
ReverseStepResult reverse_dilate_pair(const CMatrix& u, const CMatrix& v, const PhaseEntry& q, long ring1,
                                      long ring2, long half_width = -1);

/// Max entrywise gap between P (densified doubled) P^T and the direct sum of
/// the densified blocks.
double block_identity_residual(const ReverseStepResult& r);

struct UtagResult {
  FullDilation forward;
  std::vector<ReverseStepResult> reverse;
  /// Finite gauge set: products of the per-step gauge points.
  std::vector<std::vector<cplx>> lambda;
  double forward_error = 0.0;  ///< d_rD(U -> V_Theta) upper bound
  double reverse_error = 0.0;  ///< sum of reverse step errors
  double wrap_allowance = 0.0; ///< sum_m (sqrt(delta_in) - sqrt(delta))_+
  Ledger ledger;
};

struct UtagOptions {
  DilationOptions forward;
  long ring2 = 0;
  /// Gauge sets larger than this are summarized, not enumerated.
  std::size_t lambda_cap = 100000;
};

/// Forward chain to V_Theta followed by the reverse chain to U'.
UtagResult utag_pipeline(const UnitaryTuple& u, const PhaseMatrix& theta, const UtagOptions& opt = {});

}  // namespace dlab
