// Matrix ranges of operator tuples and the distances built on them.
//
// A linear map phi: M_m -> M_n is stored through its Choi matrix
//
//     J = sum_{a,b} E_ab (x) phi(E_ab)      (index a * n + s),
//
// so phi is completely positive iff J >= 0 and unital iff sum_a J_aa = I_n.
// W_n(A) is the set of phi(A) over such maps, and membership of a target X
// is a convex feasibility problem in J.
//
// Separation certificates rest on the fact that id (x) phi is unital and
// positive: if X = phi(A) then for any direction tuple B,
//
//     lambda_max(sum_i B_i (x) X_i + h.c.) <= lambda_max(sum_i B_i (x) A_i + h.c.).
//
// Tuple distances are ||X - Y|| = max_i ||X_i - Y_i|| throughout. Level-n
// quantities are computed for n <= 3 only.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlab/tuples.hpp"

namespace dlab {

struct ChoiMatrix {
  std::ptrdiff_t m = 0;  ///< input dimension
  std::ptrdiff_t n = 0;  ///< output dimension
  CMatrix J;

  /// phi(Y) = sum_{a,b} Y_ab J_ab.
  CMatrix apply(const CMatrix& y) const;
  OperatorTuple apply(const OperatorTuple& y) const;
  /// ||sum_a J_aa - I_n||.
  double unitality_defect() const;
  double min_eigenvalue() const;
  /// PSD within 1e-9 and unital within 1e-9.
  bool is_ucp(double tol = 1e-9) const;

  /// The map Y -> V* Y V for an isometry V: C^n -> C^m.
  static ChoiMatrix compression(const CMatrix& v);
  /// Y -> tr(Y)/m I_n.
  static ChoiMatrix tracial(std::ptrdiff_t m, std::ptrdiff_t n);
};

/// Euclidean projection onto {J >= 0, sum_a J_aa = I_n} by Dykstra's scheme,
/// followed by an exact repair (eigenvalue clipping and the congruence
/// I (x) T^{-1/2}) so the result is UCP to rounding.
ChoiMatrix project_ucp(const CMatrix& j, std::ptrdiff_t m, std::ptrdiff_t n, int max_iter = 5000);

/// Half-sum direction functional (1/2) sum_i (conj(c_i) A_i + c_i A_i*).
CMatrix direction_operator(const OperatorTuple& a, const std::vector<cplx>& c);

/// Support function of W_1(A) in direction c: max over W_1 of Re sum conj(c_i) x_i.
double support_level1(const OperatorTuple& a, const std::vector<cplx>& c);

/// A point of W_1(A) attaining support_level1 (the vector state of a top eigenvector).
std::vector<cplx> support_point(const OperatorTuple& a, const std::vector<cplx>& c);

struct SamplingMeta {
  std::string scheme;
  long directions = 0;
  /// Bound on the amount the sampled supremum can fall short of the true one;
  /// negative when no bound is available.
  double resolution = -1.0;
  std::uint64_t seed = 0;
};

/// Directions on the dual l1 sphere {sum |c_i| = 1}. For d = 1 these are the
/// K equally spaced unit phases; for d > 1 a Kronecker sequence in
/// (phase, simplex) coordinates.
std::vector<std::vector<cplx>> dual_directions(int d, long K);

struct W1Hausdorff {
  double value = 0.0;
  std::vector<cplx> direction;  ///< maximizing sampled direction
  SamplingMeta meta;
};

/// Level-1 Hausdorff distance sup_c |h_A(c) - h_B(c)| over sampled dual
/// directions. For d = 1 the best samples are refined by golden-section
/// search on the circle. Requires K >= 8.
W1Hausdorff w1_hausdorff(const OperatorTuple& a, const OperatorTuple& b, long K);

struct SeparationCertificate {
  OperatorTuple direction;   ///< B_i, k x k
  double lambda_target = 0.0;  ///< lambda_max(sum B_i (x) X_i + h.c.)
  double lambda_source = 0.0;  ///< lambda_max(sum B_i (x) A_i + h.c.)
  double gap = 0.0;
  /// gap / (2 sum_i ||B_i||), a lower bound on dist(X, W_n(A)); 0 unless gap > kCertificateGap.
  double distance_bound = 0.0;
};

/// Re-evaluates the certificate inequality for source A and target X.
SeparationCertificate evaluate_certificate(const OperatorTuple& a, const OperatorTuple& x,
                                           const OperatorTuple& direction);

/// Random restarts plus eigenvector ascent on the gap. Returns the best
/// certificate found (its gap may be non-positive).
SeparationCertificate search_certificate(const OperatorTuple& a, const OperatorTuple& x, std::uint64_t seed,
                                         int restarts = 8, int steps = 200);

enum class Membership { Member, NonMember, Undecided };
const char* to_string(Membership m);

inline constexpr double kMembershipTol = 1e-7;
inline constexpr int kMembershipMaxIter = 5000;
inline constexpr double kCertificateGap = 1e-8;

struct MembershipResult {
  Membership status = Membership::Undecided;
  /// max_i ||phi(A_i) - X_i|| for the returned UCP map.
  double residual = 0.0;
  int iterations = 0;
  ChoiMatrix choi;
  bool has_certificate = false;
  SeparationCertificate certificate;
};

/// Decides X in W_n(A). A short certificate search runs first. Otherwise
/// Dykstra's alternating projections run between the PSD cone and the affine
/// constraint set, with a Levenberg-Marquardt polish on a Choi factor every
/// 250 iterations. Member when an iterate, repaired to an exact UCP map,
/// reproduces X within tol; non-member only with a certificate whose gap
/// exceeds kCertificateGap; undecided otherwise. The residual is infinite when
/// no map was tried.
MembershipResult ucp_membership(const OperatorTuple& a, const OperatorTuple& x, double tol = kMembershipTol,
                                int max_iter = kMembershipMaxIter, std::uint64_t seed = 0);

struct UcpDistance {
  double value = 0.0;  ///< max_i ||X_i - Psi(B_i)|| for the returned map
  ChoiMatrix choi;
  int iterations = 0;
};

/// Upper estimate of min over UCP Psi of max_i ||X_i - Psi(B_i)||: projected
/// gradient on a log-sum-exp smoothing with continuation in the temperature.
/// Starts from the tracial map (and the identity when dimensions agree). The
/// returned value is evaluated exactly for the returned UCP map.
UcpDistance ucp_distance(const OperatorTuple& x, const OperatorTuple& b);

/// Upper estimate of d_rD(A -> B) = inf over UCP Psi of ||A - Psi(B)||.
UcpDistance drd_estimate(const OperatorTuple& a, const OperatorTuple& b);

/// V* A V with V the top-n eigenspace of direction_operator(A, c): a point of W_n(A).
OperatorTuple eigenspace_compression(const OperatorTuple& a, const std::vector<cplx>& c, std::ptrdiff_t n);

struct OneSidedEstimate {
  double lower = 0.0;  ///< certified: max over samples of the certificate distance bound
  double upper = 0.0;  ///< max over samples of ucp_distance(X, B)
  int level = 0;
  long samples = 0;
  SamplingMeta meta;
};

/// Level-capped estimate of d_mr(A -> B) using sampled boundary points X of
/// W_k(A), k = 1..n. Throws CapExceeded for n > 3.
OneSidedEstimate dmr_one_sided(const OperatorTuple& a, const OperatorTuple& b, int n, long samples,
                               std::uint64_t seed = 0);

}  // namespace dlab
