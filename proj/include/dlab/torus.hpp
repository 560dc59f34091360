// Subgroups of T^d generated by the columns of Q.
//
// Points are stored as angle vectors in turns (theta / 2pi). Every coordinate
// of a word in the column generators has the exact form
//
//     num / denom + coeff * base   (mod 1)
//
// where base is the single declared irrational of the phase matrix (absent
// for rational data). Raw float entries are snapped to multiples of 1e-9 and
// then handled by the same integer arithmetic.
//
// Distances are max_i |lambda_i - mu_i| on T^d, which equals 2 sin(pi r) with
// r the largest circular coordinate gap in turns.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlab/phase.hpp"

namespace dlab {

inline constexpr double kSnapResolution = 1e-9;
inline constexpr std::size_t kCloudCap = 4000000;

/// Exact coordinate offset + coeff * base (mod 1).
struct TorusAngle {
  Rational offset{0};
  std::int64_t coeff = 0;
};

struct TorusCloud {
  int d = 0;
  long word_length = 0;
  std::int64_t denom = 1;  ///< common denominator of the rational parts
  double base = 0.0;       ///< irrational base in turns (0 when absent)
  std::string tag;
  bool snapped = false;    ///< float entries were rounded to kSnapResolution
  double resolution = 0.0;
  /// Per point and coordinate: numerator mod denom and irrational coefficient.
  std::vector<std::int64_t> num, coeff;
  /// Shortest word length reaching each point.
  std::vector<int> layer;

  std::size_t size() const { return layer.size(); }
  std::vector<double> angles(std::size_t i) const;
  /// Exact membership; throws if the point is not expressible in this cloud's arithmetic.
  bool contains(const std::vector<TorusAngle>& point) const;
  /// Points reached by words of length at most n.
  TorusCloud restricted(long n) const;
};

/// S_Q(N): all products of at most N column generators and their inverses.
/// Throws CapExceeded when more than `cap` distinct points arise.
TorusCloud subgroup_ball(const PhaseMatrix& theta, long N, std::size_t cap = kCloudCap);

/// Column generator l as exact angles (snapped for float entries).
std::vector<TorusAngle> column_generator(const PhaseMatrix& theta, int l);

/// 2 sin(pi r) for a circular gap r in turns, r clamped to [0, 1/2].
double chordal_from_turns(double r);
/// Inverse of chordal_from_turns on [0, 2].
double turns_from_chordal(double eta);

struct HausdorffEstimate {
  double lower = 0.0;  ///< max over grid points of the distance to the cloud
  double upper = 0.0;  ///< lower plus the Lipschitz slack of the grid
  long grid = 0;       ///< grid points per axis
};

/// Certified two-sided estimate of d_H(T^d, cloud) on a uniform grid with
/// spacing at most h. Requires d <= 3.
HausdorffEstimate hausdorff_to_torus(const TorusCloud& cloud, double h);

/// Half the largest circular gap of {k alpha : |k| <= K}, alpha given by a d = 2
/// entry; exact arithmetic for rational entries.
double orbit_covering_radius(const PhaseEntry& alpha, long K);

/// d_H(T^d, S_Q(N)) for d <= 2, exact. For d = 2 the generators move one
/// coordinate each, so S_Q(N) = {(b a, -c a) : |b| + |c| <= N} and the ell-infinity
/// covering radius is orbit_covering_radius(theta_12, floor(N/2)).
double word_ball_hausdorff(const PhaseMatrix& theta, long N);

enum class Ergodicity { Ergodic, NonErgodic, UnknownFloat };
const char* to_string(Ergodicity e);

struct ErgodicityReport {
  Ergodicity verdict = Ergodicity::UnknownFloat;
  /// Nonzero m in Z^d with m . (column angles) in Z for every column.
  std::vector<std::int64_t> witness;
  /// Hermite basis of all such characters.
  std::vector<std::vector<std::int64_t>> annihilator;
  /// eta_Q, when the closure is finite (all rational) or the data is ergodic.
  std::optional<double> eta_q;
  std::string note;
};

/// Decided by an integer kernel computation. Throws std::invalid_argument for
/// more than one irrational tag.
ErgodicityReport ergodicity_test(const PhaseMatrix& theta);

/// eta_Q for all-rational data, exact.
double rational_eta_q(const PhaseMatrix& theta);

struct NEtaOptions {
  std::size_t cloud_cap = kCloudCap;
  long max_n = 1000000;
  /// d = 3 grid spacing as a fraction of the target radius.
  double grid_fraction = 0.25;
};

struct NEtaResult {
  long n_eta = 0;
  double hausdorff = 0.0;       ///< d_H(T^d, S_Q(N_eta)) (upper estimate for d = 3)
  double hausdorff_prev = 0.0;  ///< the same quantity at N_eta - 1 (2 when N_eta = 0)
  std::string method;
};

/// Least N with d_H(T^d, S_Q(N)) < eta. Throws std::invalid_argument when
/// eta <= eta_Q is known, and CapExceeded when the search limit is reached.
NEtaResult find_N_eta(const PhaseMatrix& theta, double eta, const NEtaOptions& opt = {});

struct AlmostGaugeCertificate {
  double delta = 0.0, eta = 0.0;
  long n_eta = 0;
  double epsilon = 0.0;  ///< N_eta delta + eta
};

AlmostGaugeCertificate almost_gauge_certificate(double delta, double eta, long n_eta);

struct EpsDeltaPlan {
  int d = 0;
  double epsilon = 0.0;
  double eta = 0.0;
  long n_eta = 0;
  double delta = 0.0;
  int delta_grid_index = 0;  ///< delta = 10^(-index/16)
  double budget = 0.0;       ///< epsilon^2 / 200
  double residual = 0.0;     ///< budget - (N_eta delta + (d-1) sqrt(delta))
  double bound = 0.0;        ///< 10 sqrt(N_eta delta + eta + (d-1) sqrt(delta))
};

/// Requires an ergodic phase matrix and epsilon in (0, 2].
EpsDeltaPlan eps_delta_plan(const PhaseMatrix& theta, double epsilon, const NEtaOptions& opt = {});

}  // namespace dlab
