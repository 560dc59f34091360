// Antisymmetric phase data.
//
// Each entry stores theta_{k,l} / 2pi ("turns"). Entries are either exact
// rationals, a rational offset plus an integer multiple of one declared
// irrational tag, or a raw float with no symbolic meaning. Numerics always use
// the float value; only the torus module reads the symbolic parts.

#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/rational.hpp>

namespace dlab {

using Rational = boost::rational<std::int64_t>;

enum class PhaseKind { Rational, Irrational, Float };

struct PhaseEntry {
  PhaseKind kind = PhaseKind::Rational;
  Rational offset{0};     ///< exact part (all of the value for Rational)
  std::int64_t coeff = 0; ///< multiple of the tag's base value (Irrational only)
  std::string tag;        ///< Irrational only
  double base = 0.0;      ///< the tag's value in turns (Irrational only)
  double value = 0.0;     ///< theta/2pi, float approximation

  static PhaseEntry rational(std::int64_t p, std::int64_t q);
  static PhaseEntry rational(Rational r);
  static PhaseEntry irrational(const std::string& tag, double base, std::int64_t coeff = 1,
                               Rational offset = Rational(0));
  static PhaseEntry floating(double turns);

  PhaseEntry negated() const;
  /// Float approximation of theta/2pi reduced to [0,1).
  double approx() const;
  /// exp(i e theta), reduced exactly for rational entries.
  std::complex<double> power(long e) const;
};

class PhaseMatrix {
 public:
  /// Builds an antisymmetric matrix from its strict upper triangle, given row
  /// by row: (1,2), (1,3), ..., (1,d), (2,3), ...
  static PhaseMatrix from_upper(int d, const std::vector<PhaseEntry>& upper);
  /// d = 2 shorthand.
  static PhaseMatrix pair(const PhaseEntry& theta12);
  static PhaseMatrix zero(int d);

  int d() const { return d_; }
  /// 0-based indices.
  const PhaseEntry& entry(int k, int l) const { return entries_[k * d_ + l]; }
  double turns(int k, int l) const { return entry(k, l).value; }
  /// q_{k,l} = exp(i theta_{k,l}).
  std::complex<double> q(int k, int l) const;
  /// q_{k,l}^e, exact phase reduction for rational entries.
  std::complex<double> q_power(int k, int l, long e) const;

  bool all_rational() const;
  bool any_float() const;
  /// Distinct irrational tags with their base values.
  std::map<std::string, double> tags() const;

  /// Least common multiple of all rational denominators (1 when none).
  std::int64_t rational_lcm() const;

 private:
  int d_ = 0;
  std::vector<PhaseEntry> entries_;
};

std::int64_t lcm_checked(std::int64_t a, std::int64_t b);

}  // namespace dlab
