#include "dlab/phase.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dlab/numerics.hpp"

namespace dlab {

namespace {

double frac(double x) { return x - std::floor(x); }

double rational_turns(const Rational& r) {
  // Reduce the numerator before converting so large multiples stay exact.
  std::int64_t q = r.denominator();
  std::int64_t p = r.numerator() % q;
  if (p < 0) p += q;
  return static_cast<double>(p) / static_cast<double>(q);
}

}  // namespace

std::int64_t lcm_checked(std::int64_t a, std::int64_t b) {
  std::int64_t g = std::gcd(a, b);
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a / g, b, &out)) throw std::overflow_error("lcm overflow");
  return out < 0 ? -out : out;
}

PhaseEntry PhaseEntry::rational(std::int64_t p, std::int64_t q) {
  if (q == 0) throw std::invalid_argument("rational phase with zero denominator");
  return rational(Rational(p, q));
}

PhaseEntry PhaseEntry::rational(Rational r) {
  PhaseEntry e;
  e.kind = PhaseKind::Rational;
  e.offset = r;
  e.value = rational_turns(r);
  return e;
}

PhaseEntry PhaseEntry::irrational(const std::string& tag, double base, std::int64_t coeff, Rational offset) {
  if (tag.empty()) throw std::invalid_argument("irrational phase needs a tag");
  if (!std::isfinite(base)) throw std::invalid_argument("irrational phase '" + tag + "' has non-finite value");
  if (coeff == 0) return rational(offset);
  PhaseEntry e;
  e.kind = PhaseKind::Irrational;
  e.tag = tag;
  e.base = base - std::floor(base);
  e.coeff = coeff;
  e.offset = offset;
  e.value = frac(rational_turns(offset) + static_cast<double>(coeff) * base);
  return e;
}

PhaseEntry PhaseEntry::floating(double turns) {
  if (!std::isfinite(turns)) throw std::invalid_argument("float phase is not finite");
  PhaseEntry e;
  e.kind = PhaseKind::Float;
  e.value = frac(turns);
  return e;
}

PhaseEntry PhaseEntry::negated() const {
  PhaseEntry e = *this;
  e.offset = -offset;
  e.coeff = -coeff;
  e.value = frac(-value);
  return e;
}

double PhaseEntry::approx() const { return frac(value); }

std::complex<double> PhaseEntry::power(long e) const {
  if (kind == PhaseKind::Rational) {
    std::int64_t den = offset.denominator();
    std::int64_t num = offset.numerator() % den;
    std::int64_t ered = static_cast<std::int64_t>(e) % den;
    auto prod = static_cast<std::int64_t>(static_cast<__int128>(num) * ered % den);
    if (prod < 0) prod += den;
    return unit_phase(static_cast<double>(prod) / static_cast<double>(den));
  }
  return unit_phase(std::fmod(value * static_cast<double>(e), 1.0));
}

PhaseMatrix PhaseMatrix::from_upper(int d, const std::vector<PhaseEntry>& upper) {
  if (d < 1) throw std::invalid_argument("PhaseMatrix: dimension must be positive");
  const std::size_t expected = static_cast<std::size_t>(d) * (d - 1) / 2;
  if (upper.size() != expected)
    throw std::invalid_argument("PhaseMatrix: expected " + std::to_string(expected) + " upper entries, got " +
                                std::to_string(upper.size()));
  PhaseMatrix m;
  m.d_ = d;
  m.entries_.assign(static_cast<std::size_t>(d) * d, PhaseEntry::rational(0, 1));
  std::size_t idx = 0;
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) {
      m.entries_[k * d + l] = upper[idx];
      m.entries_[l * d + k] = upper[idx].negated();
      ++idx;
    }
  std::map<std::string, double> seen;
  for (const auto& e : upper) {
    if (e.kind != PhaseKind::Irrational) continue;
    auto [it, fresh] = seen.emplace(e.tag, e.base);
    if (!fresh && std::abs(it->second - e.base) > 1e-15)
      throw std::invalid_argument("PhaseMatrix: tag '" + e.tag + "' used with two different values");
  }
  return m;
}

PhaseMatrix PhaseMatrix::pair(const PhaseEntry& theta12) { return from_upper(2, {theta12}); }

PhaseMatrix PhaseMatrix::zero(int d) {
  return from_upper(d, std::vector<PhaseEntry>(static_cast<std::size_t>(d) * (d - 1) / 2,
                                               PhaseEntry::rational(0, 1)));
}

std::complex<double> PhaseMatrix::q(int k, int l) const { return unit_phase(turns(k, l)); }

std::complex<double> PhaseMatrix::q_power(int k, int l, long e) const { return entry(k, l).power(e); }

bool PhaseMatrix::all_rational() const {
  for (const auto& e : entries_)
    if (e.kind != PhaseKind::Rational) return false;
  return true;
}

bool PhaseMatrix::any_float() const {
  for (const auto& e : entries_)
    if (e.kind == PhaseKind::Float) return true;
  return false;
}

std::map<std::string, double> PhaseMatrix::tags() const {
  std::map<std::string, double> out;
  for (int k = 0; k < d_; ++k)
    for (int l = k + 1; l < d_; ++l) {
      const auto& e = entry(k, l);
      if (e.kind == PhaseKind::Irrational) out.emplace(e.tag, e.base);
    }
  return out;
}

std::int64_t PhaseMatrix::rational_lcm() const {
  std::int64_t out = 1;
  for (const auto& e : entries_)
    if (e.kind != PhaseKind::Float) out = lcm_checked(out, e.offset.denominator());
  return out;
}

}  // namespace dlab
