#include "dlab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "dlab/numerics.hpp"
#include "dlab/parallel.hpp"

namespace dlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("integer overflow in lattice arithmetic");
  return out;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_sub_overflow(a, b, &out)) throw std::overflow_error("integer overflow in lattice arithmetic");
  return out;
}

std::int64_t pos_mod(std::int64_t a, std::int64_t n) {
  std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

Rational snap(double turns) {
  const auto scale = static_cast<std::int64_t>(std::llround(1.0 / kSnapResolution));
  return Rational(std::llround(turns * static_cast<double>(scale)), scale);
}

TorusAngle entry_angle(const PhaseEntry& e) {
  switch (e.kind) {
    case PhaseKind::Rational:
      return {e.offset, 0};
    case PhaseKind::Irrational:
      return {e.offset, e.coeff};
    case PhaseKind::Float:
      return {snap(e.value), 0};
  }
  return {};
}

struct Arithmetic {
  std::int64_t denom = 1;
  double base = 0.0;
  std::string tag;
  bool snapped = false;
};

Arithmetic arithmetic_of(const PhaseMatrix& theta) {
  auto tags = theta.tags();
  if (tags.size() > 1)
    throw std::invalid_argument("torus: more than one irrational tag; only a single shared irrational is supported");
  Arithmetic a;
  if (!tags.empty()) {
    a.tag = tags.begin()->first;
    a.base = tags.begin()->second;
  }
  for (int k = 0; k < theta.d(); ++k)
    for (int l = 0; l < theta.d(); ++l) {
      const auto& e = theta.entry(k, l);
      if (e.kind == PhaseKind::Float) a.snapped = true;
      a.denom = lcm_checked(a.denom, entry_angle(e).offset.denominator());
    }
  return a;
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto x : v) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

double frac(long double x) {
  long double f = x - std::floor(x);
  if (f >= 1.0L) f -= 1.0L;
  return static_cast<double>(f);
}

double circ(double a, double b) {
  double t = std::abs(a - b);
  t -= std::floor(t);
  return std::min(t, 1.0 - t);
}

// Nearest-point queries in the circular ell-infinity metric, bucketed per axis.
class BucketIndex {
 public:
  BucketIndex(const std::vector<double>& pts, int d) : pts_(pts), d_(d) {
    const std::size_t m = pts.size() / d;
    b_ = std::clamp(static_cast<int>(std::floor(std::pow(static_cast<double>(m), 1.0 / d))), 1, 256);
    std::size_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= b_;
    cells_.assign(cells, {});
    for (std::size_t p = 0; p < m; ++p) cells_[cell_of(&pts[p * d])].push_back(static_cast<std::uint32_t>(p));
  }

  double nearest(const double* x) const {
    int c[3] = {0, 0, 0};
    for (int i = 0; i < d_; ++i) c[i] = std::min(b_ - 1, static_cast<int>(x[i] * b_));
    const double w = 1.0 / b_;
    double best = 1.0;
    const int kmax = b_ / 2 + 1;
    for (int k = 0; k <= kmax; ++k) {
      const int lo1 = d_ > 1 ? -k : 0, hi1 = d_ > 1 ? k : 0;
      const int lo2 = d_ > 2 ? -k : 0, hi2 = d_ > 2 ? k : 0;
      for (int o0 = -k; o0 <= k; ++o0)
        for (int o1 = lo1; o1 <= hi1; ++o1)
          for (int o2 = lo2; o2 <= hi2; ++o2) {
            if (std::max({std::abs(o0), std::abs(o1), std::abs(o2)}) != k) continue;
            std::size_t idx = 0;
            const int o[3] = {o0, o1, o2};
            for (int i = 0; i < d_; ++i) idx = idx * b_ + static_cast<std::size_t>(pos_mod(c[i] + o[i], b_));
            for (auto p : cells_[idx]) {
              double dist = 0.0;
              for (int i = 0; i < d_; ++i) dist = std::max(dist, circ(x[i], pts_[p * d_ + i]));
              best = std::min(best, dist);
            }
          }
      if (best <= k * w) break;
    }
    return best;
  }

 private:
  std::size_t cell_of(const double* x) const {
    std::size_t idx = 0;
    for (int i = 0; i < d_; ++i) idx = idx * b_ + std::min(b_ - 1, static_cast<int>(x[i] * b_));
    return idx;
  }

  const std::vector<double>& pts_;
  int d_;
  int b_ = 1;
  std::vector<std::vector<std::uint32_t>> cells_;
};

// Integer kernel {x : M x = 0} via unimodular column operations.
std::vector<std::vector<std::int64_t>> integer_kernel(std::vector<std::vector<std::int64_t>> m, std::size_t n) {
  std::vector<std::vector<std::int64_t>> u(n, std::vector<std::int64_t>(n, 0));  // u[col][row]
  for (std::size_t i = 0; i < n; ++i) u[i][i] = 1;
  auto col_axpy = [&](std::size_t dst, std::size_t src, std::int64_t q) {
    for (auto& row : m) row[dst] = checked_sub(row[dst], checked_mul(q, row[src]));
    for (std::size_t r = 0; r < n; ++r) u[dst][r] = checked_sub(u[dst][r], checked_mul(q, u[src][r]));
  };
  auto col_swap = [&](std::size_t a, std::size_t b) {
    for (auto& row : m) std::swap(row[a], row[b]);
    std::swap(u[a], u[b]);
  };
  std::size_t piv = 0;
  for (std::size_t i = 0; i < m.size() && piv < n; ++i) {
    for (;;) {
      std::size_t best = n;
      for (std::size_t c = piv; c < n; ++c)
        if (m[i][c] != 0 && (best == n || std::abs(m[i][c]) < std::abs(m[i][best]))) best = c;
      if (best == n) break;
      col_swap(piv, best);
      bool done = true;
      for (std::size_t c = piv + 1; c < n; ++c) {
        if (m[i][c] == 0) continue;
        col_axpy(c, piv, m[i][c] / m[i][piv]);
        if (m[i][c] != 0) done = false;
      }
      if (done) {
        ++piv;
        break;
      }
    }
  }
  std::vector<std::vector<std::int64_t>> out(u.begin() + static_cast<std::ptrdiff_t>(piv), u.end());
  return out;
}

// Row Hermite normal form of the lattice spanned by `rows`; zero rows dropped.
std::vector<std::vector<std::int64_t>> hermite_rows(std::vector<std::vector<std::int64_t>> rows, std::size_t n) {
  std::size_t r = 0;
  for (std::size_t j = 0; j < n && r < rows.size(); ++j) {
    for (;;) {
      std::size_t best = rows.size();
      for (std::size_t i = r; i < rows.size(); ++i)
        if (rows[i][j] != 0 && (best == rows.size() || std::abs(rows[i][j]) < std::abs(rows[best][j]))) best = i;
      if (best == rows.size()) break;
      std::swap(rows[r], rows[best]);
      bool done = true;
      for (std::size_t i = r + 1; i < rows.size(); ++i) {
        if (rows[i][j] == 0) continue;
        const std::int64_t q = rows[i][j] / rows[r][j];
        for (std::size_t c = 0; c < n; ++c) rows[i][c] = checked_sub(rows[i][c], checked_mul(q, rows[r][c]));
        if (rows[i][j] != 0) done = false;
      }
      if (done) {
        if (rows[r][j] < 0)
          for (auto& x : rows[r]) x = -x;
        for (std::size_t i = 0; i < r; ++i) {
          const std::int64_t q = static_cast<std::int64_t>(
              std::floor(static_cast<long double>(rows[i][j]) / static_cast<long double>(rows[r][j])));
          for (std::size_t c = 0; c < n; ++c) rows[i][c] = checked_sub(rows[i][c], checked_mul(q, rows[r][c]));
        }
        ++r;
        break;
      }
    }
  }
  rows.resize(r);
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Clouds

std::vector<double> TorusCloud::angles(std::size_t i) const {
  std::vector<double> out(d);
  for (int k = 0; k < d; ++k) {
    const std::size_t at = i * d + k;
    long double v = static_cast<long double>(num[at]) / static_cast<long double>(denom) +
                    static_cast<long double>(coeff[at]) * static_cast<long double>(base);
    out[k] = frac(v);
  }
  return out;
}

bool TorusCloud::contains(const std::vector<TorusAngle>& point) const {
  if (static_cast<int>(point.size()) != d) throw std::invalid_argument("TorusCloud::contains: dimension mismatch");
  std::vector<std::int64_t> key(2 * d);
  for (int k = 0; k < d; ++k) {
    const Rational& o = point[k].offset;
    if (denom % o.denominator() != 0) return false;
    key[2 * k] = pos_mod(checked_mul(o.numerator(), denom / o.denominator()), denom);
    key[2 * k + 1] = point[k].coeff;
  }
  for (std::size_t i = 0; i < size(); ++i) {
    bool eq = true;
    for (int k = 0; k < d && eq; ++k) eq = num[i * d + k] == key[2 * k] && coeff[i * d + k] == key[2 * k + 1];
    if (eq) return true;
  }
  return false;
}

TorusCloud TorusCloud::restricted(long n) const {
  TorusCloud out = *this;
  out.word_length = std::min(word_length, n);
  out.num.clear();
  out.coeff.clear();
  out.layer.clear();
  for (std::size_t i = 0; i < size(); ++i) {
    if (layer[i] > n) continue;
    for (int k = 0; k < d; ++k) {
      out.num.push_back(num[i * d + k]);
      out.coeff.push_back(coeff[i * d + k]);
    }
    out.layer.push_back(layer[i]);
  }
  return out;
}

std::vector<TorusAngle> column_generator(const PhaseMatrix& theta, int l) {
  std::vector<TorusAngle> g(theta.d());
  for (int k = 0; k < theta.d(); ++k) g[k] = entry_angle(theta.entry(k, l));
  return g;
}

TorusCloud subgroup_ball(const PhaseMatrix& theta, long N, std::size_t cap) {
  if (N < 0) throw std::invalid_argument("subgroup_ball: negative word length");
  const int d = theta.d();
  const Arithmetic ar = arithmetic_of(theta);
  TorusCloud c;
  c.d = d;
  c.word_length = N;
  c.denom = ar.denom;
  c.base = ar.base;
  c.tag = ar.tag;
  c.snapped = ar.snapped;
  c.resolution = ar.snapped ? kSnapResolution : 0.0;

  // Generators and inverses as integer steps.
  std::vector<std::vector<std::int64_t>> steps;
  for (int l = 0; l < d; ++l) {
    auto g = column_generator(theta, l);
    std::vector<std::int64_t> s(2 * d);
    for (int k = 0; k < d; ++k) {
      s[2 * k] = pos_mod(checked_mul(g[k].offset.numerator(), ar.denom / g[k].offset.denominator()), ar.denom);
      s[2 * k + 1] = g[k].coeff;
    }
    std::vector<std::int64_t> inv(2 * d);
    for (int k = 0; k < d; ++k) {
      inv[2 * k] = pos_mod(-s[2 * k], ar.denom);
      inv[2 * k + 1] = -s[2 * k + 1];
    }
    steps.push_back(std::move(s));
    steps.push_back(std::move(inv));
  }

  std::unordered_map<std::vector<std::int64_t>, int, KeyHash> seen;
  std::vector<std::vector<std::int64_t>> order;
  std::vector<std::int64_t> zero(2 * d, 0);
  seen.emplace(zero, 0);
  order.push_back(zero);
  std::vector<std::size_t> frontier{0};
  for (long n = 1; n <= N && !frontier.empty(); ++n) {
    std::vector<std::size_t> next;
    for (std::size_t f : frontier) {
      for (const auto& s : steps) {
        std::vector<std::int64_t> p = order[f];
        for (int k = 0; k < d; ++k) {
          p[2 * k] = pos_mod(p[2 * k] + s[2 * k], ar.denom);
          p[2 * k + 1] += s[2 * k + 1];
        }
        if (seen.count(p)) continue;
        if (order.size() >= cap)
          throw CapExceeded("subgroup_ball: more than " + std::to_string(cap) + " points at word length " +
                            std::to_string(n));
        seen.emplace(p, static_cast<int>(n));
        next.push_back(order.size());
        order.push_back(std::move(p));
      }
    }
    frontier = std::move(next);
  }
  for (const auto& p : order) {
    for (int k = 0; k < d; ++k) {
      c.num.push_back(p[2 * k]);
      c.coeff.push_back(p[2 * k + 1]);
    }
    c.layer.push_back(seen.at(p));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Distances

double chordal_from_turns(double r) { return 2.0 * std::sin(kPi * std::clamp(r, 0.0, 0.5)); }

double turns_from_chordal(double eta) { return std::asin(std::clamp(eta, 0.0, 2.0) / 2.0) / kPi; }

HausdorffEstimate hausdorff_to_torus(const TorusCloud& cloud, double h) {
  const int d = cloud.d;
  if (d < 1 || d > 3) throw std::invalid_argument("hausdorff_to_torus: grid mode needs 1 <= d <= 3");
  if (!(h > 0.0)) throw std::invalid_argument("hausdorff_to_torus: grid step must be positive");
  if (cloud.size() == 0) throw std::invalid_argument("hausdorff_to_torus: empty cloud");
  const long n = static_cast<long>(std::ceil(1.0 / h - 1e-12));
  double total = 1.0;
  for (int i = 0; i < d; ++i) total *= static_cast<double>(n);
  if (total > 5e7) throw CapExceeded("hausdorff_to_torus: grid of " + std::to_string(total) + " points");
  const auto g = static_cast<std::size_t>(total);

  std::vector<double> pts;
  pts.reserve(cloud.size() * d);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto a = cloud.angles(i);
    pts.insert(pts.end(), a.begin(), a.end());
  }
  BucketIndex index(pts, d);
  std::vector<double> chunk_max(chunk_count(g), 0.0);
  parallel_chunks(g, [&](int c, std::size_t b, std::size_t e) {
    double worst = 0.0;
    double x[3] = {0, 0, 0};
    for (std::size_t s = b; s < e; ++s) {
      std::size_t rest = s;
      for (int i = d - 1; i >= 0; --i) {
        x[i] = static_cast<double>(rest % n) / static_cast<double>(n);
        rest /= n;
      }
      worst = std::max(worst, index.nearest(x));
    }
    chunk_max[c] = worst;
  });
  const double r_grid = *std::max_element(chunk_max.begin(), chunk_max.end());
  // Snapping moves each point by at most half a resolution step per generator.
  const double snap_slack = cloud.snapped ? (0.5 * cloud.word_length + 1.0) * cloud.resolution : 0.0;
  HausdorffEstimate out;
  out.grid = n;
  out.lower = chordal_from_turns(r_grid - snap_slack);
  out.upper = chordal_from_turns(r_grid + 0.5 / static_cast<double>(n) + snap_slack);
  return out;
}

double orbit_covering_radius(const PhaseEntry& alpha, long K) {
  if (K < 0) throw std::invalid_argument("orbit_covering_radius: negative K");
  if (alpha.kind == PhaseKind::Rational) {
    const std::int64_t n = alpha.offset.denominator();
    const std::int64_t p = pos_mod(alpha.offset.numerator(), n);
    if (2 * K + 1 >= n) return 0.5 / static_cast<double>(n);
    std::vector<std::int64_t> pos;
    for (long k = -K; k <= K; ++k) pos.push_back(pos_mod(checked_mul(k, p), n));
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    std::int64_t gap = pos.front() + n - pos.back();
    for (std::size_t i = 1; i < pos.size(); ++i) gap = std::max(gap, pos[i] - pos[i - 1]);
    return 0.5 * static_cast<double>(gap) / static_cast<double>(n);
  }
  const long double a = alpha.kind == PhaseKind::Irrational
                            ? static_cast<long double>(boost::rational_cast<double>(alpha.offset)) +
                                  static_cast<long double>(alpha.coeff) * static_cast<long double>(alpha.base)
                            : static_cast<long double>(alpha.value);
  std::vector<double> pos;
  pos.reserve(2 * K + 1);
  for (long k = -K; k <= K; ++k) pos.push_back(frac(static_cast<long double>(k) * a));
  std::sort(pos.begin(), pos.end());
  double gap = pos.front() + 1.0 - pos.back();
  for (std::size_t i = 1; i < pos.size(); ++i) gap = std::max(gap, pos[i] - pos[i - 1]);
  return 0.5 * gap;
}

double word_ball_hausdorff(const PhaseMatrix& theta, long N) {
  if (N < 0) throw std::invalid_argument("word_ball_hausdorff: negative word length");
  if (theta.d() == 1) return 2.0;
  if (theta.d() != 2) throw std::invalid_argument("word_ball_hausdorff: closed form needs d <= 2");
  return chordal_from_turns(orbit_covering_radius(theta.entry(0, 1), N / 2));
}

// ---------------------------------------------------------------------------
// Ergodicity

const char* to_string(Ergodicity e) {
  switch (e) {
    case Ergodicity::Ergodic:
      return "ergodic";
    case Ergodicity::NonErgodic:
      return "non-ergodic";
    case Ergodicity::UnknownFloat:
      return "unknown-float";
  }
  return "?";
}

double rational_eta_q(const PhaseMatrix& theta) {
  if (!theta.all_rational()) throw std::invalid_argument("rational_eta_q: phase matrix is not all rational");
  const int d = theta.d();
  if (d == 1) return 2.0;
  if (d == 2) return chordal_from_turns(0.5 / static_cast<double>(theta.entry(0, 1).offset.denominator()));
  // The farthest point from a subset of (1/D)Z^d in the ell-infinity metric
  // has coordinates in (1/(2D))Z; scan (1/(4D))Z^d in integer units.
  TorusCloud c = subgroup_ball(theta, std::numeric_limits<int>::max());
  const std::int64_t D = c.denom, G = 4 * D;
  double cells = 1.0;
  for (int i = 0; i < d; ++i) cells *= static_cast<double>(G);
  if (cells > 4e8) throw CapExceeded("rational_eta_q: exact scan too large");
  // The distance to the subgroup is invariant under its own translations, so
  // one evaluation per coset of the grid suffices.
  const std::int64_t total = static_cast<std::int64_t>(cells + 0.5);
  std::vector<bool> seen(static_cast<std::size_t>(total), false);
  auto index = [&](const std::vector<std::int64_t>& x) {
    std::int64_t s = 0;
    for (int i = 0; i < d; ++i) s = s * G + x[i];
    return s;
  };
  std::int64_t worst = 0;
  std::vector<std::int64_t> x(d, 0), y(d, 0);
  for (std::int64_t s = 0; s < total; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    std::int64_t rest = s;
    for (int i = d - 1; i >= 0; --i) {
      x[i] = rest % G;
      rest /= G;
    }
    std::int64_t best = G;
    for (std::size_t p = 0; p < c.size(); ++p) {
      std::int64_t dist = 0;
      for (int i = 0; i < d; ++i) {
        std::int64_t t = pos_mod(x[i] - 4 * c.num[p * d + i], G);
        dist = std::max(dist, std::min(t, G - t));
        y[i] = pos_mod(x[i] + 4 * c.num[p * d + i], G);
      }
      best = std::min(best, dist);
      seen[static_cast<std::size_t>(index(y))] = true;
    }
    worst = std::max(worst, best);
  }
  return chordal_from_turns(static_cast<double>(worst) / static_cast<double>(G));
}

ErgodicityReport ergodicity_test(const PhaseMatrix& theta) {
  ErgodicityReport rep;
  if (theta.any_float()) {
    rep.verdict = Ergodicity::UnknownFloat;
    rep.note = "raw float entries carry no exact arithmetic structure";
    return rep;
  }
  const int d = theta.d();
  const Arithmetic ar = arithmetic_of(theta);
  const std::int64_t D = ar.denom;
  // Unknowns (m_1..m_d, t_1..t_d): for each column l,
  //   sum_k m_k coeff_{k,l} = 0   and   sum_k m_k D offset_{k,l} - D t_l = 0.
  std::vector<std::vector<std::int64_t>> rows;
  for (int l = 0; l < d; ++l) {
    auto g = column_generator(theta, l);
    std::vector<std::int64_t> irr(2 * d, 0), rat(2 * d, 0);
    for (int k = 0; k < d; ++k) {
      irr[k] = g[k].coeff;
      rat[k] = checked_mul(g[k].offset.numerator(), D / g[k].offset.denominator());
    }
    rat[d + l] = -D;
    rows.push_back(irr);
    rows.push_back(rat);
  }
  auto kernel = integer_kernel(rows, 2 * d);
  std::vector<std::vector<std::int64_t>> chars;
  for (const auto& v : kernel) chars.emplace_back(v.begin(), v.begin() + d);
  rep.annihilator = hermite_rows(chars, d);
  if (rep.annihilator.empty()) {
    rep.verdict = Ergodicity::Ergodic;
    rep.eta_q = 0.0;
    return rep;
  }
  rep.verdict = Ergodicity::NonErgodic;
  rep.witness = rep.annihilator.front();
  if (theta.all_rational()) {
    try {
      rep.eta_q = rational_eta_q(theta);
      rep.note = "finite closure";
    } catch (const CapExceeded&) {
      rep.note = "finite closure; eta_Q scan exceeds the work cap";
    }
  } else {
    rep.note = "closure is infinite; eta_Q not computed";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// N_eta and the planner

NEtaResult find_N_eta(const PhaseMatrix& theta, double eta, const NEtaOptions& opt) {
  if (!(eta > 0.0)) throw std::invalid_argument("find_N_eta: eta must be positive");
  const int d = theta.d();
  NEtaResult res;
  if (eta > 2.0) {
    res.n_eta = 0;
    res.hausdorff = 2.0;  // S_Q(0) is the identity; the antipode is at distance 2
    res.hausdorff_prev = 2.0;
    res.method = "trivial";
    return res;
  }
  if (d == 1) throw std::invalid_argument("find_N_eta: eta <= eta_Q = 2 for d = 1");
  if (!theta.any_float()) {
    auto rep = ergodicity_test(theta);
    if (rep.eta_q && eta <= *rep.eta_q)
      throw std::invalid_argument("find_N_eta: eta = " + std::to_string(eta) + " does not exceed eta_Q = " +
                                  std::to_string(*rep.eta_q));
  }

  if (d == 2) {
    const PhaseEntry& a = theta.entry(0, 1);
    auto ok = [&](long k) { return chordal_from_turns(orbit_covering_radius(a, k)) < eta; };
    long hi = 1;
    while (!ok(hi)) {
      if (2 * hi > opt.max_n) throw CapExceeded("find_N_eta: search limit reached");
      hi *= 2;
    }
    long lo = hi / 2;  // ok(lo) is false (or lo = 0 with radius 1/2)
    while (hi - lo > 1) {
      long mid = lo + (hi - lo) / 2;
      (ok(mid) ? hi : lo) = mid;
    }
    res.n_eta = 2 * hi;
    res.hausdorff = chordal_from_turns(orbit_covering_radius(a, hi));
    res.hausdorff_prev = chordal_from_turns(orbit_covering_radius(a, hi - 1));
    res.method = "exact: one-dimensional orbit gaps";
    return res;
  }
  if (d > 3) throw std::invalid_argument("find_N_eta: certified search needs d <= 3");

  const double h = opt.grid_fraction * turns_from_chordal(eta);
  auto upper = [&](const TorusCloud& c, long n) { return hausdorff_to_torus(c.restricted(n), h).upper; };
  long hi = 1;
  TorusCloud cloud = subgroup_ball(theta, hi, opt.cloud_cap);
  while (upper(cloud, hi) >= eta) {
    if (cloud.layer.back() < hi) throw std::invalid_argument("find_N_eta: closure reached without eta-density");
    if (2 * hi > opt.max_n) throw CapExceeded("find_N_eta: search limit reached");
    hi *= 2;
    cloud = subgroup_ball(theta, hi, opt.cloud_cap);
  }
  long lo = hi / 2;
  while (hi - lo > 1) {
    long mid = lo + (hi - lo) / 2;
    (upper(cloud, mid) < eta ? hi : lo) = mid;
  }
  if (hi == 1 && upper(cloud, 0) < eta) hi = 0;
  res.n_eta = hi;
  res.hausdorff = upper(cloud, hi);
  res.hausdorff_prev = hi > 0 ? upper(cloud, hi - 1) : 2.0;
  res.method = "grid certificate: upper estimate";
  return res;
}

AlmostGaugeCertificate almost_gauge_certificate(double delta, double eta, long n_eta) {
  if (delta < 0.0 || eta < 0.0 || n_eta < 0)
    throw std::invalid_argument("almost_gauge_certificate: inputs must be nonnegative");
  return {delta, eta, n_eta, static_cast<double>(n_eta) * delta + eta};
}

EpsDeltaPlan eps_delta_plan(const PhaseMatrix& theta, double epsilon, const NEtaOptions& opt) {
  if (!(epsilon > 0.0 && epsilon <= 2.0)) throw std::invalid_argument("eps_delta_plan: epsilon must lie in (0, 2]");
  auto rep = ergodicity_test(theta);
  if (rep.verdict != Ergodicity::Ergodic)
    throw std::invalid_argument(std::string("eps_delta_plan: phase matrix is ") + to_string(rep.verdict));
  EpsDeltaPlan p;
  p.d = theta.d();
  p.epsilon = epsilon;
  p.budget = epsilon * epsilon / 200.0;
  p.eta = epsilon * epsilon / 400.0;
  p.n_eta = find_N_eta(theta, p.eta, opt).n_eta;
  const double dm1 = p.d - 1;
  for (int j = 1; j <= 16 * 300; ++j) {
    const double delta = std::pow(10.0, -j / 16.0);
    const double used = static_cast<double>(p.n_eta) * delta + dm1 * std::sqrt(delta);
    if (used < p.budget) {
      p.delta = delta;
      p.delta_grid_index = j;
      p.residual = p.budget - used;
      p.bound = 10.0 * std::sqrt(used + p.eta);
      return p;
    }
  }
  throw std::runtime_error("eps_delta_plan: no delta on the search grid fits the budget");
}

}  // namespace dlab
