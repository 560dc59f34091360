// Test-only reference computations, written independently of the library paths
// they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// Whether closed ell-infinity squares of half side r (r < 1/2) centred at the
/// points cover the unit torus. Sweep over x with a min-count segment tree on y.
inline bool squares_cover_torus(const std::vector<double>& xs, const std::vector<double>& ys, double r) {
  struct Box {
    double x0, x1, y0, y1;
  };
  std::vector<Box> boxes;
  auto split = [](double c, double r, std::vector<std::pair<double, double>>& out) {
    double a = c - r, b = c + r;
    if (a < 0) {
      out.push_back({0.0, b});
      out.push_back({a + 1.0, 1.0});
    } else if (b > 1) {
      out.push_back({a, 1.0});
      out.push_back({0.0, b - 1.0});
    } else {
      out.push_back({a, b});
    }
  };
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<std::pair<double, double>> ix, iy;
    split(xs[i], r, ix);
    split(ys[i], r, iy);
    for (auto [x0, x1] : ix)
      for (auto [y0, y1] : iy) boxes.push_back({x0, x1, y0, y1});
  }
  std::vector<double> yc{0.0, 1.0};
  for (const auto& b : boxes) {
    yc.push_back(b.y0);
    yc.push_back(b.y1);
  }
  std::sort(yc.begin(), yc.end());
  yc.erase(std::unique(yc.begin(), yc.end()), yc.end());
  const std::size_t m = yc.size() - 1;  // elementary intervals
  // Intervals of zero length never need covering; give them a large base count.
  std::vector<int> mn(4 * m, 0), add(4 * m, 0);
  auto build = [&](auto&& self, std::size_t node, std::size_t lo, std::size_t hi) -> void {
    if (hi - lo == 1) {
      mn[node] = yc[lo + 1] > yc[lo] ? 0 : 1 << 29;
      return;
    }
    std::size_t mid = (lo + hi) / 2;
    self(self, 2 * node, lo, mid);
    self(self, 2 * node + 1, mid, hi);
    mn[node] = std::min(mn[2 * node], mn[2 * node + 1]);
  };
  build(build, 1, 0, m);
  auto update = [&](auto&& self, std::size_t node, std::size_t lo, std::size_t hi, std::size_t a, std::size_t b,
                    int v) -> void {
    if (b <= lo || hi <= a) return;
    if (a <= lo && hi <= b) {
      mn[node] += v;
      add[node] += v;
      return;
    }
    std::size_t mid = (lo + hi) / 2;
    self(self, 2 * node, lo, mid, a, b, v);
    self(self, 2 * node + 1, mid, hi, a, b, v);
    mn[node] = std::min(mn[2 * node], mn[2 * node + 1]) + add[node];
  };
  struct Event {
    double x;
    int type;  // +1 open, -1 close
    std::size_t a, b;
  };
  std::vector<Event> ev;
  for (const auto& bx : boxes) {
    std::size_t a = std::lower_bound(yc.begin(), yc.end(), bx.y0) - yc.begin();
    std::size_t b = std::lower_bound(yc.begin(), yc.end(), bx.y1) - yc.begin();
    ev.push_back({bx.x0, +1, a, b});
    ev.push_back({bx.x1, -1, a, b});
  }
  std::sort(ev.begin(), ev.end(), [](const Event& p, const Event& q) { return p.x < q.x; });
  // At each event abscissa apply openings and closings, then test the slab to the next one.
  std::size_t i = 0;
  double x = 0.0;
  while (x < 1.0) {
    while (i < ev.size() && ev[i].x <= x) {
      update(update, 1, 0, m, ev[i].a, ev[i].b, ev[i].type);
      ++i;
    }
    const double next = i < ev.size() ? std::min(ev[i].x, 1.0) : 1.0;
    if (next > x && mn[1] <= 0) return false;
    x = next;
    if (i >= ev.size()) break;
  }
  return true;
}

/// Least covering radius (turns) by bisection on squares_cover_torus.
inline double covering_radius_2d(const std::vector<double>& xs, const std::vector<double>& ys, double tol = 1e-12) {
  double lo = 0.0, hi = 0.5;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    (squares_cover_torus(xs, ys, mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Brute-force max over a grid with spacing 1/n of the circular ell-infinity
/// distance to the nearest point (points given coordinate-major, d per point).
inline double grid_max_min(const std::vector<double>& pts, int d, long n) {
  auto circ = [](double a, double b) {
    double t = std::fmod(std::abs(a - b), 1.0);
    return std::min(t, 1.0 - t);
  };
  long total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  double worst = 0.0;
  std::vector<double> x(d);
  for (long s = 0; s < total; ++s) {
    long rest = s;
    for (int i = d - 1; i >= 0; --i) {
      x[i] = static_cast<double>(rest % n) / n;
      rest /= n;
    }
    double best = 1.0;
    for (std::size_t p = 0; p < pts.size() / d; ++p) {
      double dist = 0.0;
      for (int i = 0; i < d; ++i) dist = std::max(dist, circ(x[i], pts[p * d + i]));
      best = std::min(best, dist);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

using Point = std::complex<double>;

/// Convex hull (counter-clockwise, monotone chain); collinear points dropped.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  auto cross = [](Point o, Point a, Point b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
  };
  if (pts.size() < 3) return pts;
  std::vector<Point> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

inline double segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = std::norm(ab);
  double t = len2 > 0 ? ((p - a) * std::conj(ab)).real() / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

/// Euclidean distance from p to a convex polygon given counter-clockwise (0 inside).
inline double polygon_distance(Point p, const std::vector<Point>& poly) {
  if (poly.size() == 1) return std::abs(p - poly[0]);
  bool inside = poly.size() >= 3;
  double best = INFINITY;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i], b = poly[(i + 1) % poly.size()];
    best = std::min(best, segment_distance(p, a, b));
    const double cr = (b.real() - a.real()) * (p.imag() - a.imag()) - (b.imag() - a.imag()) * (p.real() - a.real());
    if (cr < 0) inside = false;
  }
  return inside ? 0.0 : best;
}

/// Hausdorff distance between two convex polygons; attained at a vertex.
inline double polygon_hausdorff(const std::vector<Point>& p, const std::vector<Point>& q) {
  double worst = 0.0;
  for (auto v : p) worst = std::max(worst, polygon_distance(v, q));
  for (auto v : q) worst = std::max(worst, polygon_distance(v, p));
  return worst;
}

inline double chordal(double turns) { return 2.0 * std::sin(kPi * std::min(turns, 0.5)); }

}  // namespace oracle
