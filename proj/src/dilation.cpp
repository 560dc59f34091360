#include "dlab/dilation.hpp"

#include <cmath>
#include <string>

namespace dlab {

namespace {

std::string idx(int k) { return std::to_string(k + 1); }

void require_unitary(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + " is not square");
  double drift = unitarity_defect(m);
  if (drift > kUnitarityTol)
    throw std::invalid_argument(std::string(what) + " is not unitary (drift " + std::to_string(drift) + ")");
}

long ring_lo(long L) { return -(L / 2); }
long ring_hi(long L) { return L - 1 - L / 2; }

// Blocks of W(c+1) u - q u W(c) along the ring: the seam block and the
// largest of the others.
std::pair<double, double> seam_and_interior(const ConjugateOrbit& orbit, const CMatrix& u, cplx q, long L) {
  double seam = 0.0, interior = 0.0;
  for (long c = ring_lo(L); c <= ring_hi(L); ++c) {
    long next = ring_centered(c + 1, L);
    double b = operator_norm(CMatrix(orbit(next) * u - q * (u * orbit(c))));
    if (c == ring_hi(L))
      seam = b;
    else
      interior = std::max(interior, b);
  }
  return {seam, interior};
}

}  // namespace

OperatorTuple densify(const StructuredTuple& t) {
  OperatorTuple out;
  out.reserve(t.size());
  for (const auto& a : t) out.push_back(a.densify());
  return out;
}

// ---------------------------------------------------------------------------
// Windows

WindowIsometry::WindowIsometry(std::ptrdiff_t base_dim, long ring_size, long half_width)
    : base_dim_(base_dim), ring_size_(ring_size), half_width_(half_width) {
  if (base_dim <= 0) throw std::invalid_argument("WindowIsometry: base dimension must be positive");
  if (half_width < 0) throw std::invalid_argument("WindowIsometry: negative half width");
  if (ring_size < 2 * half_width + 2)
    throw std::invalid_argument("WindowIsometry: ring size " + std::to_string(ring_size) +
                                " is below 2N+2 = " + std::to_string(2 * half_width + 2));
}

bool WindowIsometry::contains(long residue) const {
  long c = ring_centered(residue, ring_size_);
  return c >= -half_width_ && c <= half_width_;
}

CMatrix WindowIsometry::dense() const {
  require_dense_cap(base_dim_ * ring_size_, "WindowIsometry::dense");
  CMatrix out = CMatrix::Zero(base_dim_ * ring_size_, base_dim_);
  const double a = 1.0 / std::sqrt(static_cast<double>(2 * half_width_ + 1));
  for (std::ptrdiff_t i = 0; i < base_dim_; ++i)
    for (long c = -half_width_; c <= half_width_; ++c) out(i * ring_size_ + ring_mod(c, ring_size_), i) = a;
  return out;
}

long choose_window(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("choose_window: delta must lie in (0,1), got " + std::to_string(delta));
  // (N+1)^2 delta < 4 and (2N+1)^2 delta > 1, the squared form of the double inequality.
  for (long n = 1;; ++n) {
    double a = static_cast<double>(n + 1), b = static_cast<double>(2 * n + 1);
    if (b * b * delta > 1.0) {
      if (a * a * delta < 4.0) return n;
      throw std::logic_error("choose_window: no admissible N");
    }
  }
}

CMatrix compress(const WeightedShiftOperator& a, const WindowIsometry& w) {
  if (a.ring_size() != w.ring_size() || a.block_dim() != w.base_dim())
    throw std::invalid_argument("compress: operator and window shapes differ");
  CMatrix out = CMatrix::Zero(a.block_dim(), a.block_dim());
  for (const auto& [k, wk] : a.weights())
    if (w.contains(k) && w.contains(k + a.offset())) out += wk;
  return out / static_cast<double>(2 * w.half_width() + 1);
}

CMatrix compress(const CMatrix& a, const WindowIsometry& w) {
  CMatrix iota = w.dense();
  if (a.rows() != iota.rows() || a.cols() != iota.rows())
    throw std::invalid_argument("compress: operator and window shapes differ");
  return iota.adjoint() * a * iota;
}

OperatorTuple compress(const StructuredTuple& t, const WindowIsometry& w) {
  OperatorTuple out;
  for (const auto& a : t) out.push_back(compress(a, w));
  return out;
}

WeightedShiftOperator compress_second(const WeightedShiftOperator2D& a, long half_width) {
  WindowIsometry w(a.block_dim(), a.ring2(), half_width);
  WeightedShiftOperator out(a.ring1(), a.offset1(), a.block_dim());
  std::map<long, CMatrix> acc;
  for (const auto& [kr, wk] : a.weights()) {
    if (!w.contains(kr.second) || !w.contains(kr.second + a.offset2())) continue;
    auto it = acc.find(kr.first);
    if (it == acc.end())
      acc.emplace(kr.first, wk);
    else
      it->second += wk;
  }
  const double scale = 1.0 / static_cast<double>(2 * half_width + 1);
  for (auto& [k, s] : acc) out.set_weight(k, scale * s);
  return out;
}

// ---------------------------------------------------------------------------
// Conjugate orbits

ConjugateOrbit::ConjugateOrbit(const CMatrix& u, const CMatrix& v, const PhaseEntry& q, long lo, long hi)
    : lo_(std::min(lo, 0L)), hi_(std::max(hi, 0L)) {
  const auto n = static_cast<std::size_t>(hi_ - lo_ + 1);
  w_.resize(n);
  CMatrix p = identity(u.rows());
  for (long j = 0; j <= hi_; ++j) {
    w_[j - lo_] = q.power(j) * (p * v * p.adjoint());
    p = u * p;
  }
  p = u.adjoint();
  for (long j = -1; j >= lo_; --j) {
    w_[j - lo_] = q.power(j) * (p * v * p.adjoint());
    p = u.adjoint() * p;
  }
}

const CMatrix& ConjugateOrbit::operator()(long j) const {
  if (j < lo_ || j > hi_) throw std::out_of_range("ConjugateOrbit: index outside the precomputed range");
  return w_[j - lo_];
}

// ---------------------------------------------------------------------------
// Pairs

PairDilation dilate_pair(const CMatrix& u, const CMatrix& v, const PhaseEntry& q, long ring_size) {
  require_unitary(u, "dilate_pair: u");
  require_unitary(v, "dilate_pair: v");
  if (u.rows() != v.rows()) throw std::invalid_argument("dilate_pair: u and v differ in size");
  if (ring_size < 4) throw std::invalid_argument("dilate_pair: ring size must be at least 4");
  const long L = ring_size;
  const cplx q1 = q.power(1);

  ConjugateOrbit orbit(u, v, q, ring_lo(L), ring_hi(L));
  PairDilation out{WeightedShiftOperator::constant(L, 1, u), WeightedShiftOperator(L, 0, u.rows())};
  for (long c = ring_lo(L); c <= ring_hi(L); ++c) out.v_tilde.set_weight(c, orbit(c));

  out.input_defect = operator_norm(CMatrix(v * u - q1 * (u * v)));
  auto [seam, interior] = seam_and_interior(orbit, u, q1, L);
  out.wrap_defect = seam;
  out.interior_defect = interior;
  out.output_defect = std::max(seam, interior);
  return out;
}

// ---------------------------------------------------------------------------
// Steps

long default_ring_size(const PhaseMatrix& theta, int m, long half_width, std::ptrdiff_t base_dim) {
  const long base = 2 * half_width + 2;
  std::int64_t l = 1;
  for (int j = 0; j < theta.d(); ++j) {
    if (j == m) continue;
    const auto& e = theta.entry(m, j);
    if (e.kind != PhaseKind::Rational) return base;
    l = lcm_checked(l, e.offset.denominator());
  }
  std::int64_t L = (base + l - 1) / l * l;
  if (L * base_dim > kDenseCap) return base;
  return static_cast<long>(L);
}

StepResult dilate_step(const OperatorTuple& u, const PhaseMatrix& theta, int m, const StepOptions& opt) {
  const int d = static_cast<int>(u.size());
  if (d != theta.d()) throw std::invalid_argument("dilate_step: tuple and phase matrix differ in d");
  if (m < 1 || m >= d)
    throw std::out_of_range("dilate_step: generator index " + std::to_string(m + 1) + " outside 2.." +
                            std::to_string(d));
  const auto D = u.front().rows();
  for (int j = 0; j < d; ++j) require_unitary(u[j], "dilate_step: generator");

  StepResult res;
  auto& cert = res.cert;
  cert.m = m;
  cert.defect_in = commutation_defect(u, theta);
  const Eigen::MatrixXd& ref = opt.reference_defects ? *opt.reference_defects : cert.defect_in;
  cert.delta = ref.maxCoeff();
  if (opt.half_width >= 0)
    cert.half_width = opt.half_width;
  else if (cert.delta > kExactDefect)
    cert.half_width = choose_window(cert.delta);
  else
    throw std::invalid_argument("dilate_step: exactly commuting input needs an explicit window half width");
  const long N = cert.half_width;
  const long L = opt.ring_size > 0 ? opt.ring_size : default_ring_size(theta, m, N, D);
  cert.ring_size = L;
  if (static_cast<double>(L) * D * D * d > 2e8)
    throw CapExceeded("dilate_step: ring of size " + std::to_string(L) + " with blocks of size " +
                      std::to_string(D) + " is too large to store");
  WindowIsometry window(D, L, N);

  double prefix = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) prefix = std::max(prefix, cert.defect_in(i, j));
  cert.ledger.info("precondition: max defect among generators 1.." + idx(m - 1), prefix,
                   prefix > 1e-10 ? "earlier generators are not exactly commuting" : "");

  // Output tuple.
  res.out.assign(d, WeightedShiftOperator(L, 0, D));
  res.out[m] = WeightedShiftOperator::constant(L, 1, u[m]);
  cert.wrap.assign(d, 0.0);
  for (int j = 0; j < d; ++j) {
    if (j == m) continue;
    const PhaseEntry& q = theta.entry(m, j);
    ConjugateOrbit orbit(u[m], u[j], q, ring_lo(L), ring_hi(L));
    for (long c = ring_lo(L); c <= ring_hi(L); ++c) res.out[j].set_weight(c, orbit(c));
    auto [seam, interior] = seam_and_interior(orbit, u[m], q.power(1), L);
    cert.wrap[j] = seam;
    cert.interior_max = std::max(cert.interior_max, interior);
  }
  cert.defect_out = commutation_defect(res.out, theta);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (i != m && j != m)
        cert.preservation_max =
            std::max(cert.preservation_max, std::abs(cert.defect_out(i, j) - cert.defect_in(i, j)));

  // Compression errors.
  const CMatrix P = opt.prior_iota ? *opt.prior_iota : identity(D);
  if (P.rows() != D) throw std::invalid_argument("dilate_step: prior window has the wrong shape");
  cert.errors.assign(d, 0.0);
  cert.raw_errors.assign(d, 0.0);
  for (int j = 0; j < d; ++j) {
    CMatrix diff = u[j] - compress(res.out[j], window);
    cert.raw_errors[j] = operator_norm(diff);
    cert.errors[j] = opt.prior_iota ? operator_norm(CMatrix(P.adjoint() * diff * P)) : cert.raw_errors[j];
    cert.step_error = std::max(cert.step_error, cert.errors[j]);
  }

  // Ledger.
  auto& lg = cert.ledger;
  const double nd = static_cast<double>(N);
  const double window_term = 1.0 / (2.0 * nd + 1.0);
  const double drift_factor = nd * (nd + 1.0) / (2.0 * nd + 1.0);
  lg.claim_flag("interior commutation of generator " + idx(m), "max non-seam block <= 1e-12", 1e-12,
                cert.interior_max, cert.interior_max <= 1e-12);
  for (int j = 0; j < d; ++j) {
    if (j == m) continue;
    lg.claim("seam defect (" + idx(m) + "," + idx(j) + ")", "||q^L u^L v u^-L - v|| <= L delta_in", L * cert.defect_in(m, j),
             cert.wrap[j]);
  }
  if (d > 2)
    lg.claim_flag("defect preservation for pairs avoiding " + idx(m), "|delta_out - delta_in| <= 1e-10", 1e-10,
                  cert.preservation_max, cert.preservation_max <= 1e-10);
  lg.claim_flag("window identity for generator " + idx(m), "||U_m - iota* (U_m (x) S) iota|| = 1/(2N+1)",
                window_term, cert.raw_errors[m], std::abs(cert.raw_errors[m] - window_term) <= 1e-12);
  lg.claim("compression of generator " + idx(m), "1/(2N+1)", window_term, cert.errors[m]);
  for (int j = 0; j < d; ++j) {
    if (j == m) continue;
    lg.claim("compression of generator " + idx(j), "N(N+1)/(2N+1) delta", drift_factor * ref(m, j), cert.errors[j]);
  }
  if (cert.delta > kExactDefect)
    lg.claim("step error", "max_j ||U_j - iota* U^_j iota|| < sqrt(delta)", std::sqrt(cert.delta), cert.step_error);
  else
    lg.claim("step error", "max_j ||U_j - iota* U^_j iota|| <= 1/(2N+1)", window_term, cert.step_error);
  lg.info("ring size L", static_cast<double>(L));
  lg.info("window half width N", static_cast<double>(N));
  return res;
}

// ---------------------------------------------------------------------------
// Full iteration

FullDilation dilate_full(const UnitaryTuple& u, const PhaseMatrix& theta, const DilationOptions& opt) {
  const int d = u.d();
  if (d != theta.d()) throw std::invalid_argument("dilate_full: tuple and phase matrix differ in d");
  FullDilation out;
  auto& cert = out.cert;
  cert.defect_in = commutation_defect(u, theta);
  cert.delta = cert.defect_in.maxCoeff();
  if (opt.half_width >= 0)
    cert.half_width = opt.half_width;
  else if (cert.delta > kExactDefect)
    cert.half_width = choose_window(cert.delta);
  else
    throw std::invalid_argument("dilate_full: exactly commuting input needs an explicit window half width");
  const long N = cert.half_width;
  const auto D1 = u.dim();

  if (d == 1) {
    out.v_theta = {WeightedShiftOperator::constant(1, 0, u[0])};
    out.iota = identity(D1);
    cert.defect_out = Eigen::MatrixXd::Zero(1, 1);
    cert.total_per_generator = {0.0};
    cert.ledger.claim("total compression error", "(d-1) sqrt(delta) = 0", 0.0, 0.0);
    return out;
  }

  OperatorTuple cur = u.matrices();
  CMatrix P = identity(D1);
  for (int m = 1; m < d; ++m) {
    StepOptions so;
    so.ring_size = opt.ring_size;
    so.half_width = N;
    so.prior_iota = &P;
    so.reference_defects = &cert.defect_in;
    out.inputs.push_back(cur);
    StepResult step = dilate_step(cur, theta, m, so);
    const long L = step.cert.ring_size;
    cert.ring_sizes.push_back(L);
    if (m + 1 < d) {
      cur = densify(step.out);
      P = WindowIsometry(cur.front().rows() / L, L, N).dense() * P;
    }
    cert.error_sum += step.cert.step_error;
    cert.ledger.merge("step " + idx(m) + ": ", step.cert.ledger);
    out.step_outputs.push_back(step.out);
    cert.steps.push_back(std::move(step.cert));
  }
  out.v_theta = out.step_outputs.back();
  out.iota = P;

  // Composite compression iota* V iota, evaluated through the structure of the last ring.
  const long Llast = cert.ring_sizes.back();
  WindowIsometry last(out.v_theta.front().block_dim(), Llast, N);
  cert.total_per_generator.assign(d, 0.0);
  for (int j = 0; j < d; ++j) {
    CMatrix c = P.adjoint() * compress(out.v_theta[j], last) * P;
    cert.total_per_generator[j] = operator_norm(CMatrix(u[j] - c));
    cert.total_error = std::max(cert.total_error, cert.total_per_generator[j]);
  }
  cert.defect_out = commutation_defect(out.v_theta, theta);

  // Each pair ends with the seam value of the last step that dilated one of its members.
  double seam_mismatch = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      seam_mismatch = std::max(seam_mismatch, std::abs(cert.defect_out(i, j) - cert.steps[j - 1].wrap[i]));

  auto& lg = cert.ledger;
  const double dm1 = static_cast<double>(d - 1);
  const double window_term = 1.0 / (2.0 * N + 1.0);
  if (cert.delta > kExactDefect) {
    lg.claim("sum of step errors", "sum_m e_m < (d-1) sqrt(delta)", dm1 * std::sqrt(cert.delta), cert.error_sum);
    lg.claim("total compression error", "||U - iota* V iota|| < (d-1) sqrt(delta)", dm1 * std::sqrt(cert.delta),
             cert.total_error);
  } else {
    lg.claim("sum of step errors", "sum_m e_m <= (d-1)/(2N+1)", dm1 * window_term, cert.error_sum);
    lg.claim("total compression error", "||U - iota* V iota|| <= (d-1)/(2N+1)", dm1 * window_term,
             cert.total_error);
  }
  lg.claim("triangle inequality", "||U - iota* V iota|| <= sum_m e_m", cert.error_sum, cert.total_error);
  lg.claim_flag("final defects are seam values", "|delta_V(i,j) - seam(i,j)| <= 1e-10", 1e-10, seam_mismatch,
                seam_mismatch <= 1e-10);
  lg.info("delta", cert.delta);
  lg.info("max defect of V_Theta", cert.defect_out.maxCoeff(), "seam blocks of the cyclic truncation");
  return out;
}

UnitaryTuple universal_surrogate(const PhaseMatrix& theta, int grid) {
  if (grid < 1) throw std::invalid_argument("universal_surrogate: grid size must be positive");
  UnitaryTuple base = weyl_tuple(theta);
  const int d = theta.d();
  const auto n = base.dim();
  long cells = 1;
  for (int i = 0; i < d; ++i) {
    cells *= grid;
    require_dense_cap(cells * n, "universal_surrogate");
  }
  OperatorTuple out(d, CMatrix::Zero(cells * n, cells * n));
  std::vector<int> a(d, 0);
  for (long cell = 0; cell < cells; ++cell) {
    long rest = cell;
    for (int i = d - 1; i >= 0; --i) {
      a[i] = static_cast<int>(rest % grid);
      rest /= grid;
    }
    for (int i = 0; i < d; ++i)
      out[i].block(cell * n, cell * n, n, n) = unit_phase(static_cast<double>(a[i]) / grid) * base[i];
  }
  return UnitaryTuple(std::move(out));
}

}  // namespace dlab
