#include "dlab/reverse.hpp"

#include <cmath>
#include <string>

namespace dlab {

namespace {

std::string idx(int k) { return std::to_string(k + 1); }

long ring_lo(long L) { return -(L / 2); }
long ring_hi(long L) { return L - 1 - L / 2; }

double max_abs_entry(const CMatrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

// Entrywise gap between the doubled operator and the block sum, read off the
// weights through the permutation instead of dense matrices.
double structural_residual(const ReverseStepResult& r) {
  const auto& dec = r.decomposition;
  const long L2 = dec.ring2;
  double worst = 0.0;
  for (std::size_t j = 0; j < r.doubled.size(); ++j) {
    const auto& a = r.doubled[j];
    if (a.offset1() % L2 != a.offset2()) return INFINITY;  // not reduced by the diagonals
    for (const auto& [kr, w] : a.weights()) {
      const long ell = ring_mod(kr.second - kr.first, L2);
      const CMatrix* b = dec.blocks[ell].block[j].weight(kr.first);
      worst = std::max(worst, b ? max_abs_entry(CMatrix(*b - w)) : max_abs_entry(w));
    }
    for (const auto& blk : dec.blocks)
      for (const auto& [k, w] : blk.block[j].weights())
        if (!a.weight(k, k + blk.ell)) worst = std::max(worst, max_abs_entry(w));
  }
  return worst;
}

}  // namespace

double block_identity_residual(const ReverseStepResult& r) {
  const auto& dec = r.decomposition;
  const std::ptrdiff_t D = dec.base_dim;
  const long L1 = dec.ring1, L2 = dec.ring2;
  const std::ptrdiff_t n = D * L1 * L2;
  require_dense_cap(n, "block_identity_residual");
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  for (std::ptrdiff_t s = 0; s < n; ++s) perm.indices()(s) = static_cast<int>(dec.permutation[s]);
  double worst = 0.0;
  const std::ptrdiff_t bd = D * L1;
  for (std::size_t j = 0; j < r.doubled.size(); ++j) {
    CMatrix permuted = perm * r.doubled[j].densify() * perm.transpose();
    CMatrix sum = CMatrix::Zero(n, n);
    for (std::size_t b = 0; b < dec.blocks.size(); ++b)
      sum.block(b * bd, b * bd, bd, bd) = dec.blocks[b].block[j].densify();
    worst = std::max(worst, max_abs_entry(CMatrix(permuted - sum)));
  }
  return worst;
}

ReverseStepResult reverse_dilate_step(const OperatorTuple& u, const StructuredTuple& u_hat, const PhaseMatrix& theta,
                                      int m, const ReverseOptions& opt) {
  const int d = static_cast<int>(u.size());
  if (d != theta.d() || static_cast<int>(u_hat.size()) != d)
    throw std::invalid_argument("reverse_dilate_step: tuple sizes and phase matrix disagree");
  if (m < 1 || m >= d) throw std::out_of_range("reverse_dilate_step: generator index outside 2..d");
  const auto D = u.front().rows();
  const long L1 = u_hat.front().ring_size();
  const long L2 = opt.ring2 > 0 ? opt.ring2 : L1;
  if (L1 % L2 != 0)
    throw std::invalid_argument("reverse_dilate_step: second ring " + std::to_string(L2) + " does not divide " +
                                std::to_string(L1));

  ReverseStepResult res;
  res.m = m;
  res.phases.assign(d, PhaseEntry::rational(0, 1));
  for (int j = 0; j < d; ++j)
    if (j != m) res.phases[j] = theta.entry(m, j);

  // Provenance: u_hat must be the forward output at index m built from u.
  std::vector<ConjugateOrbit> orbits;
  orbits.reserve(d);
  for (int j = 0; j < d; ++j) {
    const long lo = std::min(ring_lo(L1), ring_lo(L1) - ring_hi(L2));
    const long hi = std::max(ring_hi(L1), ring_hi(L1) - ring_lo(L2));
    orbits.emplace_back(u[m], u[j], res.phases[j], lo, hi);
  }
  double provenance = 0.0;
  for (int j = 0; j < d; ++j) {
    const auto& a = u_hat[j];
    if (a.block_dim() != D || a.ring_size() != L1 || a.offset() != (j == m ? 1 : 0))
      throw std::invalid_argument("reverse_dilate_step: input was not produced by dilate_step at index " + idx(m));
    for (long c = ring_lo(L1); c <= ring_hi(L1); ++c) {
      const CMatrix* w = a.weight(c);
      if (!w) throw std::invalid_argument("reverse_dilate_step: input has a zero block, not a dilate_step output");
      provenance = std::max(provenance, max_abs_entry(CMatrix(*w - (j == m ? u[m] : orbits[j](c)))));
    }
  }
  if (provenance > 1e-10)
    throw std::invalid_argument("reverse_dilate_step: input differs from the dilate_step output by " +
                                std::to_string(provenance));

  // Defects of the input along column m.
  Eigen::MatrixXd defect_in = commutation_defect(u, theta);
  for (int j = 0; j < d; ++j)
    if (j != m) res.delta_in = std::max(res.delta_in, defect_in(m, j));
  if (opt.half_width >= 0)
    res.half_width = opt.half_width;
  else if (res.delta_in > kExactDefect)
    res.half_width = choose_window(res.delta_in);
  else
    throw std::invalid_argument("reverse_dilate_step: exactly commuting input needs an explicit window half width");
  const long N = res.half_width;
  if (L2 < 2 * N + 2)
    throw std::invalid_argument("reverse_dilate_step: ring size " + std::to_string(L2) + " is below 2N+2 = " +
                                std::to_string(2 * N + 2));
  if (static_cast<double>(L1) * L2 * D * D * d > 2e8)
    throw CapExceeded("reverse_dilate_step: double ring too large to store");

  // Doubled tuple.
  for (int j = 0; j < d; ++j) {
    if (j == m) {
      WeightedShiftOperator2D a(L1, L2, 1, 1, D);
      for (long k = 0; k < L1; ++k)
        for (long r = 0; r < L2; ++r) a.set_weight(k, r, u[m]);
      res.doubled.push_back(std::move(a));
      continue;
    }
    WeightedShiftOperator2D a(L1, L2, 0, 0, D);
    for (long k = ring_lo(L1); k <= ring_hi(L1); ++k)
      for (long r = ring_lo(L2); r <= ring_hi(L2); ++r) a.set_weight(k, r, orbits[j](k - r));
    res.doubled.push_back(std::move(a));
  }

  // Diagonal blocks.
  auto& dec = res.decomposition;
  dec.ring1 = L1;
  dec.ring2 = L2;
  dec.base_dim = D;
  dec.permutation.resize(static_cast<std::size_t>(D * L1 * L2));
  for (std::ptrdiff_t i = 0; i < D; ++i)
    for (long k = 0; k < L1; ++k)
      for (long r = 0; r < L2; ++r) {
        const long ell = ring_mod(r - k, L2);
        dec.permutation[(i * L1 + k) * L2 + r] = ell * (D * L1) + i * L1 + k;
      }
  for (long e = 0; e < L2; ++e) {
    GaugeBlock g;
    g.ell = ring_centered(e, L2);
    g.lambda.assign(d, cplx(1.0, 0.0));
    for (int j = 0; j < d; ++j)
      if (j != m) g.lambda[j] = res.phases[j].power(-g.ell);
    for (int j = 0; j < d; ++j) {
      const auto& a = res.doubled[j];
      WeightedShiftOperator b(L1, a.offset1(), D);
      for (long k = 0; k < L1; ++k) b.set_weight(k, *a.weight(k, k + e));
      if (j != m)
        for (const auto& [k, w] : b.weights())
          g.rotation_deviation = std::max(g.rotation_deviation, operator_norm(CMatrix(w - orbits[j](-g.ell))));
      g.block.push_back(std::move(b));
    }
    dec.blocks.push_back(std::move(g));
  }

  // Compression onto the first ring.
  res.errors.assign(d, 0.0);
  for (int j = 0; j < d; ++j) {
    WeightedShiftOperator c = compress_second(res.doubled[j], N);
    res.errors[j] = ws_norm(ws_sub(u_hat[j], c));
    res.compression_error = std::max(res.compression_error, res.errors[j]);
  }

  // Ledger.
  auto& lg = res.ledger;
  const double nd = static_cast<double>(N);
  const double window_term = 1.0 / (2.0 * nd + 1.0);
  const double drift_factor = nd * (nd + 1.0) / (2.0 * nd + 1.0);
  const bool dense_ok = D * L1 * L2 <= kDenseCap;
  const double residual = dense_ok ? block_identity_residual(res) : structural_residual(res);
  lg.claim_flag("block identity", dense_ok ? "P U^^ P^T = direct sum of blocks, entrywise <= 1e-12"
                                           : "blockwise weights agree through the permutation, <= 1e-12",
                1e-12, residual, residual <= 1e-12);
  lg.claim_flag("block count", "one block per residue of the second ring", static_cast<double>(L2),
                static_cast<double>(dec.blocks.size()), static_cast<long>(dec.blocks.size()) == L2);

  double gauge_gap = 0.0, rotation = 0.0;
  for (const auto& g : dec.blocks) {
    OperatorTuple model(d);
    for (int j = 0; j < d; ++j) model[j] = j == m ? u[m] : orbits[j](-g.ell);
    gauge_gap = std::max(gauge_gap, (commutation_defect(model, theta) - defect_in).cwiseAbs().maxCoeff());
    rotation = std::max(rotation, g.rotation_deviation);
  }
  lg.claim_flag("gauge model defects", "blocks (U_m (x) S, lambda_j U_m^-l U_j U_m^l) keep the input defects, <= 1e-10",
                1e-10, gauge_gap, gauge_gap <= 1e-10);
  lg.info("ring deviation from constant gauge blocks", rotation, "vanishes when the ring closes exactly");

  double bound = window_term;
  lg.claim_flag("window identity for generator " + idx(m), "||U^_m - iota* U^^_m iota|| = 1/(2N+1)", window_term,
                res.errors[m], std::abs(res.errors[m] - window_term) <= 1e-12);
  for (int j = 0; j < d; ++j) {
    if (j == m) continue;
    lg.claim("compression of generator " + idx(j), "N(N+1)/(2N+1) delta_in(" + idx(m) + "," + idx(j) + ")",
             drift_factor * defect_in(m, j), res.errors[j]);
    bound = std::max(bound, drift_factor * defect_in(m, j));
  }
  if (res.delta_in > kExactDefect && N == choose_window(res.delta_in))
    lg.claim("reverse step error", "max_j ||U^_j - iota* U^^_j iota|| < sqrt(delta_in)", std::sqrt(res.delta_in),
             res.compression_error);
  else
    lg.claim("reverse step error", "max_j ||U^_j - iota* U^^_j iota|| <= max(1/(2N+1), N(N+1)/(2N+1) delta_in)",
             bound, res.compression_error);
  lg.info("delta_in", res.delta_in);
  lg.info("second ring size", static_cast<double>(L2));
  lg.info("window half width N", static_cast<double>(N));
  return res;
}

ReverseStepResult reverse_dilate_pair(const CMatrix& u, const CMatrix& v, const PhaseEntry& q, long ring1,
                                      long ring2, long half_width) {
  const PhaseMatrix theta = PhaseMatrix::pair(q.negated());
  OperatorTuple t{v, u};
  StepOptions so;
  so.ring_size = ring1;
  if (half_width >= 0) {
    so.half_width = half_width;
  } else {
    const double delta = commutation_defect(t, theta)(0, 1);
    if (delta <= kExactDefect)
      throw std::invalid_argument("reverse_dilate_pair: exactly commuting input needs an explicit window half width");
    so.half_width = choose_window(delta);
  }
  StepResult fwd = dilate_step(t, theta, 1, so);
  ReverseOptions ro;
  ro.ring2 = ring2;
  ro.half_width = so.half_width;
  return reverse_dilate_step(t, fwd.out, theta, 1, ro);
}

UtagResult utag_pipeline(const UnitaryTuple& u, const PhaseMatrix& theta, const UtagOptions& opt) {
  UtagResult res;
  res.forward = dilate_full(u, theta, opt.forward);
  const auto& fc = res.forward.cert;
  const int d = u.d();
  auto& lg = res.ledger;
  lg.merge("forward: ", fc.ledger);
  const double dm1 = static_cast<double>(d - 1);
  const double sq = std::sqrt(fc.delta);
  const long N = fc.half_width;

  double bound_sum = 0.0;
  std::vector<std::vector<std::vector<cplx>>> step_points;
  for (int k = 0; k + 1 < d; ++k) {
    const int m = k + 1;
    const OperatorTuple& in = res.forward.inputs[k];
    const auto& out = res.forward.step_outputs[k];
    const long L1 = out.front().ring_size();
    const long L2 = opt.ring2 > 0 ? opt.ring2 : L1;

    // Window for this step: chosen from its own column defect, shrunk to fit the ring.
    Eigen::MatrixXd din = commutation_defect(in, theta);
    double dcol = 0.0;
    for (int j = 0; j < d; ++j)
      if (j != m) dcol = std::max(dcol, din(m, j));
    ReverseOptions ro;
    ro.ring2 = L2;
    ro.half_width = dcol > kExactDefect ? std::min(choose_window(dcol), (L2 - 2) / 2) : N;
    ReverseStepResult r = reverse_dilate_step(in, out, theta, m, ro);

    const double nd = static_cast<double>(r.half_width);
    double step_bound = 1.0 / (2.0 * nd + 1.0);
    for (int j = 0; j < d; ++j)
      if (j != m) step_bound = std::max(step_bound, nd * (nd + 1.0) / (2.0 * nd + 1.0) * din(m, j));
    if (dcol > kExactDefect && r.half_width == choose_window(dcol)) step_bound = std::sqrt(dcol);
    bound_sum += step_bound;
    res.reverse_error += r.compression_error;
    res.wrap_allowance += std::max(0.0, step_bound - sq);

    // Sup form: every gauge-rotated summand compresses with the same error.
    double sup = 0.0;
    std::vector<std::vector<cplx>> pts;
    for (const auto& g : r.decomposition.blocks) {
      double e = 0.0;
      for (int j = 0; j < d; ++j) {
        WeightedShiftOperator c = ws_scale(compress_second(r.doubled[j], r.half_width), g.lambda[j]);
        e = std::max(e, ws_norm(ws_sub(ws_scale(out[j], g.lambda[j]), c)));
      }
      sup = std::max(sup, e);
      pts.push_back(g.lambda);
    }
    const std::string p = "reverse step " + idx(m) + ": ";
    lg.merge(p, r.ledger);
    lg.claim_flag(p + "sup form over gauge summands", "sup_lambda d(lambda U^ -> lambda U^^) = d(U^ -> U^^)",
                  r.compression_error, sup, std::abs(sup - r.compression_error) <= 1e-10);
    step_points.push_back(std::move(pts));
    res.reverse.push_back(std::move(r));
  }

  // Finite gauge set: products of one point per step.
  std::size_t total = 1;
  bool over = false;
  for (const auto& s : step_points) {
    if (over || total * s.size() > opt.lambda_cap)
      over = true;
    else
      total *= s.size();
  }
  if (d > 1 && !over) {
    res.lambda = {std::vector<cplx>(d, cplx(1.0, 0.0))};
    for (const auto& s : step_points) {
      std::vector<std::vector<cplx>> next;
      next.reserve(res.lambda.size() * s.size());
      for (const auto& a : res.lambda)
        for (const auto& b : s) {
          std::vector<cplx> c(d);
          for (int j = 0; j < d; ++j) c[j] = a[j] * b[j];
          next.push_back(std::move(c));
        }
      res.lambda = std::move(next);
    }
  }
  lg.info("gauge set size", static_cast<double>(over ? 0 : res.lambda.size()),
          over ? "above the enumeration cap, not enumerated"
                                 : "finite truncation of the countable set; shift blocks add L1-th roots on U_m");

  res.forward_error = fc.total_error;
  const double fwd_bound = fc.delta > kExactDefect ? dm1 * sq : dm1 / (2.0 * N + 1.0);
  lg.claim("d_rD(U -> V_Theta)", "||U - iota* V iota|| < (d-1) sqrt(delta)", fwd_bound, res.forward_error);
  lg.claim("d_rD(V_Theta -> U')", "sum_m r_m < sum_m bound_m", bound_sum, res.reverse_error);
  lg.claim("d_rD(V_Theta -> U') against (d-1) sqrt(delta)", "sum_m r_m < (d-1) sqrt(delta) + wraparound allowance",
           dm1 * sq + res.wrap_allowance, res.reverse_error);
  lg.info("wraparound allowance", res.wrap_allowance,
          "excess of the step bounds over sqrt(delta); reported, not absorbed into the stated constant");
  return res;
}

}  // namespace dlab
