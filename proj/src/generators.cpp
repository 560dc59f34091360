#include "dlab/generators.hpp"

#include <string>

namespace dlab {

UnitaryTuple random_almost_tuple(Rng& rng, const PhaseMatrix& base, std::ptrdiff_t dim, const PhaseMatrix& target,
                                 double delta) {
  if (base.d() != target.d()) throw std::invalid_argument("random_almost_tuple: phase matrices differ in d");
  if (!(delta >= 0.0)) throw std::invalid_argument("random_almost_tuple: negative delta");
  UnitaryTuple weyl = weyl_tuple(base);
  const auto n = weyl.dim();
  if (dim % n != 0)
    throw std::invalid_argument("random_almost_tuple: dimension " + std::to_string(dim) +
                                " is not a multiple of the Weyl dimension " + std::to_string(n));
  const auto r = dim / n;
  const int d = base.d();
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  CMatrix w = haar_unitary(rng, dim);
  OperatorTuple start;
  for (int i = 0; i < d; ++i) {
    CVector diag(r);
    for (std::ptrdiff_t k = 0; k < r; ++k) diag(k) = unit_phase(unif(rng));
    CMatrix dm = diag.asDiagonal();
    start.push_back(w * kron(weyl[i], dm) * w.adjoint());
  }
  std::vector<CMatrix> herm;
  for (int i = 0; i < d; ++i) {
    CMatrix h = random_hermitian(rng, dim);
    herm.push_back(h / operator_norm(h));
  }
  auto perturbed = [&](double eps) {
    OperatorTuple t;
    for (int i = 0; i < d; ++i) t.push_back(expi_hermitian(eps * herm[i]) * start[i]);
    return t;
  };
  auto defect = [&](double eps) { return max_defect(commutation_defect(perturbed(eps), target)); };

  double f0 = defect(0.0);
  if (f0 > delta * (1 + 1e-9))
    throw std::invalid_argument("random_almost_tuple: unperturbed defect " + std::to_string(f0) +
                                " already exceeds delta");
  double lo = 0.0, hi = std::max(delta, 1e-6);
  while (defect(hi) < delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 10.0) throw std::runtime_error("random_almost_tuple: defect does not reach delta");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    double f = defect(mid);
    if (std::abs(f - delta) <= 1e-9 * delta) return UnitaryTuple(perturbed(mid));
    (f < delta ? lo : hi) = mid;
  }
  return UnitaryTuple(perturbed(0.5 * (lo + hi)));
}

}  // namespace dlab
