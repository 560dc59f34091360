#include "dlab/random.hpp"

#include <cmath>

namespace dlab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng task_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5851f42d4c957f2dULL)));
}

CMatrix random_gaussian(Rng& rng, std::ptrdiff_t rows, std::ptrdiff_t cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  // Column-major fill order is fixed, so streams reproduce exactly.
  for (std::ptrdiff_t j = 0; j < cols; ++j)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      double re = g(rng);
      double im = g(rng);
      m(i, j) = cplx(re, im) / std::sqrt(2.0);
    }
  return m;
}

CMatrix random_hermitian(Rng& rng, std::ptrdiff_t n) {
  CMatrix g = random_gaussian(rng, n, n);
  return (g + g.adjoint()) / 2.0;
}

CMatrix haar_unitary(Rng& rng, std::ptrdiff_t n) {
  CMatrix g = random_gaussian(rng, n, n);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    cplx d = r(i, i);
    double a = std::abs(d);
    q.col(i) *= a > 0 ? d / a : cplx(1.0);
  }
  return q;
}

CMatrix random_isometry(Rng& rng, std::ptrdiff_t rows, std::ptrdiff_t cols) {
  return haar_unitary(rng, rows).leftCols(cols);
}

CMatrix expi_hermitian(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) phases(i) = std::polar(1.0, es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace dlab
