// Seeded random matrices. Every task derives its own stream from a base seed
// so results do not depend on scheduling.

#pragma once

#include <cstdint>
#include <random>

#include "dlab/numerics.hpp"

namespace dlab {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive per-task seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Stream for task `index` under `seed`.
Rng task_rng(std::uint64_t seed, std::uint64_t index);

/// Entries i.i.d. standard complex Gaussian.
CMatrix random_gaussian(Rng& rng, std::ptrdiff_t rows, std::ptrdiff_t cols);

/// Hermitian matrix (G + G*)/2 with G Gaussian.
CMatrix random_hermitian(Rng& rng, std::ptrdiff_t n);

/// Haar-distributed unitary (QR of a Gaussian with the phase of R fixed).
CMatrix haar_unitary(Rng& rng, std::ptrdiff_t n);

/// Random isometry C^cols -> C^rows (first columns of a Haar unitary).
CMatrix random_isometry(Rng& rng, std::ptrdiff_t rows, std::ptrdiff_t cols);

/// exp(i H) for Hermitian H.
CMatrix expi_hermitian(const CMatrix& h);

}  // namespace dlab
