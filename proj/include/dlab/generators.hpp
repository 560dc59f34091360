// Random test tuples with a prescribed commutation defect.

#pragma once

#include "dlab/random.hpp"
#include "dlab/tuples.hpp"

namespace dlab {

/// weyl_tuple(base) (x) random diagonal unitaries, conjugated by a Haar
/// unitary, then perturbed by exp(i eps H_i) with eps bisected so that the
/// largest defect against `target` equals `delta` to relative 1e-9. `dim` must
/// be a multiple of the Weyl dimension; throws std::invalid_argument when the
/// unperturbed defect already exceeds delta.
UnitaryTuple random_almost_tuple(Rng& rng, const PhaseMatrix& base, std::ptrdiff_t dim, const PhaseMatrix& target,
                                 double delta);

}  // namespace dlab
