#pragma once

#include "mfg/hjb.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Implicit forward step for d m / dt = A^T m: solves (I - dt A^T) m' = m.
// Conserves mass exactly (rows of A sum to zero) and preserves nonnegativity
// (M-matrix); stray negative roundoff below 1e-12 is folded back into the
// largest entry so the total is untouched.
Density fp_forward_step(const Density& m, const TransitionOperator& op, double dt);

// Solves A^T m = 0 with the normalization sum(m) = 1 by replacing one row.
// Throws NonUniquenessError when the chain is reducible (singular system or a
// significantly negative solution).
Density stationary_density(const TransitionOperator& op);

}  // namespace mfg
