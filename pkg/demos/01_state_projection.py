#!/usr/bin/env python3
# Walk through one orthogonalized memory update, piece by piece.
#
# The memory is a C_v x C_k matrix. Each step writes one (key, value) pair
# with gated strength, then projects the state back onto the set of matrices
# whose columns are orthonormal up to a fixed scale gamma. The projection is
# a polynomial iteration; the exact answer (via SVD) is only used to check it.

import numpy as np

from orthomem import (
    GateParams,
    euclidean_update,
    ns_config,
    orthogonalize,
    polar_factor,
    prescale,
    random_orthogonal_state,
    step,
    svd,
)

rng = np.random.default_rng(0)
c_v, c_k, gamma = 8, 5, 2.0

# start from a seeded on-manifold state: all singular values equal gamma
state = random_orthogonal_state(c_v, c_k, gamma=gamma, seed=1)
print("initial spectrum:", np.round(svd(state.s).sigma, 12))

# one gated write. alpha retains the old content, beta scales the new pair.
k = rng.standard_normal(c_k)
k /= np.linalg.norm(k)
v = rng.standard_normal(c_v)
gates = GateParams(alpha=0.95, beta=0.9)

s_euc = euclidean_update(state, k, v, gates)
print("after the unconstrained write:", np.round(svd(s_euc).sigma, 4))
# the spectrum has drifted off gamma; repeating this forever is what degrades
# an unconstrained recurrent memory.

# the projection: prescale so every singular value is in (0, 1], then run the
# quintic iteration p(s) = (15 s - 10 s^3 + 3 s^5) / 8 a few times.
x = prescale(s_euc)
print("prescaled spectrum:    ", np.round(svd(x).sigma, 4))
cfg = ns_config("strict", iterations=15)
y = orthogonalize(s_euc, cfg, gamma=gamma)
print("projected spectrum:    ", np.round(svd(y).sigma, 12))

# the iteration lands on the same matrix as the exact SVD-based projection
exact = gamma * polar_factor(s_euc)
print("distance to exact polar projection:", float(np.linalg.norm(y - exact)))

# step() bundles write + projection and can report per-step diagnostics
new_state, diag = step(state, k, v, gates, cfg, want_diagnostics=True)
print("orthogonality error:", diag.orth_err)
print("condition number:   ", diag.sigma[0] / diag.sigma[-1])
print("update norm:        ", round(diag.update_norm, 4))
