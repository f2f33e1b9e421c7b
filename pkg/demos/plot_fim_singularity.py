"""
Why the eavesdropper cannot estimate a shifted update
=====================================================

An agent picks a vector gamma whose entries sum to -1 and transmits
``delta + (gamma @ delta) * ones``. The map ``I + ones gamma^T`` loses one
direction, so the Fisher information the eavesdropper can build about
``delta`` is singular and no unbiased estimator has finite variance.
"""

import numpy as np

from modshift import FimContext, ShiftScheme, build_fim, closed_form_eigenvalues, make_gamma
from modshift.fedcore import Delta
from modshift.shiftdesign import shift_matrix

d = 6
delta = Delta(np.array([0.3, -1.2, 0.5, 0.1, 0.9, -0.4]), agent_id=0)

# The three built-in schemes give different gammas, all summing to -1.
for kind in ("max", "mean", "comp"):
    gamma = make_gamma(ShiftScheme(kind), delta)
    ctx = FimContext(gamma, h=1.0, sigma=0.5)
    eig = np.linalg.eigvalsh(build_fim(ctx))
    print(f"{kind:>5}: gamma sum {gamma.sum():+.3f}, smallest |eig| {np.abs(eig).min():.1e}")
    print(f"       numeric     {np.round(eig, 4)}")
    print(f"       closed form {np.round(closed_form_eigenvalues(ctx), 4)}")

# The null direction of the shift matrix is the all-ones vector.
gamma = make_gamma(ShiftScheme("mean"), delta)
print("A @ ones =", shift_matrix(gamma) @ np.ones(d))

# Break the constraint slightly and the information becomes invertible again.
bad = gamma * 0.8
eig = np.linalg.eigvalsh(build_fim(FimContext(bad, 1.0, 0.5)))
print(f"gamma sum {bad.sum():+.2f}: smallest |eig| {np.abs(eig).min():.3f}")
