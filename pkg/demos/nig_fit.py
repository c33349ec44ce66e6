"""Draw from a skewed, heavy-tailed NIG law and recover it with EM.

Run:  python3 demos/nig_fit.py
"""

import numpy as np

from factorcvar.nig import NigParams, fit_nig_em, sample_nig

truth = NigParams(
    alpha_bar=1.5,
    mu=[0.2, -0.1],
    gamma=[-0.3, 0.1],
    sigma=[[1.0, 0.4], [0.4, 0.5]],
)
x = sample_nig(truth, 20_000, seed=11)
print(f"sample mean      {x.mean(axis=0).round(3)}  (theory {truth.mu + truth.gamma})")

fit, trace = fit_nig_em(x, seed=11)
print(f"EM iterations    {trace.n_iter}, converged={trace.converged}")
print(f"log-likelihood   {trace.loglik[0]:.1f} -> {trace.loglik[-1]:.1f}")

np.set_printoptions(precision=3, suppress=True)
for name in ("alpha_bar", "mu", "gamma", "sigma"):
    print(f"\n{name}\n  true   {np.asarray(getattr(truth, name))}\n  fitted {np.asarray(getattr(fit, name))}")
