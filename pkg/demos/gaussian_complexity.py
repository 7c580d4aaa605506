"""Suprema of Gaussian processes over weighted lq balls: closed-form bounds
versus a Monte Carlo oracle, and how they feed the variance term.
"""

import math

import numpy as np

from mixconc import (MaxVariant, WeightedSetSpec, c_kq, gamma_bound_l1,
                     gauss_sup_lower, gauss_sup_oracle, variance_term,
                     variance_term_fixed_point)

print("=== E sup over the lq ball: oracle vs bounds ===\n")
rng = np.random.default_rng(1)
for q in (1.0, 2.0, 4.0, math.inf):
    k = 12
    spec = WeightedSetSpec(k=k, q=q, radius=1.0,
                           p=rng.uniform(0.5, 2.0, k), b=rng.uniform(0.5, 2.0, k))
    est, se = gauss_sup_oracle(spec, draws=200_000, seed=3)
    lo = gauss_sup_lower(spec)
    hi = c_kq(k, q, spec.p, spec.b, MaxVariant.PROOF_SAFE)
    print(f"  q={q!s:5}: lower {lo:7.3f} <= oracle {est:7.3f} (+-{se:.3f})"
          f" <= upper {hi:7.3f}")

print("\nThe printed max-of-Gaussians constant is too small at k = 2:")
est, se = gauss_sup_oracle(WeightedSetSpec(k=2, q=1.0, radius=1.0),
                           draws=400_000, seed=4)
from mixconc import gauss_max_bound
print(f"  E max(|z1|,|z2|) ~ {est:.4f}")
for variant in MaxVariant:
    val = gauss_max_bound(2, variant=variant)
    verdict = "holds" if val >= est - 3 * se else "FAILS"
    print(f"  {variant.value:12s}: {val:.4f}  ({verdict})")

print("\n=== variance term ===\n")
inputs = gamma_bound_l1(d=200, trWinv=25.0, M_over_lambda=40.0)
print(f"l1 complexity bound: Lambda={inputs.Lambda:.3f}, B={inputs.B:.3f}")
for nbeta in (100, 1000, 10000):
    C = 1.0 / math.sqrt(nbeta)
    closed = variance_term(inputs.with_multiplier(C))
    fixed = variance_term_fixed_point(
        lambda s, C=C: (C / 5.0) * min(inputs.Lambda * s, inputs.B),
        s_max=100.0, tol=1e-9)
    print(f"  n(beta)={nbeta:6d}: closed form {closed:.4f}"
          f"  fixed-point solver {fixed:.4f}")
print("\nThe trace branch wins for large n(beta); the log(2d) branch caps "
      "the cost when d is huge.")
