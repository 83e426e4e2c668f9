"""
Characteristic roots of a delayed mode
======================================

A single mode y' = mu y + kappa y(t - tau) has infinitely many exponents,
the roots of lam = mu + kappa exp(-lam tau). Each branch of the Lambert W
function gives one of them.
"""
import numpy as np

from delaystab import PreimageQuery, rightmost_roots, solve_preimage

# lam = exp(-lam): the rightmost root is the omega constant
roots = rightmost_roots(0.0, 1.0, 1.0, count=5)
for r in roots:
    print(f"branch {r.branch_index:+d}  lam = {r.value:.12f}  residual {r.residual:.1e}")

# roots come in conjugate pairs and are sorted by real part
print("real parts:", np.round([r.value.real for r in roots], 6))

# a stiff mode: the exponent sits just to the right of mu
mu = -(10 * np.pi) ** 2
print("stiff mode, rightmost root:", rightmost_roots(mu, 10.0, 0.2)[0].value)

# the inverse problem: given eta, find z with z - kappa exp(-z tau) = eta
z = solve_preimage(PreimageQuery(eta=1.0 - 2.0j, kappa=-1.5, tau=0.7))
print("preimage:", z, " check:", z - (-1.5) * np.exp(-0.7 * z))
