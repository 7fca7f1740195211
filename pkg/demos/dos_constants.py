"""Density-of-states bounds and the constants of the rate.

For H = phi(-Laplacian) on R^d the DoS bound psi depends on the subspace:
weighted L^2 (trace lemma) or L^1 cap L^2.  Each power-law bound
c |lambda|^{p-1} gives a rate T^{-ell/2} with ell = min(p - eps, 2).
"""
import math

from ergorates import (
    IDENTITY,
    SQUARE_ROOT,
    DoSBudget,
    bound_constant,
    psi_l1,
    psi_weighted,
    rate_exponent_powerlaw,
    schrodinger_dos,
    wave_dos,
)

eps, r = 0.01, 0.5

print("psi at lambda = 0.25:")
print("  Schrodinger weighted", psi_weighted(IDENTITY, 0.25))
print("  wave weighted       ", psi_weighted(SQUARE_ROOT, 0.25))
for d in (1, 2, 3):
    print(f"  Schrodinger L1, d={d}", psi_l1(IDENTITY, d, 0.25))

print()
print(f"{'model':12s} {'d':>2s} {'subspace':9s} {'c':>8s} {'p':>5s} {'ell/2':>6s} {'C':>8s}")
for name, family in (("schrodinger", schrodinger_dos), ("wave", wave_dos)):
    for d in (1, 3, 5):
        for sub in ("weighted", "l1l2"):
            dos = family(d, sub)
            ell = rate_exponent_powerlaw(dos.p, eps)
            budget = DoSBudget.from_powerlaw(dos, dos.p - eps, r)
            C = math.sqrt(budget.capital_psi + r ** -2)
            print(f"{name:12s} {d:2d} {sub:9s} {dos.c:8.4f} {dos.p:5.2f} {ell / 2:6.3f} {C:8.2f}")

# the T-dependent part of the constant fades when ell < 2
budget = DoSBudget.from_powerlaw(schrodinger_dos(1, "weighted"), 0.5 - eps, r)
for T in (2.0, 1e2, 1e4):
    print(f"T={T:8.0f}  C(T)^2 = {bound_constant(budget, T):.3f}")
