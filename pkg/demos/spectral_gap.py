"""Spectral gap: the time average converges like 1/(gamma T).

A Hermitian matrix with no eigenvalues in (-gamma, gamma) other than 0.
Build it from an explicit matrix, compare the time-domain quadrature with
the closed form, then check gamma * T * defect <= ||f|| over a sweep.
"""
import numpy as np

from ergorates import HermitianModel, defect_curve, geometric_times, time_average_exact, time_domain_defect
from ergorates.rates import loglog_fit

rng = np.random.default_rng(0)
gamma = 0.5

# random orthonormal basis, eigenvalues with a gap around 0 and a kernel
Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
eig = np.array([0.0, gamma, -gamma, 1.0, -1.3, 2.0, 3.5, -4.0])
H = Q @ np.diag(eig) @ Q.T
f = rng.standard_normal(8)
f /= np.linalg.norm(f)
model = HermitianModel.from_matrix(H, f)
print("eigenvalues:", np.round(model.eigenvalues, 6))

# the time-domain average agrees with sinc of the eigenvalues
for T in (1.0, 10.0, 100.0):
    print(f"T={T:6.1f}  quadrature {time_domain_defect(model, T, 4096):.12f}"
          f"  exact {time_average_exact(model, T):.12f}")

T = geometric_times(2.0, 1e4, 16)
curve = defect_curve(model.measure(), T)
worst = max(gamma * s.T * s.defect for s in curve)
print(f"max gamma*T*defect over {len(T)} times: {worst:.4f} (bound 1)")

fit = loglog_fit(curve)
print(f"envelope slope {fit.slope:.3f} (expected -1)")
