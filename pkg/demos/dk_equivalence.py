"""Window mass lambda^p and decay T^{-p/2} go together.

For a density |lambda|^{p-1} both constants are finite and stable under
refinement.  A logarithmic excess breaks both; testing with too large an
exponent makes the decay constant drift upward.
"""
import numpy as np

from ergorates import SpectralMeasure, dk_equivalence_report, geometric_times


def measure(p, log_excess=False, r=0.5):
    g = np.geomspace(1e-14, r, 3000)
    v = g ** (p - 1) * (np.log(1 / g) if log_excess else 1.0)
    return SpectralMeasure(density_grid=np.concatenate([-g[::-1], g]),
                           density_values=np.concatenate([v[::-1], v]))


lam = np.geomspace(1e-4, 0.5, 60)
T = geometric_times(10, 1e4, 16)

for p in (0.5, 1.0, 1.5):
    for label, mu, test_p in (("power law", measure(p), p),
                              ("log excess", measure(p, True), p),
                              ("exponent + 0.3", measure(p), p + 0.3)):
        if test_p >= 2:
            continue
        rep = dk_equivalence_report(mu, test_p, lam, T)
        print(f"p={p} {label:15s} A={rep.A_hat:8.4g} (drift {rep.A_drift:6.1%})"
              f"  B={rep.B_hat:8.4g} (drift {rep.B_drift:6.1%})  consistent={rep.consistent}")
