"""Schrodinger averages on R^d: defect slopes -min(d/4, 1).

Radial data with a smooth flat-top Fourier transform (f^(0) != 0).  The
spectral measure comes from the coarea formula; the d=1 curve is also
recomputed by integrating the evolution in time.
"""
import time

from ergorates import (
    IDENTITY,
    defect_curve,
    geometric_times,
    global_lq_norm,
    loglog_fit,
    make_field,
    schrodinger_defect_timedomain,
    schrodinger_measure,
)
from ergorates.pde import suggested_t_nodes
from ergorates.spectral import DefectSample

T = geometric_times(10, 1e4, 16)
curves = {}
for d in (1, 2, 3, 4, 5):
    t0 = time.perf_counter()
    field = make_field(d, "flattop")
    mu = schrodinger_measure(field)
    curves[d] = defect_curve(mu, T)
    fit = loglog_fit(curves[d])
    print(f"d={d}: slope {fit.slope:+.4f}  predicted {-min(d / 4, 1):+.2f}"
          f"  mass check {mu.density_mass() / field.mass() - 1:+.1e}  ({time.perf_counter() - t0:.1f} s)")

# the same d=1 rate from the time domain, on compactly supported small data
small = make_field(1, "flattop", rho_max=1.0, n=2 ** 13, a=0.5, b=1.0)
td = [DefectSample(float(t), schrodinger_defect_timedomain(small, IDENTITY, t, suggested_t_nodes(t, 1.0)))
      for t in geometric_times(10, 1e4, 4)]
print(f"d=1 time-domain slope {loglog_fit(td).slope:+.4f}")

# global-in-time integrability: finite iff q * rate > 1
for d, q in ((1, 3.0), (1, 5.0), (3, 1.2), (5, 1.5)):
    print(f"d={d} q={q}: L^q_T norm {global_lq_norm(curves[d], q, 10.0)}")
