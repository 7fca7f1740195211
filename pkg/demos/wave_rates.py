"""Wave equation averages: split into half-waves, average, recombine.

With weighted-space data saturating the trace bound the average decays
like T^{-1/2} in every dimension; for flat-top (L^1-type) data in d >= 3
it decays like 1/T.
"""
import numpy as np

from ergorates import RadialField, WaveInitialData, make_field, wave_average_defect, wave_split
from ergorates.pde import wave_reconstructed_measure
from ergorates.rates import loglog_fit
from ergorates.spectral import DefectSample, fejer_defect, geometric_times

T = geometric_times(10, 1e4, 8)


def curve(data):
    return [DefectSample(float(t), wave_average_defect(data, t)) for t in T]


for d in (1, 2, 3, 5):
    f0 = make_field(d, "trace")
    data = WaveInitialData(f0, RadialField(d, f0.rho_max, np.zeros(f0.n)))
    print(f"trace data d={d}: slope {loglog_fit(curve(data)).slope:+.4f}")

for d in (3, 4):
    f0 = make_field(d, "flattop")
    data = WaveInitialData(f0, RadialField(d, f0.rho_max, np.zeros(f0.n)))
    print(f"flat-top data d={d}: slope {loglog_fit(curve(data)).slope:+.4f}")

# with nonzero velocity the direct path equals the Fejer integral of the reconstructed measure
f0, g0 = make_field(3, "flattop"), make_field(3, "gaussian")
data = WaveInitialData(f0, g0)
mu = wave_reconstructed_measure(wave_split(data))
for t in (5.0, 500.0):
    print(f"T={t}: direct {wave_average_defect(data, t):.10f}  measure {fejer_defect(mu, t):.10f}")
