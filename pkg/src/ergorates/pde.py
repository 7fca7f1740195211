"""Fourier-side models for ``H = phi(-Laplacian)`` on ``R^d`` with radial data.

Everything is expressed through the radial modulus of the Fourier transform,
sampled on a midpoint grid ``rho_k = (k + 1/2) * rho_max / n`` (the origin is
never a node).  The spectral measure of ``f`` under ``H`` follows from the
coarea formula; time averages of the Schrodinger and wave evolutions are
computed either through that measure or by integrating in time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dos import IDENTITY, SymbolFunction, sphere_area
from .rates import loglog_fit
from .spectral import DefectSample, SpectralMeasure, sinc, time_average_phase

DIVERGES = math.inf


def _interp0(x, grid, values):
    """Linear interpolation that extrapolates the first cell toward the origin."""
    x = np.asarray(x, dtype=float)
    out = np.interp(x, grid, values)
    below = x < grid[0]
    if np.any(below):
        slope = (values[1] - values[0]) / (grid[1] - grid[0])
        out = np.where(below, values[0] + slope * (x - grid[0]), out)
    return out


def _interp_power(x, grid, values):
    """Linear interpolation after factoring out the power law seen at the origin.

    ``values ~ c rho^s`` near 0 with ``s`` read off the first two nodes;
    ``values / rho^s`` is interpolated linearly (extrapolating the first
    cell) and multiplied back.  This is exact for ``rho^{d-1}`` times a
    constant, so the convex factor does not make the result overshoot.
    """
    x = np.asarray(x, dtype=float)
    s = 0.0
    if values[0] > 0 and values[1] > 0:
        s = math.log(values[1] / values[0]) / math.log(grid[1] / grid[0])
    reduced = _interp0(x, grid, values / grid ** s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, x ** s * reduced, 0.0)
    return np.maximum(out, 0.0)


class LowFrequencyDivergence(ValueError):
    """``H^{-1/2} g`` is not square integrable for the given velocity data."""


@dataclass(frozen=True)
class RadialField:
    """Radial Fourier modulus ``|f^(rho)|`` of a function on ``R^d``."""

    d: int
    rho_max: float
    profile: np.ndarray

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("dimension must be an integer >= 1")
        if not self.rho_max > 0:
            raise ValueError("rho_max must be positive")
        prof = np.array(self.profile, dtype=float).ravel()
        if prof.size < 2:
            raise ValueError("profile needs at least 2 samples")
        if not np.all(np.isfinite(prof)) or np.any(prof < 0):
            raise ValueError("profile values must be finite and nonnegative")
        prof.setflags(write=False)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "rho_max", float(self.rho_max))
        object.__setattr__(self, "profile", prof)

    @property
    def n(self) -> int:
        return self.profile.size

    @property
    def spacing(self) -> float:
        return self.rho_max / self.n

    @property
    def grid(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.spacing

    def radial_mass_density(self) -> np.ndarray:
        """``|S^{d-1}| rho^{d-1} |f^(rho)|^2`` at the nodes."""
        return sphere_area(self.d) * self.grid ** (self.d - 1) * self.profile ** 2

    def mass(self) -> float:
        """``||f||_{L^2}^2`` by the midpoint rule in ``rho``."""
        return float(self.spacing * self.radial_mass_density().sum())

    def norm(self) -> float:
        return math.sqrt(self.mass())

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.interp(rho, self.grid, self.profile)
        return np.where(rho > self.rho_max, 0.0, out)

    @classmethod
    def from_function(cls, d: int, func, rho_max: float = 8.0, n: int = 2 ** 15) -> "RadialField":
        grid = (np.arange(n) + 0.5) * (rho_max / n)
        return cls(d, rho_max, func(grid))

    def dumps(self) -> str:
        lines = [f"{self.d} {self.rho_max:.17g} {self.n}"]
        lines += [f"{r:.17g} {v:.17g}" for r, v in zip(self.grid, self.profile)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RadialField":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 3:
            raise ValueError("header must be 'd rho_max n'")
        d, rho_max, n = int(rows[0][0]), float(rows[0][1]), int(rows[0][2])
        body = np.array(rows[1:], dtype=float)
        if body.shape != (n, 2):
            raise ValueError(f"expected {n} lines of 'rho value', got {body.shape[0]}")
        field = cls(d, rho_max, body[:, 1])
        if not np.allclose(body[:, 0], field.grid, rtol=1e-12, atol=0):
            raise ValueError("radii do not match the midpoint grid implied by the header")
        return field

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "RadialField":
        return cls.loads(Path(path).read_text())


# -- profile presets -----------------------------------------------------------

def _bump(x):
    return np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)


def flattop_profile(rho, a: float = 2.0, b: float = 4.0):
    """Smooth (C-infinity) cutoff: 1 on ``[0, a]``, 0 beyond ``b``."""
    t = np.clip((np.asarray(rho, float) - a) / (b - a), 0.0, 1.0)
    up, down = _bump(1.0 - t), _bump(t)
    return up / (up + down)


def gaussian_profile(rho, width: float = 1.0):
    return np.exp(-0.5 * (np.asarray(rho, float) / width) ** 2)


def box_profile(rho, a: float = 1.0):
    return np.where(np.asarray(rho, float) <= a, 1.0, 0.0)


def trace_profile(rho, d: int, a: float = 2.0, b: float = 4.0):
    """``rho^{-(d-1)/2}`` times a flat-top cutoff.

    Its spectral density under ``-Laplacian`` behaves like ``lambda^{-1/2}``
    near zero (and like a constant under ``sqrt(-Laplacian)``), i.e. it
    saturates the weighted-space DoS bound.
    """
    rho = np.asarray(rho, float)
    return rho ** (-(d - 1) / 2.0) * flattop_profile(rho, a, b)


PRESETS = ("flattop", "gaussian", "box", "trace")


def make_field(d: int, preset: str = "flattop", rho_max: float = 8.0, n: int = 2 ** 15,
               a: float = 2.0, b: float = 4.0, width: float = 1.0) -> RadialField:
    """Build one of the preset radial fields."""
    if preset == "flattop":
        func = lambda r: flattop_profile(r, a, b)  # noqa: E731
    elif preset == "gaussian":
        func = lambda r: gaussian_profile(r, width)  # noqa: E731
    elif preset == "box":
        func = lambda r: box_profile(r, a)  # noqa: E731
    elif preset == "trace":
        func = lambda r: trace_profile(r, d, a, b)  # noqa: E731
    else:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    return RadialField.from_function(d, func, rho_max, n)


# -- Schrodinger-type operators -------------------------------------------------

def _edge_grid(edges: np.ndarray, head_cells: int, near_zero: int, decades: float) -> np.ndarray:
    # the first head_cells cells get geometric nodes reaching `decades` below them
    k = min(head_cells, edges.size - 2)
    head = np.geomspace(edges[k] * 10.0 ** (-decades), edges[k], near_zero)[:-1]
    return np.concatenate([head, edges[k:]])


def lambda_grid_for(field: RadialField, phi: SymbolFunction = IDENTITY, head_cells: int = 32,
                    near_zero: int = 400, decades: float = 12.0) -> np.ndarray:
    """Spectral grid induced by the cell edges of ``field``'s radial grid.

    The first ``head_cells`` cells are replaced by ``near_zero`` geometric
    nodes spanning ``decades`` further decades, which keeps Simpson accurate
    for densities that are singular at the origin.
    """
    edges = phi.forward((np.arange(1, field.n + 1) * field.spacing) ** 2)
    return _edge_grid(edges, head_cells, near_zero, decades)


def _check_range(lam: np.ndarray, top: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size < 2 or np.any(np.diff(lam) <= 0):
        raise ValueError("lambda grid must be strictly increasing with >= 2 nodes")
    if lam[0] <= 0 or lam[-1] > top * (1 + 1e-12):
        raise ValueError(f"lambda grid must lie in (0, {top:.6g}]")
    return lam


def schrodinger_measure(field: RadialField, phi: SymbolFunction = IDENTITY,
                        lambda_grid=None, mass_rtol: float = 1e-5) -> SpectralMeasure:
    """Spectral measure of ``f`` under ``phi(-Laplacian)`` via the coarea formula.

    ``density(lambda) = |S^{d-1}| rho^{d-1} |f^(rho)|^2 / (2 rho phi'(rho^2))``
    at ``rho = sqrt(phi^{-1}(lambda))``.  The radial mass density
    ``rho^{d-1} |f^|^2`` is what gets interpolated between nodes (as a local
    power law), so profiles with an integrable blow-up at the origin are
    handled gracefully.  There
    are no atoms: the Laplacian on ``R^d`` has no eigenvalues.
    """
    if lambda_grid is None:
        lambda_grid = lambda_grid_for(field, phi)
    lam = _check_range(lambda_grid, float(phi.forward(field.rho_max ** 2)))
    x = phi.inverse(lam)
    rho = np.sqrt(x)
    radial = _interp_power(rho, field.grid, field.grid ** (field.d - 1) * field.profile ** 2)
    radial = np.where(rho > field.rho_max, 0.0, radial)
    density = sphere_area(field.d) * radial / (2.0 * rho * phi.derivative(x))
    return SpectralMeasure(density_grid=lam, density_values=density,
                           total_mass=field.mass(), mass_rtol=mass_rtol)


def schrodinger_defect_multiplier(field: RadialField, phi: SymbolFunction, T: float) -> float:
    """``||P^T f||`` using the exact time average ``sinc(T phi(rho^2))`` per radius."""
    m = sinc(T * phi.forward(field.grid ** 2))
    return math.sqrt(field.spacing * float(np.sum(m ** 2 * field.radial_mass_density())))


def schrodinger_defect_timedomain(field: RadialField, phi: SymbolFunction, T: float,
                                  t_nodes: int, rule: str = "gauss") -> float:
    """``||(1/2T) int_{-T}^{T} e^{itH} f dt||`` with the time integral done by quadrature.

    At each radius the phase ``e^{i t phi(rho^2)}`` is averaged over the
    quadrature nodes; the sine part vanishes on the symmetric node set and
    is not accumulated.  ``H`` has a trivial kernel, so this is the defect.
    """
    if int(t_nodes) < 2:
        raise ValueError("need at least 2 time nodes")
    m = time_average_phase(phi.forward(field.grid ** 2), T, t_nodes, rule)
    return math.sqrt(field.spacing * float(np.sum(m ** 2 * field.radial_mass_density())))


def suggested_t_nodes(T: float, omega_max: float, minimum: int = 64) -> int:
    """Gauss-Legendre node count keeping ``omega_max * panel width <= 12``."""
    panels = max(1, math.ceil(2.0 * T * omega_max / 12.0))
    return max(minimum, 16 * panels)


# -- wave equation -------------------------------------------------------------

@dataclass(frozen=True)
class WaveInitialData:
    f0: RadialField
    g0: RadialField

    def __post_init__(self):
        a, b = self.f0, self.g0
        if (a.d, a.rho_max, a.n) != (b.d, b.rho_max, b.n):
            raise ValueError("position and velocity data must share dimension and grid")


@dataclass(frozen=True)
class WaveSystemField:
    """Fourier radial form of ``f_+- = (sqrt(H) f +- i d_t f) / 2``.

    ``plus`` and ``minus`` are complex arrays on the midpoint grid.
    """

    d: int
    rho_max: float
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        p = np.array(self.plus, dtype=complex)
        m = np.array(self.minus, dtype=complex)
        if p.shape != m.shape or p.ndim != 1:
            raise ValueError("components must be 1-d arrays on a shared grid")
        p.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "plus", p)
        object.__setattr__(self, "minus", m)

    @property
    def n(self) -> int:
        return self.plus.size

    @property
    def spacing(self) -> float:
        return self.rho_max / self.n

    @property
    def grid(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.spacing

    def swapped(self) -> "WaveSystemField":
        return WaveSystemField(self.d, self.rho_max, self.minus, self.plus)

    def norm_squared(self) -> float:
        w = sphere_area(self.d) * self.grid ** (self.d - 1)
        return float(self.spacing * np.sum(w * (np.abs(self.plus) ** 2 + np.abs(self.minus) ** 2)))


def _check_inverse_sqrt(g: RadialField, probe: int = 64) -> None:
    """Reject velocity data for which ``g^(rho) / rho`` is not in radial L^2 near 0."""
    k = min(probe, g.n)
    rho = g.grid[:k]
    integrand = (g.profile[:k] / rho) ** 2 * rho ** (g.d - 1)
    pos = integrand > 0
    if pos.sum() < 4:
        return
    slope = np.polyfit(np.log(rho[pos]), np.log(integrand[pos]), 1)[0]
    if slope <= -1.0 + 1e-2:
        raise LowFrequencyDivergence(
            f"|g^(rho)/rho|^2 rho^(d-1) ~ rho^{slope:.3f} near 0 is not integrable"
        )


def wave_split(data: WaveInitialData) -> WaveSystemField:
    """First-order reduction: ``f_+- = (rho f0^ +- i g0^) / 2`` on the Fourier side."""
    _check_inverse_sqrt(data.g0)
    rho = data.f0.grid
    re = 0.5 * rho * data.f0.profile
    im = 0.5 * data.g0.profile
    return WaveSystemField(data.f0.d, data.f0.rho_max, re + 1j * im, re - 1j * im)


def reconstruct_position(system: WaveSystemField) -> np.ndarray:
    """``H^{-1/2}(f_+ + f_-)`` at the nodes (complex)."""
    return (system.plus + system.minus) / system.grid


def reconstruct_velocity(system: WaveSystemField) -> np.ndarray:
    """``-i (f_+ - f_-)`` at the nodes (complex)."""
    return -1j * (system.plus - system.minus)


def _wave_lambda_grid(system: WaveSystemField, head_cells=32, near_zero=400, decades=12.0):
    return _edge_grid(np.arange(1, system.n + 1) * system.spacing, head_cells, near_zero, decades)


def wave_measure(system: WaveSystemField, lambda_grid=None, mass_rtol: float = 1e-5) -> SpectralMeasure:
    """Spectral measure of ``F_0 = (f_+, f_-)`` under ``K = diag(sqrt(H), -sqrt(H))``.

    The ``f_+`` component contributes the ``sqrt(H)`` measure at positive
    ``lambda``; ``f_-`` contributes it mirrored to negative ``lambda``.
    ``K`` has empty kernel, so there are no atoms.
    """
    lam = _check_range(_wave_lambda_grid(system) if lambda_grid is None else lambda_grid,
                       system.rho_max)
    S = sphere_area(system.d)
    w = system.grid ** (system.d - 1)
    # sqrt symbol: the coarea Jacobian is 1, lambda = rho
    dens_plus = S * _interp_power(lam, system.grid, w * np.abs(system.plus) ** 2)
    dens_minus = S * _interp_power(lam, system.grid, w * np.abs(system.minus) ** 2)
    grid = np.concatenate([-lam[::-1], lam])
    values = np.concatenate([dens_minus[::-1], dens_plus])
    return SpectralMeasure(density_grid=grid, density_values=values,
                           total_mass=system.norm_squared(), mass_rtol=mass_rtol)


def wave_reconstructed_measure(system: WaveSystemField, lambda_grid=None,
                               mass_rtol: float = 1e-5) -> SpectralMeasure:
    """``sqrt(H)``-spectral measure of ``H^{-1/2}(f_+ + f_-)``.

    Its Fejer integral is the squared norm of the averaged wave solution.
    """
    lam = _check_range(_wave_lambda_grid(system) if lambda_grid is None else lambda_grid,
                       system.rho_max)
    u = reconstruct_position(system)
    radial = sphere_area(system.d) * system.grid ** (system.d - 1) * np.abs(u) ** 2
    total = float(system.spacing * radial.sum())
    density = _interp_power(lam, system.grid, radial)
    return SpectralMeasure(density_grid=lam, density_values=density,
                           total_mass=total, mass_rtol=mass_rtol)


def _refined_grid(system: WaveSystemField, T: float, resolution: float):
    k = max(1, math.ceil(system.spacing * resolution * T / math.pi))
    n = system.n * k
    h = system.rho_max / n
    return (np.arange(n) + 0.5) * h, h


def wave_average_defect(data: WaveInitialData, T: float, resolution: float = 16.0) -> float:
    """``||P^T(f0, g0)||_{L^2}`` for the wave equation.

    Each component of ``F_0`` is multiplied by ``sinc(T lambda)`` at its
    ``K``-eigenvalue (``+rho`` for ``f_+``, ``-rho`` for ``f_-``), the two are
    recombined through ``H^{-1/2}`` and the radial L^2 norm is taken.  When
    the radial grid is too coarse for ``T`` the components are linearly
    interpolated onto a finer midpoint grid first.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    system = wave_split(data)
    return _wave_defect_from_system(system, T, resolution)


def _wave_defect_from_system(system: WaveSystemField, T: float, resolution: float = 16.0) -> float:
    # work with amplitudes rho^{(d-3)/2} f_+- whose squared moduli are radial
    # mass densities of H^{-1/2} f_+-; they stay bounded for the data of interest,
    # so linear interpolation onto a finer grid is safe
    scale = system.grid ** ((system.d - 3) / 2.0)
    amp_plus, amp_minus = scale * system.plus, scale * system.minus
    rho, h = _refined_grid(system, T, resolution)
    if rho.size != system.n:
        amp_plus = _interp0(rho, system.grid, amp_plus.real) + 1j * _interp0(rho, system.grid, amp_plus.imag)
        amp_minus = _interp0(rho, system.grid, amp_minus.real) + 1j * _interp0(rho, system.grid, amp_minus.imag)
    averaged = sinc(T * rho) * amp_plus + sinc(-T * rho) * amp_minus
    return math.sqrt(h * sphere_area(system.d) * float(np.sum(np.abs(averaged) ** 2)))


def wave_defect_timedomain(data: WaveInitialData, T: float, t_nodes: int,
                           rule: str = "gauss") -> float:
    """Time-domain oracle: average ``f^(t) = cos(t rho) f0^ + sin(t rho)/rho g0^`` by quadrature."""
    if int(t_nodes) < 2:
        raise ValueError("need at least 2 time nodes")
    rho = data.f0.grid
    cos_part = time_average_phase(rho, T, t_nodes, rule, "cos")
    sin_part = time_average_phase(rho, T, t_nodes, rule, "sin")
    averaged = cos_part * data.f0.profile + sin_part / rho * data.g0.profile
    weight = sphere_area(data.f0.d) * rho ** (data.f0.d - 1)
    return math.sqrt(data.f0.spacing * float(np.sum(weight * averaged ** 2)))


# -- global-in-time norms --------------------------------------------------------

def global_lq_norm(defect_curve: Sequence[DefectSample], q: float, T_min: float,
                   envelope: bool = True) -> float:
    """``(int_{T_min}^{inf} defect(T)^q dT)^{1/q}`` from a sampled curve.

    The sampled range is integrated by the trapezoid rule in ``log T``; the
    remainder uses the power law fitted to the curve.  Returns
    :data:`DIVERGES` when the fitted tail ``T^{slope q}`` is not integrable.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    samples = [s for s in defect_curve if s.T >= T_min]
    if len(samples) < 8:
        raise ValueError("need at least 8 samples at or above T_min")
    T = np.array([s.T for s in samples])
    D = np.array([s.defect for s in samples])
    if math.log10(T[-1] / T[0]) < 3.0 - 1e-9:
        raise ValueError("curve must span at least three decades in T")
    slope = loglog_fit(samples, envelope=envelope).slope
    if slope * q >= -1.0:
        return DIVERGES
    logT = np.log(T)
    body = float(np.sum(0.5 * np.diff(logT) * ((D ** q * T)[1:] + (D ** q * T)[:-1])))
    tail = D[-1] ** q * T[-1] / (-slope * q - 1.0)
    return (body + tail) ** (1.0 / q)

