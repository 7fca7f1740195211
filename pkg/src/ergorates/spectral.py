"""Spectral measures and the ergodic-average defect.

For a self-adjoint generator ``H`` and a vector ``f`` the time average
``P^T f = (1/2T) int_{-T}^{T} e^{itH} f dt`` differs from the projection
onto ``ker H`` by a vector whose squared norm is the integral of
``sinc^2(T lambda)`` against the spectral measure of ``f`` with the atom at
zero removed.  This module stores such measures (atoms plus a sampled
density) and evaluates that defect three ways:

* :func:`fejer_defect` integrates the Fejer kernel against a measure,
* :func:`time_average_exact` sums the closed form over the eigenvalues of a
  finite Hermitian model,
* :func:`time_domain_defect` actually performs the time integral with a
  quadrature rule, which serves as an independent oracle.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import InitVar, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

SINC_SWITCH = 1e-4
GAUSS_ORDER = 16


def sinc(x):
    """Unnormalised sinc, ``sin(x)/x``, with the removable singularity filled.

    Below ``|x| < 1e-4`` the three-term Taylor series is used.  Accepts
    scalars or arrays; scalars come back as ``float``.
    """
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    small = np.abs(arr) < SINC_SWITCH
    big = ~small
    out[big] = np.sin(arr[big]) / arr[big]
    x2 = arr[small] ** 2
    out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    if out.ndim == 0:
        return float(out)
    return out


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralMeasure:
    """Scalar spectral measure ``lambda -> (E(lambda) f, f)``.

    Point masses live in ``atom_locations``/``atom_weights``; the absolutely
    continuous part is sampled on ``density_grid``.  ``total_mass`` is
    ``||f||^2`` and defaults to the sum of the two parts.
    """

    atom_locations: np.ndarray = field(default_factory=lambda: np.zeros(0))
    atom_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    density_grid: np.ndarray | None = None
    density_values: np.ndarray | None = None
    total_mass: float | None = None
    mass_rtol: InitVar[float] = 1e-6

    def __post_init__(self, mass_rtol):
        locs = _readonly(np.atleast_1d(self.atom_locations))
        weights = _readonly(np.atleast_1d(self.atom_weights))
        if locs.shape != weights.shape or locs.ndim != 1:
            raise ValueError("atom locations and weights must be 1-d and of equal length")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms must be finite")
        if np.any(weights < 0):
            raise ValueError("atom weights must be nonnegative")
        if np.unique(locs).size != locs.size:
            raise ValueError("atom locations must be pairwise distinct")
        object.__setattr__(self, "atom_locations", locs)
        object.__setattr__(self, "atom_weights", weights)

        if (self.density_grid is None) != (self.density_values is None):
            raise ValueError("density grid and values must be given together")
        if self.density_grid is not None:
            grid = _readonly(self.density_grid)
            vals = _readonly(self.density_values)
            if grid.ndim != 1 or grid.shape != vals.shape or grid.size < 2:
                raise ValueError("density needs matching 1-d grid and values (>= 2 nodes)")
            if not np.all(np.diff(grid) > 0):
                raise ValueError("density grid must be strictly increasing")
            if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(vals))):
                raise ValueError("density must be finite")
            if np.any(vals < 0):
                raise ValueError("density values must be nonnegative")
            object.__setattr__(self, "density_grid", grid)
            object.__setattr__(self, "density_values", vals)

        computed = float(self.atom_weights.sum()) + self.density_mass()
        if self.total_mass is None:
            object.__setattr__(self, "total_mass", computed)
        else:
            total = float(self.total_mass)
            if not math.isfinite(total) or total < 0:
                raise ValueError("total_mass must be finite and nonnegative")
            if abs(total - computed) > mass_rtol * max(total, computed, 1e-300):
                raise ValueError(
                    f"total_mass {total!r} disagrees with atoms + density {computed!r}"
                )
            object.__setattr__(self, "total_mass", total)

    @property
    def has_density(self) -> bool:
        return self.density_grid is not None

    def density_mass(self) -> float:
        if not self.has_density:
            return 0.0
        return float(simpson(self.density_values, x=self.density_grid))

    @property
    def kernel_weight(self) -> float:
        """Mass of the atom at zero (``||Pf||^2``)."""
        at_zero = self.atom_locations == 0.0
        return float(self.atom_weights[at_zero].sum())

    def density(self, lam):
        """Linear interpolation of the density; zero outside the grid."""
        if not self.has_density:
            return np.zeros_like(np.asarray(lam, dtype=float))
        return np.interp(lam, self.density_grid, self.density_values, left=0.0, right=0.0)

    def window_mass(self, lam):
        """``mu((-lam, lam) minus {0})`` for each ``lam > 0``."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if np.any(lam <= 0):
            raise ValueError("window half-widths must be positive")
        a = np.abs(self.atom_locations)
        nonzero = a > 0
        atoms = (
            (a[nonzero][None, :] < lam[:, None]) * self.atom_weights[nonzero][None, :]
        ).sum(axis=1)
        if not self.has_density:
            return atoms
        grid, vals = self.density_grid, self.density_values
        cum = np.concatenate([[0.0], cumulative_simpson(vals, x=grid)])
        upper = np.interp(lam, grid, cum)
        lower = np.interp(-lam, grid, cum)
        return atoms + (upper - lower)

    @classmethod
    def from_density(cls, grid, values, atoms: Iterable[tuple[float, float]] = (), **kw):
        atoms = list(atoms)
        locs = [a for a, _ in atoms]
        weights = [w for _, w in atoms]
        return cls(np.array(locs, float), np.array(weights, float), grid, values, **kw)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]):
        atoms = list(atoms)
        return cls(np.array([a for a, _ in atoms], float), np.array([w for _, w in atoms], float))

    # -- text serialisation -------------------------------------------------

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"total_mass {self.total_mass:.17g}\n")
        buf.write("atoms\n")
        for lam, w in zip(self.atom_locations, self.atom_weights):
            buf.write(f"{lam:.17g} {w:.17g}\n")
        if self.has_density:
            buf.write("density\n")
            for lam, v in zip(self.density_grid, self.density_values):
                buf.write(f"{lam:.17g} {v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "SpectralMeasure":
        section = None
        total = None
        atoms: list[tuple[float, float]] = []
        dens: list[tuple[float, float]] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line in ("atoms", "density"):
                section = line
                continue
            parts = line.split()
            if parts[0] == "total_mass" and len(parts) == 2:
                total = float(parts[1])
                continue
            if section is None or len(parts) != 2:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}")
            pair = (float(parts[0]), float(parts[1]))
            (atoms if section == "atoms" else dens).append(pair)
        grid = values = None
        if dens:
            grid = np.array([g for g, _ in dens])
            values = np.array([v for _, v in dens])
        return cls(
            np.array([a for a, _ in atoms], float),
            np.array([w for _, w in atoms], float),
            grid,
            values,
            total,
        )

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "SpectralMeasure":
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True)
class HermitianModel:
    """A finite Hermitian generator given in its eigenbasis.

    ``coefficients`` are the coordinates of ``f`` in that basis, so the
    spectral measure of ``f`` has atoms at ``eigenvalues`` with weights
    ``|coefficients|^2``.
    """

    eigenvalues: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        ev = np.array(self.eigenvalues, dtype=float).ravel()
        c = np.array(self.coefficients, dtype=complex).ravel()
        if ev.size < 1 or ev.shape != c.shape:
            raise ValueError("need n >= 1 eigenvalues and as many coefficients")
        if not (np.all(np.isfinite(ev)) and np.all(np.isfinite(c))):
            raise ValueError("model entries must be finite")
        ev.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @classmethod
    def from_matrix(cls, H, f, kernel_tol: float = 1e-12) -> "HermitianModel":
        """Diagonalise ``H`` and express ``f`` in its eigenbasis.

        Eigenvalues within ``kernel_tol`` (relative to ``||H||``) of zero are
        snapped to exactly zero so the kernel is recognised.
        """
        H = np.asarray(H)
        if not np.allclose(H, H.conj().T):
            raise ValueError("matrix is not Hermitian")
        w, V = np.linalg.eigh(H)
        scale = max(np.max(np.abs(w)), 1.0)
        w = np.where(np.abs(w) <= kernel_tol * scale, 0.0, w)
        return cls(w, V.conj().T @ np.asarray(f, dtype=complex))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, spread: float = 5.0) -> "HermitianModel":
        ev = rng.uniform(-spread, spread, n)
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return cls(ev, c / np.linalg.norm(c))

    @classmethod
    def gap(cls, gamma: float, n: int, rng: np.random.Generator, spread: float = 5.0,
            kernel: bool = True) -> "HermitianModel":
        """Random unit vector for a generator with no spectrum in ``(-gamma, gamma)``
        other than (optionally) an eigenvalue at zero.  ``+-gamma`` are always
        included so the bound is tested at its sharpest."""
        if gamma <= 0 or n < 3:
            raise ValueError("need gamma > 0 and n >= 3")
        mags = rng.uniform(gamma, max(spread, gamma), n)
        mags[:2] = gamma
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        signs[:2] = [1.0, -1.0]
        ev = mags * signs
        if kernel:
            ev[2] = 0.0
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return cls(ev, c / np.linalg.norm(c))

    def measure(self) -> SpectralMeasure:
        """Spectral measure of ``f``; degenerate eigenvalues are merged."""
        locs, inverse = np.unique(self.eigenvalues, return_inverse=True)
        weights = np.zeros(locs.size)
        np.add.at(weights, inverse, np.abs(self.coefficients) ** 2)
        return SpectralMeasure(locs, weights)


@dataclass(frozen=True)
class DefectSample:
    T: float
    defect: float


def kernel_projection_norm(mu: SpectralMeasure) -> float:
    """``||Pf||``, the square root of the atom at zero."""
    return math.sqrt(mu.kernel_weight)


def _refine(grid: np.ndarray, values: np.ndarray, h: float):
    """Subdivide cells wider than ``h``, interpolating values linearly."""
    widths = np.diff(grid)
    k = np.maximum(1, np.ceil(widths / h).astype(np.int64))
    if k.max() == 1:
        return grid, values
    cell = np.repeat(np.arange(widths.size), k)
    start = np.repeat(np.cumsum(k) - k, k)
    frac = (np.arange(k.sum()) - start) / np.repeat(k, k)
    fine = np.append(grid[cell] + frac * widths[cell], grid[-1])
    return fine, np.interp(fine, grid, values)


def fejer_integral(mu: SpectralMeasure, T: float, resolution: float = 16.0) -> float:
    """``int sinc^2(T lambda) d mu`` over ``R`` minus ``{0}``.

    Density cells wider than ``pi / (resolution * T)`` are subdivided (linear
    interpolation of the density) before composite Simpson is applied.
    """
    T = float(T)
    if not math.isfinite(T) or T <= 0:
        raise ValueError(f"T must be finite and positive, got {T!r}")
    nonzero = mu.atom_locations != 0.0
    total = float(np.sum(mu.atom_weights[nonzero] * sinc(T * mu.atom_locations[nonzero]) ** 2))
    if mu.has_density:
        grid, vals = _refine(mu.density_grid, mu.density_values, math.pi / (resolution * T))
        total += float(simpson(sinc(T * grid) ** 2 * vals, x=grid))
    return max(total, 0.0)


def fejer_defect(mu: SpectralMeasure, T: float, resolution: float = 16.0) -> float:
    """``||(P^T - P) f||`` computed from the spectral measure of ``f``."""
    return math.sqrt(fejer_integral(mu, T, resolution))


def time_average_exact(model: HermitianModel, T: float) -> float:
    """Closed-form defect of a pure-point model."""
    if not T > 0:
        raise ValueError("T must be positive")
    nonzero = model.eigenvalues != 0.0
    w = np.abs(model.coefficients[nonzero]) ** 2
    return math.sqrt(float(np.sum(w * sinc(T * model.eigenvalues[nonzero]) ** 2)))


def averaging_rule(T: float, nodes: int, rule: str = "gauss"):
    """Nodes and weights approximating ``(1/2T) int_{-T}^{T} . dt``.

    ``rule="gauss"`` is composite Gauss-Legendre with 16-point panels
    (``nodes`` is rounded down to a multiple of the panel order);
    ``rule="trapezoid"`` is the composite trapezoid rule.  Both node sets are
    symmetric about ``t = 0`` and the weights sum to one.
    """
    nodes = int(nodes)
    if nodes < 2:
        raise ValueError("need at least 2 time nodes")
    if not T > 0:
        raise ValueError("T must be positive")
    if rule == "trapezoid":
        t = np.linspace(-T, T, nodes)
        w = np.full(nodes, 1.0 / (nodes - 1))
        w[[0, -1]] *= 0.5
        return t, w
    if rule == "gauss":
        order = min(GAUSS_ORDER, nodes)
        panels = nodes // order
        x, wx = np.polynomial.legendre.leggauss(order)
        width = 2.0 * T / panels
        centres = -T + width * (np.arange(panels) + 0.5)
        t = (centres[:, None] + 0.5 * width * x[None, :]).ravel()
        w = np.tile(wx, panels) / (2.0 * panels)
        return t, w
    raise ValueError(f"unknown rule {rule!r}")


def time_average_phase(omega, T: float, nodes: int, rule: str = "gauss", part: str = "cos",
                       chunk: int = 4_000_000) -> np.ndarray:
    """Quadrature value of ``(1/2T) int cos(t omega) dt`` (or the sine) per ``omega``.

    The work is chunked over the time nodes so memory stays bounded.
    """
    if part not in ("cos", "sin"):
        raise ValueError("part must be 'cos' or 'sin'")
    t, w = averaging_rule(T, nodes, rule)
    trig = np.cos if part == "cos" else np.sin
    omega = np.asarray(omega, dtype=float)
    flat = omega.ravel()
    out = np.zeros(flat.size)
    step = max(1, chunk // max(flat.size, 1))
    for i in range(0, t.size, step):
        out += trig(np.multiply.outer(flat, t[i:i + step])) @ w[i:i + step]
    return out.reshape(omega.shape)


def time_domain_defect(model: HermitianModel, T: float, nodes: int, rule: str = "gauss") -> float:
    """Defect obtained by integrating ``e^{itH} f`` over ``[-T, T]`` numerically."""
    t, w = averaging_rule(T, nodes, rule)
    phases = np.exp(1j * np.multiply.outer(model.eigenvalues, t))
    multiplier = phases @ w
    # the node set is symmetric, so the imaginary part must cancel
    if np.max(np.abs(multiplier.imag)) > 1e-10:
        raise RuntimeError("time-average multiplier has a non-negligible imaginary part")
    averaged = multiplier * model.coefficients
    kernel = model.eigenvalues == 0.0
    averaged[kernel] -= model.coefficients[kernel]
    return float(np.linalg.norm(averaged))


def _check_T_values(T_values: Sequence[float]) -> np.ndarray:
    T = np.asarray(list(T_values), dtype=float)
    if T.size == 0:
        raise ValueError("T_values is empty")
    if not np.all(np.isfinite(T)) or np.any(T <= 0):
        raise ValueError("T_values must be finite and positive")
    if np.any(np.diff(T) <= 0):
        raise ValueError("T_values must be strictly increasing")
    return T


def defect_curve(mu: SpectralMeasure, T_values: Sequence[float], workers: int | None = None,
                 resolution: float = 16.0) -> list[DefectSample]:
    """Evaluate :func:`fejer_defect` over an increasing list of times.

    With ``workers`` set the points are evaluated in a thread pool; the
    result is identical to the serial one and in input order.
    """
    T = _check_T_values(T_values)

    def one(t):
        return DefectSample(float(t), fejer_defect(mu, t, resolution))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, T))
    return [one(t) for t in T]


def geometric_times(T_min: float, T_max: float, per_decade: int = 16) -> np.ndarray:
    """Geometric sweep with ``per_decade`` points per factor of ten, endpoints included."""
    if not 0 < T_min < T_max:
        raise ValueError("need 0 < T_min < T_max")
    n = int(round(per_decade * math.log10(T_max / T_min))) + 1
    return np.geomspace(T_min, T_max, max(n, 2))
