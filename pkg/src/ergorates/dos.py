"""Density-of-states bounds and the constants of the convergence rate.

A bound ``|d/dlambda (E(lambda) f, g)| <= psi(lambda) ||f||_X ||g||_X`` on
``I_r = [-r, r]``, together with integrability of ``|lambda|^{-q} psi``,
gives ``||P^T - P||_{X->H} <= C T^{-ell/2}`` with ``ell = min(q, 2)`` and

    C^2 = Psi_q(r) + 1 / (T^{2 - ell} r^2),   Psi_q(r) = int_{I_r} |lambda|^{-q} psi.

For operators ``H = phi(-Laplacian)`` on ``R^d`` the bound ``psi`` follows
from the coarea formula and depends on the subspace ``X``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.special import gamma as gamma_fn


class IntegrabilityError(ValueError):
    """``|lambda|^{-q} psi(lambda)`` is not integrable near zero."""


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere ``S^{d-1}`` in ``R^d``."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d!r}")
    return 2.0 * math.pi ** (d / 2) / gamma_fn(d / 2)


@dataclass(frozen=True)
class SymbolFunction:
    """Strictly increasing ``phi: [0, inf) -> [0, inf)`` with inverse and derivative."""

    name: str
    forward: Callable
    inverse: Callable
    derivative: Callable

    def check(self, grid=None, atol: float = 1e-12) -> None:
        grid = np.geomspace(1e-6, 1e3, 200) if grid is None else np.asarray(grid, float)
        back = self.forward(self.inverse(grid))
        if not np.allclose(back, grid, rtol=atol, atol=0):
            raise ValueError(f"symbol {self.name!r}: forward(inverse(x)) != x")
        if np.any(self.derivative(grid) <= 0):
            raise ValueError(f"symbol {self.name!r}: derivative must be positive")


IDENTITY = SymbolFunction(
    "identity",
    forward=lambda x: np.asarray(x, float) * 1.0,
    inverse=lambda lam: np.asarray(lam, float) * 1.0,
    derivative=lambda x: np.ones_like(np.asarray(x, float)),
)

SQUARE_ROOT = SymbolFunction(
    "sqrt",
    forward=lambda x: np.sqrt(x),
    inverse=lambda lam: np.asarray(lam, float) ** 2,
    derivative=lambda x: 0.5 / np.sqrt(x),
)

SYMBOLS = {"identity": IDENTITY, "sqrt": SQUARE_ROOT}


def symbol(name: str) -> SymbolFunction:
    try:
        return SYMBOLS[name]
    except KeyError:
        raise ValueError(f"unknown symbol {name!r}; choose from {sorted(SYMBOLS)}") from None


def _positive(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise ValueError("lambda must be positive (the bound is singular at 0)")
    return lam


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def psi_weighted(phi: SymbolFunction, lam):
    """DoS bound on the weighted space ``L^{2,s}``, ``s > 1/2`` (trace lemma)."""
    x = phi.inverse(_positive(lam))
    return _out(1.0 / (2.0 * np.sqrt(x) * phi.derivative(x)))


def psi_l1(phi: SymbolFunction, d: int, lam):
    """DoS bound on ``L^1 cap L^2`` (Fourier transform bounded by the L^1 norm)."""
    x = phi.inverse(_positive(lam))
    return _out(sphere_area(d) * np.sqrt(x) ** (d - 2) / (2.0 * phi.derivative(x)))


@dataclass(frozen=True)
class PowerLawDoS:
    """``psi(lambda) = c |lambda|^{p-1}``."""

    c: float
    p: float

    def __post_init__(self):
        if not (self.c > 0 and self.p > 0):
            raise ValueError("power-law DoS needs c > 0 and p > 0")

    def __call__(self, lam):
        return _out(self.c * np.abs(np.asarray(lam, float)) ** (self.p - 1.0))


def schrodinger_dos(d: int, subspace: str) -> PowerLawDoS:
    """Power-law form of the Schrodinger DoS bound (``phi = id``)."""
    if subspace == "weighted":
        return PowerLawDoS(0.5, 0.5)
    if subspace == "l1l2":
        return PowerLawDoS(0.5 * sphere_area(d), d / 2.0)
    raise ValueError(f"unknown subspace {subspace!r}")


def wave_dos(d: int, subspace: str) -> PowerLawDoS:
    """Power-law form of the half-wave DoS bound (``phi = sqrt``)."""
    if subspace == "weighted":
        return PowerLawDoS(1.0, 1.0)
    if subspace == "l1l2":
        return PowerLawDoS(sphere_area(d), float(d))
    raise ValueError(f"unknown subspace {subspace!r}")


def capital_psi_powerlaw(dos: PowerLawDoS, q: float, r: float) -> float:
    """``int_{-r}^{r} |lambda|^{-q} c |lambda|^{p-1} dlambda = 2 c r^{p-q} / (p-q)``."""
    if not q > 0:
        raise ValueError("q must be positive")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if q >= dos.p:
        raise IntegrabilityError(
            f"|lambda|^(-q) psi is not integrable at 0 for q={q} >= p={dos.p}"
        )
    return 2.0 * dos.c * r ** (dos.p - q) / (dos.p - q)


def capital_psi_tabulated(grid, values, q: float, r: float) -> float:
    """``Psi_q(r)`` for a tabulated ``psi`` (Simpson on the nodes inside ``I_r``).

    Nodes at ``lambda = 0`` are dropped; positivity is only checked at the
    nodes.
    """
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    if not 0 < r < 1 or not q > 0:
        raise ValueError("need q > 0 and r in (0, 1)")
    if np.any(values[np.abs(grid) <= r] <= 0):
        raise ValueError("psi must be positive on I_r")
    keep = (np.abs(grid) <= r) & (grid != 0)
    g, v = grid[keep], values[keep]
    if g.size < 3:
        raise ValueError("too few nodes inside I_r")
    out = 0.0
    for side in (g < 0, g > 0):
        if side.sum() >= 2:
            out += simpson(np.abs(g[side]) ** (-q) * v[side], x=g[side])
    return float(out)


def rate_exponent(q: float) -> float:
    """``ell = min(q, 2)``; the defect decays like ``T^{-ell/2}``."""
    if not q > 0:
        raise ValueError("q must be positive")
    return min(float(q), 2.0)


def rate_exponent_powerlaw(p: float, epsilon: float = 0.01) -> float:
    """``ell = min(p - epsilon, 2)`` for a power-law bound ``c |lambda|^{p-1}``."""
    if not 0 < epsilon < p:
        raise ValueError("need 0 < epsilon < p")
    return min(p - epsilon, 2.0)


@dataclass(frozen=True)
class DoSBudget:
    """``q``, ``r`` and ``Psi_q(r)`` for one DoS bound."""

    q: float
    r: float
    capital_psi: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("q must be positive")
        if not 0 < self.r < 1:
            raise ValueError("r must lie in (0, 1)")
        if not (self.capital_psi > 0 and math.isfinite(self.capital_psi)):
            raise ValueError("Psi_q(r) must be finite and positive")

    @property
    def ell(self) -> float:
        return rate_exponent(self.q)

    @classmethod
    def from_powerlaw(cls, dos: PowerLawDoS, q: float, r: float) -> "DoSBudget":
        return cls(q, r, capital_psi_powerlaw(dos, q, r))


def bound_constant(budget: DoSBudget, T: float) -> float:
    """Squared rate constant ``Psi_q(r) + T^{-(2-ell)} r^{-2}`` (valid for ``T > 1``)."""
    if not T > 1:
        raise ValueError("the rate bound is stated for T > 1")
    return budget.capital_psi + T ** (-(2.0 - budget.ell)) / budget.r ** 2


def predicted_defect_bound(budget: DoSBudget, norm_X: float, T: float) -> float:
    """Upper bound ``sqrt(bound_constant) T^{-ell/2} ||f||_X`` on the defect."""
    if not norm_X > 0:
        raise ValueError("norm_X must be positive")
    return math.sqrt(bound_constant(budget, T)) * T ** (-budget.ell / 2.0) * norm_X
