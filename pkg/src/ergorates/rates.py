"""Empirical decay exponents and the window-mass / decay equivalence.

For ``p in [0, 2)`` a window-mass bound ``mu((-lam, lam) \\ {0}) <= A lam^p``
and a decay bound ``||(P^T - P) f|| <= B T^{-p/2} ||f||`` hold together or
fail together.  The constants relating ``A`` and ``B`` are not reproduced
here; :func:`dk_equivalence_report` only checks that the two empirical
estimates are finite (stable) or unbounded together.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from .spectral import DefectSample, SpectralMeasure, fejer_defect


class DegenerateFit(ValueError):
    """Log-log regression is undefined for the given samples."""


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    T_range: tuple[float, float]
    n_points: int

    @property
    def constant(self) -> float:
        return math.exp(self.intercept)


def upper_envelope(samples: Sequence[DefectSample], bins_per_decade: int = 4) -> list[DefectSample]:
    """Largest sample in each ``1/bins_per_decade``-decade bin of ``log10 T``.

    Bins are anchored at the first sample.  For a monotone decreasing curve
    this keeps the first sample of every bin.
    """
    T = np.array([s.T for s in samples])
    D = np.array([s.defect for s in samples])
    bins = np.floor((np.log10(T) - math.log10(T[0])) * bins_per_decade + 1e-9).astype(int)
    out = []
    for b in np.unique(bins):
        idx = np.flatnonzero(bins == b)
        k = idx[np.argmax(D[idx])]
        out.append(samples[k])
    return out


def loglog_fit(samples: Sequence[DefectSample], envelope: bool = True,
               bins_per_decade: int = 4) -> RateFit:
    """Least-squares line through ``(log T, log defect)``.

    With ``envelope=True`` (default) the fit uses :func:`upper_envelope`,
    which tames the oscillation of ``sinc^2`` on pure-point measures.
    """
    samples = list(samples)
    if len(samples) < 8:
        raise DegenerateFit(f"need at least 8 samples, got {len(samples)}")
    T = np.array([s.T for s in samples], dtype=float)
    D = np.array([s.defect for s in samples], dtype=float)
    if np.any(np.diff(T) <= 0) or T[0] <= 0:
        raise DegenerateFit("T values must be positive and strictly increasing")
    if np.any(D <= 0):
        raise DegenerateFit("log-log fit needs strictly positive defects")
    if math.log10(T[-1] / T[0]) < 1.0:
        raise DegenerateFit("T range must span at least one decade")
    if envelope:
        samples = upper_envelope(samples, bins_per_decade)
        T = np.array([s.T for s in samples])
        D = np.array([s.defect for s in samples])
    x, y = np.log(T), np.log(D)
    if np.ptp(y) == 0.0:
        raise DegenerateFit("defects are constant; r^2 is undefined")
    res = linregress(x, y)
    return RateFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2),
                   (float(T[0]), float(T[-1])), len(T))


# -- window mass / decay equivalence ---------------------------------------------

@dataclass(frozen=True)
class DKReport:
    """Outcome of checking both sides of the equivalence on one measure.

    ``A_hat``/``B_hat`` are ``inf`` when the corresponding estimate drifts by
    more than the tolerance under refinement; the raw grid values are kept
    in ``A_grid``/``B_grid``.
    """

    p: float
    A_hat: float
    B_hat: float
    A_grid: float
    B_grid: float
    A_drift: float
    B_drift: float
    a_finite: bool
    b_finite: bool

    @property
    def consistent(self) -> bool:
        return self.a_finite == self.b_finite


def _check_p(p: float) -> None:
    if not 0 < p < 2:
        raise ValueError("p must lie in (0, 2)")


def dk_condition_i(mu: SpectralMeasure, p: float, lambda_grid) -> float:
    """``max_lam mu((-lam, lam) \\ {0}) / lam^p`` over the grid."""
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.size == 0 or np.any(lam <= 0):
        raise ValueError("lambda grid must be nonempty and positive")
    ratio = mu.window_mass(lam) / lam ** p
    return float(np.max(ratio))


def normalized_defects(mu: SpectralMeasure, p: float, T_values) -> np.ndarray:
    """``T^{p/2} ||(P^T - P) f|| / ||f||`` at each ``T``."""
    norm = math.sqrt(mu.total_mass)
    if norm == 0:
        raise ValueError("measure has zero mass")
    T = np.asarray(T_values, dtype=float)
    return np.array([t ** (p / 2.0) * fejer_defect(mu, t) for t in T]) / norm


def dk_running_max(mu: SpectralMeasure, p: float, T_values) -> np.ndarray:
    return np.maximum.accumulate(normalized_defects(mu, p, T_values))


def dk_condition_ii(mu: SpectralMeasure, p: float, T_values) -> float:
    """``max_T T^{p/2} defect(T) / ||f||`` over the supplied times."""
    return float(np.max(normalized_defects(mu, p, T_values)))


def refine_window_grid(lambda_grid) -> np.ndarray:
    """Geometric grid reaching twice as many decades toward 0, at twice the density."""
    lam = np.asarray(lambda_grid, dtype=float)
    lo, hi = lam.min(), lam.max()
    return np.geomspace(lo * lo / hi, hi, 4 * lam.size - 3)


def extend_times(T_values, factor: float = 10.0) -> np.ndarray:
    """Continue a geometric T sweep up to ``factor * T_max`` at the same spacing."""
    T = np.asarray(T_values, dtype=float)
    ratio = (T[-1] / T[0]) ** (1.0 / (T.size - 1))
    extra = int(round(math.log(factor) / math.log(ratio)))
    return np.concatenate([T, T[-1] * ratio ** np.arange(1, extra + 1)])


def dk_equivalence_report(mu: SpectralMeasure, p: float, lambda_grid, T_values,
                          tol: float = 0.05, T_growth: float = 10.0) -> DKReport:
    """Evaluate both conditions and their stability under refinement.

    ``A`` is recomputed on :func:`refine_window_grid`; ``B`` on the sweep
    continued to ``T_growth * T_max``.  A relative change above ``tol``
    marks the estimate as unbounded.
    """
    _check_p(p)
    T = np.asarray(T_values, dtype=float)
    if math.log10(T[-1] / T[0]) < 3.0 - 1e-9:
        raise ValueError("T sweep must span at least three decades")
    a = dk_condition_i(mu, p, lambda_grid)
    a_ref = dk_condition_i(mu, p, refine_window_grid(lambda_grid))
    b = dk_condition_ii(mu, p, T)
    b_ref = dk_condition_ii(mu, p, extend_times(T, T_growth))
    a_drift = _drift(a, a_ref)
    b_drift = _drift(b, b_ref)
    a_ok, b_ok = a_drift <= tol, b_drift <= tol
    return DKReport(p, a_ref if a_ok else math.inf, b_ref if b_ok else math.inf,
                    a, b, a_drift, b_drift, a_ok, b_ok)


def _drift(old: float, new: float) -> float:
    if old == new:
        return 0.0
    if old == 0:
        return math.inf
    return abs(new - old) / abs(old)


# -- report files ------------------------------------------------------------------

REPORT_COLUMNS = ("T", "defect", "bound", "scaled_defect")


def write_report(path_or_buf, samples: Sequence[DefectSample], p: float,
                 bounds=None, fit: RateFit | None = None, extra: dict | None = None) -> None:
    """Comma-separated sweep (T, defect, bound, T^{p/2} defect) with a ``#`` footer."""
    bounds = [math.nan] * len(samples) if bounds is None else list(bounds)
    buf = io.StringIO()
    buf.write(",".join(REPORT_COLUMNS) + "\n")
    for s, b in zip(samples, bounds):
        buf.write(f"{s.T:.17g},{s.defect:.17g},{b:.17g},{s.T ** (p / 2) * s.defect:.17g}\n")
    footer = {"p": p}
    if fit is not None:
        footer.update(slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared,
                      T_min=fit.T_range[0], T_max=fit.T_range[1], fit_points=fit.n_points)
    footer.update(extra or {})
    for k, v in footer.items():
        buf.write(f"# {k} = {v:.17g}\n" if isinstance(v, float) else f"# {k} = {v}\n")
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        Path(path_or_buf).write_text(text)


def read_report(path_or_text) -> tuple[np.ndarray, dict]:
    """Inverse of :func:`write_report`: ``(table, footer)``; table columns as in ``REPORT_COLUMNS``."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text()
    rows, footer = [], {}
    for line in text.splitlines():
        if line.startswith("#"):
            k, v = (s.strip() for s in line[1:].split("=", 1))
            try:
                footer[k] = float(v)
            except ValueError:
                footer[k] = v
        elif line and not line.startswith(REPORT_COLUMNS[0]):
            rows.append([float(x) for x in line.split(",")])
    return np.array(rows), footer
