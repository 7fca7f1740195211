"""Reproducible experiment driver.

Configurations are flat TOML files with dotted keys, e.g.::

    model = "schrodinger"
    dimension = 3
    subspace = "l1l2"
    data.preset = "flattop"
    sweep.t_min = 10.0
    sweep.t_max = 1e4
    output.dir = "schr_d3"

See README.md for the full key list.  ``ERGORATES_OUTPUT_ROOT`` overrides
the directory that relative ``output.dir`` values are resolved against.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import dos as dos_lib
from . import pde, rates, spectral

OUTPUT_ROOT_ENV = "ERGORATES_OUTPUT_ROOT"
MODELS = ("matrix", "measure", "schrodinger", "wave")
SUBSPACES = ("weighted", "l1l2")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "schrodinger"
    dimension: int = 1
    symbol: str | None = None
    subspace: str = "weighted"
    data_preset: str = "flattop"
    data_file: str | None = None
    data_velocity: str = "zero"
    data_rho_max: float = 8.0
    data_nodes: int = 2 ** 15
    data_flat: float = 2.0
    data_cutoff: float = 4.0
    data_width: float = 1.0
    sweep_t_min: float = 10.0
    sweep_t_max: float = 1e4
    sweep_per_decade: int = 16
    dos_c: float | None = None
    dos_p: float | None = None
    dos_q: float | None = None
    dos_epsilon: float = 0.01
    dos_r: float = 0.5
    dos_norm_x: float = 1.0
    matrix_gap: float = 1.0
    matrix_n: int = 16
    matrix_seed: int = 0
    dk_enabled: bool = False
    dk_p: float | None = None
    dk_lambda_min: float = 1e-4
    check_slope: bool = True
    check_slope_tolerance: float = 0.05
    output_dir: str = "ergorates-out"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.subspace not in SUBSPACES:
            raise ConfigError(f"subspace must be one of {SUBSPACES}, got {self.subspace!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ConfigError("dimension must be an integer >= 1")
        if self.symbol is not None and self.symbol not in dos_lib.SYMBOLS:
            raise ConfigError(f"unknown symbol {self.symbol!r}")
        if self.model == "wave" and self.symbol not in (None, "sqrt"):
            raise ConfigError("the wave model always uses the sqrt symbol")
        if not 0 < self.sweep_t_min < self.sweep_t_max:
            raise ConfigError("need 0 < sweep.t_min < sweep.t_max")
        if self.sweep_per_decade < 1:
            raise ConfigError("sweep.per_decade must be >= 1")
        if not 0 < self.dos_r < 1:
            raise ConfigError("dos.r must lie in (0, 1)")
        if not self.dos_epsilon > 0:
            raise ConfigError("dos.epsilon must be positive")
        if not self.matrix_gap > 0 or self.matrix_n < 3:
            raise ConfigError("matrix.gap must be positive and matrix.n >= 3")
        if self.dk_p is not None and not 0 < self.dk_p < 2:
            raise ConfigError("dk.p must lie in (0, 2)")

    @property
    def phi(self) -> dos_lib.SymbolFunction:
        if self.model == "wave":
            return dos_lib.SQUARE_ROOT
        return dos_lib.symbol(self.symbol or "identity")

    @classmethod
    def from_mapping(cls, mapping: dict[str, Any]) -> "ExperimentConfig":
        flat = _flatten(mapping)
        names = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in flat.items():
            name = key.replace(".", "_")
            if name not in names:
                raise ConfigError(f"unknown configuration key {key!r}")
            kwargs[name] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        try:
            cfg = cls.from_mapping(raw)
        except (ConfigError, TypeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if cfg.data_file and not Path(cfg.data_file).is_absolute():
            cfg = _replace(cfg, data_file=str(Path(path).parent / cfg.data_file))
        return cfg

    def echo(self) -> dict[str, Any]:
        return {k.replace("_", ".", 1): v for k, v in asdict(self).items()}


def _replace(cfg, **changes):
    d = asdict(cfg)
    d.update(changes)
    return ExperimentConfig(**d)


def _flatten(mapping, prefix=""):
    out = {}
    for key, value in mapping.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


@dataclass
class ResultBundle:
    config: dict[str, Any]
    samples: list[spectral.DefectSample]
    bounds: list[float]
    fit: rates.RateFit
    theory: dict[str, Any]
    dk: dict[str, Any] | None = None
    flags: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "samples": [[s.T, s.defect] for s in self.samples],
            "bounds": self.bounds,
            "fit": asdict(self.fit),
            "theory": self.theory,
            "dk": self.dk,
            "flags": self.flags,
            "passed": self.passed,
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultBundle":
        raw = json.loads(text)
        fit = raw["fit"]
        fit["T_range"] = tuple(fit["T_range"])
        return cls(raw["config"], [spectral.DefectSample(t, d) for t, d in raw["samples"]],
                   raw["bounds"], rates.RateFit(**fit), raw["theory"], raw["dk"], raw["flags"])


# -- pipeline ------------------------------------------------------------------------

def _field(cfg: ExperimentConfig) -> pde.RadialField:
    if cfg.data_file:
        fld = pde.RadialField.load(cfg.data_file)
        if fld.d != cfg.dimension:
            raise ConfigError(f"{cfg.data_file}: field has d={fld.d}, config says {cfg.dimension}")
        return fld
    return pde.make_field(cfg.dimension, cfg.data_preset, cfg.data_rho_max, cfg.data_nodes,
                          a=cfg.data_flat, b=cfg.data_cutoff, width=cfg.data_width)


def _theory_dos(cfg: ExperimentConfig) -> dos_lib.PowerLawDoS:
    if cfg.model in ("measure", "matrix") or cfg.dos_p is not None:
        return dos_lib.PowerLawDoS(cfg.dos_c if cfg.dos_c is not None else 1.0,
                                   cfg.dos_p if cfg.dos_p is not None else 1.0)
    if cfg.phi is dos_lib.SQUARE_ROOT:
        return dos_lib.wave_dos(cfg.dimension, cfg.subspace)
    return dos_lib.schrodinger_dos(cfg.dimension, cfg.subspace)


def _powerlaw_measure(dos: dos_lib.PowerLawDoS, r: float, nodes: int = 3000) -> spectral.SpectralMeasure:
    g = np.geomspace(1e-14, r, nodes)
    v = dos(g)
    return spectral.SpectralMeasure(density_grid=np.concatenate([-g[::-1], g]),
                                    density_values=np.concatenate([v[::-1], v]))


def _theory(cfg: ExperimentConfig) -> dict[str, Any]:
    if cfg.model == "matrix":
        return {"psi": "gap", "p": math.inf, "ell": 2.0, "q": math.inf,
                "rate": 1.0, "C": 1.0 / cfg.matrix_gap, "epsilon": 0.0}
    dos = _theory_dos(cfg)
    ell = dos_lib.rate_exponent_powerlaw(dos.p, cfg.dos_epsilon)
    q = cfg.dos_q if cfg.dos_q is not None else dos.p - cfg.dos_epsilon
    budget = dos_lib.DoSBudget.from_powerlaw(dos, q, cfg.dos_r)
    return {
        "psi": f"{dos.c:.6g}|lambda|^{dos.p - 1:.6g}",
        "c": dos.c,
        "p": dos.p,
        "q": q,
        "r": cfg.dos_r,
        "epsilon": cfg.dos_epsilon,
        "ell": ell,
        "rate": ell / 2.0,
        "capital_psi": budget.capital_psi,
        "C": math.sqrt(budget.capital_psi + cfg.dos_r ** -2),
    }


def _measure_and_curve(cfg: ExperimentConfig, T: np.ndarray):
    """Spectral measure used for DK checks and the sampled defect curve."""
    if cfg.model == "matrix":
        rng = np.random.default_rng(cfg.matrix_seed)
        mu = spectral.HermitianModel.gap(cfg.matrix_gap, cfg.matrix_n, rng).measure()
        return mu, spectral.defect_curve(mu, T)
    if cfg.model == "measure":
        if cfg.data_file:
            mu = spectral.SpectralMeasure.load(cfg.data_file)
        else:
            mu = _powerlaw_measure(_theory_dos(cfg), cfg.dos_r)
        return mu, spectral.defect_curve(mu, T)
    fld = _field(cfg)
    if cfg.model == "schrodinger":
        mu = pde.schrodinger_measure(fld, cfg.phi)
        return mu, spectral.defect_curve(mu, T)
    if cfg.data_velocity == "zero":
        g0 = pde.RadialField(fld.d, fld.rho_max, np.zeros(fld.n))
    else:
        g0 = pde.make_field(cfg.dimension, cfg.data_velocity, cfg.data_rho_max, cfg.data_nodes,
                            a=cfg.data_flat, b=cfg.data_cutoff, width=cfg.data_width)
    data = pde.WaveInitialData(fld, g0)
    mu = pde.wave_reconstructed_measure(pde.wave_split(data))
    return mu, [spectral.DefectSample(float(t), pde.wave_average_defect(data, t)) for t in T]


def run(cfg: ExperimentConfig, write: bool = True) -> ResultBundle:
    """Run one experiment; optionally persist it under the output directory."""
    T = spectral.geometric_times(cfg.sweep_t_min, cfg.sweep_t_max, cfg.sweep_per_decade)
    theory = _theory(cfg)
    mu, samples = _measure_and_curve(cfg, T)
    fit = rates.loglog_fit(samples)
    norm = math.sqrt(mu.total_mass)
    flags: dict[str, bool] = {}

    if cfg.model == "matrix":
        bounds = [norm / (cfg.matrix_gap * s.T) for s in samples]
        flags["gap_bound"] = all(
            cfg.matrix_gap * s.T * s.defect <= (1 + 1e-12) * norm for s in samples
        )
        if cfg.check_slope:
            flags["slope"] = fit.slope <= -1.0 + cfg.check_slope_tolerance
    else:
        budget = dos_lib.DoSBudget(theory["q"], theory["r"], theory["capital_psi"])
        bounds = [dos_lib.predicted_defect_bound(budget, cfg.dos_norm_x, s.T) if s.T > 1 else math.nan
                  for s in samples]
        if cfg.model == "measure":
            flags["rate_bound"] = all(s.defect <= b for s, b in zip(samples, bounds) if s.T > 1)
        if cfg.check_slope:
            flags["slope"] = abs(fit.slope + theory["rate"]) <= cfg.check_slope_tolerance

    dk = None
    if cfg.dk_enabled:
        p = cfg.dk_p if cfg.dk_p is not None else min(theory["ell"], 1.99)
        lam = np.geomspace(cfg.dk_lambda_min, cfg.dos_r, 60)
        report = rates.dk_equivalence_report(mu, p, lam, T)
        dk = asdict(report) | {"consistent": report.consistent}
        flags["dk_consistent"] = report.consistent

    bundle = ResultBundle(cfg.echo(), samples, bounds, fit, theory, dk, flags)
    if write:
        write_bundle(bundle, output_path(cfg))
    return bundle


def output_path(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def write_bundle(bundle: ResultBundle, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    p = bundle.theory["ell"]
    rates.write_report(out / "curve.csv", bundle.samples, p, bundle.bounds, bundle.fit)
    (out / "bundle.json").write_text(bundle.to_json())
    (out / "summary.txt").write_text(summary_text(bundle))


def load_bundle(path) -> ResultBundle:
    path = Path(path)
    if path.is_dir():
        path = path / "bundle.json"
    return ResultBundle.from_json(path.read_text())


def summary_text(bundle: ResultBundle) -> str:
    cfg, th, fit = bundle.config, bundle.theory, bundle.fit
    lines = [
        f"model            {cfg['model']}",
        f"dimension        {cfg['dimension']}",
        f"subspace         {cfg['subspace']}",
        f"psi              {th['psi']}",
        f"predicted slope  {-th['rate']:.6f}  (epsilon = {th['epsilon']})",
        f"measured slope   {fit.slope:.6f}  (r^2 = {fit.r_squared:.6f}, {fit.n_points} envelope points)",
        f"rate constant C  {th['C']:.6g}",
    ]
    if bundle.dk:
        lines.append(f"DK A_hat/B_hat   {bundle.dk['A_hat']:.6g} / {bundle.dk['B_hat']:.6g}")
    for name, ok in bundle.flags.items():
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return "\n".join(lines) + "\n"


COMPARE_COLUMNS = ("model", "d", "subspace", "psi", "p", "ell/2", "slope", "C", "passed")


def compare(bundles: Sequence[ResultBundle]) -> list[dict[str, Any]]:
    """One row per bundle with the theoretical and measured rates."""
    if not bundles:
        raise ValueError("need at least one bundle")
    rows = []
    for b in bundles:
        rows.append({
            "model": b.config["model"],
            "d": b.config["dimension"],
            "subspace": b.config["subspace"],
            "psi": b.theory["psi"],
            "p": b.theory["p"],
            "ell/2": b.theory["rate"],
            "slope": b.fit.slope,
            "C": b.theory["C"],
            "passed": b.passed,
        })
    return rows


def format_table(rows: Sequence[dict[str, Any]], columns=COMPARE_COLUMNS) -> str:
    def fmt(v):
        if isinstance(v, bool):
            return "yes" if v else "no"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    cells = [[fmt(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    out = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    out += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(out)


def dos_table(c: float, p: float, q: float | None, r: float, epsilon: float,
              T_values: Sequence[float]) -> list[dict[str, float]]:
    dos = dos_lib.PowerLawDoS(c, p)
    q = p - epsilon if q is None else q
    budget = dos_lib.DoSBudget.from_powerlaw(dos, q, r)
    rows = []
    for T in T_values:
        rows.append({
            "T": T,
            "psi(r)": dos(r),
            "Psi_q(r)": budget.capital_psi,
            "ell": budget.ell,
            "C^2": dos_lib.bound_constant(budget, T),
            "bound": dos_lib.predicted_defect_bound(budget, 1.0, T),
        })
    return rows


# -- command line ---------------------------------------------------------------------

def _cmd_run(args) -> int:
    status = 0
    for path in args.config:
        bundle = run(ExperimentConfig.load(path))
        print(f"== {path}")
        print(summary_text(bundle), end="")
        status |= 0 if bundle.passed else 1
    return status


def _cmd_compare(args) -> int:
    bundles = [load_bundle(p) for p in args.bundle]
    print(format_table(compare(bundles)))
    return 0 if all(b.passed for b in bundles) else 1


def _cmd_dos(args) -> int:
    if args.model:
        d = args.dimension
        dos = (dos_lib.wave_dos if args.model == "wave" else dos_lib.schrodinger_dos)(d, args.subspace)
        c, p = dos.c, dos.p
    else:
        c, p = args.c, args.p
    rows = dos_table(c, p, args.q, args.r, args.epsilon, args.T)
    print(f"psi(lambda) = {c:.6g} |lambda|^{p - 1:.6g}")
    print(format_table(rows, tuple(rows[0])))
    return 0


def _cmd_dk(args) -> int:
    cfg = _replace(ExperimentConfig.load(args.config), dk_enabled=True)
    bundle = run(cfg, write=not args.no_write)
    dk = bundle.dk
    print(f"p = {dk['p']}")
    print(f"A_hat = {dk['A_hat']:.6g} (drift {dk['A_drift']:.3g}, finite={dk['a_finite']})")
    print(f"B_hat = {dk['B_hat']:.6g} (drift {dk['B_drift']:.3g}, finite={dk['b_finite']})")
    print("consistent" if dk["consistent"] else "INCONSISTENT")
    return 0 if dk["consistent"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergorates", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run experiment configs and write result bundles")
    p.add_argument("config", nargs="+")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="tabulate result bundles")
    p.add_argument("bundle", nargs="+", help="bundle directories or bundle.json files")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("dos", help="print psi / Psi_q(r) / ell / C for a power-law DoS")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--model", choices=("schrodinger", "wave"))
    p.add_argument("--subspace", choices=SUBSPACES, default="weighted")
    p.add_argument("--dimension", "-d", type=int, default=1)
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--T", type=float, nargs="+", default=[10.0, 100.0, 1000.0, 10000.0])
    p.set_defaults(func=_cmd_dos)

    p = sub.add_parser("dk", help="check the window-mass / decay equivalence for a config")
    p.add_argument("config")
    p.add_argument("--no-write", action="store_true")
    p.set_defaults(func=_cmd_dk)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
