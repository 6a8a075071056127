"""Batch command line: solve, certify, eigen, rates, harnack, sweep, report.

Configuration is a flat ``key = value`` file (``#`` starts a comment);
``--set key=value`` overrides entries. Exit codes: 0 success, 2 invalid
input or missing prerequisite artifact, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import barriers, diagnostics
from .eigen import eig_residual, principal_eig
from .errors import NumericalError, ValidationError
from .grid import GridFunction, RadialGrid
from .params import FLAT_KEYS, ProblemSpec, from_flat, to_flat
from .solver import SolveConfig, constant_supersolution, solve_singular

SOLVE_KEYS = {f.name: f for f in fields(SolveConfig)}
DIAG_DEFAULTS = {
    "window_min": 1e-4,
    "window_max": 1e-2,
    "scales": 6,
    "nu": 0.5,
    "p": 1.0,
    "harnack_transform": 0,
}
EXTRA_DEFAULTS = {
    "output_dir": "out",
    "inequality": barriers.I1,
    "eigen_nodes": 2049,
    "eigen_weight_mu": -1.0,
    "pairs": "1:1,0:1,0:3,2:1,0:2",
}


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec
    solve: SolveConfig
    diagnostics: dict
    output_dir: Path
    extras: dict

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = set(FLAT_KEYS) | set(SOLVE_KEYS) | set(DIAG_DEFAULTS) | set(EXTRA_DEFAULTS)
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        problem = from_flat({k: v for k, v in values.items() if k in FLAT_KEYS})
        solve_kw = {}
        for k, f in SOLVE_KEYS.items():
            if k in values:
                raw = values[k]
                try:
                    if k == "first_cell":
                        solve_kw[k] = None if str(raw).lower() == "none" else float(raw)
                    elif f.type in ("int", int):
                        solve_kw[k] = int(float(raw))
                    else:
                        solve_kw[k] = float(raw)
                except ValueError:
                    raise ValidationError(f"{k} is not a number: {raw!r}") from None
        solve = SolveConfig(**solve_kw)
        diag = dict(DIAG_DEFAULTS)
        for k in DIAG_DEFAULTS:
            if k in values:
                try:
                    diag[k] = type(DIAG_DEFAULTS[k])(float(values[k]))
                except ValueError:
                    raise ValidationError(f"{k} is not a number: {values[k]!r}") from None
        extras = dict(EXTRA_DEFAULTS)
        for k in EXTRA_DEFAULTS:
            if k in values:
                extras[k] = type(EXTRA_DEFAULTS[k])(
                    float(values[k]) if isinstance(EXTRA_DEFAULTS[k], (int, float)) else values[k])
        if extras["inequality"] not in barriers.INEQUALITIES:
            raise ValidationError(f"unknown inequality {extras['inequality']!r}")
        return cls(problem, solve, diag, Path(extras.pop("output_dir")), extras)

    def effective(self) -> dict:
        out = dict(to_flat(self.problem))
        out.update({k: getattr(self.solve, k) for k in SOLVE_KEYS})
        out.update(self.diagnostics)
        out["output_dir"] = str(self.output_dir)
        out.update(self.extras)
        return out

    @property
    def window(self):
        return (self.diagnostics["window_min"], self.diagnostics["window_max"])


def parse_config_text(text: str) -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    return values


def load_config(path, overrides=()) -> ExperimentConfig:
    values = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ValidationError(f"config file not found: {p}")
        values.update(parse_config_text(p.read_text()))
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    return ExperimentConfig.from_mapping(values)


def render_config(values: dict) -> str:
    return "".join(f"{k} = {fmt(v)}\n" for k, v in values.items())


def write_json(path: Path, payload: dict) -> None:
    def conv(x):
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [conv(v) for v in x]
        if isinstance(x, (float, np.floating)):
            return float(fmt(x)) if np.isfinite(x) else None
        if isinstance(x, np.integer):
            return int(x)
        return x
    path.write_text(json.dumps(conv(payload), indent=2, sort_keys=True) + "\n")


def write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def _solution(cfg: ExperimentConfig) -> GridFunction:
    path = cfg.output_dir / "solution.csv"
    if not path.exists():
        raise ValidationError(f"no solution at {path}: run solve first")
    return GridFunction.from_csv(path)


# ---- subcommands -----------------------------------------------------------

def cmd_solve(cfg: ExperimentConfig) -> None:
    rep = solve_singular(cfg.problem, cfg.solve)
    out = cfg.output_dir
    csv_path = rep.solution.to_csv(out / "solution.csv")
    write_json(out / "solve_report.json", rep.to_json(csv_path))


def cmd_rates(cfg: ExperimentConfig) -> None:
    u = _solution(cfg)
    f = cfg.problem.forcing
    rep = diagnostics.rates(u, f.mu, f.alpha, cfg.window)
    predicted, _ = diagnostics.regime_predict(f.mu, f.alpha)
    write_json(cfg.output_dir / "rates.json", {
        "regime": rep.regime, "predicted_regime": predicted,
        "fitted_exponent": rep.fitted_exponent, "fitted_D": rep.fitted_D,
        "prefactor": rep.prefactor, "fit_residual": rep.fit_residual,
        "window": list(rep.window), "expected_exponent": rep.expected_exponent,
        "n_nodes": rep.n_nodes})
    d = u.r - u.grid.rho
    m = (d > cfg.window[0]) & (d < cfg.window[1])
    write_rows(cfg.output_dir / "rates.csv", ["scale", "value"], zip(d[m], u.values[m]))


def cmd_harnack(cfg: ExperimentConfig) -> None:
    u = _solution(cfg)
    width = u.grid.R - u.grid.rho
    scales = diagnostics.dyadic_scales(width, int(cfg.diagnostics["scales"]))
    h = diagnostics.harnack_ratio(u, cfg.problem, scales,
                                  bool(cfg.diagnostics["harnack_transform"]),
                                  cfg.diagnostics["p"])
    o = diagnostics.oscillation_decay(u, cfg.diagnostics["nu"])
    out = cfg.output_dir
    write_rows(out / "harnack.csv", ["scale", "ratio"], zip(h.scales, h.ratios))
    write_rows(out / "oscillation.csv", ["scale", "osc"], zip(o.scales, o.osc_values))
    write_json(out / "harnack.json", {
        "p_exponent": h.p_exponent, "scales": h.scales, "ratios": h.ratios,
        "transformed": h.transformed, "fitted_tau": o.fitted_tau,
        "tau_fit_residual": o.fit_residual, "recursion_gamma": o.recursion_gamma,
        "nu": o.nu, "already_c1": o.already_c1})


def cmd_eigen(cfg: ExperimentConfig) -> None:
    spec = cfg.problem
    geo = spec.geometry
    mu = cfg.extras["eigen_weight_mu"]
    mu = None if mu < 0 else mu
    grid = RadialGrid.uniform(geo.rho, geo.R, int(cfg.extras["eigen_nodes"]))
    pair = principal_eig(spec.ellipticity, spec.growth.b, geo, mu, grid)
    res = eig_residual(pair, spec.ellipticity, spec.growth.b, geo)
    path = pair.eigenfunction.to_csv(cfg.output_dir / "eigenfunction.csv")
    write_json(cfg.output_dir / "eigen.json", {
        "eigenvalue": pair.eigenvalue, "residual": res, "csv_path": str(path),
        "weighted": pair.weighted, "weight_mu": pair.weight_mu,
        "weight_form": pair.weight_form})


def cmd_certify(cfg: ExperimentConfig) -> None:
    spec = cfg.problem
    ineq = cfg.extras["inequality"]
    family = barriers.COMPATIBLE[ineq][-1]
    bounds = {}
    if ineq in (barriers.I3, barriers.I5):
        K = constant_supersolution(spec)
        if K is not None:
            bounds["sup_u"] = K
    start = None
    if ineq == barriers.I7:
        start = barriers.default_barrier(family, spec, nu=cfg.diagnostics["nu"])
    b, rep = barriers.search_constants(family, ineq, spec, bounds, start=start)
    write_json(cfg.output_dir / "certify.json", rep.to_json())


def _sweep_job(args):
    values, mu, alpha = args
    values = dict(values, mu=mu, alpha=alpha)
    cfg = ExperimentConfig.from_mapping(values)
    rep = solve_singular(cfg.problem, cfg.solve)
    job_dir = cfg.output_dir / f"sweep_mu{fmt(mu)}_alpha{fmt(alpha)}"
    job_dir.mkdir(parents=True, exist_ok=True)
    rep.solution.to_csv(job_dir / "solution.csv")
    rr = diagnostics.rates(rep.solution, mu, alpha, cfg.window)
    return mu, alpha, rr.regime, rr.expected_exponent, rr.fitted_exponent, rr.fit_residual


def parse_pairs(text: str):
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            mu, alpha = (float(x) for x in item.split(":"))
        except ValueError:
            raise ValidationError(f"bad (mu:alpha) pair {item!r}") from None
        pairs.append((mu, alpha))
    if not pairs:
        raise ValidationError("pairs is empty")
    return pairs


def cmd_sweep(cfg: ExperimentConfig, jobs: int = 1) -> None:
    values = cfg.effective()
    values = {k: fmt(v) if v is not None else "none" for k, v in values.items()}
    tasks = [(values, mu, alpha) for mu, alpha in parse_pairs(cfg.extras["pairs"])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_job, tasks))
    else:
        rows = [_sweep_job(t) for t in tasks]
    write_rows(cfg.output_dir / "rates_summary.csv",
               ["mu", "alpha", "regime", "expected", "fitted", "residual"], rows)


def cmd_report(cfg: ExperimentConfig) -> None:
    text = render_config({k: ("none" if v is None else v) for k, v in cfg.effective().items()})
    (cfg.output_dir / "effective.cfg").write_text(text)
    sys.stdout.write(text)


COMMANDS = {
    "solve": cmd_solve, "rates": cmd_rates, "harnack": cmd_harnack,
    "eigen": cmd_eigen, "certify": cmd_certify, "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singular-pucci", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a configuration entry")
        p.add_argument("--output-dir", help="override output_dir")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="concurrent jobs")
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.output_dir:
            overrides.append(f"output_dir={args.output_dir}")
        cfg = load_config(args.config, overrides)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "sweep":
            cmd_sweep(cfg, max(1, args.jobs))
        else:
            COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> None:
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
