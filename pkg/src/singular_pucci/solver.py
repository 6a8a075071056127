"""Monotone iteration for the regularized radial problem and δ-continuation.

Each sweep freezes the θ-policy and the signs of ``w'`` at the current
iterate and solves the resulting linear tridiagonal problem (a Newton step
for the convex residual). Started from a subsolution, every step is
nonnegative and every iterate is again a subsolution, so the ascending
sequence is nondecreasing node by node with no tolerance involved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tridiag
from .errors import (BracketViolation, ConvergenceError, NumericalError,
                     PreconditionError, ValidationError)
from .grid import DEFAULT_NODES, GridFunction, RadialGrid, interior_stencils
from .params import ProblemSpec
from .radial import hopf_point, residual_parts, theta

SUB_TOL = 1e-9  # relative slack accepted when certifying the starting iterate


@dataclass(frozen=True)
class SolveConfig:
    delta0: float = 1e-2
    delta_steps: int = 8
    inner_tol: float = 1e-10
    max_inner: int = 500
    policy_tol: float = 1e-12
    continuation_tol: float = 1e-3
    nodes: int = DEFAULT_NODES
    first_cell: float | None = None

    def __post_init__(self):
        for name in ("delta0", "inner_tol", "policy_tol", "continuation_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.delta_steps < 1:
            raise ValidationError("delta_steps must be ≥ 1")
        if self.max_inner < 1:
            raise ValidationError("max_inner must be positive")
        if self.nodes < 5:
            raise ValidationError("nodes must be ≥ 5")

    def grid(self, spec: ProblemSpec) -> RadialGrid:
        geo = spec.geometry
        return RadialGrid.geometric(geo.rho, geo.R, self.nodes, self.first_cell)


@dataclass
class SolveReport:
    solution: GridFunction
    residual_max: float
    iterations_per_delta: list
    bracket_violations: int = 0
    hopf_radius: float = float("nan")
    deltas: list = field(default_factory=list)
    history: list = field(default_factory=list, repr=False)
    iterates: list = field(default_factory=list, repr=False)
    last_step_change: float = 0.0

    def to_json(self, solution_csv_path) -> dict:
        return {
            "solution_csv_path": str(solution_csv_path),
            "residual_max": float(self.residual_max),
            "iterations": int(sum(self.iterations_per_delta)),
            "hopf_radius": float(self.hopf_radius),
        }


def _jacobian(r, w, wp, wpp, spec: ProblemSpec, delta: float):
    """Tridiagonal derivative of the interior residual (sub, diag, sup)."""
    ell, g, f = spec.ellipticity, spec.growth, spec.forcing
    ri, wi = r[1:-1], w[1:-1]
    d1, d2 = interior_stencils(r)
    a = theta(wpp, ell)
    hp = theta(wp, ell) * (ell.dim - 1) / ri + 2.0 * g.B * wp + g.b * np.sign(wp)
    J = a[:, None] * d2 + hp[:, None] * d1
    diag = J[:, 1] - g.c0
    if f.M != 0:
        dist = ri - spec.geometry.rho
        diag = diag - f.alpha * f.M * dist ** f.mu * (wi + delta) ** (-f.alpha - 1.0)
    return J[:, 0], diag, J[:, 2]


def _check_boundary(w, spec, which):
    L = spec.geometry.L
    if which == "lower" and (w[0] > 0 or w[-1] > L):
        raise PreconditionError("lower exceeds the boundary data")
    if which == "upper" and (w[0] < 0 or w[-1] < L):
        raise PreconditionError("upper lies below the boundary data")


def _newton(r, w, spec, delta, cfg, lower, upper, clip, iterates):
    """Run damped Newton sweeps from ``w``; return (w, sweeps, relative residual)."""
    L = spec.geometry.L
    n = r.size
    prev_policy = None
    for sweep in range(1, cfg.max_inner + 1):
        parts = residual_parts(r, w, spec, delta)
        G = parts.residual
        if clip:
            # rounding-level negatives on the subsolution side are zeroed
            tiny = (G < 0) & (G >= -SUB_TOL * (1.0 + parts.scale))
            G = np.where(tiny, 0.0, G)
        sub, diag, sup = _jacobian(r, w, parts.wp, parts.wpp, spec, delta)
        A_sub, A_diag, A_sup = -sub, -diag, -sup
        if not tridiag.is_m_matrix(A_sub, A_diag, A_sup):
            raise NumericalError("linearized operator is not monotone on this mesh; refine the grid")
        step0, stepn = 0.0 - w[0], L - w[-1]
        rhs = G.copy()
        rhs[0] -= A_sub[0] * step0
        rhs[-1] -= A_sup[-1] * stepn
        dw = np.empty(n)
        dw[0], dw[-1] = step0, stepn
        dw[1:-1] = tridiag.solve(A_sub, A_diag, A_sup, rhs)
        t = 1.0
        while True:
            cand = w + t * dw
            cand[0], cand[-1] = 0.0, L
            ok = True
            if lower is not None and np.any(cand < lower):
                ok = False
            if upper is not None and np.any(cand > upper):
                ok = False
            if spec.forcing.M != 0 and np.any(cand[1:-1] + delta <= 0):
                ok = False
            if ok:
                break
            t *= 0.5
            if t < 2.0 ** -40:
                raise BracketViolation(f"iterate escapes [lower, upper] at sweep {sweep}")
        change = float(np.max(np.abs(cand - w)))
        w = cand
        if iterates is not None:
            iterates.append(w.copy())
        clip = True  # every Newton iterate of a convex residual is a subsolution
        policy = np.concatenate((parts.wpp >= 0, parts.wp >= 0, parts.wp > 0))
        stable = prev_policy is not None and np.mean(policy != prev_policy) <= cfg.policy_tol
        prev_policy = policy
        if change <= cfg.inner_tol and (stable or change == 0.0):
            final = residual_parts(r, w, spec, delta)
            return w, sweep, float(np.max(np.abs(final.relative)))
    raise ConvergenceError(f"no convergence after {cfg.max_inner} sweeps (last change {change:.3e})")


def solve_regularized(spec: ProblemSpec, delta: float, lower: GridFunction,
                      upper: GridFunction | None = None, cfg: SolveConfig | None = None,
                      side: str = "lower", record_iterates: bool = False) -> SolveReport:
    """Monotone solve of the δ-regularized radial problem.

    Parameters
    ----------
    lower, upper : GridFunction
        Ordered sub- and supersolution. ``upper=None`` drops the upper bracket
        (allowed when no finite supersolution is at hand).
    side : {"lower", "upper"}
        Start from ``lower`` (ascending limit, the default) or from ``upper``
        (descending limit, used to check uniqueness numerically).
    record_iterates : bool
        Keep every sweep's iterate in ``report.iterates``.
    """
    cfg = cfg or SolveConfig()
    if not delta >= 0:
        raise PreconditionError("delta must be nonnegative")
    r = lower.r
    lo = np.array(lower.values)
    up = None if upper is None else np.array(upper.values)
    if up is not None:
        if upper.grid is not lower.grid and not np.array_equal(upper.r, r):
            raise PreconditionError("lower and upper live on different grids")
        if np.any(lo > up):
            k = int(np.argmax(lo > up))
            raise PreconditionError(f"lower > upper at node {k}")
        _check_boundary(up, spec, "upper")
    _check_boundary(lo, spec, "lower")
    if spec.forcing.M != 0 and delta == 0 and np.any(lo[1:-1] <= 0):
        raise PreconditionError("singular term undefined where lower + delta ≤ 0")
    if side == "lower":
        parts = residual_parts(r, lo, spec, delta)
        if np.any(parts.residual < -SUB_TOL * (1.0 + parts.scale)):
            raise PreconditionError("lower is not a subsolution")
        start = lo
    elif side == "upper":
        if up is None:
            raise PreconditionError("descending iteration needs an upper bracket")
        parts = residual_parts(r, up, spec, delta)
        if np.any(parts.residual > SUB_TOL * (1.0 + parts.scale)):
            raise PreconditionError("upper is not a supersolution")
        start = up
    else:
        raise ValidationError("side must be 'lower' or 'upper'")
    iterates = [start.copy()] if record_iterates else None
    w, sweeps, res = _newton(r, start.copy(), spec, delta, cfg, lo, up,
                             clip=(side == "lower"), iterates=iterates)
    sol = GridFunction(lower.grid, w)
    return SolveReport(sol, res, [sweeps], 0, hopf_point(sol), [delta],
                       iterates=iterates or [])


def constant_supersolution(spec: ProblemSpec) -> float | None:
    """Height ``K`` of a constant supersolution, or ``None`` when ``c0 = 0``."""
    g, f, geo = spec.growth, spec.forcing, spec.geometry
    if f.M == 0:
        return geo.L if g.c0 >= 0 else None
    if g.c0 <= 0:
        return None
    return max(geo.L, (f.M * geo.width ** f.mu / g.c0) ** (1.0 / (1.0 + f.alpha)))


def solve_singular(spec: ProblemSpec, cfg: SolveConfig | None = None,
                   grid: RadialGrid | None = None) -> SolveReport:
    """δ-continuation toward the singular problem.

    Each solution serves as the subsolution for the next, halved δ, so the
    family is nondecreasing in the continuation index by construction.
    """
    cfg = cfg or SolveConfig()
    grid = grid or cfg.grid(spec)
    K = constant_supersolution(spec)
    upper = None if K is None else GridFunction(grid, np.full(grid.size, K))
    lower = GridFunction(grid, np.zeros(grid.size))
    history, iters, deltas = [], [], []
    report = None
    for k in range(cfg.delta_steps + 1):
        delta = cfg.delta0 * 2.0 ** (-k)
        report = solve_regularized(spec, delta, lower, upper, cfg)
        history.append(report.solution)
        iters.extend(report.iterations_per_delta)
        deltas.append(delta)
        lower = report.solution
    change = float(np.max(np.abs(history[-1].values - history[-2].values)))
    if change > cfg.continuation_tol:
        raise ConvergenceError(
            f"continuation stagnated: last two solutions differ by {change:.3e}")
    report.iterations_per_delta = iters
    report.deltas = deltas
    report.history = history
    report.last_step_change = change
    return report


@dataclass(frozen=True)
class AuditReport:
    passed: bool
    worst_margin: float
    worst_node: int
    worst_radius: float


def compare_audit(u: GridFunction, v: GridFunction, spec: ProblemSpec, delta: float,
                  tol: float = 1e-9, require_sub_super: bool = True) -> AuditReport:
    """Check ``u ≤ v`` nodewise for a subsolution ``u`` and a supersolution ``v``.

    ``worst_margin`` is ``min(v - u)``; the audit passes when it is ≥ ``-tol``.
    ``require_sub_super=False`` skips the residual-sign preconditions.
    """
    if not np.array_equal(u.r, v.r):
        raise PreconditionError("u and v must share a grid")
    if u.values[0] > v.values[0] + tol or u.values[-1] > v.values[-1] + tol:
        raise PreconditionError("u > v at a boundary node")
    if require_sub_super:
        pu = residual_parts(u.r, u.values, spec, delta)
        pv = residual_parts(v.r, v.values, spec, delta)
        if np.any(pu.relative < -tol):
            raise PreconditionError("u is not a subsolution")
        if np.any(pv.relative > tol):
            raise PreconditionError("v is not a supersolution")
    gap = v.values - u.values
    k = int(np.argmin(gap))
    return AuditReport(bool(gap[k] >= -tol), float(gap[k]), k, float(u.r[k]))
