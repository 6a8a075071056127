"""Exponential substitutions that absorb quadratic gradient growth.

``up``:   v = (e^{lu} - 1)/l,  inverse u = log(1 + l v)/l
``down``: w = (1 - e^{-lu})/l, inverse u = -log(1 - l w)/l
``l = 0`` is the identity map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ValidationError
from .grid import GridFunction, interior_derivatives
from .params import Ellipticity
from .radial import radial_pucci

UP = "up"
DOWN = "down"


@dataclass(frozen=True)
class TransformKind:
    kind: str
    l: float

    def __post_init__(self):
        if self.kind not in (UP, DOWN):
            raise ValidationError("kind must be 'up' or 'down'")
        if not self.l >= 0:
            raise ValidationError("transform parameter must be nonnegative")


def apply_transform(values, t: TransformKind):
    u = np.asarray(values, dtype=float)
    if t.l == 0:
        return u.copy()
    # the clamps only repair last-ulp rounding of down(u) ≤ u ≤ up(u) for u ≥ 0
    if t.kind == UP:
        v = np.expm1(t.l * u) / t.l
        return np.where(u >= 0, np.maximum(v, u), v)
    w = -np.expm1(-t.l * u) / t.l
    return np.where(u >= 0, np.minimum(w, u), w)


def inverse_transform(values, t: TransformKind):
    v = np.asarray(values, dtype=float)
    if t.l == 0:
        return v.copy()
    if t.kind == UP:
        return np.log1p(t.l * v) / t.l
    if np.any(t.l * v >= 1):
        raise PreconditionError("down-inverse needs l·w < 1")
    return -np.log1p(-t.l * v) / t.l


def log_up(v, l: float):
    """``log(1 + l v)/l`` (the up-inverse), identity at ``l = 0``."""
    return inverse_transform(v, TransformKind(UP, l))


def log_down(w, l: float):
    """``-log(1 - l w)/l`` (the down-inverse), identity at ``l = 0``."""
    return inverse_transform(w, TransformKind(DOWN, l))


@dataclass(frozen=True)
class SandwichReport:
    slacks: dict
    worst_node: dict
    tolerance: float
    passed: bool


def check_sandwich(u: GridFunction, l: float, ell: Ellipticity,
                   h: float | None = None) -> SandwichReport:
    """Finite-difference check of the four two-sided bounds.

    With v the up-map and w the down-map of u (parameter l), at every interior
    node and for both Pucci signs:

    * ``up_lower``:   lλ|u'|² + M±(D²u) ≤ M±(D²v)/(1+lv)
    * ``up_upper``:   M±(D²v)/(1+lv) ≤ lΛ|u'|² + M±(D²u)
    * ``down_lower``: -lΛ|u'|² + M±(D²u) ≤ M±(D²w)/(1-lw)
    * ``down_upper``: M±(D²w)/(1-lw) ≤ -lλ|u'|² + M±(D²u)

    Slack is right side minus left side, minimized over nodes and signs.
    The tolerance is ``10·h²`` with ``h`` the largest cell (or the value given).
    """
    r = u.r
    ri = r[1:-1]
    if h is None:
        h = float(np.max(u.grid.h))
    tol = 10.0 * h * h
    if l < 0:
        raise PreconditionError("l must be nonnegative")
    v = apply_transform(u.values, TransformKind(UP, l))
    w = apply_transform(u.values, TransformKind(DOWN, l))
    up_, upp = interior_derivatives(r, u.values)
    vp, vpp = interior_derivatives(r, v)
    wp, wpp = interior_derivatives(r, w)
    grad2 = up_ ** 2
    vi, wi = v[1:-1], w[1:-1]
    slacks, worst = {}, {}
    chains = {
        "up_lower": lambda Mu, Mv, Mw: Mv / (1 + l * vi) - (l * ell.lam * grad2 + Mu),
        "up_upper": lambda Mu, Mv, Mw: (l * ell.Lam * grad2 + Mu) - Mv / (1 + l * vi),
        "down_lower": lambda Mu, Mv, Mw: Mw / (1 - l * wi) - (-l * ell.Lam * grad2 + Mu),
        "down_upper": lambda Mu, Mv, Mw: (-l * ell.lam * grad2 + Mu) - Mw / (1 - l * wi),
    }
    per_sign = {}
    for sign in ("plus", "minus"):
        per_sign[sign] = (radial_pucci(upp, up_, ri, ell, sign),
                          radial_pucci(vpp, vp, ri, ell, sign),
                          radial_pucci(wpp, wp, ri, ell, sign))
    for name, chain in chains.items():
        stacked = np.vstack([chain(*per_sign[s]) for s in ("plus", "minus")])
        per_node = stacked.min(axis=0)
        k = int(np.argmin(per_node))
        slacks[name] = float(per_node[k])
        worst[name] = k + 1
    passed = all(s >= -tol for s in slacks.values())
    return SandwichReport(slacks, worst, tol, passed)


def calc_bounds(r: float, l1: float, l2: float) -> tuple[float, float]:
    """``(-log(1 - l2 r)/l2, log(1 + l1 r)/l1)``; the first is ≥ r, the second ≤ r."""
    if r < 0:
        raise PreconditionError("r must be nonnegative")
    if l2 > 0 and r >= 1.0 / l2:
        raise PreconditionError("r must lie in [0, 1/l2)")
    lhs_i = float(log_down(r, l2))
    lhs_ii = float(log_up(r, l1))
    return lhs_i, lhs_ii
