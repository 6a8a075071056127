"""Explicit barriers, numeric certification of their inequalities, constant search.

Radial families are profiles in the distance ``d`` to the inner shell
(``orient = +1``, d = r - rho) or to it from inside (``orient = -1``,
d = rho - r). ``eval_barrier`` returns value, ``du/dr`` and ``d²u/dr²``.
The slab families return value, gradient and Hessian at ``x = (s, 0, ..., 0, x_N)``.

Margins are signed so that a positive value means the inequality holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .eigen import EigenPair, principal_eig
from .errors import PreconditionError, SearchExhausted, ValidationError
from .params import MINUS, PLUS, ProblemSpec, pucci
from .radial import radial_pucci

FAMILIES = ("U1", "U2", "U4", "U5", "U6", "U7", "W_slab", "Z_slab")

I1 = "I1_sub_regularized"
I2 = "I2_super_transformed"
I3 = "I3_arbi1"
I4 = "I4_B666"
I5 = "I5_ca4"
I6 = "I6_lower_regime3"
I7 = "I7_krylov_slab"
INEQUALITIES = (I1, I2, I3, I4, I5, I6, I7)

COMPATIBLE = {I1: ("U1",), I2: ("U2",), I3: ("U4",), I4: ("U5",), I5: ("U6",),
              I6: ("U7",), I7: ("W_slab", "Z_slab")}

REQUIRED = {
    "U1": ("kappa", "m1"),
    "U2": ("eta", "m2"),
    "U4": ("Cbar", "D"),
    "U5": ("cbar", "D"),
    "U6": ("Cbar",),
    "U7": ("cbar",),
    "W_slab": ("nu", "L", "delta_slab", "R"),
    "Z_slab": ("nu", "L", "delta_slab", "R"),
}

RADIAL_POINTS = 1024
SLAB_POINTS = 256
RECHECK_FACTOR = 4
MAX_SEARCH = 60


@dataclass(frozen=True)
class InequalityId:
    id: str

    def __post_init__(self):
        if self.id not in INEQUALITIES:
            raise ValidationError(f"unknown inequality {self.id!r}")


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    family: str
    constants: dict
    eigenfunction: EigenPair | None = None
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown barrier family {self.family!r}")
        c = self.constants
        missing = [k for k in REQUIRED[self.family] if k not in c]
        if missing:
            raise ValidationError(f"{self.family} needs constants {missing}")
        if "kappa" in c and not 1 < c["kappa"] < 2:
            raise ValidationError("kappa must lie in (1, 2)")
        if "eta" in c and not 0 < c["eta"] < 1:
            raise ValidationError("eta must lie in (0, 1)")
        if "nu" in c and not 0 < c["nu"] < 1:
            raise ValidationError("nu must lie in (0, 1)")
        if self.family in ("U1", "U2"):
            if self.eigenfunction is None:
                raise ValidationError(f"{self.family} needs a reference eigenfunction")
            psi = self.eigenfunction.eigenfunction
            object.__setattr__(self, "_spline", CubicSpline(psi.r, psi.values))
        if c.get("orient", 1) not in (1, -1):
            raise ValidationError("orient must be +1 or -1")

    def with_constants(self, **updates) -> "BarrierSpec":
        return replace(self, constants={**self.constants, **updates}, _spline=None)

    def psi(self, r):
        s = self._spline
        return s(r), s(r, 1), s(r, 2)


@dataclass(frozen=True)
class CertifyReport:
    min_margin: float
    worst_node: object
    evaluated_nodes: int
    inequality: str = ""
    family: str = ""
    constants: dict = field(default_factory=dict)
    side_ok: bool = True
    passed: bool = False
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"inequality": self.inequality, "family": self.family,
                "constants": {k: float(v) for k, v in self.constants.items()},
                "min_margin": float(self.min_margin),
                "worst_node": self.worst_node, "side_ok": bool(self.side_ok),
                "passed": bool(self.passed), **{k: v for k, v in self.notes.items()}}


# ---- closed forms ----------------------------------------------------------

def log_profile(d, C, D, alpha):
    """``C d (D - log d)^{1/(1+alpha)}`` and its first two d-derivatives."""
    g = D - np.log(d)
    if np.any(g <= 0):
        raise PreconditionError("D - log d must be positive")
    h = g ** (-alpha / (1 + alpha))
    f = C * d * g ** (1.0 / (1 + alpha))
    f1 = C * h * (g - 1.0 / (1 + alpha))
    f2 = -C * h / ((1 + alpha) * d) * (1 + alpha / ((1 + alpha) * g))
    return f, f1, f2


def power_profile(d, C, p):
    """``C d^p`` and its first two d-derivatives."""
    return C * d ** p, C * p * d ** (p - 1), C * p * (p - 1) * d ** (p - 2)


def rate_exponent(mu: float, alpha: float) -> float:
    return (2.0 + mu) / (1.0 + alpha)


def _distance(r, rho, orient, closed=False):
    d = (np.asarray(r, dtype=float) - rho) * orient
    if np.any(d < 0) or (not closed and np.any(d == 0)):
        raise PreconditionError("point lies outside the barrier's shell")
    return d


def eval_barrier(b: BarrierSpec, point, spec: ProblemSpec):
    """Closed-form value and derivatives of a barrier.

    Parameters
    ----------
    point : float, array, or (s, x_N) pair
        Radius (radial families) or lateral/normal coordinates (slab families).
    """
    c = b.constants
    f = spec.forcing
    rho = spec.geometry.rho
    fam = b.family
    if fam in ("W_slab", "Z_slab"):
        s, xN = point
        return slab_eval(np.asarray(s, float), np.asarray(xN, float), c, spec,
                         transformed=(fam == "Z_slab"))
    r = np.asarray(point, dtype=float)
    if fam == "U1":
        psi, p1, p2 = b.psi(r)
        k, m = c["kappa"], c["m1"]
        if np.any(psi <= 0):
            raise PreconditionError("eigenfunction must be positive at sample points")
        val = m * psi ** k
        d1 = m * k * psi ** (k - 1) * p1
        d2 = m * k * ((k - 1) * psi ** (k - 2) * p1 ** 2 + psi ** (k - 1) * p2)
        return val, d1, d2
    if fam == "U2":
        psi, p1, p2 = b.psi(r)
        eta, m = c["eta"], c["m2"]
        L, W = spec.geometry.L, spec.geometry.width
        if np.any(psi <= 0):
            raise PreconditionError("eigenfunction must be positive at sample points")
        val = (1 + m) * psi ** eta + m * psi + L * (r - rho) / W
        d1 = (1 + m) * eta * psi ** (eta - 1) * p1 + m * p1 + L / W
        d2 = ((1 + m) * eta * ((eta - 1) * psi ** (eta - 2) * p1 ** 2 + psi ** (eta - 1) * p2)
              + m * p2)
        return val, d1, d2
    orient = c.get("orient", 1 if fam in ("U4", "U6") else -1)
    if fam in ("U4", "U5"):
        if c["D"] <= 1 + math.log(2 * 2 * spec.geometry.R):
            raise PreconditionError("D must exceed 1 + log(2 diam)")
        d = _distance(r, rho, orient)
        C = c["Cbar"] if fam == "U4" else c["cbar"]
        val, f1, f2 = log_profile(d, C, c["D"], f.alpha)
    else:
        # power profiles extend to the shell itself (derivatives may be infinite there)
        d = _distance(r, rho, orient, closed=True)
        C = c["Cbar"] if fam == "U6" else c["cbar"]
        with np.errstate(divide="ignore"):
            val, f1, f2 = power_profile(d, C, rate_exponent(f.mu, f.alpha))
    return val, orient * f1, f2


def slab_W(s, xN, c):
    """W, its gradient components (lateral, normal) and Hessian entries."""
    L, nu, dl, R = c["L"], c["nu"], c["delta_slab"], c["R"]
    top = (R * dl) ** (1 - nu)
    den = (R * dl) ** ((1 - nu) / 2)
    bracket = 1 - s ** 2 / R ** 2 + (xN ** (1 - nu) - top) / den
    W = L * bracket * xN
    Ws = -2 * L * s * xN / R ** 2
    WN = L * (1 - s ** 2 / R ** 2 + ((2 - nu) * xN ** (1 - nu) - top) / den)
    Gamma = (2 - nu) * (1 - nu) / den
    Wss = -2 * L * xN / R ** 2 * np.ones_like(s)
    WsN = -2 * L * s / R ** 2 * np.ones_like(xN)
    WNN = L * Gamma * xN ** (-nu) * np.ones_like(s)
    return W, Ws, WN, Wss, WsN, WNN


def slab_eval(s, xN, c, spec: ProblemSpec, transformed: bool = False):
    """Value, gradient ``(..., N)`` and Hessian ``(..., N, N)`` of W or Z.

    Z = (1 - e^{-l1 W})/l1 with l1 = B/Λ.
    """
    if np.any(xN <= 0):
        raise PreconditionError("slab points need x_N > 0")
    n = spec.ellipticity.dim
    if n < 2:
        raise ValidationError("the slab barrier needs dim ≥ 2")
    s, xN = np.broadcast_arrays(s, xN)
    W, Ws, WN, Wss, WsN, WNN = slab_W(s, xN, c)
    shape = W.shape
    grad = np.zeros(shape + (n,))
    grad[..., 0] = Ws
    grad[..., -1] = WN
    hess = np.zeros(shape + (n, n))
    for i in range(n - 1):
        hess[..., i, i] = Wss
    hess[..., 0, -1] = WsN
    hess[..., -1, 0] = WsN
    hess[..., -1, -1] = WNN
    if not transformed:
        return W, grad, hess
    l = spec.derived.l1
    if l == 0:
        return W, grad, hess
    e = np.exp(-l * W)
    Z = -np.expm1(-l * W) / l
    gZ = e[..., None] * grad
    hZ = e[..., None, None] * (hess - l * grad[..., :, None] * grad[..., None, :])
    return Z, gZ, hZ


# ---- margins ---------------------------------------------------------------

def _F2(d2, d1, r, spec, sign):
    ell, b = spec.ellipticity, spec.growth.b
    val = radial_pucci(d2, d1, r, ell, sign)
    return val + b * np.abs(d1) if sign == PLUS else val - b * np.abs(d1)


def _margin(b: BarrierSpec, ineq: str, spec: ProblemSpec, pts):
    g, f = spec.growth, spec.forcing
    rho = spec.geometry.rho
    l = spec.derived.l2
    if ineq == I7:
        s, xN = pts
        _, gZ, hZ = slab_eval(s, xN, b.constants, spec, transformed=True)
        a2 = b.constants.get("a2", f.C2)
        nu = b.constants["nu"]
        return (pucci(hZ, spec.ellipticity, MINUS) - g.b * np.linalg.norm(gZ, axis=-1)
                - 2 * a2 * xN ** (-nu))
    r = pts
    u, u1, u2 = eval_barrier(b, r, spec)
    d = np.abs(r - rho)
    if ineq == I1:
        delta = b.constants.get("delta", 1e-2)
        return (_F2(u2, u1, r, spec, PLUS) - g.c0 * u
                + f.M * d ** f.mu * (u + delta) ** (-f.alpha))
    if ineq == I2:
        lw = np.log1p(l * u) / l if l > 0 else u
        return -(_F2(u2, u1, r, spec, PLUS) - g.c0 * (1 + l * u) * lw
                 + f.M * d ** f.mu * (1 + l * u) * lw ** (-f.alpha))
    if ineq in (I3, I5):
        lw = np.log1p(l * u) / l if l > 0 else u
        return -(_F2(u2, u1, r, spec, PLUS) + f.C2 * d ** f.mu * (1 + l * u) * lw ** (-f.alpha))
    if ineq in (I4, I6):
        if np.any(l * u >= 1):
            return np.full_like(u, -np.inf)
        lw = -np.log1p(-l * u) / l if l > 0 else u
        return (_F2(u2, u1, r, spec, MINUS) - g.c0 * (1 - l * u) * lw
                + f.C1 * d ** f.mu * (1 - l * u) * lw ** (-f.alpha))
    raise ValidationError(f"unknown inequality {ineq!r}")


# ---- samples ---------------------------------------------------------------

def shell_width(b: BarrierSpec, spec: ProblemSpec) -> float:
    geo = spec.geometry
    c = b.constants
    if b.family in ("U4", "U6"):
        return min(c.get("theta_ann", 1.0) * geo.rho, geo.width)
    orient = c.get("orient", -1)
    width = c.get("shell", geo.rho / 2)
    return min(width, geo.width) if orient == 1 else width


def radial_sample(b: BarrierSpec, spec: ProblemSpec, n: int = RADIAL_POINTS):
    """Points where a radial inequality is checked.

    Full-annulus families cluster toward both shells; shell families cluster
    toward the inner shell (distance from ``1e-8`` times the width up to the width).
    """
    geo = spec.geometry
    if b.family in ("U1", "U2"):
        half = geo.width / 2
        d = np.geomspace(1e-8 * geo.width, half, n // 2)
        return np.unique(np.concatenate((geo.rho + d, geo.R - d)))
    width = shell_width(b, spec)
    d = np.geomspace(1e-8 * width, width, n)
    orient = b.constants.get("orient", 1 if b.family in ("U4", "U6") else -1)
    return geo.rho + orient * d


def slab_sample(c, n: int = SLAB_POINTS):
    R, dl = c["R"], c["delta_slab"]
    s = np.linspace(0.0, 2 * R, n)
    xN = np.geomspace(dl * R * 1e-8, dl * R, n)
    S, X = np.meshgrid(s, xN, indexing="ij")
    return S, X


def default_sample(b: BarrierSpec, ineq: str, spec: ProblemSpec, refine: int = 1):
    if ineq == I7:
        return slab_sample(b.constants, SLAB_POINTS * refine)
    return radial_sample(b, spec, RADIAL_POINTS * refine)


def side_condition(b: BarrierSpec, ineq: str, spec: ProblemSpec, bounds=None) -> bool:
    """Side conditions folded into the pass criterion."""
    bounds = bounds or {}
    c = b.constants
    l = spec.derived.l2
    if ineq in (I3, I5):
        sup_u = bounds.get("sup_u")
        if sup_u is None:
            return True
        edge = spec.geometry.rho + shell_width(b, spec)
        u_edge = float(eval_barrier(b, edge, spec)[0])
        top = math.log1p(l * u_edge) / l if l > 0 else u_edge
        return top >= sup_u
    if ineq in (I4, I6):
        inner_min = bounds.get("inner_min")
        if inner_min is None:
            return True
        edge = spec.geometry.rho + c.get("orient", -1) * shell_width(b, spec)
        u_edge = float(eval_barrier(b, edge, spec)[0])
        if l * u_edge >= 1:
            return False
        low = -math.log1p(-l * u_edge) / l if l > 0 else u_edge
        return low <= inner_min
    if ineq == I7:
        f = spec.forcing
        nu = c["nu"]
        return bool((c["delta_slab"] * c["R"]) ** ((1 - nu) / 2) <= 0.25
                    and f.alpha - f.mu < nu < 1)
    return True


def certify(b: BarrierSpec, ineq, spec: ProblemSpec, sample=None,
            bounds=None) -> CertifyReport:
    """Signed slack of an inequality at every sample point.

    Passes when ``min_margin ≥ 0`` and the side conditions hold.
    """
    ineq = ineq.id if isinstance(ineq, InequalityId) else InequalityId(ineq).id
    if b.family not in COMPATIBLE[ineq]:
        raise ValidationError(f"{b.family} is not compatible with {ineq}")
    if ineq == I1 and b.constants["m1"] <= 0:
        raise PreconditionError("m1 must be positive (u1 ≡ 0 makes the singular term undefined)")
    pts = default_sample(b, ineq, spec) if sample is None else sample
    if ineq == I7:
        s, xN = np.broadcast_arrays(*map(np.asarray, pts))
        if s.size == 0:
            raise PreconditionError("empty sample")
        m = _margin(b, ineq, spec, (s, xN))
        k = np.unravel_index(int(np.argmin(m)), m.shape)
        worst = [float(s[k]), float(xN[k])]
    else:
        pts = np.asarray(pts, dtype=float)
        if pts.size == 0:
            raise PreconditionError("empty sample")
        m = _margin(b, ineq, spec, pts)
        k = int(np.argmin(m))
        worst = float(pts[k])
    m = np.where(np.isnan(m), -np.inf, m)
    min_margin = float(np.min(m))
    side = side_condition(b, ineq, spec, bounds)
    notes = {}
    if ineq == I7:
        notes["a2"] = float(b.constants.get("a2", spec.forcing.C2))
    return CertifyReport(min_margin, worst, int(m.size), ineq, b.family,
                         dict(b.constants), side, bool(min_margin >= 0 and side), notes)


# ---- search ----------------------------------------------------------------

def default_barrier(family: str, spec: ProblemSpec, eigenpair: EigenPair | None = None,
                    **overrides) -> BarrierSpec:
    """Barrier with the initial constants used by ``search_constants``."""
    geo = spec.geometry
    D0 = 1.0 + math.log(2 * 2 * geo.R) + 1.0
    init = {
        "U1": {"kappa": 1.5, "m1": 1.0, "delta": 1e-2},
        "U2": {"eta": 0.5, "m2": 1.0},
        "U4": {"Cbar": 1.0, "D": D0, "theta_ann": 1.0},
        "U5": {"cbar": 1.0, "D": D0, "orient": -1},
        "U6": {"Cbar": 1.0, "theta_ann": 1.0},
        "U7": {"cbar": 1.0, "orient": -1},
        "W_slab": {"nu": 0.5, "L": geo.L, "delta_slab": 0.5, "R": 1.0},
        "Z_slab": {"nu": 0.5, "L": geo.L, "delta_slab": 0.5, "R": 1.0},
    }[family]
    init.update(overrides)
    if family in ("U1", "U2") and eigenpair is None:
        ell, b = spec.ellipticity, spec.growth.b
        mu = spec.forcing.mu if family == "U1" and spec.forcing.mu > 0 else None
        eigenpair = principal_eig(ell, b, geo, weight_mu=mu)
    return BarrierSpec(family, init, eigenpair if family in ("U1", "U2") else None)


def _next(b: BarrierSpec, ineq: str, rep: CertifyReport) -> BarrierSpec:
    c = b.constants
    if ineq == I1:
        return b.with_constants(m1=c["m1"] / 2)
    if ineq == I2:
        return b.with_constants(m2=c["m2"] * 2)
    if ineq in (I3, I5):
        if rep.min_margin < 0:
            return b.with_constants(theta_ann=c.get("theta_ann", 1.0) / 2, Cbar=c["Cbar"] * 2)
        return b.with_constants(Cbar=c["Cbar"] * 2)
    if ineq in (I4, I6):
        return b.with_constants(cbar=c["cbar"] / 2)
    return b.with_constants(delta_slab=c["delta_slab"] / 2)


def search_constants(family: str, ineq, spec: ProblemSpec, bounds=None,
                     start: BarrierSpec | None = None, max_steps: int = MAX_SEARCH,
                     eigenpair: EigenPair | None = None) -> tuple[BarrierSpec, CertifyReport]:
    """Monotone search for constants that certify ``ineq``.

    Small constants (m1, cbar, delta_slab, theta_ann) are halved and large ones
    (m2, Cbar) doubled until the inequality and its side conditions hold on the
    default sample and on a 4× finer recheck sample.

    ``bounds`` may supply ``sup_u`` (upper side condition) and ``inner_min``
    (lower side condition). Returns the passing barrier and its recheck report.
    """
    ineq = ineq.id if isinstance(ineq, InequalityId) else InequalityId(ineq).id
    if family not in COMPATIBLE[ineq]:
        raise ValidationError(f"{family} is not compatible with {ineq}")
    b = start or default_barrier(family, spec, eigenpair)
    trajectory = []
    for _ in range(max_steps):
        rep = certify(b, ineq, spec, bounds=bounds)
        trajectory.append(rep.min_margin)
        if rep.passed:
            fine = certify(b, ineq, spec, default_sample(b, ineq, spec, RECHECK_FACTOR), bounds)
            if fine.passed:
                return b, fine
            rep = fine
        b = _next(b, ineq, rep)
    raise SearchExhausted(f"{ineq}: no admissible constants after {max_steps} steps",
                          trajectory)
