"""Boundary-rate fits, weak-Harnack ratios and oscillation decay of u/d.

Distances are ``d = r - rho`` and all fits work in ``(log d, log u)``
coordinates over nodes strictly inside the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ValidationError
from .grid import GridFunction
from .params import ProblemSpec
from .transforms import TransformKind, apply_transform

LINEAR = "linear"
LOG_CORRECTED = "log_corrected"
POWER = "power"

MIN_FIT_NODES = 20
DEFAULT_WINDOW = (1e-4, 1e-2)
D_UPPER = 1e3
GOLDEN = (math.sqrt(5) - 1) / 2
SLAB_FRACTION = 0.1
# a log-corrected fit must beat the pure power law by this factor
LOG_PREFERENCE = 0.5
LINEAR_BAND = 0.05


@dataclass(frozen=True)
class RateReport:
    regime: str
    fitted_exponent: float
    fitted_D: float | None
    prefactor: float
    fit_residual: float
    window: tuple
    expected_exponent: float
    n_nodes: int = 0
    degenerate: bool = False

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValidationError("window needs d_min < d_max")


@dataclass(frozen=True)
class HarnackReport:
    p_exponent: float
    scales: list
    ratios: list
    transformed: bool


@dataclass(frozen=True)
class OscillationReport:
    scales: list
    osc_values: list
    fitted_tau: float
    recursion_gamma: float
    nu: float
    fit_residual: float = float("nan")
    already_c1: bool = False
    C: float = float("nan")


def regime_predict(mu: float, alpha: float):
    """Regime and expected exponent of the boundary rate.

    Returns ``(regime, exponent)``; for the critical case the log power
    ``1/(1+alpha)`` is available through :func:`log_power`.
    """
    if mu < 0 or not alpha > 0:
        raise ValidationError("need mu ≥ 0 and alpha > 0")
    if math.isclose(alpha, 1 + mu, rel_tol=1e-12, abs_tol=1e-12):
        return LOG_CORRECTED, 1.0
    if alpha < 1 + mu:
        return LINEAR, 1.0
    return POWER, (mu + 2) / (1 + alpha)


def log_power(alpha: float) -> float:
    return 1.0 / (1.0 + alpha)


def _window(u: GridFunction, window):
    d_min, d_max = window
    if not 0 < d_min < d_max:
        raise ValidationError("window needs 0 < d_min < d_max")
    width = u.grid.R - u.grid.rho
    if d_max > width / 2:
        raise ValidationError("window must lie inside (0, (R - rho)/2)")
    d = u.r - u.grid.rho
    mask = (d > d_min) & (d < d_max)
    if mask.sum() < MIN_FIT_NODES:
        raise ValidationError(f"window too narrow: {int(mask.sum())} nodes (< {MIN_FIT_NODES})")
    dd, uu = d[mask], u.values[mask]
    if np.any(uu <= 0):
        raise PreconditionError("u must be positive on the window")
    return dd, uu


def fit_power(u: GridFunction, window=DEFAULT_WINDOW, expected: float = float("nan")) -> RateReport:
    """Least-squares line through ``(log d, log u)``."""
    d, v = _window(u, window)
    x, y = np.log(d), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - slope * x - intercept) ** 2)))
    regime = LINEAR if abs(slope - 1) <= LINEAR_BAND else POWER
    return RateReport(regime, float(slope), None, float(np.exp(intercept)), rms,
                      tuple(window), expected, int(d.size))


def golden_section(func, lo: float, hi: float, xtol: float = 1e-13, max_iter: int = 500):
    """Minimize a unimodal function on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc, fe = func(c), func(e)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = func(e)
    x = c if fc <= fe else e
    return x, min(fc, fe)


def fit_log_corrected(u: GridFunction, alpha: float, window=DEFAULT_WINDOW,
                      D_max: float = D_UPPER) -> RateReport:
    """Fit ``a·d·(D - log d)^{1/(1+alpha)}``.

    Golden-section search on ``D`` over ``(log d_max, D_max)``; for each D the
    prefactor is the closed-form least-squares value in log coordinates. The
    fit is flagged as degenerate when D ends at the upper end of the bracket
    or violates the admissibility bound ``D > 1 + log(2 d_max)``.
    """
    d, v = _window(u, window)
    x, y = np.log(d), np.log(v)
    q = log_power(alpha)
    lo = float(np.log(window[1])) + 1e-9
    hi = float(D_max)

    def rms(D):
        model = x + q * np.log(D - x)
        return float(np.sqrt(np.mean((y - model - np.mean(y - model)) ** 2)))

    D, res = golden_section(rms, lo, hi)
    log_a = float(np.mean(y - x - q * np.log(D - x)))
    edge = 1e-6 * (hi - lo)
    admissible = D > 1.0 + math.log(2.0 * window[1])
    degenerate = bool(not admissible or D - lo <= edge or hi - D <= edge)
    return RateReport(LOG_CORRECTED, 1.0, float(D), math.exp(log_a), res,
                      tuple(window), 1.0, int(d.size), degenerate)


def classify(power: RateReport, logfit: RateReport) -> str:
    """Regime read off from a power fit and a log-corrected fit on one window."""
    if not logfit.degenerate and logfit.fit_residual < LOG_PREFERENCE * power.fit_residual:
        return LOG_CORRECTED
    return LINEAR if abs(power.fitted_exponent - 1) <= LINEAR_BAND else POWER


def rates(u: GridFunction, mu: float, alpha: float, window=DEFAULT_WINDOW) -> RateReport:
    """Fitted regime, exponent and (when log-corrected) the shift ``D``."""
    _, expected = regime_predict(mu, alpha)
    p = fit_power(u, window, expected)
    lg = fit_log_corrected(u, alpha, window)
    regime = classify(p, lg)
    if regime == LOG_CORRECTED:
        return RateReport(regime, p.fitted_exponent, lg.fitted_D, lg.prefactor,
                          lg.fit_residual, tuple(window), expected, p.n_nodes, lg.degenerate)
    return RateReport(regime, p.fitted_exponent, None, p.prefactor, p.fit_residual,
                      tuple(window), expected, p.n_nodes)


def dyadic_scales(width: float, count: int = 6):
    return [width * 2.0 ** (-k) for k in range(count)]


def _mean(r, values, mask):
    rr, vv = r[mask], values[mask]
    if rr.size < 2:
        return float(vv.mean())
    return float(np.trapezoid(vv, rr) / (rr[-1] - rr[0]))


def harnack_ratio(u: GridFunction, spec: ProblemSpec, scales=None,
                  apply_transform_first: bool = False, p: float = 1.0,
                  slab: float = SLAB_FRACTION) -> HarnackReport:
    """Ratio of the two sides of the weak Harnack estimate for ``v = u/d``.

    For each scale ``R``: B = (rho, rho + δR), B* = (rho + δR/2, rho + 3δR/2),
    ratio = [mean_{B*} v^p]^{1/p} / (inf_B v + R·‖f‖) where ``‖f‖`` is the
    averaged L^N norm over B of ``f = M d^mu u^{-alpha} + c0 u``.
    """
    if not p > 0:
        raise ValidationError("p must be positive")
    vals = u.values
    if np.any(vals < 0):
        raise PreconditionError("u must be nonnegative")
    r = u.r
    rho = u.grid.rho
    d = r - rho
    if apply_transform_first:
        vals = apply_transform(vals, TransformKind("down", spec.derived.l1))
    inner = d > 0
    v = np.full_like(vals, np.nan)
    v[inner] = vals[inner] / d[inner]
    f = spec.forcing
    forcing = np.zeros_like(vals)
    with np.errstate(divide="ignore"):
        if f.M != 0:
            forcing[inner] = f.M * d[inner] ** f.mu * u.values[inner] ** (-f.alpha)
    forcing = forcing + spec.growth.c0 * u.values
    n = spec.ellipticity.dim
    scales = list(scales) if scales is not None else dyadic_scales(u.grid.R - rho)
    ratios = []
    for R in scales:
        B = inner & (d < slab * R)
        Bs = (d > slab * R / 2) & (d < 1.5 * slab * R)
        if B.sum() < 1 or Bs.sum() < 1:
            raise PreconditionError(f"empty region at scale {R:g}")
        lo = float(np.min(v[B]))
        norm = _mean(r, np.abs(forcing) ** n, B) ** (1.0 / n)
        if not np.isfinite(norm):
            raise PreconditionError("forcing is not integrable on B")
        denom = lo + R * norm
        top = _mean(r, v ** p, Bs) ** (1.0 / p)
        if denom <= 0:
            raise PreconditionError(f"inf of u/d vanishes at scale {R:g}; ratio is infinite")
        ratios.append(top / denom)
    return HarnackReport(p, scales, ratios, apply_transform_first)


def _osc(v, d, R):
    m = (d > 0) & (d < R)
    if not m.any():
        return float("nan")
    return float(np.max(v[m]) - np.min(v[m]))


def oscillation_decay(u: GridFunction, nu: float, scales=None) -> OscillationReport:
    """Oscillation of ``u/d`` over boundary strips ``{d < R_k}``.

    ``fitted_tau`` is the log-log slope of O(R_k); ``recursion_gamma`` is the
    largest ratio O(2R)/(O(R/2) + C R^{1-nu}) with C = O(R_0)/R_0^{1-nu} at the
    largest scale.
    """
    if not 0 < nu < 1:
        raise ValidationError("nu must lie in (0, 1)")
    d = u.r - u.grid.rho
    inner = d > 0
    if np.any(u.values[inner] <= 0):
        raise PreconditionError("u must be positive near the inner shell")
    v = np.zeros_like(d)
    v[inner] = u.values[inner] / d[inner]
    width = u.grid.R - u.grid.rho
    if scales is None:
        scales = [width / 4 * 2.0 ** (-k) for k in range(8)]
    scales = sorted(scales, reverse=True)
    osc = [_osc(v, d, R) for R in scales]
    usable = [(R, o) for R, o in zip(scales, osc) if np.isfinite(o)]
    if len(usable) < 3:
        raise PreconditionError("fewer than 3 usable scales")
    tiny = 1e-12 * float(np.max(np.abs(v[inner])))
    if all(o <= tiny for _, o in usable):
        return OscillationReport(scales, osc, float("nan"), float("nan"), nu,
                                 float("nan"), True, 0.0)
    pos = [(R, o) for R, o in usable if o > tiny]
    if len(pos) < 3:
        raise PreconditionError("fewer than 3 scales with nonzero oscillation")
    x = np.log([R for R, _ in pos])
    y = np.log([o for _, o in pos])
    tau, icpt = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((y - tau * x - icpt) ** 2)))
    R0 = scales[0]
    C = osc[0] / R0 ** (1 - nu)
    gammas = []
    for R in scales:
        if 2 * R > width:
            continue
        big, small = _osc(v, d, 2 * R), _osc(v, d, R / 2)
        if np.isfinite(big) and np.isfinite(small):
            gammas.append(big / (small + C * R ** (1 - nu)))
    gamma = float(max(gammas)) if gammas else float("nan")
    return OscillationReport(scales, osc, float(tau), gamma, nu, res, False, float(C))
