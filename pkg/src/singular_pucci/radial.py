"""Radial reduction of the Pucci problem on an annulus.

For a radial profile ``w(r)`` the Hessian has eigenvalues ``w''`` (once) and
``w'/r`` (``N-1`` times), so the extremal operators reduce to a scalar
selector applied to each eigenvalue.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SingularityBreach, ValidationError
from .grid import GridFunction, interior_derivatives, interior_stencils
from .params import Ellipticity, ProblemSpec


def theta(s, ell: Ellipticity):
    """Λ where ``s >= 0``, λ where ``s < 0``."""
    return np.where(np.asarray(s) >= 0, ell.Lam, ell.lam) if np.ndim(s) else (
        ell.Lam if s >= 0 else ell.lam)


def theta_minus(s, ell: Ellipticity):
    """Selector of the minimal operator: λ where ``s >= 0``, Λ otherwise."""
    return np.where(np.asarray(s) >= 0, ell.lam, ell.Lam) if np.ndim(s) else (
        ell.lam if s >= 0 else ell.Lam)


def radial_pucci(wpp, wp, r, ell: Ellipticity, sign: str = "plus"):
    """M±(D²w) for a radial profile, from ``w''``, ``w'`` and the radius."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValidationError("radius must be positive")
    sel = theta if sign == "plus" else theta_minus
    n1 = ell.dim - 1
    return sel(wpp, ell) * wpp + sel(wp, ell) * n1 * np.asarray(wp) / r


def singular_term(spec: ProblemSpec, r, w, delta: float = 0.0):
    """``M (r - rho)^mu (w + delta)^(-alpha)``; zero amplitude short-circuits."""
    f = spec.forcing
    if f.M == 0:
        return np.zeros_like(np.asarray(w, dtype=float))
    dist = np.asarray(r) - spec.geometry.rho
    return f.M * dist ** f.mu * (np.asarray(w) + delta) ** (-f.alpha)


@dataclass(frozen=True)
class ResidualParts:
    """Interior residual of the radial equation and the size of its terms.

    ``scale`` sums the magnitudes of the individual stencil contributions, so
    ``relative`` is a backward-error measure insensitive to cancellation.
    """

    residual: np.ndarray
    scale: np.ndarray
    wp: np.ndarray
    wpp: np.ndarray

    @property
    def relative(self) -> np.ndarray:
        return self.residual / np.maximum(self.scale, 1.0)


def residual_parts(r, w, spec: ProblemSpec, delta: float = 0.0,
                   source=None) -> ResidualParts:
    """Centered-difference residual at interior nodes.

    ``source`` (interior array) is subtracted, used to inject manufactured
    forcing.
    """
    ell, g = spec.ellipticity, spec.growth
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    wp, wpp = interior_derivatives(r, w)
    ri, wi = r[1:-1], w[1:-1]
    if spec.forcing.M != 0 and np.any(wi + delta <= 0):
        k = int(np.argmax(wi + delta <= 0)) + 1
        raise SingularityBreach(f"w + delta ≤ 0 at node {k} (r={r[k]:.17g})")
    second = theta(wpp, ell) * wpp
    first = theta(wp, ell) * (ell.dim - 1) * wp / ri
    grad = g.B * wp ** 2 + g.b * np.abs(wp)
    zeroth = -g.c0 * wi
    sing = singular_term(spec, ri, wi, delta)
    res = second + first + grad + zeroth + sing
    if source is not None:
        res = res - np.asarray(source, dtype=float)
    # size of the individual stencil contributions, so that relative residuals
    # measure backward error rather than cancellation in the differences
    d1, d2 = interior_stencils(r)
    nb = np.column_stack((w[:-2], wi, w[2:]))
    mag1 = np.abs(d1 * nb).sum(axis=1)
    mag2 = np.abs(d2 * nb).sum(axis=1)
    scale = (theta(wpp, ell) * mag2 + theta(wp, ell) * (ell.dim - 1) * mag1 / ri
             + g.B * mag1 ** 2 + g.b * mag1 + np.abs(zeroth) + np.abs(sing))
    return ResidualParts(res, scale, wp, wpp)


def sabu_residual(w: GridFunction, spec: ProblemSpec, delta: float = 0.0,
                  source=None) -> GridFunction:
    """Residual of the radial equation with regularized singular term.

    Boundary nodes are excluded from the computation and reported as 0.
    """
    if delta < 0:
        raise PreconditionError("delta must be nonnegative")
    parts = residual_parts(w.r, w.values, spec, delta, source)
    out = np.zeros_like(w.values)
    out[1:-1] = parts.residual
    return GridFunction(w.grid, out)


@dataclass(frozen=True)
class IntegratingFactors:
    chi: GridFunction
    xi: GridFunction
    xi_tilde: GridFunction


def integrating_factors(w: GridFunction, ell: Ellipticity,
                        anchor: float = 1.0) -> IntegratingFactors:
    """χ, ξ = exp(∫_anchor^r χ) and ξ̃ = ξ/θ(w'').

    The integral is taken in the variable log r with ``χ·r`` averaged over
    each cell, which is exact when ``χ·r`` is constant and keeps
    ``χ·r ∈ [N₊-1, N₋-1]`` bounds intact. If the anchor lies outside the
    grid, ``χ·r`` is continued as a constant from the nearest node.
    """
    r = w.r
    wp, wpp = w.derivatives()
    th2 = theta(wpp, ell)
    chi_r = theta(wp, ell) * (ell.dim - 1) / th2
    chi = chi_r / r
    logr = np.log(r)
    cell = 0.5 * (chi_r[1:] + chi_r[:-1]) * np.diff(logr)
    integral = np.concatenate(([0.0], np.cumsum(cell)))
    if anchor <= r[0]:
        offset = chi_r[0] * (logr[0] - np.log(anchor))
        integral = integral + offset
    elif anchor >= r[-1]:
        offset = chi_r[-1] * (logr[-1] - np.log(anchor))
        integral = integral - integral[-1] + offset
    else:
        k = int(np.searchsorted(r, anchor, side="right")) - 1
        part = 0.5 * (chi_r[k] + chi_r[k + 1]) * (np.log(anchor) - logr[k])
        integral = integral - integral[k] - part
    xi = np.exp(integral)
    return IntegratingFactors(GridFunction(w.grid, chi), GridFunction(w.grid, xi),
                              GridFunction(w.grid, xi / th2))


def hopf_point(w: GridFunction) -> float:
    """Largest node radius up to which every forward slope is positive.

    Returns ``rho`` when the very first slope is nonpositive (Hopf failure)
    and ``R`` for a strictly increasing profile.
    """
    rises = np.diff(w.values) > 0
    if rises.all():
        return float(w.r[-1])
    return float(w.r[int(np.argmin(rises))])
