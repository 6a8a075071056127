"""Principal eigenpair of F₂⁺ on an annulus, plain or distance-weighted.

F₂⁺ is the pointwise maximum of the linear operators
``L_π ψ = a ψ'' + c ψ'`` obtained by freezing the selectors, so its principal
eigenvalue is the minimum over policies of the linear ones. Policy
iteration lowers the eigenvalue monotonically; each linear step uses
unshifted inverse power iteration, which keeps iterates positive because
the discrete ``-L_π`` is an M-matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tridiag
from .errors import ConvergenceError, NumericalError, ValidationError
from .grid import GridFunction, RadialGrid, interior_derivatives, interior_stencils
from .params import AnnulusGeometry, Ellipticity, validate_ellipticity
from .radial import radial_pucci, theta

EIG_NODES = 2049
MAX_POLICY_SWEEPS = 200


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: float
    eigenfunction: GridFunction
    weighted: bool = False
    weight_mu: float = 0.0
    weight_form: str = "(r - rho)^mu"

    def __post_init__(self):
        psi = self.eigenfunction.values
        if not self.eigenvalue > 0:
            raise ValidationError("eigenvalue must be positive")
        if psi[0] != 0 or psi[-1] != 0:
            raise ValidationError("eigenfunction must vanish at the boundary")
        if not np.all(psi[1:-1] > 0):
            raise ValidationError("eigenfunction must be positive inside")


def weight(r, rho: float, weight_mu: float | None):
    if not weight_mu:
        return np.ones_like(r)
    return (r - rho) ** weight_mu


def _policy(psi, r, ell: Ellipticity, b: float):
    """Frozen coefficients (a, c) at interior nodes."""
    dp, dpp = interior_derivatives(r, psi)
    a = theta(dpp, ell)
    c = theta(dp, ell) * (ell.dim - 1) / r[1:-1] + b * np.where(dp >= 0, 1.0, -1.0)
    return a, c


def policy_matrix(a, c, r):
    """Tridiagonal pieces (sub, diag, sup) of ``-L_π`` at interior nodes."""
    d1, d2 = interior_stencils(r)
    A = -(a[:, None] * d2 + c[:, None] * d1)
    return A[:, 0], A[:, 1], A[:, 2]


def _linear_eig(sub, diag, sup, omega, start, tol=1e-15, max_iter=500):
    if not tridiag.is_m_matrix(sub, diag, sup):
        raise NumericalError("frozen operator is not monotone; refine the grid")
    x = start / np.max(start)
    lam_old = np.inf
    for _ in range(max_iter):
        y = tridiag.solve(sub, diag, sup, omega * x)
        if not np.all(y > 0):
            raise NumericalError("loss of positivity in inverse iteration")
        y /= np.max(y)
        Ay = diag * y
        Ay[1:] += sub[1:] * y[:-1]
        Ay[:-1] += sup[:-1] * y[1:]
        Wy = omega * y
        lam = float(np.dot(Wy, Ay) / np.dot(Wy, Wy))
        x = y
        if abs(lam - lam_old) <= tol * abs(lam):
            break
        lam_old = lam
    return lam, x


def principal_eig(ell: Ellipticity, b: float, geometry: AnnulusGeometry,
                  weight_mu: float | None = None, grid: RadialGrid | None = None,
                  start=None, tol: float = 1e-12) -> EigenPair:
    """Principal eigenpair of ``F₂⁺(ψ) = -λ ω ψ`` with ψ = 0 on both shells.

    Parameters
    ----------
    weight_mu : float, optional
        Use the weight ``ω = (r - rho)^weight_mu``; ``None`` means ω ≡ 1.
    grid : RadialGrid, optional
        Defaults to a uniform grid with 2049 nodes.
    start : array, optional
        Positive interior start vector; defaults to the first Dirichlet
        mode of the Laplacian.
    """
    validate_ellipticity(ell)
    if b < 0:
        raise ValidationError("b must be nonnegative")
    if weight_mu is not None and weight_mu < 0:
        raise ValidationError("weight_mu must be nonnegative")
    grid = grid or RadialGrid.uniform(geometry.rho, geometry.R, EIG_NODES)
    r = grid.nodes
    omega = weight(r[1:-1], geometry.rho, weight_mu)
    if start is None:
        x = np.sin(np.pi * (r[1:-1] - r[0]) / (r[-1] - r[0]))
    else:
        x = np.asarray(start, dtype=float)
        x = x[1:-1] if x.size == r.size else x
        if not np.all(x > 0):
            raise ValidationError("start vector must be positive")
    psi = np.concatenate(([0.0], x, [0.0]))
    lam_old, seen = np.inf, []
    for sweep in range(MAX_POLICY_SWEEPS):
        a, c = _policy(psi, r, ell, b)
        key = (a.tobytes(), (c > 0).tobytes())
        lam, x = _linear_eig(*policy_matrix(a, c, r), omega, x)
        psi = np.concatenate(([0.0], x, [0.0]))
        if key in seen[-1:] and abs(lam - lam_old) <= tol * abs(lam):
            break
        seen.append(key)
        lam_old = lam
    else:
        raise ConvergenceError("policy oscillation: θ pattern did not settle in 200 sweeps")
    return EigenPair(lam, GridFunction(grid, psi), weight_mu is not None,
                     float(weight_mu or 0.0))


def eig_residual(pair: EigenPair, ell: Ellipticity, b: float,
                 geometry: AnnulusGeometry) -> float:
    """Max-norm of ``F₂⁺(ψ) + λ ω ψ`` over interior nodes."""
    psi = pair.eigenfunction
    r = psi.r
    dp, dpp = interior_derivatives(r, psi.values)
    F = radial_pucci(dpp, dp, r[1:-1], ell, "plus") + b * np.abs(dp)
    omega = weight(r[1:-1], geometry.rho, pair.weight_mu if pair.weighted else None)
    return float(np.max(np.abs(F + pair.eigenvalue * omega * psi.values[1:-1])))


def dense_oracle(pair: EigenPair, ell: Ellipticity, b: float,
                 geometry: AnnulusGeometry) -> float:
    """Smallest real eigenvalue of the frozen operator by a dense generalized solver."""
    from scipy.linalg import eig

    r = pair.eigenfunction.r
    a, c = _policy(pair.eigenfunction.values, r, ell, b)
    sub, diag, sup = policy_matrix(a, c, r)
    n = diag.size
    A = np.diag(diag) + np.diag(sub[1:], -1) + np.diag(sup[:-1], 1)
    W = np.diag(weight(r[1:-1], geometry.rho, pair.weight_mu if pair.weighted else None))
    vals = eig(A, W, right=False)
    vals = vals[np.isfinite(vals)]
    real = vals[np.abs(vals.imag) <= 1e-8 * np.abs(vals)].real
    return float(np.min(real)) if n else float("nan")
