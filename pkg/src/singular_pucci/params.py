"""Problem data, Pucci extremal operators and the model operators.

All containers are frozen dataclasses. ``ProblemSpec`` round-trips through a
flat ``key=value`` mapping whose keys are the conventional symbol names
(``lambda``, ``Lambda``, ``dim``, ``B``, ``b``, ``d``, ``c0``, ``mu``,
``alpha``, ``M``, ``C1``, ``C2``, ``rho``, ``R``, ``L``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

PLUS = "plus"
MINUS = "minus"

MODELS = ("F1plus", "F1minus", "F2plus", "F2minus")


@dataclass(frozen=True)
class Ellipticity:
    lam: float
    Lam: float
    dim: int = 2


@dataclass(frozen=True)
class GrowthParams:
    B: float = 0.0
    b: float = 0.0
    d: float = 0.0
    c0: float = 1.0


@dataclass(frozen=True)
class DerivedConstants:
    l1: float
    l2: float
    Nplus: float
    Nminus: float


@dataclass(frozen=True)
class SingularForcing:
    mu: float = 0.0
    alpha: float = 1.0
    M: float = 1.0
    C1: float = 1.0
    C2: float = 1.0


@dataclass(frozen=True)
class AnnulusGeometry:
    rho: float = 1.0
    R: float = 2.0
    L: float = 1.0

    @property
    def width(self) -> float:
        return self.R - self.rho


@dataclass(frozen=True)
class ProblemSpec:
    ellipticity: Ellipticity
    growth: GrowthParams
    forcing: SingularForcing
    geometry: AnnulusGeometry

    @property
    def derived(self) -> DerivedConstants:
        return derived_constants(self.growth, self.ellipticity)

    def replace(self, **overrides) -> "ProblemSpec":
        """Return a copy with flat-key overrides applied (``mu=1``, ``L=2``...)."""
        flat = to_flat(self)
        flat.update(overrides)
        return from_flat(flat)


# flat key -> (component attribute, field name, type)
FLAT_KEYS = {
    "lambda": ("ellipticity", "lam", float),
    "Lambda": ("ellipticity", "Lam", float),
    "dim": ("ellipticity", "dim", int),
    "B": ("growth", "B", float),
    "b": ("growth", "b", float),
    "d": ("growth", "d", float),
    "c0": ("growth", "c0", float),
    "mu": ("forcing", "mu", float),
    "alpha": ("forcing", "alpha", float),
    "M": ("forcing", "M", float),
    "C1": ("forcing", "C1", float),
    "C2": ("forcing", "C2", float),
    "rho": ("geometry", "rho", float),
    "R": ("geometry", "R", float),
    "L": ("geometry", "L", float),
}

DEFAULTS = {
    "lambda": 1.0, "Lambda": 1.0, "dim": 2,
    "B": 0.1, "b": 0.0, "d": 0.0, "c0": 0.1,
    "mu": 0.0, "alpha": 3.0, "M": 1.0, "C1": 1.0, "C2": 1.0,
    "rho": 1.0, "R": 2.0, "L": 1.0,
}


def to_flat(spec: ProblemSpec) -> dict:
    return {key: getattr(getattr(spec, comp), name)
            for key, (comp, name, _) in FLAT_KEYS.items()}


def from_flat(values: dict, validate_spec: bool = True) -> ProblemSpec:
    """Build a spec from a flat mapping; missing keys take ``DEFAULTS``."""
    unknown = set(values) - set(FLAT_KEYS)
    if unknown:
        raise ValidationError(f"unknown problem keys: {sorted(unknown)}")
    merged = dict(DEFAULTS)
    merged.update(values)
    parts: dict[str, dict] = {"ellipticity": {}, "growth": {}, "forcing": {}, "geometry": {}}
    for key, (comp, name, typ) in FLAT_KEYS.items():
        raw = merged[key]
        try:
            val = typ(float(raw)) if typ is int else typ(raw)
        except (TypeError, ValueError):
            raise ValidationError(f"{key} is not a number: {raw!r}") from None
        if typ is int and float(raw) != int(float(raw)):
            raise ValidationError(f"{key} must be an integer")
        parts[comp][name] = val
    spec = ProblemSpec(
        Ellipticity(**parts["ellipticity"]),
        GrowthParams(**parts["growth"]),
        SingularForcing(**parts["forcing"]),
        AnnulusGeometry(**parts["geometry"]),
    )
    return validate(spec) if validate_spec else spec


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def validate_ellipticity(ell: Ellipticity) -> Ellipticity:
    _check(math.isfinite(ell.lam) and ell.lam > 0, "lambda must be positive")
    _check(math.isfinite(ell.Lam) and ell.Lam > 0, "Lambda must be positive")
    _check(ell.lam <= ell.Lam, "lambda ≤ Lambda violated")
    _check(int(ell.dim) == ell.dim and ell.dim >= 1, "dim must be an integer ≥ 1")
    return ell


def validate(spec: ProblemSpec) -> ProblemSpec:
    """Return ``spec`` unchanged if every invariant holds.

    Raises ``ValidationError`` naming the first violated invariant.
    """
    validate_ellipticity(spec.ellipticity)
    g = spec.growth
    for name in ("B", "b", "d"):
        v = getattr(g, name)
        _check(math.isfinite(v) and v >= 0, f"{name} must be nonnegative")
    _check(math.isfinite(g.c0) and g.c0 >= 0, "c0 must be nonnegative")
    f = spec.forcing
    _check(math.isfinite(f.mu) and f.mu >= 0, "mu must be nonnegative")
    _check(math.isfinite(f.alpha) and f.alpha > 0, "alpha must be positive")
    _check(math.isfinite(f.M) and f.M >= 0, "M must be nonnegative")
    _check(f.C1 > 0, "C1 must be positive")
    _check(f.C2 > 0, "C2 must be positive")
    _check(f.C1 <= f.C2, "C1 ≤ C2 violated")
    geo = spec.geometry
    _check(geo.rho > 0, "rho must be positive")
    _check(geo.R > 0, "R must be positive")
    _check(geo.rho < geo.R, "rho < R violated")
    _check(math.isfinite(geo.L) and geo.L >= 0, "L must be nonnegative")
    return spec


def derived_constants(growth: GrowthParams, ell: Ellipticity) -> DerivedConstants:
    n = ell.dim
    return DerivedConstants(
        l1=growth.B / ell.Lam,
        l2=growth.B / ell.lam,
        Nplus=(ell.lam / ell.Lam) * (n - 1) + 1,
        Nminus=(ell.Lam / ell.lam) * (n - 1) + 1,
    )


def _symmetric(matrix) -> np.ndarray:
    X = np.asarray(matrix, dtype=float)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
    if np.max(np.abs(X - np.swapaxes(X, -1, -2)), initial=0.0) > 1e-12 * scale:
        raise ValidationError("matrix must be symmetric")
    return X


def pucci(matrix, ell: Ellipticity, sign: str = PLUS):
    """Pucci extremal operator via the spectrum.

    ``plus``: Λ·(sum of positive eigenvalues) + λ·(sum of negative ones);
    ``minus`` swaps the roles of λ and Λ. Accepts a stack ``(..., N, N)``.
    """
    X = _symmetric(matrix)
    eig = np.linalg.eigvalsh(X)
    pos = np.where(eig > 0, eig, 0.0).sum(axis=-1)
    neg = np.where(eig < 0, eig, 0.0).sum(axis=-1)
    if sign == PLUS:
        out = ell.Lam * pos + ell.lam * neg
    elif sign == MINUS:
        out = ell.lam * pos + ell.Lam * neg
    else:
        raise ValidationError(f"sign must be 'plus' or 'minus', got {sign!r}")
    return float(out) if np.ndim(out) == 0 else out


def pucci_sup_oracle(matrix, ell: Ellipticity, n_samples: int = 1000, rng=None):
    """Sampling lower bound for M⁺: max of tr(AX) over random A with spectrum in [λ, Λ].

    Returns ``(best_sampled, maximizer_value)`` where the second entry is
    tr(A*X) for the coefficient matrix built from the eigenvectors of X.
    """
    X = _symmetric(matrix)
    rng = np.random.default_rng(rng)
    n = X.shape[0]
    best = -np.inf
    for _ in range(n_samples):
        Q, _r = np.linalg.qr(rng.standard_normal((n, n)))
        A = Q @ np.diag(rng.uniform(ell.lam, ell.Lam, n)) @ Q.T
        best = max(best, float(np.trace(A @ X)))
    w, V = np.linalg.eigh(X)
    A_star = V @ np.diag(np.where(w > 0, ell.Lam, ell.lam)) @ V.T
    return best, float(np.trace(A_star @ X))


def eval_model(model: str, grad_norm: float, hessian, ell: Ellipticity,
               growth: GrowthParams) -> float:
    """Evaluate F1±/F2± at a gradient norm and Hessian."""
    if model not in MODELS:
        raise ValidationError(f"unknown model {model!r}")
    if grad_norm < 0:
        raise ValidationError("grad_norm must be nonnegative")
    plus = model.endswith("plus")
    s = 1.0 if plus else -1.0
    value = pucci(hessian, ell, PLUS if plus else MINUS) + s * growth.b * grad_norm
    if model.startswith("F1"):
        value += s * growth.B * grad_norm ** 2
    return value


def sc_envelope(dM, p1, p2, r1: float, r2: float, ell: Ellipticity,
                growth: GrowthParams) -> tuple[float, float]:
    """Lower/upper bounds of the structure condition for one pair of arguments."""
    p1 = np.atleast_1d(np.asarray(p1, dtype=float))
    p2 = np.atleast_1d(np.asarray(p2, dtype=float))
    dp = float(np.linalg.norm(p1 - p2))
    quad = growth.B * (np.linalg.norm(p1) + np.linalg.norm(p2)) * dp
    lower = pucci(dM, ell, MINUS) - quad - growth.b * dp - growth.d * max(r1 - r2, 0.0)
    upper = pucci(dM, ell, PLUS) + quad + growth.b * dp + growth.d * max(r2 - r1, 0.0)
    return float(lower), float(upper)
