import functools

import pytest

from singular_pucci.params import from_flat
from singular_pucci.solver import SolveConfig, solve_singular

# delta -> 1e-2 * 2**-40 ~ 1e-14 keeps the regularization far below the fit windows
DEEP = SolveConfig(delta_steps=40)

ACCEPTANCE = []


def record(number, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def solved(mu, alpha, **kw):
    spec = from_flat(dict(mu=mu, alpha=alpha, **kw))
    return spec, solve_singular(spec, DEEP)


@pytest.fixture(scope="session")
def base_spec():
    return from_flat({})


@pytest.fixture(scope="session")
def regime1():
    return solved(1.0, 1.0)


@pytest.fixture(scope="session")
def regime2():
    return solved(0.0, 1.0)


@pytest.fixture(scope="session")
def regime3():
    return solved(0.0, 3.0)


# (family, inequality, parameters) at the regime each inequality is built for
BARRIER_CASES = [
    ("U1", "I1_sub_regularized", {"mu": 1, "alpha": 1}),
    ("U2", "I2_super_transformed", {"mu": 1, "alpha": 1}),
    ("U4", "I3_arbi1", {"mu": 0, "alpha": 1, "lambda": 1, "Lambda": 1, "b": 0.1, "C2": 1}),
    ("U5", "I4_B666", {"mu": 0, "alpha": 1}),
    ("U6", "I5_ca4", {"mu": 0, "alpha": 3}),
    ("U7", "I6_lower_regime3", {"mu": 0, "alpha": 3}),
    ("W_slab", "I7_krylov_slab", {"mu": 0, "alpha": 0.4, "dim": 2}),
    ("Z_slab", "I7_krylov_slab", {"mu": 0, "alpha": 0.4, "dim": 2}),
]

BRACKET_PAIRS = {"II": (("U4", "I3_arbi1"), ("U5", "I4_B666")),
                 "III": (("U6", "I5_ca4"), ("U7", "I6_lower_regime3"))}


def bracket_margins(spec, solution, regime):
    """Certify a transformed barrier pair around ``solution`` near the inner shell.

    The upper barrier must dominate sup u = K at its shell edge; the lower one
    must sit below the certified subsolution u1 at its edge. Returns the
    smallest nodewise gaps (u - lower, upper - u, u - u1).
    """
    import numpy as np

    from singular_pucci.barriers import (default_barrier, eval_barrier, search_constants,
                                         shell_width)
    from singular_pucci.solver import constant_supersolution
    from singular_pucci.transforms import log_down, log_up

    (up_f, up_i), (lo_f, lo_i) = BRACKET_PAIRS[regime]
    geo = spec.geometry
    b1, _ = search_constants("U1", "I1_sub_regularized", spec)
    edge = geo.rho + geo.rho / 2
    inner = float(eval_barrier(b1, edge, spec)[0])
    bu, _ = search_constants(up_f, up_i, spec, bounds={"sup_u": constant_supersolution(spec)})
    bl, _ = search_constants(lo_f, lo_i, spec, bounds={"inner_min": inner},
                             start=default_barrier(lo_f, spec, orient=1))
    l, r, u = spec.derived.l2, solution.r, solution.values
    d = r - geo.rho
    mu_ = (d > 0) & (d <= shell_width(bu, spec))
    ml = (d > 0) & (d <= shell_width(bl, spec))
    upper = log_up(eval_barrier(bu, r[mu_], spec)[0], l)
    lower = log_down(eval_barrier(bl, r[ml], spec)[0], l)
    inside = (r > geo.rho) & (r < geo.R)
    u1 = eval_barrier(b1, r[inside], spec)[0]
    return (float(np.min(u[ml] - lower)), float(np.min(upper - u[mu_])),
            float(np.min(u[inside] - u1)))
