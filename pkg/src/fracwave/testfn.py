"""Space-time cutoff diagnostic for the nonexistence mechanism.

Builds the rescalable cutoff pair phi (temporal, = 1 on [0, 1/2], supported
in [0, 1], nonincreasing) and psi (spatial, radial, = 1 on B_{1/2}, supported
in B_1, radially nonincreasing) as powers of smooth bump-based transitions,
and evaluates the functional

    I_R = int_0^inf int |u_t|^p phi_R psi_R dx dt,
    phi_R(t) = phi(R^{-kappa} t),  psi_R(x) = psi(R^{-1} x),

together with the comparison terms of the inequality

    I_R / p' <= C * R^{-kappa p' + n + kappa} - int psi_R (I + (-Lap)^delta) u1 dx.

For data with positive mass the right-hand side turns negative as R grows
while I_R >= 0 by construction, which is the numerical shadow of the
nonexistence argument in the subcritical range.  The integer orders are
required because psi is differentiated through iterated Laplacians.

For a record that ends in detected blow-up, the stored fields cover only
[0, t_blowup); since the integrand is nonnegative, the partial integral is a
certified lower bound for the I_R of any hypothetical global extension, which
is what the contradiction needs.  A record that simply stops early without
blow-up raises the insufficient-coverage error.

This diagnostic runs on the numerical strong solution and illustrates the
mechanism; it is not a proof artifact.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .torus import ExperimentRecord, apply_fractional_symbol

__all__ = ["TestFunctionPair", "build_test_functions", "testfn_functional", "CoverageError"]


class CoverageError(RuntimeError):
    """Stored fields do not cover the required space-time support."""


@dataclass(frozen=True)
class TestFunctionPair:
    """Cutoff pair with the boundedness maxima of the Young-inequality weights.

    testbnd_max_phi = max phi^{-p'/p} |phi'|^{p'},
    testbnd_max_psi = max psi^{-p'/p} (|Lap^delta psi|^{p'} + |Lap^theta psi|^{p'}
                                       + |Lap^alpha psi|^{p'}),
    both evaluated on a dense grid of the transition region (they vanish on
    the plateaus).  young_constant = p' * (sum of the maxima).
    """

    p: float
    power: int
    n: int
    phi: object
    psi: object
    testbnd_max_phi: float
    testbnd_max_psi: float

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def young_constant(self) -> float:
        return self.p_prime * (self.testbnd_max_phi + self.testbnd_max_psi)


@lru_cache(maxsize=None)
def _bump_transition():
    """Smooth step B on [0, 1] with B(0) = 1, B(1) = 0, flat at both ends,
    built from the standard exp(-1/s) profile."""
    y = sp.Symbol("y", positive=True)
    f = sp.exp(-1 / y)
    g = sp.exp(-1 / (1 - y))
    return y, g / (f + g)


def _plateau_expr(var):
    """Symbolic transition value on the interval (1/2, 1) of `var`."""
    y, B = _bump_transition()
    return B.subs(y, 2 * var - 1)


def _radial_laplacian(expr, rho, n, times):
    for _ in range(times):
        expr = sp.diff(expr, rho, 2) + (n - 1) / rho * sp.diff(expr, rho)
    return expr


def _piecewise_eval(fn, x):
    """Evaluate a transition lambdified on (1/2, 1), with plateaus 1 and 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x <= 0.5] = 1.0
    mid = (x > 0.5) & (x < 1.0)
    if np.any(mid):
        out[mid] = fn(x[mid])
    return out


def build_test_functions(p: float, delta: int, theta: int, alpha: int, n: int = 1) -> TestFunctionPair:
    """Construct phi = eta^k, psi = zeta^k with k = ceil(2 p'), p' = p/(p-1).

    delta, theta must be nonnegative integers and alpha a positive integer
    (iterated Laplacians of psi appear in the weights); non-integer orders are
    rejected.  The returned maxima certify the boundedness of the weights.
    """
    for name, value in (("delta", delta), ("theta", theta)):
        if int(value) != value or value < 0:
            raise ValueError(f"{name} must be a nonnegative integer for the "
                             f"test-function diagnostic, got {value}")
    if int(alpha) != alpha or alpha < 1:
        raise ValueError(f"alpha must be a positive integer, got {alpha}")
    if p <= 1:
        raise ValueError("p must exceed 1")
    delta, theta, alpha = int(delta), int(theta), int(alpha)
    pp = p / (p - 1.0)
    k = math.ceil(2.0 * pp)

    x = sp.Symbol("x", positive=True)
    eta = _plateau_expr(x)
    phi_expr = eta**k
    phi_fn = sp.lambdify(x, phi_expr, "numpy")
    phi = lambda t: _piecewise_eval(phi_fn, t)

    rho = sp.Symbol("rho", positive=True)
    zeta = _plateau_expr(rho)
    psi_expr = zeta**k
    psi_fn = sp.lambdify(rho, psi_expr, "numpy")
    psi = lambda r: _piecewise_eval(psi_fn, r)

    # Dense-grid maxima of the Young weights on the transition (0.5, 1).
    grid = np.linspace(0.5 + 1e-9, 1.0 - 1e-9, 20001)
    phi_prime = sp.lambdify(x, sp.diff(phi_expr, x), "numpy")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        phi_weight = phi_fn(grid) ** (-pp / p) * np.abs(phi_prime(grid)) ** pp
        psi_weight = np.zeros_like(grid)
        base = psi_fn(grid) ** (-pp / p)
        for order in {delta, theta, alpha}:
            lap = sp.lambdify(rho, _radial_laplacian(psi_expr, rho, n, order), "numpy")
            vals = lap(grid) if order > 0 else psi_fn(grid)
            psi_weight = psi_weight + base * np.abs(np.asarray(vals, float)) ** pp
    phi_weight = np.nan_to_num(phi_weight, nan=0.0, posinf=np.nan)
    psi_weight = np.nan_to_num(psi_weight, nan=0.0, posinf=np.nan)
    if not (np.all(np.isfinite(phi_weight)) and np.all(np.isfinite(psi_weight))):
        raise ValueError("test-function weights unbounded; increase the power k")
    return TestFunctionPair(
        p=float(p), power=k, n=n, phi=phi, psi=psi,
        testbnd_max_phi=float(np.max(phi_weight)),
        testbnd_max_psi=float(np.max(psi_weight)),
    )


def testfn_functional(record: ExperimentRecord, pair: TestFunctionPair, R: float,
                      kappa: float | None = None, m: float | None = None):
    """(I_R, bound_term, data_term) for one rescaling radius R >= 1.

    I_R integrates |u_t|^p phi_R psi_R over the stored snapshots (trapezoid in
    time, rectangle sums in space); bound_term = R^{-kappa p' + n + kappa};
    data_term = int psi_R (I + (-Lap)^delta) u1 dx with the fractional part
    applied spectrally.  kappa defaults to min(2 theta, alpha).
    """
    params = record.params
    grid = record.grid
    if R < 1:
        raise ValueError("R must be >= 1")
    if kappa is None:
        kappa = min(2.0 * params.theta, params.alpha)
    if record.snapshots_ut is None:
        raise CoverageError("record carries no stored fields; run with schedule.store_fields")
    if R > grid.L / 2.0:
        raise CoverageError(f"ball of radius R = {R} does not fit inside the box (L = {grid.L})")
    t_needed = R**kappa
    t_have = record.snapshot_times[-1]
    blew_up = record.verdict.startswith("blow_up_at")
    if t_have < t_needed and not blew_up:
        raise CoverageError(
            f"stored fields cover [0, {t_have:.6g}] but the cutoff needs [0, {t_needed:.6g}] "
            f"(R = {R}, kappa = {kappa}); extend the run or rely on a blow-up record")

    pp = pair.p_prime
    psi_R = pair.psi(grid.physical_radius() / R)
    phi_R = pair.phi(record.snapshot_times / t_needed)
    vol = grid.cell_volume()

    space = np.array([np.sum(np.abs(v) ** pair.p * psi_R) * vol
                      for v in record.snapshots_ut])
    I_R = float(np.trapezoid(space * phi_R, record.snapshot_times))

    bound_term = R ** (-kappa * pp + params.n + kappa)

    ghat = apply_fractional_symbol(grid, record.u1_hat, 2.0 * params.delta) + record.u1_hat
    gfield = grid.to_physical(ghat)
    data_term = float(np.sum(psi_R * gfield) * vol)
    return I_R, bound_term, data_term
