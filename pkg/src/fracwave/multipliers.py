"""Per-frequency eigenvalues and propagator kernels of the linear flow.

Each Fourier mode of the linear equation solves the damped oscillator

    (1 + r^{2 delta}) w'' + r^{2 theta} w' + r^{2 alpha} w = 0,      r = |xi|,

i.e. w'' + b w' + c w = 0 with b = r^{2 theta}/(1+r^{2 delta}) and
c = r^{2 alpha}/(1+r^{2 delta}).  The fundamental pair is

    K0(t) = (lam_p e^{t lam_m} - lam_m e^{t lam_p}) / (lam_p - lam_m),
    K1(t) = (e^{t lam_p} - e^{t lam_m}) / (lam_p - lam_m),

with lam_pm = (-b +- sqrt(b^2 - 4c)) / 2.  Everything here is evaluated
through phi1(z) = (e^z - 1)/z so the real/complex transition at the
discriminant zero needs no case split and small eigenvalue gaps cause no
cancellation.  All values are finite for every t >= 0, r >= 0, because
Re lam_pm <= 0 keeps each exponential in [0, 1] in magnitude.

Conventions: 0^0 = 1 throughout (order-zero fractional Laplacian is the
identity), lam_p is the root with larger real part, ties broken by
positive imaginary part.
"""

from dataclasses import dataclass

import numpy as np

from .params import ModelParams

__all__ = [
    "ModelParams",
    "ModeCoefficients",
    "KernelSample",
    "KernelArrays",
    "mode_coefficients",
    "eigenvalues",
    "phi1",
    "phi1_divided_difference",
    "kernels",
    "kernel_arrays",
    "propagator_step_matrix",
    "propagator_arrays",
    "etd2_correction_column",
]

_SMALL_Z = 1e-3        # switch to series below this |z| (phi1 and divided differences)
_SMALL_DERIV = 0.1     # switch to series for phi1 derivatives below this |z|


@dataclass(frozen=True)
class ModeCoefficients:
    """Damping b, stiffness c and normalized discriminant at radius r.

    disc = 1 - 4 r^{2(alpha-2theta)} (1 + r^{2 delta}), so that
    b^2 - 4c = b^2 * disc.
    """

    r: float
    b: float
    c: float
    disc: float


@dataclass(frozen=True)
class KernelSample:
    """Kernel values at one (t, r).  Complex-valued fields; the imaginary
    parts are roundoff residue (the kernels are real)."""

    t: float
    r: float
    lambda_plus: complex
    lambda_minus: complex
    K0: complex
    K1: complex
    E1: complex
    dtK0: complex
    dtK1: complex


@dataclass(frozen=True)
class KernelArrays:
    """Vectorized real kernel values over an array of radii at fixed t."""

    K0: np.ndarray
    K1: np.ndarray
    E1: np.ndarray
    dtK0: np.ndarray
    dtK1: np.ndarray


def _bcw(params: ModelParams, r):
    """(b, c, w) with w = 1 + r^{2 delta}.  Array-friendly; 0^0 = 1."""
    r = np.asarray(r, dtype=float)
    w = 1.0 + r ** (2.0 * params.delta)
    b = r ** (2.0 * params.theta) / w
    c = r ** (2.0 * params.alpha) / w
    return b, c, w


def mode_coefficients(params: ModelParams, r: float) -> ModeCoefficients:
    if np.any(np.asarray(r) < 0):
        raise ValueError("radial frequency must be nonnegative")
    b, c, w = _bcw(params, r)
    disc = 1.0 - 4.0 * np.asarray(r, float) ** (2.0 * (params.alpha - 2.0 * params.theta)) * w
    return ModeCoefficients(r=float(r), b=float(b), c=float(c), disc=float(disc))


def _eigenvalue_arrays(params: ModelParams, r):
    b, c, w = _bcw(params, r)
    disc = 1.0 - 4.0 * np.asarray(r, float) ** (2.0 * (params.alpha - 2.0 * params.theta)) * w
    neg = disc < 0
    sq = np.sqrt(np.abs(disc))
    # Complex pair: exact real part -b/2 and lam_p = conj(lam_m), so the Vieta
    # sum is exact.  Real pair: lam_m carries no cancellation and lam_p = c/lam_m
    # (Vieta) avoids the catastrophic -b + b*sqrt(disc) subtraction.
    lam_m = np.where(neg, -0.5 * b - 0.5j * (b * sq), -0.5 * (b + b * sq) + 0.0j)
    lam_m_safe = np.where(lam_m == 0, 1.0, lam_m)
    lam_p = np.where(neg, np.conj(lam_m), np.where(c == 0, 0.0 + 0.0j, c / lam_m_safe))
    return lam_p, lam_m, b, c, w


def eigenvalues(params: ModelParams, r):
    """Characteristic roots (lam_p, lam_m) at radius r (scalar or array).

    lam_p has the larger real part; for complex-conjugate pairs lam_p
    carries the positive imaginary part.  r = 0 gives (0, 0) when theta > 0.
    """
    if np.any(np.asarray(r) < 0):
        raise ValueError("radial frequency must be nonnegative")
    lam_p, lam_m, _, _, _ = _eigenvalue_arrays(params, r)
    if np.isscalar(r) or np.asarray(r).ndim == 0:
        return complex(lam_p), complex(lam_m)
    return lam_p, lam_m


def _phi1_series(z):
    """6-term Taylor series of phi1, relative error < 1e-12 for |z| < 1e-3."""
    return 1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0 * (1.0 + z / 6.0))))


def _phi1_vec(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL_Z
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    return np.where(small, _phi1_series(zs), (np.exp(zl) - 1.0) / zl)


_P1P_COEF = [1 / 2, 1 / 3, 1 / 8, 1 / 30, 1 / 144, 1 / 840, 1 / 5760, 1 / 45360]
_P1PP_COEF = [1 / 3, 1 / 4, 1 / 10, 1 / 36, 1 / 168, 1 / 960, 1 / 6480]
_P1PPP_COEF = [1 / 4, 1 / 5, 1 / 12, 1 / 42, 1 / 192, 1 / 1080]


def _poly(coef, z):
    out = np.zeros_like(np.asarray(z, dtype=complex))
    for a in reversed(coef):
        out = out * z + a
    return out


def _phi1_prime_vec(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL_DERIV
    zl = np.where(small, 1.0, z)
    closed = (np.exp(zl) * (zl - 1.0) + 1.0) / zl**2
    return np.where(small, _poly(_P1P_COEF, z), closed)


def _phi1_pp_vec(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL_DERIV
    zl = np.where(small, 1.0, z)
    closed = (np.exp(zl) * (zl**2 - 2.0 * zl + 2.0) - 2.0) / zl**3
    return np.where(small, _poly(_P1PP_COEF, z), closed)


def _phi1_ppp_vec(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL_DERIV
    zl = np.where(small, 1.0, z)
    closed = (np.exp(zl) * (zl**3 - 3.0 * zl**2 + 6.0 * zl - 6.0) + 6.0) / zl**4
    return np.where(small, _poly(_P1PPP_COEF, z), closed)


def phi1(z: complex) -> complex:
    """phi1(z) = (e^z - 1)/z with phi1(0) = 1; series fallback for |z| < 1e-3."""
    return complex(_phi1_vec(z))


def phi1_divided_difference(z1: complex, z2: complex) -> complex:
    """(phi1(z1) - phi1(z2)) / (z1 - z2), confluent limit phi1'(z) at z1 = z2.

    Near confluence (|z1 - z2| < 1e-3) uses the midpoint expansion
    phi1'(zbar) + (z1-z2)^2/24 * phi1'''(zbar), accurate to ~1e-13.
    """
    return complex(_phi1_dd_vec(np.asarray(z1, complex), np.asarray(z2, complex)))


def _phi1_dd_vec(z1, z2):
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    dz = z1 - z2
    small = np.abs(dz) < _SMALL_Z
    zbar = 0.5 * (z1 + z2)
    confluent = _phi1_prime_vec(zbar) + dz**2 / 24.0 * _phi1_ppp_vec(zbar)
    dz_safe = np.where(small, 1.0, dz)
    direct = (_phi1_vec(z1) - _phi1_vec(z2)) / dz_safe
    return np.where(small, confluent, direct)


def _phi1p_dd_vec(z1, z2):
    """Divided difference of phi1'; confluent fallback phi1''(midpoint)."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    dz = z1 - z2
    small = np.abs(dz) < _SMALL_Z
    zbar = 0.5 * (z1 + z2)
    dz_safe = np.where(small, 1.0, dz)
    direct = (_phi1_prime_vec(z1) - _phi1_prime_vec(z2)) / dz_safe
    return np.where(small, _phi1_pp_vec(zbar), direct)


def _kernel_core(params: ModelParams, t: float, r):
    """Complex kernel values over an array of radii at a fixed time."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    lam_p, lam_m, b, c, w = _eigenvalue_arrays(params, r)
    gap = lam_p - lam_m
    z = t * gap
    small = np.abs(z) < _SMALL_Z
    em = np.exp(t * lam_m)
    gap_safe = np.where(small, 1.0, gap)
    # K1 = t e^{t lam_m} phi1(t(lam_p - lam_m)); expanded form when the gap
    # is resolvable, so e^{z} never overflows (Re(t lam_pm) <= 0).
    K1 = np.where(small, t * em * _phi1_series(np.where(small, z, 0.0)),
                  (np.exp(t * lam_p) - em) / gap_safe)
    K0 = em - lam_m * K1
    dtK1 = em + lam_p * K1
    dtK0 = -c * K1
    E1 = K1 / w
    return K0, K1, E1, dtK0, dtK1, lam_p, lam_m


def kernels(params: ModelParams, t: float, r: float) -> KernelSample:
    """Exact kernel sample at one (t, r).

    K0(0) = 1, K1(0) = 0, dtK1(0) = 1, dtK0(0) = 0; the free zero mode
    (theta > 0, r = 0) gives K0 = 1, K1 = t.
    """
    if r < 0:
        raise ValueError("radial frequency must be nonnegative")
    K0, K1, E1, dtK0, dtK1, lam_p, lam_m = _kernel_core(params, float(t), r)
    return KernelSample(
        t=float(t), r=float(r),
        lambda_plus=complex(lam_p), lambda_minus=complex(lam_m),
        K0=complex(K0), K1=complex(K1), E1=complex(E1),
        dtK0=complex(dtK0), dtK1=complex(dtK1),
    )


def kernel_arrays(params: ModelParams, t: float, r: np.ndarray) -> KernelArrays:
    """Real kernel values over an array of radii (imaginary roundoff dropped)."""
    K0, K1, E1, dtK0, dtK1, _, _ = _kernel_core(params, float(t), np.asarray(r, float))
    return KernelArrays(K0=K0.real, K1=K1.real, E1=E1.real, dtK0=dtK0.real, dtK1=dtK1.real)


def propagator_arrays(params: ModelParams, h: float, r: np.ndarray):
    """Entries of e^{hA} and the Duhamel weights over a radius array.

    For the per-mode system (u, v)' = A (u, v) + (0, g):

        e^{hA} = [[K0(h), K1(h)], [-c K1(h), dtK1(h)]],
        frozen-force column = (J1(h), K1(h)),   J1 = int_0^h K1,
        ETD2 correction column = (M1(h), J1(h)) / h,  M1 = int_0^h s K1(h-s) ds.

    J1 = h^2 phi1[h lam_p, h lam_m] and M1 = h J1 - h^3 phi1'[h lam_p, h lam_m]
    (divided differences).  Returns a dict of real arrays.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    r = np.asarray(r, dtype=float)
    K0, K1, E1, dtK0, dtK1, lam_p, lam_m = _kernel_core(params, float(h), r)
    _, c, w = _bcw(params, r)
    J1 = h * h * _phi1_dd_vec(h * lam_p, h * lam_m)
    J2 = h**3 * _phi1p_dd_vec(h * lam_p, h * lam_m)
    M1 = h * J1 - J2
    return {
        "K0": K0.real, "K1": K1.real, "dtK1": dtK1.real,
        "c": np.asarray(c, float), "w": np.asarray(w, float),
        "J1": J1.real, "M1": M1.real,
    }


def propagator_step_matrix(params: ModelParams, h: float, r: float):
    """One-step exact linear flow e^{hA} (2x2 complex) and Duhamel column.

    The frozen-force update is w(h) = e^{hA} w(0) + (J1(h), K1(h)) * g.
    At r = 0 (theta > 0) this degenerates to [[1, h], [0, 1]] with column
    (h^2/2, h).
    """
    arr = propagator_arrays(params, h, np.asarray([float(r)]))
    K0, K1, dtK1, c, J1 = (arr[k][0] for k in ("K0", "K1", "dtK1", "c", "J1"))
    matrix = np.array([[K0, K1], [-c * K1, dtK1]], dtype=complex)
    column = np.array([J1, K1], dtype=complex)
    return matrix, column


def etd2_correction_column(params: ModelParams, h: float, r: float) -> np.ndarray:
    """Per-unit-increment trapezoidal correction column (M1/h, J1/h).

    With predictor forcing g* at t+h, the second-order update adds
    (M1/h, J1/h) * (g* - g) to the frozen-force step.
    """
    arr = propagator_arrays(params, h, np.asarray([float(r)]))
    return np.array([arr["M1"][0] / h, arr["J1"][0] / h], dtype=complex)
