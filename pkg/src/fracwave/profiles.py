"""Radial frequency profiles psi_hat(|xi|) modeling the data classes.

gaussian      : psi in L^1 with smooth, rapidly decaying spectrum (all moments).
algebraic_tail: psi_hat(r) = (1 + (r/cutoff)^2)^{-(s + n/2 + eps)/2}; models
                psi in H^{s'} exactly for s' < s + eps.
high_pass     : psi_hat = 0 below the cutoff, r^{-(s + n/2 + eps)} above; the
                low-frequency part is absent, so only the high-frequency
                (regularity-loss) mechanism contributes.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["GaussianProfile", "AlgebraicTailProfile", "HighPassProfile", "profile_from_config"]


@dataclass(frozen=True)
class GaussianProfile:
    kind = "gaussian"
    width: float = 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(-0.5 * (self.width * r) ** 2)


@dataclass(frozen=True)
class AlgebraicTailProfile:
    kind = "algebraic_tail"
    s: float
    n: int = 1
    cutoff: float = 1.0
    eps: float = 0.01

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        expo = self.s + 0.5 * self.n + self.eps
        return (1.0 + (r / self.cutoff) ** 2) ** (-0.5 * expo)


@dataclass(frozen=True)
class HighPassProfile:
    kind = "high_pass"
    s: float
    n: int = 1
    cutoff: float = 1.0
    eps: float = 0.01

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        expo = self.s + 0.5 * self.n + self.eps
        with np.errstate(divide="ignore"):
            tail = np.where(r >= self.cutoff, r, self.cutoff) ** (-expo)
        return np.where(r >= self.cutoff, tail, 0.0)


def profile_from_config(kind: str, n: int, **kw):
    """Build a profile from config fields (width / s / cutoff)."""
    if kind == "gaussian":
        return GaussianProfile(width=kw.get("width", 1.0))
    if kind == "algebraic_tail":
        return AlgebraicTailProfile(s=kw["s"], n=n, cutoff=kw.get("cutoff", 1.0))
    if kind == "high_pass":
        return HighPassProfile(s=kw["s"], n=n, cutoff=kw.get("cutoff", 1.0))
    raise ValueError(f"unknown profile kind {kind!r}")
