"""Structural parameters of the evolution family

    u_tt + (-Lap)^delta u_tt + (-Lap)^alpha u + (-Lap)^theta u_t = |u_t|^p

on R^n, in the effective-damping regime 2*theta <= alpha.
"""

from dataclasses import dataclass

__all__ = ["ModelParams"]


@dataclass(frozen=True)
class ModelParams:
    """Exponents (n, alpha, theta, delta) of the linear part.

    Validity: n >= 1 integer, alpha > 0, 0 <= 2*theta <= alpha (effective
    damping) and 0 <= delta <= alpha.
    """

    n: int
    alpha: float
    theta: float
    delta: float

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"space dimension n must be a positive integer, got {self.n!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 <= 2 * self.theta <= self.alpha:
            raise ValueError(
                f"effective damping requires 0 <= 2*theta <= alpha, "
                f"got theta={self.theta}, alpha={self.alpha}"
            )
        if not 0 <= self.delta <= self.alpha:
            raise ValueError(f"delta must lie in [0, alpha], got delta={self.delta}")

    @property
    def regime(self) -> str:
        """Total classifier: 'smoothing' when delta <= theta, else 'regularity_loss'."""
        return "smoothing" if self.delta <= self.theta else "regularity_loss"

    @property
    def smoothing(self) -> bool:
        return self.delta <= self.theta

    @property
    def regularity_loss(self) -> bool:
        return self.delta > self.theta
