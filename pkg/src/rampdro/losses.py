"""Scalar losses for robust linear classification.

The ramp loss clips the hinge at 1, so every sample contributes at most one
unit of loss no matter how badly it is misclassified:

    L(r) = max(0, 1 - r) - max(0, -r)

The smoothed variants replace each max-term with a softmax at temperature
``sigma``, which keeps the loss infinitely differentiable while staying
within ``sigma * log(2)`` of the corresponding max.  All functions accept
scalars or numpy arrays and are stateless (thread-safe).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LossKind",
    "LossSpec",
    "ramp",
    "smoothed_ramp",
    "smoothed_ramp_deriv",
    "smoothed_hinge",
    "smoothed_hinge_deriv",
]


class LossKind(enum.Enum):
    RAMP = "ramp"
    SMOOTHED_RAMP = "sramp"
    SMOOTHED_HINGE = "shinge"


@dataclass(frozen=True)
class LossSpec:
    """Loss selector plus smoothing temperature (unused for plain ramp)."""

    kind: LossKind
    sigma: float = 0.02

    def __post_init__(self):
        if self.kind is not LossKind.RAMP and not self.sigma > 0.0:
            raise ValueError(
                f"sigma must be positive for {self.kind.value}, got {self.sigma}"
            )

    @property
    def smooth(self) -> bool:
        return self.kind is not LossKind.RAMP

    def value(self, r):
        if self.kind is LossKind.RAMP:
            return ramp(r)
        if self.kind is LossKind.SMOOTHED_RAMP:
            return smoothed_ramp(r, self.sigma)
        return smoothed_hinge(r, self.sigma)

    def deriv(self, r):
        if self.kind is LossKind.RAMP:
            raise ValueError("ramp loss has no derivative; use a smoothed variant")
        if self.kind is LossKind.SMOOTHED_RAMP:
            return smoothed_ramp_deriv(r, self.sigma)
        return smoothed_hinge_deriv(r, self.sigma)


def _ret(out):
    # scalar in, scalar out; array in, array out
    return float(out) if np.ndim(out) == 0 else out


def _softmax0(z, sigma):
    """sigma * log(1 + exp(z / sigma)), the softmax of {0, z}.

    Shifted so that exp never sees a positive argument; exact for
    |z| / sigma far beyond 1e4.
    """
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + sigma * np.log1p(np.exp(-np.abs(z) / sigma))


def _logistic(z):
    # exp-based rather than tanh-based: keeps gradual underflow in the tails
    # instead of saturating to exactly 0/1 around |z| ~ 38
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def ramp(r):
    """Ramp loss: 1 for r <= 0, 1 - r for 0 < r < 1, 0 for r >= 1."""
    r = np.asarray(r, dtype=float)
    return _ret(np.clip(1.0 - r, 0.0, 1.0))


def smoothed_ramp(r, sigma):
    """Softmax-smoothed ramp loss at temperature sigma > 0.

    Writing sp(z) = sigma * log(1 + exp(z / sigma)), the value is
    sp(1 - r) - sp(-r).  Satisfies the exact reflection identity
    smoothed_ramp(r) + smoothed_ramp(1 - r) = 1 and stays within
    sigma * log(2) of ramp(r).
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.asarray(r, dtype=float)
    # the difference can overshoot the mathematical range by one ulp when
    # the softmax correction terms underflow at different magnitudes
    return _ret(np.clip(_softmax0(1.0 - r, sigma) - _softmax0(-r, sigma), 0.0, 1.0))


def smoothed_ramp_deriv(r, sigma):
    """First derivative of the smoothed ramp; strictly negative.

    Equal to logistic((r - 1) / sigma) - logistic(r / sigma).  The derivative
    is symmetric about r = 1/2, so it is evaluated at min(r, 1 - r) where the
    difference of logistics underflows gradually instead of cancelling.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.asarray(r, dtype=float)
    rr = np.minimum(r, 1.0 - r)
    return _ret(_logistic((rr - 1.0) / sigma) - _logistic(rr / sigma))


def smoothed_hinge(r, sigma):
    """Softmax-smoothed hinge loss: sigma * log(1 + exp((1 - r) / sigma))."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.asarray(r, dtype=float)
    return _ret(_softmax0(1.0 - r, sigma))


def smoothed_hinge_deriv(r, sigma):
    """Derivative of the smoothed hinge: -logistic((1 - r) / sigma)."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.asarray(r, dtype=float)
    return _ret(-_logistic((1.0 - r) / sigma))
