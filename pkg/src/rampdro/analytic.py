"""Numerical certification of the uniform-data model in two dimensions.

The population objective under study is

    F(w) = eps/2 * ||w||^2 + E[ L(w1 * r + w2 * x2) ],
    r ~ U(0, 1),  x2 ~ U(-1, 1),

with L the ramp loss.  Because L is piecewise affine, the expectation splits
the rectangle [0,1] x [-1,1] along the two lines w1*r + w2*x2 = 0 and = 1:
the loss is constant 1 below the first line, affine in between, and 0 above
the second.  Clipping the rectangle against those half-planes and applying
the shoelace moment formulas integrates each piece exactly, which is what
lets the stationarity residuals be resolved to 1e-8 and beyond (Monte Carlo
or fixed quadrature cannot get close).  Midpoint quadrature remains as the
fallback when ||w|| is too small for the strip to be a meaningful polygon,
and as an independent cross-check.

Known closed forms certified here: the objective restricted to the first
axis, the unique stationary point w1 = (2 eps)^(-1/3) (for eps <= 1/2) or
1/(2 eps) (for eps > 1/2) with w2 = 0, the minimum value 3*(eps/32)^(1/3) or
1 - 1/(8 eps), and the origin's one-sided derivatives -1/2 along +e1 and 0
along -e1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import smoothed_ramp_deriv

__all__ = [
    "UniformModel",
    "f_epsilon",
    "f_epsilon_quadrature",
    "stationarity_residual",
    "origin_directional_derivative",
    "origin_directional_derivatives",
    "scan_stationary_points",
    "label_flip_balance",
    "closed_form_minimizer",
    "x2_slice_integral",
]

_DEGENERATE_NORM = 1e-10
_RECT = ((0.0, -1.0), (1.0, -1.0), (1.0, 1.0), (0.0, 1.0))  # CCW

# refinement acceptance: residual must essentially vanish, and the point
# must sit away from the excluded origin (where the gradient formula does
# not apply; the origin is handled by the directional-derivative routine)
_ACCEPT_RESIDUAL = 1e-8
_ACCEPT_MIN_NORM = 1e-4
_MERGE_RADIUS = 1e-5


@dataclass(frozen=True)
class UniformModel:
    epsilon: float
    grid_per_axis: int = 400

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.grid_per_axis < 200:
            raise ValueError(f"grid_per_axis must be >= 200, got {self.grid_per_axis}")


def _clip_halfplane(poly, a, b, c):
    # keep the part of a convex CCW polygon with a*u + b*v <= c
    out = []
    m = len(poly)
    for i in range(m):
        u1, v1 = poly[i]
        u2, v2 = poly[(i + 1) % m]
        s1 = a * u1 + b * v1 - c
        s2 = a * u2 + b * v2 - c
        if s1 <= 0.0:
            out.append((u1, v1))
        if (s1 < 0.0 < s2) or (s2 < 0.0 < s1):
            t = s1 / (s1 - s2)
            out.append((u1 + t * (u2 - u1), v1 + t * (v2 - v1)))
    return out


def _moments(poly):
    # area, integral of u, integral of v over a CCW polygon (shoelace)
    area = mu = mv = 0.0
    m = len(poly)
    for i in range(m):
        u1, v1 = poly[i]
        u2, v2 = poly[(i + 1) % m]
        cross = u1 * v2 - u2 * v1
        area += cross
        mu += (u1 + u2) * cross
        mv += (v1 + v2) * cross
    return 0.5 * area, mu / 6.0, mv / 6.0


def _band_moments(w1, w2):
    # moments of {0 <= w1*u + w2*v <= 1} within the rectangle
    poly = _clip_halfplane(list(_RECT), -w1, -w2, 0.0)
    if len(poly) >= 3:
        poly = _clip_halfplane(poly, w1, w2, 1.0)
    if len(poly) < 3:
        return 0.0, 0.0, 0.0
    return _moments(poly)


def f_epsilon(model: UniformModel, w) -> float:
    """Population objective by exact piecewise integration.

    Falls back to midpoint quadrature on the configured grid when
    ||w|| < 1e-10 and the strip decomposition degenerates.
    """
    w1, w2 = float(w[0]), float(w[1])
    reg = 0.5 * model.epsilon * (w1 * w1 + w2 * w2)
    if math.hypot(w1, w2) < _DEGENERATE_NORM:
        return reg + _expected_ramp_quadrature(w1, w2, model.grid_per_axis)
    below = _clip_halfplane(list(_RECT), w1, w2, 0.0)
    area_below = _moments(below)[0] if len(below) >= 3 else 0.0
    area_band, mu, mv = _band_moments(w1, w2)
    expected = 0.5 * (area_below + area_band - w1 * mu - w2 * mv)
    return reg + expected


def _expected_ramp_quadrature(w1, w2, grid):
    r = (np.arange(grid) + 0.5) / grid
    x2 = -1.0 + (np.arange(grid) + 0.5) * (2.0 / grid)
    total = 0.0
    for ri in r:  # row at a time to bound memory at large grids
        total += float(np.clip(1.0 - (w1 * ri + w2 * x2), 0.0, 1.0).sum())
    return total / (grid * grid)


def f_epsilon_quadrature(model: UniformModel, w, grid: int | None = None) -> float:
    """Composite-midpoint evaluation of the same objective (cross-check path)."""
    w1, w2 = float(w[0]), float(w[1])
    reg = 0.5 * model.epsilon * (w1 * w1 + w2 * w2)
    return reg + _expected_ramp_quadrature(w1, w2, grid or model.grid_per_axis)


def stationarity_residual(model: UniformModel, w) -> np.ndarray:
    """Gradient of F at w != 0, via the same exact integration.

    Components: (eps*w1 - E[1(0 < s < 1) r], eps*w2 - E[1(0 < s < 1) x2])
    where s = w1*r + w2*x2.  The origin is rejected: the population loss is
    not differentiable there.
    """
    w1, w2 = float(w[0]), float(w[1])
    if math.hypot(w1, w2) < _DEGENERATE_NORM:
        raise ValueError("stationarity residual is undefined at w = 0")
    _, mu, mv = _band_moments(w1, w2)
    return np.array(
        [model.epsilon * w1 - 0.5 * mu, model.epsilon * w2 - 0.5 * mv]
    )


def origin_directional_derivative(model: UniformModel, direction, alphas=(1e-3, 1e-4, 1e-5)) -> float:
    """Richardson-extrapolated one-sided derivative of F at the origin."""
    u = np.asarray(direction, dtype=float)
    f0 = f_epsilon(model, np.zeros(2))
    d = [(f_epsilon(model, a * u) - f0) / a for a in alphas]
    # the alphas decrease by a fixed factor; two Richardson levels kill the
    # O(alpha) and O(alpha^2) error terms
    ratio = alphas[0] / alphas[1]
    e1 = (ratio * d[1] - d[0]) / (ratio - 1.0)
    e2 = (ratio * d[2] - d[1]) / (ratio - 1.0)
    return (ratio**2 * e2 - e1) / (ratio**2 - 1.0)


def origin_directional_derivatives(model: UniformModel):
    """Derivatives along (1, 0) and (-1, 0); the certified values are -1/2, 0."""
    return (
        origin_directional_derivative(model, (1.0, 0.0)),
        origin_directional_derivative(model, (-1.0, 0.0)),
    )


def _residual_norm(model, w1, w2):
    _, mu, mv = _band_moments(w1, w2)
    return max(
        abs(model.epsilon * w1 - 0.5 * mu), abs(model.epsilon * w2 - 0.5 * mv)
    )


def refine_candidate(model: UniformModel, w0, half_width: float):
    """Compass-shrink minimization of the residual norm from a seed cell.

    Returns the refined point and its residual norm.  Genuine roots collapse
    to residuals near machine precision; spurious sub-threshold cells either
    stall at a positive residual or slide into the excluded origin, and both
    outcomes fail the acceptance test in the scan.
    """
    best = (float(w0[0]), float(w0[1]))
    best_res = _residual_norm(model, *best)
    h = half_width
    rounds = 0
    while h > 1e-13 and rounds < 500:
        rounds += 1
        moved = False
        for du, dv in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
            cand = (best[0] + du * h, best[1] + dv * h)
            if math.hypot(*cand) < _DEGENERATE_NORM:
                continue
            res = _residual_norm(model, *cand)
            if res < best_res:
                best, best_res = cand, res
                moved = True
        if not moved:
            h *= 0.5
    return np.array(best), best_res


def scan_stationary_points(model: UniformModel, box=(-3.0, 3.0), grid: int = 300) -> np.ndarray:
    """Locate stationary points of F inside ``box`` x ``box``.

    Scans the residual infinity-norm on a grid, refines every sub-threshold
    local minimum by compass shrinkage, and keeps the refined points whose
    residual drops below 1e-8 away from the origin.  Duplicates within
    1e-5 are merged.  Returns an array of shape (k, 2) sorted by w1.
    """
    if grid < 100:
        raise ValueError(f"grid must be >= 100, got {grid}")
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise ValueError("box must have positive width")
    axis = np.linspace(lo, hi, grid)
    cell = (hi - lo) / grid
    threshold = 10.0 * cell

    norms = np.full((grid, grid), np.inf)
    for i, w1 in enumerate(axis):
        for j, w2 in enumerate(axis):
            if math.hypot(w1, w2) < _DEGENERATE_NORM:
                continue
            norms[i, j] = _residual_norm(model, w1, w2)

    # seed refinement at sub-threshold cells that are grid-local minima
    seeds = []
    for i in range(grid):
        for j in range(grid):
            v = norms[i, j]
            if v > threshold:
                continue
            neigh = norms[max(0, i - 1): i + 2, max(0, j - 1): j + 2]
            if v <= neigh.min():
                seeds.append((axis[i], axis[j]))

    accepted = []
    for seed in seeds:
        point, res = refine_candidate(model, seed, cell)
        if res <= _ACCEPT_RESIDUAL and np.linalg.norm(point) >= _ACCEPT_MIN_NORM:
            for other in accepted:
                if np.linalg.norm(other - point) <= _MERGE_RADIUS:
                    break
            else:
                accepted.append(point)

    accepted.sort(key=lambda p: (p[0], p[1]))
    return np.array(accepted) if accepted else np.empty((0, 2))


def closed_form_minimizer(epsilon: float):
    """Global minimizer first coordinate and minimum value of F.

    (w1, F) = ((2 eps)^(-1/3), 3 (eps/32)^(1/3)) for eps <= 1/2, and
    (1/(2 eps), 1 - 1/(8 eps)) for eps > 1/2; w2 = 0 in both regimes.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if epsilon <= 0.5:
        return (2.0 * epsilon) ** (-1.0 / 3.0), 3.0 * (epsilon / 32.0) ** (1.0 / 3.0)
    return 1.0 / (2.0 * epsilon), 1.0 - 1.0 / (8.0 * epsilon)


def x2_slice_integral(w1: float, w2: float, r: float) -> float:
    """Integral of x2 over the admissible x2-slice at fixed r, for w2 > 0.

    Half the signed second-moment of the interval
    [max(-1, -w1 r / w2), min(1, (1 - w1 r) / w2)]; anti-symmetric about
    r = 1/(2 w1) when w1 > 0, which the integration self-test exploits.
    """
    if not w2 > 0.0:
        raise ValueError("the slice integral is defined for w2 > 0")
    lo = max(-1.0, -w1 * r / w2)
    hi = min(1.0, (1.0 - w1 * r) / w2)
    if hi <= lo:
        return 0.0
    return 0.25 * (hi * hi - lo * lo)


def label_flip_balance(ds, h, sigma: float):
    """Per-coordinate mass of the stationarity balance for the smoothed ramp.

    Returns (first coordinate, remaining coordinates) of
    -sum_i p_i psi'(y_i (<w, x_i> + b)) y_i x_i, the vector that a
    stationary w must be proportional to.  With labels y = sign(x1), every
    term pushes the first coordinate the same way while the others largely
    cancel, which is the mechanism behind the flip-robustness results.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = ds.labels * (ds.points @ h.w + h.b)
    coeff = -ds.weights * smoothed_ramp_deriv(r, sigma) * ds.labels
    balance = ds.points.T @ coeff
    return float(balance[0]), balance[1:]
