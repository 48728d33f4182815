"""Worst-case misclassification probability over a Wasserstein ball, and CVaR.

For a finite-support distribution with weights p_i and per-point distances
d_i = d(w, xi_i) to misclassification, strong duality reduces the worst-case
misclassification probability at radius epsilon to a one-dimensional convex
piecewise-linear minimization

    phi(t) = epsilon * t + sum_i p_i * max(0, 1 - t * d_i),   t > 0,

whose minimum sits at a breakpoint t = 1/d_i or in a limit.  The same value
is the optimum of a fractional knapsack (fill mass v_i <= p_i, paying d_i
per unit, budget epsilon), solved greedily in increasing-distance order.
Both routes are computed exactly by breakpoint enumeration, which is what
makes the tight dual-equals-primal equality tests possible.

Points at infinite distance (w = 0 with y*b > 0) contribute nothing to the
dual sum and are untouchable by the knapsack; the CVaR enumeration likewise
takes its breakpoints from the finite distances only, with the t -> infinity
limit handled analytically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import Hyperplane, distances

__all__ = [
    "WorstCaseResult",
    "CvarRadius",
    "worst_case_prob_dual",
    "worst_case_prob_knapsack",
    "cvar_distance",
    "check_chance_cvar",
    "cvar_radius",
    "worst_case_dual_from_distances",
    "worst_case_knapsack_from_distances",
    "cvar_from_distances",
]


@dataclass(frozen=True)
class WorstCaseResult:
    """Worst-case misclassification probability and the achieving multiplier.

    ``t_star`` is the dual minimizer: a positive breakpoint when the minimum
    is attained, ``inf`` for the t -> infinity limit (epsilon = 0), and 0.0
    for the t -> 0+ limit (budget large enough to move every reachable
    point).
    """

    value: float
    t_star: float


class CvarRadius(NamedTuple):
    epsilon: float
    argmax: list


def _check_dist_weights(dists, weights):
    d = np.asarray(dists, dtype=float).ravel()
    p = np.asarray(weights, dtype=float).ravel()
    if d.shape != p.shape:
        raise ValueError("distances and weights must have matching shapes")
    if np.any(d < 0.0) or np.any(np.isnan(d)):
        raise ValueError("distances must be nonnegative")
    return d, p


def worst_case_dual_from_distances(dists, weights, epsilon: float) -> WorstCaseResult:
    d, p = _check_dist_weights(dists, weights)
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")

    finite = np.isfinite(d)
    mass_zero = float(p[d == 0.0].sum())
    if epsilon == 0.0:
        # the ball degenerates to the nominal distribution; the infimum is
        # attained only in the limit t -> infinity
        return WorstCaseResult(mass_zero, float("inf"))

    df = d[finite]
    pf = p[finite]
    limit_zero = float(pf.sum())  # phi(t) -> sum of reachable mass as t -> 0+

    pos = df > 0.0
    dp = df[pos]
    pp = pf[pos]
    if dp.size == 0:
        return WorstCaseResult(limit_zero, 0.0)

    order = np.argsort(dp, kind="stable")
    ds_sorted = dp[order]
    ps_sorted = pp[order]
    # prefix sums over strictly smaller distances; ties at d = d_k add
    # exactly zero to phi(1/d_k) so the strict cut is what matters
    cum_p = np.concatenate([[0.0], np.cumsum(ps_sorted)])
    cum_pd = np.concatenate([[0.0], np.cumsum(ps_sorted * ds_sorted)])
    lower = np.searchsorted(ds_sorted, ds_sorted, side="left")

    t_vals = 1.0 / ds_sorted
    phi = epsilon * t_vals + mass_zero + cum_p[lower] - t_vals * cum_pd[lower]

    # t_vals is descending, so the smallest minimizing t is the last argmin
    best = phi.size - 1 - int(np.argmin(phi[::-1]))
    if limit_zero < phi[best]:
        return WorstCaseResult(limit_zero, 0.0)
    return WorstCaseResult(float(phi[best]), float(t_vals[best]))


def worst_case_knapsack_from_distances(dists, weights, epsilon: float) -> float:
    d, p = _check_dist_weights(dists, weights)
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")

    value = float(p[d == 0.0].sum())
    movable = np.isfinite(d) & (d > 0.0)
    dm = d[movable]
    pm = p[movable]
    if dm.size == 0 or epsilon == 0.0:
        return value

    order = np.argsort(dm, kind="stable")
    dm = dm[order]
    pm = pm[order]
    cum_cost = np.cumsum(dm * pm)
    k = int(np.searchsorted(cum_cost, epsilon, side="right"))
    value += float(pm[:k].sum())
    if k < dm.size:
        spent = float(cum_cost[k - 1]) if k > 0 else 0.0
        value += (epsilon - spent) / dm[k]
    return value


def cvar_from_distances(dists, weights, rho: float) -> float:
    d, p = _check_dist_weights(dists, weights)
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho must lie in (0, 1), got {rho}")

    finite = np.isfinite(d)
    finite_mass = float(p[finite].sum())
    if finite_mass < rho:
        # g(t) = t * (1 - finite_mass / rho) + const grows without bound
        return float("inf")

    df = d[finite]
    pf = p[finite]
    order = np.argsort(df, kind="stable")
    ds_sorted = df[order]
    ps_sorted = pf[order]
    cum_p = np.concatenate([[0.0], np.cumsum(ps_sorted)])
    cum_pd = np.concatenate([[0.0], np.cumsum(ps_sorted * ds_sorted)])
    lower = np.searchsorted(ds_sorted, ds_sorted, side="left")

    # g(t) = t + (1/rho) * sum_{d_i < t} p_i (d_i - t), at t = each positive
    # breakpoint; the t -> 0+ limit contributes the baseline 0
    pos = ds_sorted > 0.0
    best = 0.0
    if pos.any():
        t_vals = ds_sorted[pos]
        g = t_vals + (cum_pd[lower][pos] - t_vals * cum_p[lower][pos]) / rho
        best = max(best, float(g.max()))
    if finite_mass == rho:
        # flat tail: g is constant at sum(p_i d_i) / rho beyond the largest
        # finite breakpoint
        best = max(best, float(cum_pd[-1]) / rho)
    return best


def worst_case_prob_dual(ds, h: Hyperplane, epsilon: float) -> WorstCaseResult:
    """Exact dual-form worst-case misclassification probability."""
    return worst_case_dual_from_distances(distances(h, ds), ds.weights, epsilon)


def worst_case_prob_knapsack(ds, h: Hyperplane, epsilon: float) -> float:
    """Greedy fractional-knapsack form of the same worst-case probability."""
    return worst_case_knapsack_from_distances(distances(h, ds), ds.weights, epsilon)


def cvar_distance(ds, h: Hyperplane, rho: float) -> float:
    """CVaR at level rho of the distance to misclassification (low = risky)."""
    return cvar_from_distances(distances(h, ds), ds.weights, rho)


def check_chance_cvar(ds, h: Hyperplane, epsilon: float, rho: float):
    """Report both sides of the chance-constraint / CVaR equivalence.

    Returns ``(chance_holds, cvar_holds)`` where the first is
    worst-case probability <= rho and the second is rho * CVaR >= epsilon;
    away from the boundary the two always agree.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    chance_holds = worst_case_prob_dual(ds, h, epsilon).value <= rho
    cvar_holds = rho * cvar_distance(ds, h, rho) >= epsilon
    return chance_holds, cvar_holds


def cvar_radius(ds, candidates: Sequence[Hyperplane], rho: float) -> CvarRadius:
    """Radius rho * max-CVaR over the candidates, with the argmax set.

    At this radius the minimal worst-case probability over the same
    candidates equals rho (when the radius is finite and positive); ties in
    the CVaR maximum are kept within 1e-10.
    """
    if not candidates:
        raise ValueError("candidate list must be non-empty")
    values = [cvar_distance(ds, h, rho) for h in candidates]
    best = max(values)
    argmax = [i for i, v in enumerate(values) if best - v <= 1e-10 or v == best]
    return CvarRadius(rho * best, argmax)
