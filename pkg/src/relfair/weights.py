"""Exact solver for the per-feature regularization weights.

The subproblem is

    minimize    sum_j lam_j * R_j + beta * ||lam||^2
    subject to  lam_j >= 0,  sum_j lam_j = 1

with R_j >= 0 the current correlation scores and beta > 0 the smoothing
strength. The KKT conditions give lam_j = max(0, (-v - R_j) / (2 beta)) where
the dual variable v is the unique root of

    sum_j max(0, -v - R_j) = 2 beta.

The left side is piecewise linear and strictly increasing in -v, so v is
found by sorting R descending and testing each breakpoint interval; the
leftmost interval extends to -inf (every weight active), and is tested first
since it is the common case for moderate beta.

``qp_oracle`` provides two independent reference solvers (exhaustive
active-set enumeration, projected gradient descent) used by the test suite;
a library substitution here would collapse the dual-route check, so both
sides stay hand-written.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_BREAKPOINT_SLACK = 1e-12


@dataclass(frozen=True)
class LambdaSolution:
    lam: np.ndarray
    v: float
    active_set: tuple[int, ...] = field(default=())

    def objective(self, scores: np.ndarray, beta: float) -> float:
        return float(scores @ self.lam + beta * self.lam @ self.lam)


def solve_lambda(scores, beta: float) -> LambdaSolution:
    """Closed-form minimizer of the simplex-constrained weight subproblem.

    Parameters
    ----------
    scores : array of K finite reals (the correlation scores R_j)
    beta : positive smoothing weight on ||lam||^2

    Ties in `scores` need no special handling: the closed form assigns tied
    entries equal weight automatically.
    """
    r = np.asarray(scores, dtype=float)
    if r.ndim != 1 or r.size < 1:
        raise ValueError("scores must be a nonempty 1-D array")
    if not np.all(np.isfinite(r)):
        raise ValueError("scores must be finite")
    if not beta > 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")

    order = np.argsort(-r, kind="stable")  # descending
    r_sorted = r[order]
    k = r.size
    # suffix_sum[l] = sum of r_sorted[l:]
    suffix = np.concatenate([np.cumsum(r_sorted[::-1])[::-1], [0.0]])
    slack = _BREAKPOINT_SLACK * max(1.0, float(np.abs(r).max()))

    v = None
    best_violation = np.inf
    best_v = None
    for l in range(k):
        cand = -(2.0 * beta + suffix[l]) / (k - l)
        hi = -r_sorted[l]  # candidate must not exceed the first active breakpoint
        lo = -np.inf if l == 0 else -r_sorted[l - 1]
        if lo - slack <= cand <= hi + slack:
            v = cand
            break
        violation = max(lo - cand, cand - hi)
        if violation < best_violation:
            best_violation = violation
            best_v = cand
    if v is None:
        # fp roundoff straddled a breakpoint; the nearest candidate is exact there
        v = best_v

    lam = np.maximum(0.0, (-v - r) / (2.0 * beta))
    active = tuple(int(i) for i in np.flatnonzero(lam > 0.0))
    return LambdaSolution(lam=lam, v=float(v), active_set=active)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    x = np.asarray(v, dtype=float)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(x - theta, 0.0)


def qp_oracle(scores, beta: float, method: str = "enumerate") -> np.ndarray:
    """Reference solution for the weight subproblem, independent of solve_lambda.

    method="enumerate": try all 2^K - 1 candidate supports, solve each
    equality-constrained quadratic, keep the feasible minimizer (K <= 16).
    method="projected_gradient": long-run projected gradient descent on the
    simplex (any K).
    """
    r = np.asarray(scores, dtype=float)
    k = r.size
    if method == "enumerate":
        if k > 16:
            raise ValueError("enumeration oracle limited to K <= 16")
        best = None
        best_obj = np.inf
        for mask in range(1, 2**k):
            support = [j for j in range(k) if mask >> j & 1]
            # on the support: lam_j = (-v - R_j) / (2 beta), sum = 1
            v = -(2.0 * beta + r[support].sum()) / len(support)
            lam = np.zeros(k)
            lam[support] = (-v - r[support]) / (2.0 * beta)
            if lam[support].min() < -1e-12:
                continue
            lam = np.maximum(lam, 0.0)
            obj = float(r @ lam + beta * lam @ lam)
            if obj < best_obj - 1e-15:
                best_obj = obj
                best = lam
        return best
    if method == "projected_gradient":
        lam = np.full(k, 1.0 / k)
        step = 1.0 / (2.0 * beta + 1.0)
        for _ in range(20000):
            lam_next = project_simplex(lam - step * (r + 2.0 * beta * lam))
            if np.abs(lam_next - lam).max() < 1e-14:
                lam = lam_next
                break
            lam = lam_next
        return lam
    raise ValueError(f"unknown oracle method {method!r}")
