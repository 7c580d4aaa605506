"""Batched operator-splitting solver for penalized M-estimation.

Solves, for a batch of problems r = 1..R simultaneously,

    minimize_theta  (1/n) sum_i loss(y_i - x_i' theta) + lam * Pen(theta)

by ADMM on the residual split X theta + r = y (plus a consensus copy
theta = z when a penalty is present), with over-relaxation and cold start
at zero.  Solver state persists across sweeps so stragglers keep
converging instead of restarting.

The piecewise-linear losses admit a vertex polish: an optimum
interpolates d observations, so exact basic solutions through d-subsets
of the smallest residuals are candidate optima; a descent over those
vertices usually lands the exact minimizer after a modest number of ADMM
sweeps.  Optimality of whatever is returned is certified separately (see
estimators.subgradient_residual).
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

_PEN_NONE, _PEN_L1, _PEN_WL2 = "none", "l1", "weighted_l2"


def _prox_loss(v, loss_kind, tau, c):
    """Elementwise prox of loss/(n*rho) at v; c = 1/(n*rho)."""
    if loss_kind == "squared":
        return v / (1.0 + 2.0 * c)
    hi = c * tau
    lo = -c * (1.0 - tau)
    return np.where(v > hi, v - hi, np.where(v < lo, v - lo, 0.0))


def _prox_pen(v, pen_kind, lam_over_rho, pweights):
    if pen_kind == _PEN_NONE or lam_over_rho == 0.0:
        return v
    if pen_kind == _PEN_L1:
        return np.sign(v) * np.maximum(np.abs(v) - lam_over_rho, 0.0)
    return v / (1.0 + 2.0 * lam_over_rho * pweights)


@dataclass
class AdmmState:
    theta: np.ndarray
    r: np.ndarray
    u1: np.ndarray
    z: np.ndarray | None = None
    u2: np.ndarray | None = None

    def select(self, keep) -> "AdmmState":
        return AdmmState(theta=self.theta[keep], r=self.r[keep],
                         u1=self.u1[keep],
                         z=None if self.z is None else self.z[keep],
                         u2=None if self.u2 is None else self.u2[keep])


def init_state(R, n, d, penalized) -> AdmmState:
    return AdmmState(theta=np.zeros((R, d)), r=np.zeros((R, n)),
                     u1=np.zeros((R, n)),
                     z=np.zeros((R, d)) if penalized else None,
                     u2=np.zeros((R, d)) if penalized else None)


def admm_batch(X, y, loss_kind="quantile", tau=0.5, pen_kind=_PEN_NONE,
               lam=0.0, pweights=None, rho=1.0, alpha=1.7, iters=300,
               state: AdmmState | None = None) -> AdmmState:
    """Run `iters` ADMM sweeps, continuing from `state` when given."""
    R, n, d = X.shape
    penalized = pen_kind != _PEN_NONE and lam > 0.0
    if state is None:
        state = init_state(R, n, d, penalized)
    G = np.einsum("rij,rik->rjk", X, X)
    if penalized:
        G = G + np.eye(d)
    c = 1.0 / (n * rho)
    lam_over_rho = lam / rho
    pw = np.ones(d) if pweights is None else np.asarray(pweights, dtype=float)
    theta, r, u1, z, u2 = state.theta, state.r, state.u1, state.z, state.u2
    for _ in range(iters):
        rhs = np.einsum("rij,ri->rj", X, y - r - u1)
        if penalized:
            rhs = rhs + (z - u2)
        theta = np.linalg.solve(G, rhs[..., None])[..., 0]
        Xth = np.einsum("rij,rj->ri", X, theta)
        h1 = alpha * Xth + (1.0 - alpha) * (y - r)
        r = _prox_loss(y - h1 - u1, loss_kind, tau, c)
        u1 = u1 + h1 + r - y
        if penalized:
            h2 = alpha * theta + (1.0 - alpha) * z
            z = _prox_pen(h2 + u2, pen_kind, lam_over_rho, pw)
            u2 = u2 + h2 - z
    return AdmmState(theta=theta, r=r, u1=u1, z=z, u2=u2)


def objective_batch(X, y, theta, loss_kind, tau, pen_kind, lam, pweights=None):
    res = y - np.einsum("rij,rj->ri", X, theta)
    if loss_kind == "squared":
        vals = (res ** 2).mean(axis=1)
    else:
        vals = (res * (tau - (res <= 0))).mean(axis=1)
    if pen_kind == _PEN_L1 and lam > 0:
        vals = vals + lam * np.abs(theta).sum(axis=1)
    elif pen_kind == _PEN_WL2 and lam > 0:
        pw = np.ones(theta.shape[1]) if pweights is None else np.asarray(pweights)
        vals = vals + lam * (pw * theta ** 2).sum(axis=1)
    return vals


def _candidate_pool(X, res, pool, scan=48):
    """Per-replication pool of small-|residual| rows, padded with the first
    directionally independent rows so near-duplicate designs (block
    dependence) still expose a spanning active set."""
    R, n, d = X.shape
    scan = min(scan, n)
    order = np.argsort(np.abs(res), axis=1)[:, :scan]
    out = np.empty((R, pool), dtype=np.intp)
    for r in range(R):
        rows = order[r]
        picked = list(rows[:pool - d])
        basis = []
        extra = []
        for i in rows:
            x = X[r, i]
            proj = x.copy()
            for b in basis:
                proj = proj - (proj @ b) * b
            norm = np.linalg.norm(proj)
            if norm > 0.02 * max(np.linalg.norm(x), 1e-30):
                basis.append(proj / norm)
                if i not in picked[:pool - d]:
                    extra.append(i)
            if len(basis) == d:
                break
        merged = list(dict.fromkeys(picked + extra))
        j = 0
        while len(merged) < pool:
            if rows[j] not in merged:
                merged.append(rows[j])
            j += 1
            if j >= scan:
                merged.append(merged[-1])
        out[r] = merged[:pool]
    return out


def polish_vertex_batch(X, y, theta, loss_kind, tau, pen_kind, lam,
                        pweights=None, pool_extra=4, rounds=3):
    """Vertex descent for the piecewise-linear losses without penalty.

    Candidate vertices are exact solves through d-subsets of a pool of
    smallest-|residual| observations (diversified across directions) at
    the current point; each round moves to the best candidate and
    re-ranks.
    """
    R, n, d = X.shape
    pool = min(2 * d + pool_extra, n)
    combos = list(combinations(range(pool), d))
    best_theta = theta.copy()
    best_obj = objective_batch(X, y, theta, loss_kind, tau, pen_kind, lam,
                               pweights)
    for _ in range(rounds):
        res = y - np.einsum("rij,rj->ri", X, best_theta)
        order = _candidate_pool(X, res, pool)
        improved = False
        for combo in combos:
            idx = order[:, list(combo)]
            XA = np.take_along_axis(X, idx[:, :, None], axis=1)
            yA = np.take_along_axis(y, idx, axis=1)
            dets = np.abs(np.linalg.det(XA))
            ok = dets > 1e-12 * np.maximum(np.abs(XA).max(axis=(1, 2)), 1.0) ** d
            if not np.any(ok):
                continue
            cand = best_theta.copy()
            cand[ok] = np.linalg.solve(XA[ok], yA[ok][..., None])[..., 0]
            obj = objective_batch(X, y, cand, loss_kind, tau, pen_kind, lam,
                                  pweights)
            take = obj < best_obj - 1e-15
            if np.any(take):
                improved = True
                best_theta = np.where(take[:, None], cand, best_theta)
                best_obj = np.minimum(obj, best_obj)
        if not improved:
            break
    return best_theta, best_obj


def simplex_polish(X, y, theta, tau=0.5, max_pivots=500):
    """Exact vertex pivoting for unpenalized quantile regression.

    Starting from (approximately) a basic solution, repeatedly solves the
    dual box condition on the active rows; on violation, pivots along the
    edge that keeps the other active residuals at zero, choosing the step
    by the weighted-median rule on the crossing residuals.  Returns the
    optimal theta, or None when pivoting stalls (caller falls back).
    """
    n, d = X.shape
    res = y - X @ theta
    A = list(np.argsort(np.abs(res))[:d])
    for _ in range(max_pivots):
        XA = X[A]
        try:
            theta = np.linalg.solve(XA, y[A])
        except np.linalg.LinAlgError:
            return None
        res = y - X @ theta
        mask = np.ones(n, dtype=bool)
        mask[A] = False
        psi = tau - (res < 0)
        v = X[mask].T @ psi[mask]
        try:
            s = np.linalg.solve(XA.T, -v)
        except np.linalg.LinAlgError:
            return None
        over = s - tau
        under = (tau - 1.0) - s
        viol = np.maximum(over, under)
        jrel = int(np.argmax(viol))
        if viol[jrel] <= 1e-12:
            return theta
        sigma = -1.0 if over[jrel] >= under[jrel] else 1.0
        e = np.zeros(d)
        e[jrel] = 1.0
        dth = np.linalg.solve(XA, e)
        g = sigma * (X @ dth)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = res / g
        t = np.where(mask & (np.abs(g) > 1e-13) & (t > 1e-14), t, np.inf)
        deriv = (sigma * s[jrel] + (1.0 - tau if sigma > 0 else tau)) / n
        order = np.argsort(t)
        enter = -1
        for idx in order:
            if not np.isfinite(t[idx]):
                break
            deriv += abs(g[idx]) / n
            if deriv >= -1e-15:
                enter = int(idx)
                break
        if enter < 0:
            return None
        A[jrel] = enter
    return None
