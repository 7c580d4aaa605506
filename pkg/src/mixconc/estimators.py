"""Penalized M-estimators: quantile regression, least squares, sieve least
squares, and the population distance / bias evaluators.

Every fit carries a certified optimality residual.  For the nonsmooth
quantile loss the certificate is the Euclidean distance from zero to the
subdifferential of the objective, with the interval freedom at zero
residuals (and at zero coefficients under the l1 penalty) resolved by a
small box-constrained least-squares problem.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear

from . import _admm
from .errors import (DomainError, NonConvergence, ShapeMismatch,
                     SingularDesign, UnsupportedDesign)
from .sieves import SieveBasis, SieveMomentOracle


# ---------------------------------------------------------------------------
# losses and penalties


@dataclass(frozen=True)
class LossSpec:
    """kind in {"quantile", "abs_half", "squared"}.

    abs_half is t -> 0.5|t|, identical to the quantile loss at tau = 0.5.
    """

    kind: str
    tau: float = 0.5

    def __post_init__(self):
        if self.kind not in ("quantile", "abs_half", "squared"):
            raise DomainError(f"unknown loss {self.kind!r}")
        if self.kind == "quantile" and not (0.0 < self.tau < 1.0):
            raise DomainError("tau must lie in (0, 1)")

    @property
    def effective_tau(self) -> float:
        return 0.5 if self.kind == "abs_half" else self.tau

    def values(self, residuals: np.ndarray) -> np.ndarray:
        r = np.asarray(residuals, dtype=float)
        if self.kind == "squared":
            return r ** 2
        t = self.effective_tau
        return r * (t - (r <= 0))


def quantile_loss(tau: float) -> LossSpec:
    return LossSpec("quantile", tau)


SQUARED = LossSpec("squared")
ABS_HALF = LossSpec("abs_half")


@dataclass(frozen=True)
class PenaltySpec:
    """kind in {"none", "l1", "weighted_l2"}; weighted_l2 uses p_j = j^m."""

    kind: str = "none"
    lam: float = 0.0
    m: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "l1", "weighted_l2"):
            raise DomainError(f"unknown penalty {self.kind!r}")
        if self.lam < 0:
            raise DomainError("lambda must be >= 0")
        if self.kind == "weighted_l2" and self.m < 0:
            raise DomainError("m must be >= 0")

    def weights(self, d: int) -> np.ndarray:
        if self.kind == "weighted_l2":
            return np.arange(1, d + 1, dtype=float) ** self.m
        return np.ones(d)

    def value(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        if self.kind == "l1":
            return float(np.abs(theta).sum())
        if self.kind == "weighted_l2":
            return float((self.weights(theta.size) * theta ** 2).sum())
        return 0.0


NO_PENALTY = PenaltySpec("none")


def empirical_criterion(loss: LossSpec, pen: PenaltySpec, data, theta) -> float:
    """(1/n) sum_i loss(y_i - x_i' theta) + lambda * Pen(theta)."""
    X, y = data
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[1] != theta.shape[0]:
        raise ShapeMismatch(f"X {X.shape}, y {y.shape}, theta {theta.shape}")
    res = y - X @ theta
    return float(loss.values(res).mean()) + pen.lam * pen.value(theta)


# ---------------------------------------------------------------------------
# optimality certificates


def subgradient_residual(X, y, theta, tau: float, pen: PenaltySpec,
                         active_tol: float = 1e-7,
                         zero_tol: float = 1e-9) -> float:
    """Set-distance from 0 to the subdifferential of the quantile objective.

    Observations with |residual| <= active_tol contribute a free
    subgradient in [tau-1, tau]; under the l1 penalty, coefficients with
    |theta_j| <= zero_tol contribute a free sign in [-1, 1].  The distance
    is a box-constrained linear least-squares problem.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n, d = X.shape
    res = y - X @ theta
    scale = active_tol * (1.0 + float(np.abs(y).max(initial=0.0)))
    act = np.abs(res) <= scale
    sgn = tau - (res <= 0).astype(float)
    base = -(X[~act].T @ sgn[~act]) / n

    cols = []
    lo, hi = [], []
    if np.any(act):
        cols.append(-X[act].T / n)           # free s_i in [tau-1, tau]
        lo += [tau - 1.0] * int(act.sum())
        hi += [tau] * int(act.sum())
    if pen.kind == "l1" and pen.lam > 0:
        zero = np.abs(theta) <= zero_tol
        base = base + pen.lam * np.sign(theta) * (~zero)
        if np.any(zero):
            cols.append(pen.lam * np.eye(d)[:, zero])
            lo += [-1.0] * int(zero.sum())
            hi += [1.0] * int(zero.sum())
    elif pen.kind == "weighted_l2" and pen.lam > 0:
        base = base + pen.lam * 2.0 * pen.weights(d) * theta

    if not cols:
        return float(np.linalg.norm(base))
    A = np.hstack(cols)
    sol = lsq_linear(A, -base, bounds=(np.array(lo), np.array(hi)),
                     method="bvls" if A.shape[1] <= 200 else "trf")
    return float(np.linalg.norm(A @ sol.x + base))


def gradient_residual_squared(X, y, theta, pen: PenaltySpec) -> float:
    """Gradient norm of the smooth squared-loss objective."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    g = -2.0 * (X.T @ (y - X @ theta)) / n
    if pen.kind == "weighted_l2" and pen.lam > 0:
        g = g + 2.0 * pen.lam * pen.weights(d) * theta
    elif pen.kind == "l1" and pen.lam > 0:
        # distance to -lam * subdifferential of the l1 norm
        zero = np.abs(theta) <= 1e-9
        g = g + pen.lam * np.sign(theta) * (~zero)
        g[zero] = np.maximum(np.abs(g[zero]) - pen.lam, 0.0) * np.sign(g[zero])
    return float(np.linalg.norm(g))


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class Fit:
    theta: np.ndarray
    objective: float
    optimality_residual: float
    iterations: int
    method: str = ""


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 50_000
    rho: float = 1.0
    alpha: float = 1.7       # over-relaxation
    first_sweep: int = 300
    polish: bool = True


def fit_penalized_qr(data, tau: float, pen: PenaltySpec = NO_PENALTY,
                     opts: SolverOptions = SolverOptions()) -> Fit:
    """Penalized quantile regression via consensus ADMM with vertex polish.

    Optimality is certified by the subgradient set-distance; the solver
    keeps sweeping (up to opts.max_iter) until it is <= opts.tol.
    """
    X = np.asarray(data[0], dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(data[1], dtype=float)
    if not (0.0 < tau < 1.0):
        raise DomainError("tau must lie in (0, 1)")
    theta, iters, residual = _solve_single(X, y, "quantile", tau, pen, opts)
    obj = empirical_criterion(quantile_loss(tau), pen, (X, y), theta)
    return Fit(theta=theta, objective=obj, optimality_residual=residual,
               iterations=iters, method="admm+polish" if opts.polish else "admm")


def fit_penalized(data, loss: LossSpec, pen: PenaltySpec = NO_PENALTY,
                  opts: SolverOptions = SolverOptions()) -> Fit:
    """General penalized M-fit on the shared ADMM path.

    The squared-loss branch is the ridge surrogate path; its certificate
    is the plain gradient norm.
    """
    if loss.kind in ("quantile", "abs_half"):
        return fit_penalized_qr(data, loss.effective_tau, pen, opts)
    X = np.asarray(data[0], dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(data[1], dtype=float)
    theta, iters, residual = _solve_single(X, y, "squared", 0.5, pen, opts)
    obj = empirical_criterion(loss, pen, (X, y), theta)
    return Fit(theta=theta, objective=obj, optimality_residual=residual,
               iterations=iters, method="admm")


def _solve_single(X, y, loss_kind, tau, pen, opts):
    Xb = X[None, ...]
    yb = y[None, ...]
    pw = pen.weights(X.shape[1])
    state = None
    iters = 0
    sweep = opts.first_sweep
    best = None
    while iters < opts.max_iter:
        state = _admm.admm_batch(Xb, yb, loss_kind=loss_kind, tau=tau,
                                 pen_kind=pen.kind, lam=pen.lam, pweights=pw,
                                 rho=opts.rho, alpha=opts.alpha, iters=sweep,
                                 state=state)
        iters += sweep
        cand = state.theta[0]
        if loss_kind != "squared" and opts.polish and pen.kind == "none":
            polished, _ = _admm.polish_vertex_batch(
                Xb, yb, state.theta, loss_kind, tau, pen.kind, pen.lam, pw)
            cand = polished[0]
        if loss_kind == "squared":
            residual = gradient_residual_squared(X, y, cand, pen)
        else:
            residual = subgradient_residual(X, y, cand, tau, pen)
        if best is None or residual < best[1]:
            best = (cand.copy(), residual)
        if residual <= opts.tol:
            return cand, iters, residual
        sweep = min(2 * sweep, opts.max_iter - iters) or 1
    cand, residual = best
    if residual > opts.tol:
        raise NonConvergence(
            f"residual {residual:.3e} > tol {opts.tol:.1e} after {iters} sweeps")
    return cand, iters, residual


def fit_ols(data) -> Fit:
    """Exact least squares by QR; residual is the gradient norm."""
    X = np.asarray(data[0], dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(data[1], dtype=float)
    n, d = X.shape
    theta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < d:
        raise SingularDesign(f"design rank {rank} < {d}")
    obj = empirical_criterion(SQUARED, NO_PENALTY, (X, y), theta)
    residual = gradient_residual_squared(X, y, theta, NO_PENALTY)
    return Fit(theta=theta, objective=obj, optimality_residual=residual,
               iterations=1, method="qr")


def fit_sieve_ls(basis: SieveBasis, w, y) -> Fit:
    """Least squares on the first k basis functions (normal equations form)."""
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if w.shape[0] != y.shape[0]:
        raise ShapeMismatch("w and y lengths differ")
    if basis.k > w.shape[0]:
        raise DomainError("k must not exceed the sample size")
    Q = basis.design(w)
    theta, _, rank, _ = np.linalg.lstsq(Q, y, rcond=None)
    if rank < basis.k:
        raise SingularDesign(f"sieve design rank {rank} < {basis.k}")
    obj = float(((y - Q @ theta) ** 2).mean())
    grad = np.linalg.norm(Q.T @ (Q @ theta - y)) / max(np.linalg.norm(Q.T @ y), 1e-300)
    return Fit(theta=theta, objective=obj, optimality_residual=float(grad),
               iterations=1, method="qr")


# ---------------------------------------------------------------------------
# population distances and bias


@dataclass(frozen=True)
class PopulationDesign:
    """Gaussian linear design: covariate second moments and noise variance.

    sigma_x is the d x d second-moment matrix of X; noise_var is the
    variance of the additive noise term (already including any scaling).
    """

    sigma_x: np.ndarray
    noise_var: float
    gaussian: bool = True

    @property
    def d(self) -> int:
        return self.sigma_x.shape[0]


def delta_p(design: PopulationDesign, loss: LossSpec, theta_hat,
            theta_star) -> float:
    """Population criterion distance sqrt(Q(theta) - Q(theta*)).

    Squared loss: the Mahalanobis norm of the displacement under sigma_x.
    Half-absolute loss: via E|N(0, s^2)| = s sqrt(2/pi), so
    delta^2 = 0.5 sqrt(2/pi) (s(theta) - s(theta*)) with
    s(theta)^2 = D' sigma_x D + noise_var.
    """
    D = np.asarray(theta_hat, dtype=float) - np.asarray(theta_star, dtype=float)
    quad = float(D @ design.sigma_x @ D)
    if loss.kind == "squared":
        return math.sqrt(max(quad, 0.0))
    if loss.kind == "abs_half" or (loss.kind == "quantile" and loss.tau == 0.5):
        if not design.gaussian:
            raise UnsupportedDesign("analytic path requires Gaussian errors")
        s_hat = math.sqrt(quad + design.noise_var)
        s_star = math.sqrt(design.noise_var)
        return math.sqrt(0.5 * math.sqrt(2.0 / math.pi) * (s_hat - s_star))
    raise UnsupportedDesign(f"no analytic population formula for {loss.kind}"
                            f" at tau={getattr(loss, 'tau', None)}")


def delta_p_mc(sampler, loss: LossSpec, theta_hat, theta_star,
               draws: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo oracle for delta_p: fresh draws of (X, y) from `sampler`.

    Returns (estimate of sqrt(Q(theta)-Q(theta*)), std error of the
    criterion difference).
    """
    rng = np.random.default_rng(seed)
    X, y = sampler(draws, rng)
    diff = loss.values(y - X @ np.asarray(theta_hat)) \
        - loss.values(y - X @ np.asarray(theta_star))
    mean = float(diff.mean())
    se = float(diff.std(ddof=1) / math.sqrt(draws))
    return math.sqrt(max(mean, 0.0)), se


def bias_term(*, oracle: SieveMomentOracle | None = None, k: int | None = None,
              pen: PenaltySpec | None = None, theta_star=None) -> float:
    """The bias entering the concentration rate.

    Sieve branch (oracle + k): the L2(P) distance between theta* and its
    population projection on the k-term space, i.e. sqrt(B_k).
    Penalized linear branch (pen + theta_star): the closed bound
    lambda * Pen(theta*) on B_k itself (the rate uses its square root).
    """
    if oracle is not None:
        if k is None:
            raise DomainError("sieve bias needs k")
        return oracle.bias(k)
    if pen is None or theta_star is None:
        raise DomainError("need either (oracle, k) or (pen, theta_star)")
    return pen.lam * pen.value(np.asarray(theta_star, dtype=float))
