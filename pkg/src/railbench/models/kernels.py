"""Kernel ridge regression and epsilon-SVR."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from sklearn.base import BaseEstimator, RegressorMixin

from ._base import PerOutputRegressor, check_predict_input, check_xy, format_output

LAMBDA_FLOOR = 1e-10


def kernel_matrix(A, B, kernel="rbf", gamma=1.0):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        if gamma <= 0:
            raise ValueError("gamma must be > 0")
        d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-gamma * np.maximum(d2, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


def _is_singular(c_and_lower) -> bool:
    diag = np.abs(np.diag(c_and_lower[0]))
    return diag.min() ** 2 <= np.finfo(float).eps * len(diag) * diag.max() ** 2


class KernelRidgeRegressor(RegressorMixin, BaseEstimator):
    """Solves ``(K + lam I) alpha = y`` by Cholesky factorization.

    When the system is numerically singular the ridge is raised to
    ``LAMBDA_FLOOR``; the value actually used is ``lambda_used_``. No
    intercept is fitted.
    """

    def __init__(self, kernel="rbf", lam=1e-2, gamma=1.0):
        self.kernel = kernel
        self.lam = lam
        self.gamma = gamma

    def fit(self, X, y):
        X, Y, was_1d = check_xy(X, y)
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        K = kernel_matrix(X, X, self.kernel, self.gamma)
        lam = float(self.lam)
        factor = None
        try:
            factor = cho_factor(K + lam * np.eye(len(X)), lower=True)
            if lam < LAMBDA_FLOOR and _is_singular(factor):
                factor = None
        except LinAlgError:
            factor = None
        if factor is None:
            lam = max(lam, LAMBDA_FLOOR)
            factor = cho_factor(K + lam * np.eye(len(X)), lower=True)
        self.lambda_used_ = lam
        # C order keeps predictions bit-identical after a JSON round trip
        self.dual_coef_ = np.ascontiguousarray(cho_solve(factor, Y))
        self.X_fit_ = np.ascontiguousarray(X)
        self.n_features_in_ = X.shape[1]
        self._y_1d = was_1d
        return self

    def predict(self, X):
        X = check_predict_input(self, X)
        pred = kernel_matrix(X, self.X_fit_, self.kernel, self.gamma) @ self.dual_coef_
        return format_output(pred, self._y_1d)


_TAU = 1e-12


def smo_svr(K, y, C, epsilon, tol=1e-3, max_iter=100000):
    """Epsilon-SVR dual by SMO with second-order working-set selection.

    Works on the 2n-variable form ``min 1/2 b'Qb + p'b`` subject to
    ``0 <= b <= C`` and ``z'b = 0`` where ``b = [alpha; alpha*]``,
    ``z = [1..1, -1..-1]``, ``Q_ij = z_i z_j K_ij`` and
    ``p = [eps - y; eps + y]``.

    Returns ``(alpha, alpha_star, bias, converged, n_iter)``. The regression
    function is ``sum_i (alpha_i - alpha*_i) K(x_i, x) + bias``.
    """
    n = len(y)
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    idx = np.concatenate([np.arange(n), np.arange(n)])
    Kd = np.diag(K)
    beta = np.zeros(2 * n)
    G = p.copy()

    def q_col(i):
        return z * z[i] * K[idx, idx[i]]

    converged = False
    it = 0
    for it in range(max_iter):
        upper = beta >= C
        lower = beta <= 0
        # I_up: can move "up" along z
        in_up = np.where(z > 0, ~upper, ~lower)
        in_low = np.where(z > 0, ~lower, ~upper)
        score = -z * G
        if not in_up.any() or not in_low.any():
            converged = True
            break
        up_scores = np.where(in_up, score, -np.inf)
        i = int(np.argmax(up_scores))
        g_max = up_scores[i]
        low_scores = np.where(in_low, score, np.inf)
        g_min = low_scores.min()
        if g_max - g_min < tol:
            converged = True
            break
        Qi = q_col(i)
        b = g_max - score
        quad = Kd[idx[i]] + Kd[idx] - 2.0 * z[i] * z * Qi
        quad = np.where(quad > 0, quad, _TAU)
        cand = np.where(in_low & (b > 0), -(b * b) / quad, np.inf)
        j = int(np.argmin(cand))
        Qj = q_col(j)

        old_i, old_j = beta[i], beta[j]
        if z[i] != z[j]:
            qc = Kd[idx[i]] + Kd[idx[j]] + 2.0 * Qi[j]
            qc = qc if qc > 0 else _TAU
            delta = (-G[i] - G[j]) / qc
            diff = beta[i] - beta[j]
            beta[i] += delta
            beta[j] += delta
            if diff > 0:
                if beta[j] < 0:
                    beta[j] = 0.0
                    beta[i] = diff
            elif beta[i] < 0:
                beta[i] = 0.0
                beta[j] = -diff
            if diff > 0:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = C - diff
            elif beta[j] > C:
                beta[j] = C
                beta[i] = C + diff
        else:
            qc = Kd[idx[i]] + Kd[idx[j]] - 2.0 * Qi[j]
            qc = qc if qc > 0 else _TAU
            delta = (G[i] - G[j]) / qc
            total = beta[i] + beta[j]
            beta[i] -= delta
            beta[j] += delta
            if total > C:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = total - C
            elif beta[j] < 0:
                beta[j] = 0.0
                beta[i] = total
            if total > C:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = total - C
            elif beta[i] < 0:
                beta[i] = 0.0
                beta[j] = total
        G += Qi * (beta[i] - old_i) + Qj * (beta[j] - old_j)
    else:
        it = max_iter

    # bias from free variables, else midpoint of the feasible interval
    yG = z * G
    free = (beta > 0) & (beta < C)
    if free.any():
        rho = yG[free].mean()
    else:
        at_upper = beta >= C
        ub_mask = np.where(at_upper, z < 0, z > 0)
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[~ub_mask].max() if (~ub_mask).any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    alpha, alpha_star = beta[:n].copy(), beta[n:].copy()
    # alpha_i * alpha*_i = 0 at the optimum; cancel any common part left by the solver
    d = alpha - alpha_star
    return np.maximum(d, 0.0), np.maximum(-d, 0.0), float(-rho), converged, it


def svr_dual_objective(K, y, coef, epsilon):
    """Dual objective for coefficients ``coef = alpha - alpha*`` (maximized)."""
    return float(-0.5 * coef @ K @ coef - epsilon * np.abs(coef).sum() + y @ coef)


class SupportVectorRegressor(PerOutputRegressor):
    """Epsilon-insensitive support vector regression trained by SMO.

    Parameters
    ----------
    c : float
        Box constraint on each dual variable.
    epsilon : float
        Half-width of the insensitive tube.
    kernel : {"rbf", "linear"}
    gamma : float
    tol : float
        Stop when the maximal KKT violation drops below ``tol``.
    max_passes : int
        Iteration budget in units of the training size; when exhausted the
        model is kept and ``converged_`` is False.
    """

    def __init__(self, c=1.0, epsilon=0.1, kernel="rbf", gamma=1.0, tol=1e-3, max_passes=200):
        self.c = c
        self.epsilon = epsilon
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes

    def _fit_single(self, X, y):
        if self.c <= 0 or self.epsilon < 0 or self.tol <= 0:
            raise ValueError("need c > 0, epsilon >= 0, tol > 0")
        K = kernel_matrix(X, X, self.kernel, self.gamma)
        a, a_star, b, converged, n_iter = smo_svr(
            K, y, self.c, self.epsilon, self.tol, max_iter=max(1, self.max_passes * len(y)))
        if not converged:
            warnings.warn(f"SMO did not converge in {n_iter} iterations", RuntimeWarning, stacklevel=3)
        self.alpha_, self.alpha_star_, self.intercept_ = a, a_star, b
        self.converged_, self.n_iter_ = converged, n_iter
        coef = a - a_star
        sv = coef != 0
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = coef[sv]
        self.dual_objective_ = svr_dual_objective(K, y, coef, self.epsilon)

    def _predict_single(self, X):
        if len(self.support_) == 0:
            return np.full(len(X), self.intercept_)
        return kernel_matrix(X, self.support_vectors_, self.kernel, self.gamma) @ self.dual_coef_ + self.intercept_
