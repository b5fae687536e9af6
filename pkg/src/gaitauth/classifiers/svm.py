"""Support vector machines trained by sequential minimal optimization.

Solves the standard soft-margin dual

    min_a  0.5 a'Qa - sum(a)   s.t.  0 <= a_i <= C,  sum(a_i y_i) = 0,

with Q[i,j] = y_i y_j K(x_i, x_j), picking the maximal-violating pair each
iteration and solving the two-variable subproblem analytically.  The decision
value is f(x) = sum_i a_i y_i K(x_i, x) - rho; scores squash the margin-
normalized decision value through a logistic.
"""

from __future__ import annotations

import numpy as np


def linear_kernel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b.T


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(a ** 2, axis=1)[:, None]
        + np.sum(b ** 2, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def resolve_gamma(x: np.ndarray, gamma) -> float:
    """'scale' -> 1 / (n_features * mean per-feature variance)."""
    if gamma == "scale":
        spread = float(x.var(axis=0).mean())
        if spread <= 0.0:
            return 1.0
        return 1.0 / (x.shape[1] * spread)
    return float(gamma)


def smo_solve(kernel_matrix: np.ndarray, y: np.ndarray, c: float,
              tol: float = 1e-3, max_iter: int = None,
              record_objective: bool = False):
    """Run SMO to convergence; returns (alpha, rho, n_iterations, trace).

    With record_objective=True, `trace` holds the dual objective
    sum(a) - 0.5 a'Qa after each update; it is non-decreasing because every
    pairwise subproblem is solved exactly.
    """
    n = len(y)
    if max_iter is None:
        max_iter = max(100000, 100 * n)
    q = kernel_matrix * np.outer(y, y)
    qd = np.diag(q).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)  # G = Q a - e
    trace = []
    tau = 1e-12

    pos = y > 0
    iteration = 0
    while iteration < max_iter:
        # I_up: alpha can grow along +y; I_low: alpha can shrink along +y.
        up = np.where(pos, alpha < c, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < c)
        minus_yg = -y * grad
        if not up.any() or not low.any():
            break
        up_vals = np.where(up, minus_yg, -np.inf)
        low_vals = np.where(low, minus_yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        if up_vals[i] - low_vals[j] < tol:
            break

        old_ai, old_aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = qd[i] + qd[j] + 2.0 * q[i, j]
            if quad <= 0:
                quad = tau
            delta = (-grad[i] - grad[j]) / quad
            diff = old_ai - old_aj
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            else:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = c + diff
        else:
            quad = qd[i] + qd[j] - 2.0 * q[i, j]
            if quad <= 0:
                quad = tau
            delta = (grad[i] - grad[j]) / quad
            total = old_ai + old_aj
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        grad += q[:, i] * (alpha[i] - old_ai) + q[:, j] * (alpha[j] - old_aj)
        iteration += 1
        if record_objective:
            trace.append(float(alpha.sum() - 0.5 * alpha @ (q @ alpha)))

    rho = _calculate_rho(alpha, grad, y, c)
    return alpha, rho, iteration, np.asarray(trace)


def _calculate_rho(alpha, grad, y, c):
    """Offset so that f(x) = sum a_i y_i K(x_i, x) - rho."""
    yg = y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return float(yg[free].mean())
    upper = np.inf
    lower = -np.inf
    at_top = alpha >= c
    at_bottom = alpha <= 0
    for t in range(len(y)):
        if at_top[t]:
            if y[t] < 0:
                upper = min(upper, yg[t])
            else:
                lower = max(lower, yg[t])
        elif at_bottom[t]:
            if y[t] > 0:
                upper = min(upper, yg[t])
            else:
                lower = max(lower, yg[t])
    if not np.isfinite(upper):
        upper = 0.0
    if not np.isfinite(lower):
        lower = 0.0
    return float((upper + lower) / 2.0)


class SvmState:
    """Fitted SVM: either an explicit (w, b) for the linear kernel or the
    support-vector expansion for the RBF kernel."""

    def __init__(self, kind, weight=None, support=None, coef=None, rho=0.0,
                 gamma=None, margin_scale=1.0, n_iterations=0, trace=None):
        self.kind = kind  # "linear" | "rbf"
        self.weight = weight
        self.support = support
        self.coef = coef
        self.rho = rho
        self.gamma = gamma
        self.margin_scale = margin_scale
        self.n_iterations = n_iterations
        self.trace = trace

    def decision_values(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return x @ self.weight - self.rho
        return rbf_kernel(x, self.support, self.gamma) @ self.coef - self.rho

    def scores(self, x: np.ndarray) -> np.ndarray:
        margin = self.decision_values(x) / self.margin_scale
        return 1.0 / (1.0 + np.exp(-np.clip(margin, -500, 500)))


def fit_svm(x: np.ndarray, y01: np.ndarray, kind: str, c: float = 1.0,
            gamma="scale", tol: float = 1e-3, max_iter: int = None) -> SvmState:
    """Train on rows `x` with 0/1 labels (1 = genuine)."""
    y = np.where(y01 > 0, 1.0, -1.0)
    if kind == "rbf":
        gamma_value = resolve_gamma(x, gamma)
        kernel = rbf_kernel(x, x, gamma_value)
    else:
        gamma_value = None
        kernel = linear_kernel(x, x)
    alpha, rho, n_iter, trace = smo_solve(kernel, y, c, tol=tol, max_iter=max_iter)

    coef_full = alpha * y
    norm_sq = float(coef_full @ kernel @ coef_full)
    margin_scale = np.sqrt(norm_sq) if norm_sq > 1e-12 else 1.0

    if kind == "linear":
        weight = x.T @ coef_full
        return SvmState("linear", weight=weight, rho=rho,
                        margin_scale=margin_scale, n_iterations=n_iter,
                        trace=trace)
    keep = alpha > 1e-12
    return SvmState("rbf", support=x[keep], coef=coef_full[keep], rho=rho,
                    gamma=gamma_value, margin_scale=margin_scale,
                    n_iterations=n_iter, trace=trace)
