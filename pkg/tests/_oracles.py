"""Independent reference implementations used only to check the library.

Nothing here may call into lcrank's solver paths: each oracle recomputes
its quantity by a different method (coordinate descent, projected
gradient, dense indicator algebra, finite differences).
"""

from __future__ import annotations

import numpy as np


def cd_quadl1(A, b, alpha, tol=1e-10, max_iter=100_000):
    """Coordinate descent on s'As - 2b's + alpha*||s||_1 (A positive definite)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = b.shape[0]
    s = np.zeros(m)
    for _ in range(max_iter):
        biggest_move = 0.0
        for j in range(m):
            r = b[j] - A[j] @ s + A[j, j] * s[j]
            old = s[j]
            s[j] = np.sign(r) * max(abs(r) - 0.5 * alpha, 0.0) / A[j, j]
            biggest_move = max(biggest_move, abs(s[j] - old))
        if biggest_move < tol:
            break
    return s


def quadl1_objective(A, b, c, alpha, s):
    s = np.asarray(s, dtype=float)
    return float(s @ A @ s - 2.0 * np.dot(b, s) + c + alpha * np.abs(s).sum())


def projected_gradient_dictionary(X, S, C, max_iter=200_000, tol=1e-15):
    """Projected gradient descent for min ||X - DS||_F^2, ||d_l||^2 <= C."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    G = S @ S.T
    lipschitz = 2.0 * np.linalg.eigvalsh(G).max()
    step = 1.0 / lipschitz
    D = np.zeros((X.shape[0], S.shape[0]))
    prev = np.inf
    for _ in range(max_iter):
        grad = 2.0 * (D @ S - X) @ S.T
        D = D - step * grad
        norms2 = np.einsum("ij,ij->j", D, D)
        over = norms2 > C
        if over.any():
            D[:, over] *= np.sqrt(C / norms2[over])
        residual = X - D @ S
        obj = float(np.sum(residual * residual))
        if prev - obj < tol * max(1.0, obj):
            break
        prev = obj
    return D


def reconstruction_error(X, D, S):
    residual = np.asarray(X) - np.asarray(D) @ np.asarray(S)
    return float(np.sum(residual * residual))


def dense_selector(neighbor_row, n):
    """The (n, k) 0/1 indicator whose column j picks the j-th neighbor."""
    k = len(neighbor_row)
    H = np.zeros((n, k))
    for j, p in enumerate(neighbor_row):
        H[p, j] = 1.0
    return H


def central_difference_gradient(fn, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for j in range(x.shape[0]):
        up = x.copy()
        down = x.copy()
        up[j] += step
        down[j] -= step
        grad[j] = (fn(up) - fn(down)) / (2.0 * step)
    return grad


def ranking_objective(M, lam, y, gamma, delta, f):
    """h(f) = gamma * f'Mf + delta * sum_i lam_i (f_i - y)^2, by plain loops."""
    M = np.asarray(M, dtype=float)
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    quad = 0.0
    for a in range(n):
        for b in range(n):
            quad += f[a] * M[a, b] * f[b]
    anchor = sum(lam[i] * (f[i] - y) ** 2 for i in range(n))
    return gamma * quad + delta * anchor


def random_psd(rng, n, scale=1.0):
    R = rng.standard_normal((n, n))
    return scale * (R @ R.T) / n
