"""Exact stepping of y' = A y + B f(t) for f piecewise linear on a uniform grid."""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm


class LinearPropagator:
    def __init__(self, A, B, h: float):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
        n, k = A.shape[0], B.shape[1]
        # augmented generator: forcing value g and slope s ride along as states
        M = np.zeros((n + 2 * k, n + 2 * k))
        M[:n, :n] = A
        M[:n, n:n + k] = B
        M[n:n + k, n + k:] = np.eye(k)
        E = expm(h * M)
        self.h = h
        self.phi = E[:n, :n]
        self.gam0 = E[:n, n:n + k]
        self.gam1 = E[:n, n + k:]

    def run(self, y0, forcing) -> np.ndarray:
        """forcing has shape (steps + 1, k); returns states of shape (steps + 1, n)."""
        f = np.asarray(forcing)
        steps = f.shape[0] - 1
        dtype = np.result_type(np.asarray(y0), f, float)
        y = np.empty((steps + 1, self.phi.shape[0]), dtype=dtype)
        y[0] = y0
        slope = np.diff(f, axis=0) / self.h
        drive = f[:-1] @ self.gam0.T + slope @ self.gam1.T
        phi = self.phi
        for i in range(steps):
            y[i + 1] = phi @ y[i] + drive[i]
        return y
