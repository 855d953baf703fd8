"""Affine control systems xdot = A x + B u + g with a polytopic input space."""

from __future__ import annotations

import numpy as np

from ctxctl.clf.geometry import Polytope


class AffineDynamics:
    def __init__(self, A, B, g, input_polytope: Polytope, check_bounded=True):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.g = np.asarray(g, dtype=float).reshape(-1)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError("A must be square")
        if self.B.shape[0] != n:
            raise ValueError("B must have as many rows as A")
        if self.g.shape[0] != n:
            raise ValueError("g must have length n")
        if input_polytope.dim != self.B.shape[1]:
            raise ValueError("input polytope dimension must match B's columns")
        if check_bounded and not input_polytope.is_bounded():
            raise ValueError("input polytope must be bounded")
        self.input_polytope = input_polytope

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def f(self, x, u):
        return self.A @ np.asarray(x, dtype=float) + self.B @ np.asarray(u, dtype=float) + self.g

    def closed_loop(self, K, x_c, u0):
        """Right-hand side under the surrogate feedback u = K(x-x_c) + u0."""
        K = np.asarray(K, dtype=float)
        x_c = np.asarray(x_c, dtype=float)
        u0 = np.asarray(u0, dtype=float)
        A_cl = self.A + self.B @ K
        offset = self.g + self.B @ (u0 - K @ x_c)

        def rhs(t, x):
            return A_cl @ x + offset

        return rhs, A_cl, offset
