"""Ellipsoids E(q,S) = {x : (x-q)'S(x-q) <= 1} and polytopes
H(p,H) = {x : H'(x-p) <= 1 componentwise}, with the exact geometric
primitives the synthesis and verification layers need: membership, support
functions, pairwise disjointness certificates and sublevel-set containment.

Extremal values of quadratics over ellipsoids are computed exactly through
the trust-region subproblem (secular equation), so certificates never depend
on sampling.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

_SYM_TOL = 1e-12


class Ellipsoid:
    def __init__(self, center, shape):
        self.center = np.asarray(center, dtype=float).reshape(-1)
        self.shape = np.asarray(shape, dtype=float)
        n = self.center.shape[0]
        if self.shape.shape != (n, n):
            raise ValueError("shape matrix must be n x n")
        if np.max(np.abs(self.shape - self.shape.T)) > _SYM_TOL * max(1.0, np.max(np.abs(self.shape))):
            raise ValueError("shape matrix must be symmetric")
        self.shape = 0.5 * (self.shape + self.shape.T)
        eigs = np.linalg.eigvalsh(self.shape)
        if eigs[0] < -1e-10:
            raise ValueError(f"shape matrix must be PSD, min eigenvalue {eigs[0]:.3e}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def value(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.center
        return float(d @ self.shape @ d)

    def contains(self, x, tol=0.0) -> bool:
        return self.value(x) <= 1.0 + tol

    def boundary_distance(self, x) -> float:
        """Positive inside, negative outside, zero on the boundary (in the
        quadratic-form scale, not Euclidean)."""
        return 1.0 - self.value(x)

    def is_degenerate(self, tol=1e-9) -> bool:
        return bool(np.linalg.eigvalsh(self.shape)[0] <= tol)

    def support(self, h) -> float:
        """max_{x in E} h'x; infinite for degenerate directions."""
        h = np.asarray(h, dtype=float)
        sol, ok = _solve_in_range(self.shape, h)
        if not ok:
            return np.inf
        return float(h @ self.center) + float(np.sqrt(max(h @ sol, 0.0)))

    def sample(self, rng, count=1):
        """Uniform samples from the (nondegenerate) ellipsoid volume."""
        n = self.dim
        L = np.linalg.cholesky(self.shape)
        u = rng.standard_normal((count, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = rng.random(count) ** (1.0 / n)
        y = u * r[:, None]
        x = self.center + np.linalg.solve(L.T, y.T).T
        return x if count > 1 else x[0]

    def sample_boundary(self, rng, count=1):
        n = self.dim
        L = np.linalg.cholesky(self.shape)
        u = rng.standard_normal((count, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        x = self.center + np.linalg.solve(L.T, u.T).T
        return x if count > 1 else x[0]

    def scaled(self, level: float) -> "Ellipsoid":
        """The sublevel set {x : (x-q)'S(x-q) <= level} as an ellipsoid."""
        if level <= 0:
            raise ValueError("level must be positive")
        return Ellipsoid(self.center, self.shape / level)

    def __repr__(self):
        return f"Ellipsoid(center={self.center.tolist()})"


class Polytope:
    def __init__(self, anchor, normals):
        self.anchor = np.asarray(anchor, dtype=float).reshape(-1)
        self.normals = np.asarray(normals, dtype=float)
        if self.normals.ndim != 2 or self.normals.shape[0] != self.anchor.shape[0]:
            raise ValueError("normals must be an n x k matrix of column normals")
        if self.normals.shape[1] < 1:
            raise ValueError("a polytope needs at least one facet")
        norms = np.linalg.norm(self.normals, axis=0)
        if np.any(norms == 0.0):
            raise ValueError("zero normal column")

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]

    @property
    def k(self) -> int:
        return self.normals.shape[1]

    def columns(self):
        return [self.normals[:, j] for j in range(self.k)]

    def margin(self, x) -> float:
        """max_j h_j'(x - p) - 1; negative strictly inside."""
        d = np.asarray(x, dtype=float) - self.anchor
        return float(np.max(self.normals.T @ d) - 1.0)

    def contains(self, x, tol=0.0) -> bool:
        return self.margin(x) <= tol

    def boundary_distance(self, x) -> float:
        return -self.margin(x)

    def is_bounded(self) -> bool:
        """Bounded iff the facet normals positively span R^n."""
        from scipy.optimize import linprog

        n = self.dim
        for i in range(n):
            for sign in (1.0, -1.0):
                target = np.zeros(n)
                target[i] = sign
                res = linprog(
                    np.zeros(self.k),
                    A_eq=self.normals,
                    b_eq=target,
                    bounds=[(0, None)] * self.k,
                    method="highs",
                )
                if not res.success:
                    return False
        return True

    def __repr__(self):
        return f"Polytope(anchor={self.anchor.tolist()}, k={self.k})"


def halfspace(normal, offset) -> Polytope:
    """The halfspace {x : normal.x >= offset} as a one-column polytope
    (useful as an avoid region, e.g. the outside of a state box)."""
    normal = np.asarray(normal, dtype=float).reshape(-1)
    nn = float(normal @ normal)
    if nn == 0.0:
        raise ValueError("zero normal")
    # {x : -normal.(x - p) <= 1} with normal.p = offset + 1
    p = normal * (offset + 1.0) / nn
    return Polytope(p, (-normal).reshape(-1, 1))


def bounding_box(e: Ellipsoid, margin=0.0) -> Polytope:
    """Axis-aligned polytopic over-approximation of a (nondegenerate)
    ellipsoid, the documented fallback when an ellipsoidal obstacle touches
    a target region."""
    n = e.dim
    Sinv = np.linalg.inv(e.shape)
    half = np.sqrt(np.maximum(np.diag(Sinv), 0.0)) + margin
    cols = []
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = 1.0
        cols.append(ei / half[i])
        cols.append(-ei / half[i])
    return Polytope(e.center, np.array(cols).T)


def box_polytope(lo, hi) -> Polytope:
    """The axis-aligned box [lo, hi] as a polytope."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    if np.any(half <= 0):
        raise ValueError("empty box")
    n = lo.shape[0]
    cols = []
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = 1.0
        cols.append(ei / half[i])
        cols.append(-ei / half[i])
    return Polytope(center, np.array(cols).T)


def _solve_in_range(S, h):
    """Solve S y = h; returns (y, ok) with ok False when h leaves range(S)."""
    y, res, rank, _ = np.linalg.lstsq(S, h, rcond=None)
    if np.linalg.norm(S @ y - h) > 1e-8 * max(1.0, np.linalg.norm(h)):
        return y, False
    return y, True


def min_quad_over_ball(M, b, c=0.0):
    """Exact minimum of y'My + 2b'y + c over the unit ball (trust region
    subproblem via the secular equation, hard case included)."""
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    lam, Q = np.linalg.eigh(M)
    beta = Q.T @ (-b)

    candidates = []
    if lam[0] > 1e-13:
        y0 = Q @ (beta / lam)
        if y0 @ y0 <= 1.0 + 1e-12:
            candidates.append((float(y0 @ M @ y0 + 2 * b @ y0 + c), y0))

    def norm2(mu):
        d = lam + mu
        return float(np.sum((beta / d) ** 2))

    lo = max(0.0, -lam[0])
    eps = 1e-14 + 1e-9 * max(1.0, abs(lam[0]))
    if norm2(lo + eps) >= 1.0:
        hi = lo + eps
        while norm2(hi) > 1.0:
            hi = 2 * hi + 1.0
        mu = brentq(lambda m: norm2(m) - 1.0, lo + eps, hi, xtol=1e-14, rtol=1e-14)
        y = Q @ (beta / (lam + mu))
    else:
        # hard case: pseudo-solution plus a minimal-eigenvector component
        d = lam + lo
        coef = np.where(d > eps, beta / np.where(d > eps, d, 1.0), 0.0)
        y_p = Q @ coef
        residual = 1.0 - float(y_p @ y_p)
        y = y_p
        if residual > 0:
            y = y_p + np.sqrt(residual) * Q[:, 0]
    candidates.append((float(y @ M @ y + 2 * b @ y + c), y))
    return min(candidates, key=lambda t: t[0])


def extremal_value_on_ellipsoid(e: Ellipsoid, S2, q2, maximize=False):
    """Exact extremum of (x-q2)'S2(x-q2) over x in e (nondegenerate)."""
    L = np.linalg.cholesky(e.shape)
    Linv = np.linalg.inv(L)
    # x = q1 + Linv.T y with |y| <= 1
    A = Linv @ S2 @ Linv.T
    A = 0.5 * (A + A.T)
    d = e.center - np.asarray(q2, dtype=float)
    b = Linv @ (S2 @ d)
    c = float(d @ S2 @ d)
    if maximize:
        val, y = min_quad_over_ball(-A, -b, -c)
        val = -val
    else:
        val, y = min_quad_over_ball(A, b, c)
    x = e.center + Linv.T @ y
    return val, x


def ellipsoids_disjoint(e1: Ellipsoid, e2: Ellipsoid, margin=0.0) -> bool:
    """Exact disjointness of two ellipsoids (e1 nondegenerate): the minimum
    of e2's quadratic form over e1 exceeds 1."""
    val, _ = extremal_value_on_ellipsoid(e1, e2.shape, e2.center)
    return val > 1.0 + margin


def ellipsoid_polytope_disjoint(e: Ellipsoid, h: Polytope, margin=0.0) -> bool:
    """Separating-column certificate: true iff some facet column h satisfies
    h'(q-p) > 1 together with (1 + h'(p-q))^2 S > hh' (equivalently, the
    ellipsoid's support along h stays beyond the facet).  False only means
    "not certified disjoint"."""
    q, p = e.center, h.anchor
    for col in h.columns():
        gap = float(col @ (q - p)) - 1.0
        if gap <= margin:
            continue
        sol, ok = _solve_in_range(e.shape, col)
        if not ok:
            continue
        if float(col @ sol) < (gap - margin) ** 2:
            return True
    return False


def region_disjoint(a, b, margin=0.0) -> bool:
    """Certified disjointness for any ellipsoid/polytope pair (sufficient)."""
    if isinstance(a, Ellipsoid) and isinstance(b, Ellipsoid):
        if not a.is_degenerate():
            return ellipsoids_disjoint(a, b, margin)
        if not b.is_degenerate():
            return ellipsoids_disjoint(b, a, margin)
        return False
    if isinstance(a, Ellipsoid) and isinstance(b, Polytope):
        return ellipsoid_polytope_disjoint(a, b, margin)
    if isinstance(a, Polytope) and isinstance(b, Ellipsoid):
        return ellipsoid_polytope_disjoint(b, a, margin)
    return _polytopes_disjoint(a, b, margin)


def _polytopes_disjoint(a: Polytope, b: Polytope, margin=0.0) -> bool:
    """LP feasibility of the intersection (exact for polytopes)."""
    from scipy.optimize import linprog

    n = a.dim
    A_ub = np.vstack([a.normals.T, b.normals.T])
    b_ub = np.concatenate([1.0 + a.normals.T @ a.anchor, 1.0 + b.normals.T @ b.anchor])
    res = linprog(np.zeros(n), A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * n, method="highs")
    return not res.success


def ellipsoid_in_ellipsoid(inner: Ellipsoid, outer: Ellipsoid, margin=0.0) -> bool:
    val, _ = extremal_value_on_ellipsoid(inner, outer.shape, outer.center, maximize=True)
    return val <= 1.0 - margin


def ellipsoid_in_polytope(inner: Ellipsoid, outer: Polytope, margin=0.0) -> bool:
    p = outer.anchor
    for col in outer.columns():
        if inner.support(col) > float(col @ p) + 1.0 - margin:
            return False
    return True


def region_contains_ellipsoid(region, inner: Ellipsoid, margin=0.0) -> bool:
    if isinstance(region, Ellipsoid):
        return ellipsoid_in_ellipsoid(inner, region, margin)
    return ellipsoid_in_polytope(inner, region, margin)


def region_contains_point(region, x, tol=0.0) -> bool:
    return region.contains(x, tol)
