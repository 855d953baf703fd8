"""The three-stage quadratic CLF synthesis for a context-dependent
reach-while-avoid problem over affine dynamics:

  (A) find a stationary center x_c inside every reach region and strictly
      outside every avoid polytope,
  (B) grow the largest certified-safe ellipsoid around x_c (S-procedure
      against avoid ellipsoids, separating facet columns against avoid
      polytopes),
  (C) extract the quadratic certificate and the affine surrogate feedback
      u(x) = K(x - x_c) + u0 whose basin sits inside the safe ellipsoid,
      decays at the requested rate and respects the input polytope.

The avoid-polytope side conditions are disjunctive (pick a facet); this
module enumerates the facet choices and solves one convex problem per
branch, since nothing in the formulation says how to pick the facet.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from ctxctl.clf.dynamics import AffineDynamics
from ctxctl.clf.geometry import (
    Ellipsoid,
    Polytope,
    extremal_value_on_ellipsoid,
    region_disjoint,
)
from ctxctl.clf.sdp import Infeasible, SdpProblem, sdp_solve


class Assumption3Violated(Exception):
    """An ellipsoidal avoid region meets a reach region; polytopic
    over-approximation (geometry.bounding_box) is the documented way out."""


@dataclass(frozen=True)
class ContextRWA:
    """Context kappa (observation propositions), reach R and avoid A
    (state propositions); flavor distinguishes always-avoided obstacles from
    eventually-always-avoided ones."""

    context: frozenset
    reach: frozenset
    avoid: frozenset
    flavor: str = "always"

    def __post_init__(self):
        if self.reach & self.avoid:
            raise ValueError("reach and avoid proposition sets must be disjoint")
        if self.flavor not in ("always", "eventually-always"):
            raise ValueError(f"unknown avoid flavor {self.flavor!r}")

    @staticmethod
    def make(context, reach, avoid, flavor="always"):
        return ContextRWA(frozenset(context), frozenset(reach), frozenset(avoid), flavor)


@dataclass(frozen=True)
class QuadraticCLF:
    """Certificate w(x) = (x-x_c)' P (x-x_c) with basin {w <= 1} and inner
    level {w <= c} inside the reach region, plus the surrogate feedback."""

    P: np.ndarray
    x_c: np.ndarray
    c: float
    C: float
    K: np.ndarray
    u0: np.ndarray
    rho: float
    crwa: ContextRWA = field(default=None)

    def __post_init__(self):
        if not 0 < self.c < self.C:
            raise ValueError("need 0 < c < C")

    @property
    def basin(self) -> Ellipsoid:
        return Ellipsoid(self.x_c, self.P / self.C)

    @property
    def inner(self) -> Ellipsoid:
        return Ellipsoid(self.x_c, self.P / self.c)

    def value(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.x_c
        return float(d @ self.P @ d)

    def feedback(self, x) -> np.ndarray:
        return self.K @ (np.asarray(x, dtype=float) - self.x_c) + self.u0


def _split_regions(regions):
    ells = [r for r in regions if isinstance(r, Ellipsoid)]
    polys = [r for r in regions if isinstance(r, Polytope)]
    return ells, polys


def check_assumption_targets_clear(reach_sets, avoid_sets) -> None:
    """Every ellipsoidal avoid region must be certified disjoint from every
    reach region."""
    for av in avoid_sets:
        if not isinstance(av, Ellipsoid):
            continue
        for re_ in reach_sets:
            if not region_disjoint(av, re_) and not region_disjoint(re_, av):
                raise Assumption3Violated(
                    f"avoid ellipsoid at {av.center.tolist()} meets a reach region"
                )


def find_center(dyn: AffineDynamics, reach_sets, avoid_sets, eps_feas=1e-6):
    """A stationary (x_c, u_c): strictly inside every reach region, strictly
    outside every avoid polytope, with A x_c + B u_c + g = 0 and u_c in U.

    The outside-the-polytope condition is one strict facet inequality per
    avoid polytope; facet choices are enumerated and the first feasible
    convex branch wins.
    """
    check_assumption_targets_clear(reach_sets, avoid_sets)
    reach_e, reach_p = _split_regions(reach_sets)
    _, avoid_p = _split_regions(avoid_sets)

    n, m = dyn.n, dyn.m
    # stationary pairs form an affine subspace [A B] w = -g
    AB = np.hstack([dyn.A, dyn.B])
    w0, residual, rank, _ = np.linalg.lstsq(AB, -dyn.g, rcond=None)
    if np.linalg.norm(AB @ w0 + dyn.g) > 1e-9 * max(1.0, np.linalg.norm(dyn.g)):
        raise Infeasible("no stationary state/input pair exists", family="equilibrium")
    N = null_space(AB)
    k = N.shape[1]

    # heuristic branch order: facets facing the reach centroid first, so the
    # first convex branch is almost always the feasible one
    if reach_e or reach_p:
        anchors = [e.center for e in reach_e] + [p.anchor for p in reach_p]
        centroid = np.mean(np.stack(anchors), axis=0)
    else:
        centroid = np.zeros(n)
    branch_lists = []
    for poly in avoid_p:
        scored = sorted(
            range(poly.k),
            key=lambda j: -float(poly.normals[:, j] @ (centroid - poly.anchor)),
        )
        branch_lists.append([(poly, j) for j in scored])

    last_err = None
    for branch in itertools.product(*branch_lists):
        prob = SdpProblem()
        theta = [prob.scalar(f"theta{i}") for i in range(k)]

        def affine_1x1(row_w, const):
            """Block for const + row_w . w > 0 with w = w0 + N theta."""
            base = const + float(row_w @ w0)
            terms = {theta[i]: np.array([[float(row_w @ N[:, i])]]) for i in range(k)}
            prob.add_block(np.array([[base]]), terms, label="lin")

        sel_x = np.hstack([np.eye(n), np.zeros((n, m))])
        sel_u = np.hstack([np.zeros((m, n)), np.eye(m)])

        for e in reach_e:
            Sinv = np.linalg.inv(e.shape)
            F0 = np.zeros((n + 1, n + 1))
            F0[0, 0] = 1.0
            F0[1:, 1:] = Sinv
            d0 = sel_x @ w0 - e.center
            F0[0, 1:] = d0
            F0[1:, 0] = d0
            terms = {}
            for i in range(k):
                Fk = np.zeros((n + 1, n + 1))
                di = sel_x @ N[:, i]
                Fk[0, 1:] = di
                Fk[1:, 0] = di
                terms[theta[i]] = Fk
            prob.add_block(F0, terms, label="reach-ellipsoid")
        for poly in reach_p:
            for col in poly.columns():
                affine_1x1(-(col @ sel_x), 1.0 + float(col @ poly.anchor))
        for (poly, j) in branch:
            col = poly.normals[:, j]
            affine_1x1(col @ sel_x, -1.0 - float(col @ poly.anchor))
        U = dyn.input_polytope
        for col in U.columns():
            affine_1x1(-(col @ sel_u), 1.0 + float(col @ U.anchor))

        try:
            x = sdp_solve(prob, eps_feas=eps_feas)
        except Infeasible as err:
            last_err = err
            continue
        w = w0 + N @ x[:k] if k else w0
        return w[:n], w[n:]

    raise Infeasible(
        f"no stationary center: {last_err.reason if last_err else 'no admissible branch'}",
        family=last_err.family if last_err else "avoid-polytope",
    )


def find_safe_ellipsoid(x_c, avoid_sets, eps_feas=1e-6, beta_min=1e-6):
    """The largest ellipsoid E(x_c, P_S) certified disjoint from every avoid
    region: S-procedure multipliers against avoid ellipsoids, one separating
    facet column per avoid polytope (enumerated), minimising trace(P_S)."""
    x_c = np.asarray(x_c, dtype=float).reshape(-1)
    n = x_c.shape[0]
    avoid_e, avoid_p = _split_regions(avoid_sets)

    branch_lists = []
    for poly in avoid_p:
        candidates = [
            j
            for j, col in enumerate(poly.columns())
            if float(col @ (x_c - poly.anchor)) > 1.0
        ]
        if not candidates:
            raise Infeasible(
                f"center not strictly beyond any facet of avoid polytope at "
                f"{poly.anchor.tolist()}",
                family="avoid-polytope",
            )
        branch_lists.append([(poly, j) for j in candidates])

    best = None
    for branch in itertools.product(*branch_lists):
        prob = SdpProblem()
        ps = prob.sym_matrix("P_S", n)
        betas = [prob.scalar(f"beta{i}") for i in range(len(avoid_e))]

        def sym_basis(i, j):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            return E

        # P_S itself must be positive definite
        prob.add_block(np.zeros((n, n)), {idx: sym_basis(i, j) for (i, j, idx) in ps}, "P_S pd")

        for bi, e in enumerate(avoid_e):
            Pa, qa = e.shape, e.center
            F0 = np.zeros((n + 1, n + 1))
            F0[n, n] = -1.0
            terms = {}
            for (i, j, idx) in ps:
                E = sym_basis(i, j)
                Fk = np.zeros((n + 1, n + 1))
                Fk[:n, :n] = E
                Fk[:n, n] = -(E @ x_c)
                Fk[n, :n] = -(E @ x_c)
                Fk[n, n] = float(x_c @ E @ x_c)
                terms[idx] = Fk
            Fb = np.zeros((n + 1, n + 1))
            Fb[:n, :n] = Pa
            Fb[:n, n] = -(Pa @ qa)
            Fb[n, :n] = -(Pa @ qa)
            Fb[n, n] = float(qa @ Pa @ qa) - 1.0
            terms[betas[bi]] = Fb
            prob.add_block(F0, terms, label="avoid-ellipsoid")
            prob.add_block(np.array([[-beta_min]]), {betas[bi]: np.eye(1)}, label="beta")

        for (poly, j) in branch:
            col = poly.normals[:, j]
            alpha = (1.0 + float(col @ (poly.anchor - x_c))) ** 2
            prob.add_block(
                -np.outer(col, col),
                {idx: alpha * sym_basis(i, j2) for (i, j2, idx) in ps},
                label="avoid-polytope",
            )

        c = np.zeros(prob.dim)
        for (i, j, idx) in ps:
            if i == j:
                c[idx] = -1.0  # minimise trace
        prob.set_objective(c)

        try:
            x = sdp_solve(prob, eps_feas=eps_feas)
        except Infeasible:
            continue
        P_S = prob.unpack_sym("P_S", x)
        tr = float(np.trace(P_S))
        if best is None or tr < best[0]:
            best = (tr, P_S)

    if best is None:
        raise Infeasible("no safe ellipsoid for any facet choice", family="safe-set")
    return best[1]


def synthesize_clf(dyn: AffineDynamics, x_c, u_c, P_S, rho, eps_feas=1e-6,
                   cover_points=()):
    """Solve for Z = P^-1 and Y = K Z: basin inside the safe ellipsoid,
    closed-loop decrease at rate rho, feedback admissible over the basin.
    Maximises trace(Z); returns (P, K).

    ``cover_points`` are states the basin must contain (affine Schur blocks
    in Z): the logical layer needs certain controllers to be engageable
    from other waypoints, which bare volume maximisation does not ensure.
    """
    x_c = np.asarray(x_c, dtype=float).reshape(-1)
    u_c = np.asarray(u_c, dtype=float).reshape(-1)
    P_S = np.asarray(P_S, dtype=float)
    n, m = dyn.n, dyn.m
    if rho <= 0:
        raise ValueError("rho must be positive")

    prob = SdpProblem()
    zs = prob.sym_matrix("Z", n)
    ys = prob.matrix("Y", m, n)

    def sym_basis(i, j):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        return E

    def y_basis(i, j):
        E = np.zeros((m, n))
        E[i, j] = 1.0
        return E

    prob.add_block(np.zeros((n, n)), {idx: sym_basis(i, j) for (i, j, idx) in zs}, "Z pd")

    PSinv = np.linalg.inv(P_S)
    prob.add_block(PSinv, {idx: -sym_basis(i, j) for (i, j, idx) in zs}, "basin-in-safe-set")

    A, Bm = dyn.A, dyn.B
    terms = {}
    for (i, j, idx) in zs:
        E = sym_basis(i, j)
        terms[idx] = -(A @ E + E @ A.T + 2.0 * rho * E)
    for (i, j, idx) in ys:
        E = y_basis(i, j)
        terms[idx] = -(Bm @ E + E.T @ Bm.T)
    prob.add_block(np.zeros((n, n)), terms, "decrease")

    for p in cover_points:
        d = np.asarray(p, dtype=float).reshape(-1) - x_c
        F0 = np.zeros((n + 1, n + 1))
        F0[n, n] = 1.0
        F0[:n, n] = d
        F0[n, :n] = d
        terms = {}
        for (i, j, idx) in zs:
            Fk = np.zeros((n + 1, n + 1))
            Fk[:n, :n] = sym_basis(i, j)
            terms[idx] = Fk
        prob.add_block(F0, terms, label="cover")

    U = dyn.input_polytope
    for col in U.columns():
        gap = 1.0 + float(col @ (U.anchor - u_c))
        if gap <= 0:
            raise Infeasible("stationary input sits on the input boundary", family="input")
        F0 = np.zeros((n + 1, n + 1))
        F0[n, n] = gap ** 2
        terms = {}
        for (i, j, idx) in zs:
            Fk = np.zeros((n + 1, n + 1))
            Fk[:n, :n] = sym_basis(i, j)
            terms[idx] = Fk
        for (i, j, idx) in ys:
            E = y_basis(i, j)
            Fk = np.zeros((n + 1, n + 1))
            Fk[:n, n] = E.T @ col
            Fk[n, :n] = E.T @ col
            terms[idx] = Fk
        prob.add_block(F0, terms, label="input")

    c = np.zeros(prob.dim)
    for (i, j, idx) in zs:
        if i == j:
            c[idx] = 1.0  # maximise trace(Z)
    prob.set_objective(c)

    x = sdp_solve(prob, eps_feas=eps_feas)
    Z = prob.unpack_sym("Z", x)
    Y = np.zeros((m, n))
    for (i, j, idx) in ys:
        Y[i, j] = x[idx]
    P = np.linalg.inv(Z)
    P = 0.5 * (P + P.T)
    K = Y @ P
    return P, K


def inner_level(P, x_c, reach_sets, safety=0.5) -> float:
    """Largest c with {w <= c} inside every reach region, scaled by the
    safety factor so the containment is strict."""
    x_c = np.asarray(x_c, dtype=float).reshape(-1)
    P = np.asarray(P, dtype=float)
    Pinv = np.linalg.inv(P)
    best = np.inf
    for region in reach_sets:
        if isinstance(region, Polytope):
            for col in region.columns():
                gap = 1.0 - float(col @ (x_c - region.anchor))
                if gap <= 0:
                    raise Infeasible("center outside a reach polytope", family="inner-level")
                best = min(best, gap ** 2 / float(col @ Pinv @ col))
        else:
            lo, hi = 0.0, 1.0
            if _level_inside(P, x_c, hi, region):
                best = min(best, hi)
                continue
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _level_inside(P, x_c, mid, region):
                    lo = mid
                else:
                    hi = mid
            if lo == 0.0:
                raise Infeasible("no positive inner level fits the reach region",
                                 family="inner-level")
            best = min(best, lo)
    if not np.isfinite(best):
        # no reach region constrains the level (reach set empty): basin scale
        best = 1.0
    return safety * min(best, 1.0) if best >= 1.0 else safety * best


def _level_inside(P, x_c, level, region: Ellipsoid) -> bool:
    sub = Ellipsoid(x_c, P / level)
    val, _ = extremal_value_on_ellipsoid(sub, region.shape, region.center, maximize=True)
    return val <= 1.0


def assemble_clf(dyn, crwa, reach_sets, avoid_sets, rho_list, eps_feas=1e-6,
                 cover_regions=()):
    """Run the three synthesis stages for one cRWA; first feasible decay
    rate in rho_list wins.  ``cover_regions`` lists (ellipsoidal) regions the
    basin should additionally contain when possible: each is relaxed to hull
    points, and coverage is dropped again if it kills feasibility."""
    x_c, u_c = find_center(dyn, reach_sets, avoid_sets, eps_feas=eps_feas)
    P_S = find_safe_ellipsoid(x_c, avoid_sets, eps_feas=eps_feas)
    cover_points = []
    for region in cover_regions:
        if isinstance(region, Ellipsoid) and not region.is_degenerate():
            L = np.linalg.cholesky(region.shape)
            axes = np.linalg.inv(L.T)
            for k in range(region.dim):
                for sgn in (1.0, -1.0):
                    cover_points.append(region.center + 1.45 * sgn * axes[:, k])
    last = None
    attempts = ([tuple(cover_points)] if cover_points else []) + [()]
    for cover in attempts:
        for rho in rho_list:
            try:
                P, K = synthesize_clf(dyn, x_c, u_c, P_S, rho, eps_feas=eps_feas,
                                      cover_points=cover)
            except Infeasible as err:
                last = err
                continue
            c = inner_level(P, x_c, reach_sets)
            return QuadraticCLF(P=P, x_c=np.asarray(x_c), c=c, C=1.0, K=K,
                                u0=np.asarray(u_c), rho=rho, crwa=crwa)
    raise Infeasible(
        f"no decay rate in {list(rho_list)} is feasible: {last.reason if last else ''}",
        family="decay",
    )
