"""A small semidefinite feasibility/optimisation solver: log-det barrier with
damped Newton steps over dense affine matrix blocks.

Problems are given as blocks B_i(x) = F_i0 + sum_k x_k F_ik required to be
positive definite, plus an optional linear objective c'x to maximise.  Two
phases: phase 1 maximises the joint minimum-eigenvalue slack until it clears
the feasibility margin (or provably stalls: infeasible), phase 2 follows the
central path of the margin-shifted problem.

Every returned assignment is re-checked by plain eigenvalue computations, so
callers never rely on the optimiser's internals for soundness.  Sized for
the planar/double-integrator scenarios this package targets: a hard cap
rejects anything bigger.
"""

from __future__ import annotations

import numpy as np


class Infeasible(Exception):
    """The constraint system admits no point with the required margin."""

    def __init__(self, reason="", family=""):
        super().__init__(reason or "infeasible")
        self.reason = reason
        self.family = family


class CapExceeded(Exception):
    pass


DEFAULT_EPS_FEAS = 1e-6
MAX_BLOCK = 8
MAX_VARS = 48


class SdpProblem:
    """Builder for affine-block SDPs over scalar and symmetric-matrix vars."""

    def __init__(self):
        self.dim = 0
        self._names = {}
        self.blocks = []  # (F0, {var_index: F_k}, label)
        self.objective = None

    def scalar(self, name: str) -> int:
        if name in self._names:
            raise ValueError(f"duplicate variable {name}")
        idx = self.dim
        self._names[name] = ("scalar", idx, 1)
        self.dim += 1
        return idx

    def sym_matrix(self, name: str, n: int):
        """Packed symmetric matrix variable; returns list of (i, j, index)."""
        if name in self._names:
            raise ValueError(f"duplicate variable {name}")
        entries = []
        for i in range(n):
            for j in range(i, n):
                entries.append((i, j, self.dim))
                self.dim += 1
        self._names[name] = ("sym", entries, n)
        return entries

    def matrix(self, name: str, rows: int, cols: int):
        """Packed full matrix variable; returns list of (i, j, index)."""
        if name in self._names:
            raise ValueError(f"duplicate variable {name}")
        entries = []
        for i in range(rows):
            for j in range(cols):
                entries.append((i, j, self.dim))
                self.dim += 1
        self._names[name] = ("full", entries, (rows, cols))
        return entries

    def add_block(self, F0, terms, label=""):
        """Require F0 + sum_k x_k F_k  >  0 (as a symmetric matrix)."""
        F0 = np.atleast_2d(np.asarray(F0, dtype=float))
        m = F0.shape[0]
        if m > MAX_BLOCK:
            raise CapExceeded(f"block of size {m} exceeds the {MAX_BLOCK} cap")
        clean = {}
        for k, Fk in terms.items():
            Fk = np.atleast_2d(np.asarray(Fk, dtype=float))
            if Fk.shape != (m, m):
                raise ValueError("term shape mismatch in block " + label)
            if np.any(Fk):
                clean[k] = 0.5 * (Fk + Fk.T)
        self.blocks.append((0.5 * (F0 + F0.T), clean, label))

    def set_objective(self, c):
        self.objective = np.asarray(c, dtype=float).reshape(-1)

    def unpack_sym(self, name: str, x):
        kind, entries, n = self._names[name]
        M = np.zeros((n, n))
        for (i, j, idx) in entries:
            M[i, j] = M[j, i] = x[idx]
        return M


def _eval_blocks(blocks, x):
    out = []
    for (F0, terms, _) in blocks:
        M = F0.copy()
        for k, Fk in terms.items():
            M += x[k] * Fk
        out.append(M)
    return out


def _min_eig(M):
    return float(np.linalg.eigvalsh(M)[0])


def _newton_max(blocks, x0, c, mu, iters=60):
    """Maximise c'x + mu * sum log det B_i(x) from the strictly feasible x0."""
    x = x0.copy()
    dim = x.shape[0]
    for _ in range(iters):
        grad = c.copy()
        H = np.zeros((dim, dim))
        ok = True
        for (F0, terms, _) in blocks:
            M = F0.copy()
            for k, Fk in terms.items():
                M += x[k] * Fk
            try:
                L = np.linalg.cholesky(M)
            except np.linalg.LinAlgError:
                ok = False
                break
            Linv = np.linalg.inv(L)
            ks = list(terms.keys())
            Ws = [Linv @ terms[k] @ Linv.T for k in ks]
            for a, ka in enumerate(ks):
                grad[ka] += mu * np.trace(Ws[a])
                for b in range(a, len(ks)):
                    h = -mu * float(np.sum(Ws[a] * Ws[b]))
                    H[ka, ks[b]] += h
                    if ks[b] != ka:
                        H[ks[b], ka] += h
        if not ok:
            raise RuntimeError("newton started from an infeasible point")
        H -= 1e-12 * np.eye(dim)
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        decrement = float(grad @ step)  # positive while progress is possible
        if decrement < 1e-12:
            break
        # backtracking line search keeping all blocks PD
        t = 1.0
        base = _barrier_value(blocks, x, c, mu)
        while t > 1e-12:
            xn = x + t * step
            val = _barrier_value(blocks, xn, c, mu)
            if val is not None and val > base + 1e-14:
                x = xn
                break
            t *= 0.5
        else:
            break
    return x


def _barrier_value(blocks, x, c, mu):
    total = float(c @ x)
    for (F0, terms, _) in blocks:
        M = F0.copy()
        for k, Fk in terms.items():
            M += x[k] * Fk
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            return None
        total += 2.0 * mu * float(np.sum(np.log(np.diag(L))))
    return total


def sdp_solve(
    problem: SdpProblem,
    eps_feas: float = DEFAULT_EPS_FEAS,
    x0=None,
    mu0: float = 1.0,
    mu_final: float = 1e-9,
    obj_tol: float = 1e-7,
):
    """Solve the problem; returns the assignment vector x.

    Raises Infeasible when no point clears the eps_feas margin, CapExceeded
    when the problem is larger than this solver is meant for.
    """
    dim = problem.dim
    if dim > MAX_VARS:
        raise CapExceeded(f"{dim} scalar unknowns exceed the {MAX_VARS} cap")
    if not problem.blocks:
        return np.zeros(dim)

    # phase 1: maximise the joint slack t with blocks B_i(x) - t I > 0
    x = np.zeros(dim + 1) if x0 is None else np.concatenate([x0, [0.0]])
    t_idx = dim
    slack_blocks = []
    for (F0, terms, label) in problem.blocks:
        m = F0.shape[0]
        t_terms = dict(terms)
        t_terms[t_idx] = -np.eye(m)
        slack_blocks.append((F0, t_terms, label))
    # cap t so the barrier maximum stays finite
    t_cap = 1e6
    slack_blocks.append((np.array([[t_cap]]), {t_idx: -np.eye(1)}, "_tcap"))

    margins = [_min_eig(M) for M in _eval_blocks(problem.blocks, x[:dim])]
    x[t_idx] = min(margins) - 1.0

    c1 = np.zeros(dim + 1)
    c1[t_idx] = 1.0
    mu = mu0
    target = 2.0 * eps_feas
    prev_t = x[t_idx]
    stalled = 0
    while mu > mu_final:
        x = _newton_max(slack_blocks, x, c1, mu)
        if x[t_idx] >= target:
            break
        # an infeasible system stalls with t pinned at the negated margin
        if x[t_idx] < prev_t + max(1e-12, 0.01 * abs(prev_t)):
            stalled += 1
            if stalled >= 3 and x[t_idx] < -10 * eps_feas:
                break
        else:
            stalled = 0
        prev_t = x[t_idx]
        mu *= 0.1
    if x[t_idx] < eps_feas:
        labels = [lab for (_, _, lab) in problem.blocks]
        margins = _eval_blocks(problem.blocks, x[:dim])
        worst = min(zip(labels, map(_min_eig, margins)), key=lambda p: p[1])
        raise Infeasible(
            f"phase-1 slack stalled at {x[t_idx]:.3e} < {eps_feas:.1e}"
            f" (worst block {worst[0]!r}: {worst[1]:.3e})",
            family=worst[0],
        )

    feas = x[:dim].copy()

    # phase 2: follow the central path of the margin-shifted problem
    shifted = []
    for (F0, terms, label) in problem.blocks:
        m = F0.shape[0]
        shifted.append((F0 - eps_feas * np.eye(m), terms, label))
    c = problem.objective if problem.objective is not None else np.zeros(dim)
    if problem.objective is None:
        return feas
    total_deg = sum(F0.shape[0] for (F0, _, _) in problem.blocks)
    x = feas
    mu = mu0
    while mu * total_deg > obj_tol:
        x = _newton_max(shifted, x, c, mu)
        mu *= 0.1
    x = _newton_max(shifted, x, c, mu)

    final_margins = [_min_eig(M) for M in _eval_blocks(problem.blocks, x)]
    if min(final_margins) < 0.5 * eps_feas:
        # fall back to the feasibility point, which has a verified margin
        x = feas
        final_margins = [_min_eig(M) for M in _eval_blocks(problem.blocks, x)]
        if min(final_margins) < 0.5 * eps_feas:
            raise Infeasible("post-check margin regression")
    return x
