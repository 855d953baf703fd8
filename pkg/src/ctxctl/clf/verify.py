"""Independent certificate verification.

Everything here recomputes the certificate conditions from scratch: plain
eigenvalue margins for the LMIs, exact support/trust-region containment and
disjointness values for the geometry, and sampled residuals for the decrease
and input-admissibility conditions.  The synthesiser is never trusted; a
certificate passes iff every margin clears the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ctxctl.clf.dynamics import AffineDynamics
from ctxctl.clf.geometry import (
    Ellipsoid,
    Polytope,
    extremal_value_on_ellipsoid,
)
from ctxctl.clf.synth import QuadraticCLF


@dataclass
class CertReport:
    margins: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    tolerance: float = 1e-8

    def record(self, name: str, margin: float):
        self.margins[name] = float(margin)
        if not margin > self.tolerance:
            self.failures.append(name)

    @property
    def passed(self) -> bool:
        return not self.failures

    def render(self, sig=17) -> str:
        lines = ["certificate report: " + ("PASS" if self.passed else "FAIL")]
        for name in sorted(self.margins):
            lines.append(f"  {name}: {self.margins[name]:.{sig}g}")
        if self.failures:
            lines.append("  failed: " + ", ".join(self.failures))
        return "\n".join(lines)


def verify_clf(
    clf: QuadraticCLF,
    dyn: AffineDynamics,
    reach_sets,
    avoid_sets,
    safe_shape=None,
    samples: int = 10_000,
    tolerance: float = 1e-8,
    seed: int = 0,
) -> CertReport:
    """Re-derive every certificate condition for the given geometry.

    reach_sets / avoid_sets are the concrete regions of the certificate's
    cRWA; safe_shape optionally re-checks basin-in-safe-set containment.
    """
    report = CertReport(tolerance=tolerance)
    P, x_c, K, u0, rho = clf.P, clf.x_c, clf.K, clf.u0, clf.rho
    n = dyn.n

    report.record("P positive definite", np.linalg.eigvalsh(P)[0])
    if safe_shape is not None:
        report.record("basin inside safe set", np.linalg.eigvalsh(P - np.asarray(safe_shape))[0])

    # closed-loop decrease LMI at the certificate's rate (the synthesiser
    # works at 2*rho, so a healthy certificate clears rho with margin)
    A_cl = dyn.A + dyn.B @ K
    lmi = -(P @ A_cl + A_cl.T @ P + rho * P)
    report.record("decrease LMI", np.linalg.eigvalsh(0.5 * (lmi + lmi.T))[0])

    report.record(
        "stationary center",
        1e-6 - np.linalg.norm(dyn.A @ x_c + dyn.B @ u0 + dyn.g) + tolerance,
    )

    basin = clf.basin
    inner = clf.inner
    for idx, region in enumerate(reach_sets):
        if isinstance(region, Ellipsoid):
            val, _ = extremal_value_on_ellipsoid(inner, region.shape, region.center, maximize=True)
            report.record(f"inner level inside reach[{idx}]", 1.0 - val)
        else:
            worst = min(
                1.0 + float(col @ (region.anchor - x_c)) - _support_radius(P / clf.c, col)
                for col in region.columns()
            )
            report.record(f"inner level inside reach[{idx}]", worst)
    for idx, region in enumerate(avoid_sets):
        if isinstance(region, Ellipsoid):
            val, _ = extremal_value_on_ellipsoid(basin, region.shape, region.center)
            report.record(f"basin avoids region[{idx}]", val - 1.0)
        else:
            best = max(
                float(col @ (x_c - region.anchor)) - 1.0 - _support_radius(P / clf.C, col)
                for col in region.columns()
            )
            report.record(f"basin avoids region[{idx}]", best)

    # analytic input admissibility over the whole basin boundary
    U = dyn.input_polytope
    Pinv = np.linalg.inv(P / clf.C)
    worst_u = np.inf
    for col in U.columns():
        reachdir = float(np.sqrt(max(col @ K @ Pinv @ K.T @ col.T, 0.0)))
        slack = 1.0 - float(col @ (u0 - U.anchor)) - reachdir
        worst_u = min(worst_u, slack)
    report.record("input admissible (analytic)", worst_u)

    # sampled residuals
    rng = np.random.default_rng(seed)
    xs = basin.sample(rng, count=samples)
    w = np.einsum("ij,jk,ik->i", xs - x_c, P, xs - x_c)
    shell = xs[w > clf.c]
    if len(shell):
        d = shell - x_c
        u = d @ K.T + u0
        xdot = shell @ dyn.A.T + u @ dyn.B.T + dyn.g
        lhs = 2.0 * np.einsum("ij,jk,ik->i", d, P, xdot)
        rhs = -rho * np.einsum("ij,jk,ik->i", d, P, d)
        report.record("sampled decrease residual", float(np.min(rhs - lhs)) + 1e-9)
        viol = np.max(np.abs((u - U.anchor) @ U.normals)) - 1.0
        report.record("sampled input admissibility", -(viol - 1e-9))
    bx = basin.sample_boundary(rng, count=max(1, samples // 10))
    ub = (bx - x_c) @ K.T + u0
    bviol = np.max(np.abs((ub - U.anchor) @ U.normals)) - 1.0
    report.record("sampled boundary input admissibility", -(bviol - 1e-9))
    return report


def _support_radius(shape, col) -> float:
    return float(np.sqrt(max(col @ np.linalg.solve(shape, col), 0.0)))
