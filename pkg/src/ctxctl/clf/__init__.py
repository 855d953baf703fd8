"""Quadratic control-Lyapunov synthesis for affine dynamics: proposition
geometry, small dense semidefinite feasibility problems, surrogate feedback
extraction and independent certificate verification."""

from ctxctl.clf.geometry import (
    Ellipsoid,
    Polytope,
    bounding_box,
    ellipsoid_polytope_disjoint,
    ellipsoids_disjoint,
)
from ctxctl.clf.dynamics import AffineDynamics
from ctxctl.clf.sdp import CapExceeded, Infeasible, SdpProblem, sdp_solve
from ctxctl.clf.synth import (
    Assumption3Violated,
    ContextRWA,
    QuadraticCLF,
    find_center,
    find_safe_ellipsoid,
    inner_level,
    synthesize_clf,
)
from ctxctl.clf.verify import CertReport, verify_clf

__all__ = [
    "Ellipsoid",
    "Polytope",
    "bounding_box",
    "ellipsoid_polytope_disjoint",
    "ellipsoids_disjoint",
    "AffineDynamics",
    "CapExceeded",
    "Infeasible",
    "SdpProblem",
    "sdp_solve",
    "Assumption3Violated",
    "ContextRWA",
    "QuadraticCLF",
    "find_center",
    "find_safe_ellipsoid",
    "inner_level",
    "synthesize_clf",
    "CertReport",
    "verify_clf",
]
