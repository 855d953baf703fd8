"""The extended labelling map L+: state propositions by region membership,
basin propositions from the controller catalog, all conditioned on the
current observation set (walls may include the door strip).

Also hosts the realizable-label oracle the control-graph construction needs:
stratified grid sampling over the state box plus targeted probes (region
centers, boundary rings, pairwise midpoints), capped at a documented number
of distinct regions.
"""

from __future__ import annotations

import numpy as np

from ctxctl.clf.geometry import Ellipsoid
from ctxctl.runtime.scenario import Scenario


class OutOfBox(ValueError):
    pass


def _boundary_points(region, count):
    """(points, outward unit normals) along a region's boundary."""
    if isinstance(region, Ellipsoid):
        if region.is_degenerate():
            return None, None
        theta = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        if region.dim != 2:
            return None, None
        L = np.linalg.cholesky(region.shape)
        pts = region.center + np.linalg.solve(L.T, u.T).T
        grads = 2.0 * (pts - region.center) @ region.shape
        normals = grads / np.linalg.norm(grads, axis=1, keepdims=True)
        return pts, normals
    # polytope: sample each facet's active segment
    if region.dim != 2:
        return None, None
    pts_all, nrm_all = [], []
    for j, col in enumerate(region.columns()):
        # facet {x : col.(x - p) = 1} clipped against the other facets
        base = region.anchor + col / float(col @ col)
        tang = np.array([-col[1], col[0]])
        tang = tang / np.linalg.norm(tang)
        ts = np.linspace(-20.0, 20.0, count)
        pts = base + ts[:, None] * tang
        ok = np.ones(len(pts), dtype=bool)
        for k, other in enumerate(region.columns()):
            if k == j:
                continue
            ok &= (pts - region.anchor) @ other <= 1.0 + 1e-9
        if ok.any():
            pts_all.append(pts[ok])
            nrm = col / np.linalg.norm(col)
            nrm_all.append(np.tile(nrm, (int(ok.sum()), 1)))
    if not pts_all:
        return None, None
    return np.vstack(pts_all), np.vstack(nrm_all)


def _membership_margin(region, pts):
    if isinstance(region, Ellipsoid):
        d = pts - region.center
        return 1.0 - np.einsum("ij,jk,ik->i", d, region.shape, d)
    return 1.0 - np.max((pts - region.anchor) @ region.normals, axis=1)


class LabelMap:
    def __init__(self, scenario: Scenario, catalog=None):
        self.scenario = scenario
        self.catalog = catalog
        self._basins = []
        if catalog is not None:
            for e in catalog.entries:
                if e.clf is None:
                    raise ValueError(f"catalog entry {e.control_prop} carries no certificate")
                self._basins.append((e.basin_prop, e.clf.basin))

    @property
    def state_atoms_plus(self) -> frozenset:
        extra = frozenset(name for name, _ in self._basins)
        return self.scenario.state_atoms | extra

    def label(self, x, obs, tol=0.0) -> frozenset:
        """Exact membership labelling; raises OutOfBox outside the box."""
        sc = self.scenario
        if not sc.in_box(x, tol=max(tol, 1e-9)):
            raise OutOfBox(f"state {np.asarray(x).tolist()} outside the box")
        out = set()
        for prop, guarded in sc.props.items():
            for g in guarded:
                if g.active(obs) and g.region.contains(x, tol):
                    out.add(prop)
                    break
        for name, basin in self._basins:
            if basin.contains(x, tol):
                out.add(name)
        return frozenset(out)

    def label_flagged(self, x, obs):
        """(label, near_boundary): points within eps_mem of any active
        region boundary are flagged so callers can avoid chattering."""
        eps = self.scenario.config["eps_mem"]
        label = self.label(x, obs)
        near = False
        for _, dist in self.margins(x, obs):
            if abs(dist) <= eps:
                near = True
                break
        return label, near

    def margins(self, x, obs):
        """(name, boundary distance) for every active region; positive
        inside.  The event detector watches exactly these functions."""
        out = []
        sc = self.scenario
        for prop, guarded in sc.props.items():
            for i, g in enumerate(guarded):
                if g.active(obs):
                    out.append((f"{prop}[{i}]", g.region.boundary_distance(x)))
        for name, basin in self._basins:
            out.append((name, basin.boundary_distance(x)))
        return out

    def realizable_state_labels(self, obs, resolution=None) -> frozenset:
        """Sampled arrangement cells of the active regions: the set of
        extended state labels some in-box point realizes under ``obs``."""
        sc = self.scenario
        res = resolution or sc.config["label_grid"]
        regions = []
        for prop, guarded in sc.props.items():
            for g in guarded:
                if g.active(obs):
                    regions.append((prop, g.region))
        for name, basin in self._basins:
            regions.append((name, basin))
        distinct = {id(r) for (_, r) in regions}
        if len(distinct) > sc.config["max_regions"] + len(sc.props):
            raise ValueError(
                f"{len(distinct)} regions exceed the arrangement sampling cap; "
                "raise config max_regions only with a denser label grid"
            )

        lo, hi = sc.box_lo, sc.box_hi
        n = lo.shape[0]
        axes = [np.linspace(lo[i], hi[i], res) for i in range(n)]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)

        probes = [pts]
        centers = []
        for (_, r) in regions:
            c = r.center if isinstance(r, Ellipsoid) else r.anchor
            centers.append(c)
        if centers:
            centers = np.array(centers)
            inside = np.all((centers >= lo) & (centers <= hi), axis=1)
            if inside.any():
                probes.append(centers[inside])
                mids = 0.5 * (centers[inside][:, None, :] + centers[inside][None, :, :])
                probes.append(mids.reshape(-1, n))

        # every arrangement cell is adjacent to a boundary arc or to a
        # boundary-boundary intersection; ring probes at graded offsets plus
        # quadrant probes around intersections catch the sliver cells a grid
        # misses (the event-driven runtime lands exactly in such cells)
        boundaries = []
        for (_, r) in regions:
            boundaries.append(_boundary_points(r, 512))
        offsets = (1e-4, 3e-3, 3e-2)
        for pts_b, normals in boundaries:
            if pts_b is None:
                continue
            for d in offsets:
                probes.append(pts_b + d * normals)
                probes.append(pts_b - d * normals)
        for i in range(len(boundaries)):
            for j in range(i + 1, len(boundaries)):
                pts_i = boundaries[i][0]
                if pts_i is None or boundaries[j][0] is None:
                    continue
                _, rj = regions[j]
                on_j = np.abs(_membership_margin(rj, pts_i)) < 5e-3
                cross = pts_i[on_j]
                if len(cross):
                    ni = boundaries[i][1][on_j]
                    for dx in (1e-4, 3e-3):
                        for sa in (1.0, -1.0):
                            probes.append(cross + sa * dx * ni)
        pts = np.vstack(probes)
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        pts = pts[inside]

        labels = set()
        flags = np.zeros((len(pts), len(regions)), dtype=bool)
        for j, (_, r) in enumerate(regions):
            if isinstance(r, Ellipsoid):
                d = pts - r.center
                flags[:, j] = np.einsum("ij,jk,ik->i", d, r.shape, d) <= 1.0
            else:
                d = (pts - r.anchor) @ r.normals
                flags[:, j] = np.all(d <= 1.0, axis=1)
        names = [name for (name, _) in regions]
        for row in flags:
            labels.add(frozenset(names[j] for j in range(len(names)) if row[j]))
        return frozenset(labels)
