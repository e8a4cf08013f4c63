"""Lower convex envelopes of finite graphs via an n-dimensional Quickhull.

The hull of the graph points ``(x_i, h_i)`` in ``R^{n+1}`` is computed in
full; facets whose outward normal has a strictly negative last component
form the lower envelope.  The envelope is evaluated by locating a lower
facet whose projection contains the query and interpolating barycentrically.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DegenerateInput

TAU_VIS_REL = 1e-10
TAU_DOWN = 1e-12
BARY_TOL = 1e-9


class _Facet:
    __slots__ = ("verts", "normal", "offset", "neighbors", "outside", "alive", "uid")

    def __init__(self, verts, normal, offset, uid):
        self.verts = verts
        self.normal = normal
        self.offset = offset
        self.neighbors = [None] * len(verts)
        self.outside = None
        self.alive = True
        self.uid = uid


def _hyperplanes(V, interior):
    """Unit normals and offsets of the hyperplanes through each row-simplex of ``V``.

    ``V`` has shape ``(m, D, D)``; normals are oriented away from ``interior``.
    """
    E = V[:, 1:, :] - V[:, :1, :]
    _, _, vt = np.linalg.svd(E)
    normals = vt[:, -1, :]
    offsets = np.einsum("ij,ij->i", normals, V[:, 0, :])
    flip = normals @ interior - offsets > 0.0
    normals[flip] *= -1.0
    offsets[flip] *= -1.0
    return normals, offsets


def _initial_simplex(P, tau):
    i0 = int(np.argmin(P[:, 0]))
    i1 = int(np.argmax(P[:, 0]))
    if i0 == i1:
        raise DegenerateInput("all points coincide")
    simplex = [i0, i1]
    D = P.shape[1]
    while len(simplex) < D + 1:
        base = P[simplex[0]]
        Q, _ = np.linalg.qr((P[simplex[1:]] - base).T)
        R = P - base
        resid = R - (R @ Q) @ Q.T
        dist = np.einsum("ij,ij->i", resid, resid)
        j = int(np.argmax(dist))
        if np.sqrt(dist[j]) <= tau:
            raise DegenerateInput(
                f"points span an affine subspace of dimension {len(simplex) - 1} < {D}")
        simplex.append(j)
    return simplex


def convex_hull(points, tol_rel=TAU_VIS_REL):
    """Simplicial convex hull of ``points`` (shape ``(N, D)``, ``D >= 2``).

    Returns ``(simplices, normals, offsets)``: vertex indices ``(F, D)``, unit
    outward normals ``(F, D)`` and offsets ``(F,)`` with ``normal . p <= offset``
    for every input point up to the visibility tolerance.

    Coordinates are normalised per axis to ``[-1, 1]`` before hull
    construction; the visibility tolerance is ``tol_rel * 2`` in those units.
    Points within tolerance of a facet are treated as inside and dropped.
    """
    P0 = np.asarray(points, dtype=float)
    if P0.ndim != 2 or P0.shape[1] < 2:
        raise ValueError("points must be an (N, D) array with D >= 2")
    N, D = P0.shape
    if N < D + 1:
        raise DegenerateInput(f"need at least {D + 1} points in {D} dimensions, got {N}")
    lo, hi = P0.min(axis=0), P0.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    if np.any(half <= 0.0):
        raise DegenerateInput("points are constant along at least one axis")
    P = (P0 - center) / half
    tau = tol_rel * (1.0 + np.max(np.abs(P)))

    simplex = _initial_simplex(P, tau)
    interior = P[simplex].mean(axis=0)

    facets = []

    def make(verts_rows, normals, offsets):
        out = []
        for verts, nrm, off in zip(verts_rows, normals, offsets):
            f = _Facet(tuple(int(v) for v in verts), nrm, float(off), len(facets))
            facets.append(f)
            out.append(f)
        return out

    rows = [[simplex[j] for j in range(D + 1) if j != i] for i in range(D + 1)]
    normals, offsets = _hyperplanes(P[np.array(rows)], interior)
    start = make(rows, normals, offsets)
    # facet i omits simplex vertex i; it meets facet j across the ridge omitting both
    for i, f in enumerate(start):
        for pos, v in enumerate(f.verts):
            f.neighbors[pos] = start[simplex.index(v)]

    candidates = np.setdiff1d(np.arange(N), simplex)
    _assign_outside(P, candidates, start, normals, offsets, tau)

    queue = deque(f for f in start if f.outside is not None)
    while queue:
        f = queue.popleft()
        if not f.alive or f.outside is None:
            continue
        pts = f.outside
        dist = P[pts] @ f.normal - f.offset
        p = int(pts[int(np.argmax(dist))])
        pp = P[p]

        visible = [f]
        seen = {f.uid: True}
        horizon = []
        stack = [f]
        while stack:
            g = stack.pop()
            for k, h in enumerate(g.neighbors):
                vis = seen.get(h.uid)
                if vis is None:
                    vis = bool(h.normal @ pp - h.offset > tau)
                    seen[h.uid] = vis
                    if vis:
                        visible.append(h)
                        stack.append(h)
                if not vis:
                    horizon.append((g, k, h))

        rows = []
        for g, k, _ in horizon:
            verts = list(g.verts)
            verts[k] = p
            rows.append(verts)
        rows = np.array(rows)
        normals, offsets = _hyperplanes(P[rows], interior)
        new = make(rows, normals, offsets)

        ridges = {}
        for nf, (g, k, h) in zip(new, horizon):
            nf.neighbors[k] = h
            h.neighbors[h.neighbors.index(g)] = nf
            for i in range(D):
                if i == k:
                    continue
                key = tuple(sorted(nf.verts[:i] + nf.verts[i + 1:]))
                other = ridges.pop(key, None)
                if other is None:
                    ridges[key] = (nf, i)
                else:
                    of, oi = other
                    nf.neighbors[i] = of
                    of.neighbors[oi] = nf
        if ridges:
            raise RuntimeError("horizon is not a closed ridge cycle; input is numerically degenerate")

        pooled = [g.outside for g in visible if g.outside is not None]
        for g in visible:
            g.alive = False
            g.outside = None
            g.neighbors = ()
        pooled = np.concatenate(pooled)
        pooled = pooled[pooled != p]
        _assign_outside(P, pooled, new, normals, offsets, tau)
        queue.extend(nf for nf in new if nf.outside is not None)

    alive = [f for f in facets if f.alive]
    simplices = np.array([f.verts for f in alive], dtype=np.intp)
    normals = np.array([f.normal for f in alive]) / half
    offsets = np.array([f.offset for f in alive]) + normals @ center
    norms = np.linalg.norm(normals, axis=1)
    return simplices, normals / norms[:, None], offsets / norms


def _assign_outside(P, pts, new, normals, offsets, tau):
    if pts.size == 0:
        return
    dist = P[pts] @ normals.T - offsets
    mask = dist > tau
    has = mask.any(axis=1)
    if not np.any(has):
        return
    owner = mask.argmax(axis=1)[has]
    pts = pts[has]
    order = np.argsort(owner, kind="stable")
    owner, pts = owner[order], pts[order]
    bounds = np.searchsorted(owner, np.arange(len(new) + 1))
    for j, f in enumerate(new):
        a, b = bounds[j], bounds[j + 1]
        if b > a:
            f.outside = pts[a:b]


@dataclass(frozen=True)
class Facet:
    """Lower-hull facet: vertex row indices and the plane ``normal . p == offset``."""

    vertex_indices: tuple
    normal: np.ndarray
    offset: float


@dataclass
class EnvelopeValue:
    """Envelope value with an optional barycentric certificate."""

    value: float
    facet: Optional[int] = None
    weights: Optional[np.ndarray] = None
    vertices: Optional[np.ndarray] = None

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.value))


@dataclass
class LowerEnvelope:
    points: np.ndarray
    values: np.ndarray
    facets: list
    support_indices: np.ndarray
    _simplices: np.ndarray = field(repr=False)
    _lo: np.ndarray = field(repr=False)
    _hi: np.ndarray = field(repr=False)
    _vertex_lookup: dict = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def vertices(self):
        return self.points[self.support_indices]

    @classmethod
    def from_simplices(cls, points, values, simplices, normals, offsets):
        facets = [Facet(tuple(int(v) for v in s), nrm, float(off))
                  for s, nrm, off in zip(simplices, normals, offsets)]
        simplices = np.asarray(simplices, dtype=np.intp).reshape(-1, points.shape[1] + 1)
        corners = points[simplices]
        support = np.unique(simplices)
        lookup = {points[i].tobytes(): int(i) for i in support}
        return cls(points, values, facets, support, simplices,
                   corners.min(axis=1), corners.max(axis=1), lookup)

    def evaluate(self, x) -> EnvelopeValue:
        """Piecewise-affine envelope value at ``x``; ``+inf`` outside the projected hull."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.n:
            raise ValueError(f"query has dimension {x.shape[0]}, envelope has {self.n}")
        hit = self._vertex_lookup.get(x.tobytes())
        if hit is not None:
            return EnvelopeValue(float(self.values[hit]), None, np.ones(1), np.array([hit]))
        slack = BARY_TOL * (1.0 + np.abs(x).max())
        cand = np.flatnonzero(np.all((self._lo <= x + slack) & (self._hi >= x - slack), axis=1))
        if cand.size == 0:
            return EnvelopeValue(np.inf)
        verts = self._simplices[cand]
        M = np.ones((cand.size, self.n + 1, self.n + 1))
        M[:, :-1, :] = np.swapaxes(self.points[verts], 1, 2)
        rhs = np.append(x, 1.0)
        xi = _batched_solve(M, rhs)
        ok = np.all(xi >= -BARY_TOL, axis=1) & np.all(np.isfinite(xi), axis=1)
        if not np.any(ok):
            return EnvelopeValue(np.inf)
        j = int(np.argmax(ok))
        w = np.clip(xi[j], 0.0, None)
        w /= w.sum()
        vv = verts[j]
        return EnvelopeValue(float(w @ self.values[vv]), int(cand[j]), w, vv)

    def evaluate_many(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.evaluate(x).value for x in X])

    def write_off(self, path):
        """Dump support vertices and lower facets as an OFF file for inspection."""
        remap = {int(v): i for i, v in enumerate(self.support_indices)}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("OFF\n")
            fh.write(f"{len(self.support_indices)} {len(self.facets)} 0\n")
            for v in self.support_indices:
                coords = list(self.points[v]) + [self.values[v]]
                fh.write(" ".join(repr(float(c)) for c in coords) + "\n")
            for f in self.facets:
                fh.write(f"{len(f.vertex_indices)} " + " ".join(str(remap[v]) for v in f.vertex_indices) + "\n")


def _batched_solve(M, rhs):
    b = np.broadcast_to(rhs, M.shape[:-1])[..., None]
    try:
        return np.linalg.solve(M, b)[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(M.shape[:-1], np.nan)
        for i in range(M.shape[0]):
            try:
                out[i] = np.linalg.solve(M[i], rhs)
            except np.linalg.LinAlgError:
                pass
        return out


def _generic_convex_lift(X):
    # strictly convex and non-separable, so lattice-structured point sets
    # do not end up cocircular in the lifted triangulation
    lo, hi = X.min(axis=0), X.max(axis=0)
    Z = (X - 0.5 * (lo + hi)) / np.where(hi > lo, 0.5 * (hi - lo), 1.0)
    w = 1.0 / np.arange(1, X.shape[1] + 1)
    return np.sum(Z * Z, axis=1) + (Z @ w) ** 2


def _affine_envelope(X, h):
    n = X.shape[1]
    A = np.c_[X, np.ones(len(X))]
    coef, *_ = np.linalg.lstsq(A, h, rcond=None)
    scale = 1.0 + np.abs(h).max()
    if np.abs(A @ coef - h).max() > 1e-8 * scale:
        raise DegenerateInput("graph points are degenerate but not on a common hyperplane")
    if n == 1:
        order = np.argsort(X[:, 0], kind="stable")
        simplices = np.array([[order[0], order[-1]]])
    elif len(X) == n + 1:
        simplices = np.arange(n + 1)[None]
    else:
        Y = np.c_[X, _generic_convex_lift(X)]
        simp, nrm, _ = convex_hull(Y)
        simplices = simp[nrm[:, -1] < -TAU_DOWN]
    normal = np.append(coef[:-1], -1.0)
    norm = np.linalg.norm(normal)
    normals = np.tile(normal / norm, (len(simplices), 1))
    offsets = np.full(len(simplices), -coef[-1] / norm)
    return simplices, normals, offsets


def build_lower_envelope(points, values) -> LowerEnvelope:
    """Lower convex envelope of the graph ``{(points[i], values[i])}``.

    When the graph points lie exactly on one non-vertical hyperplane the
    envelope is that affine function over a triangulation of ``conv(points)``.
    ``DegenerateInput`` is raised when ``points`` themselves do not span
    ``R^n``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    h = np.asarray(values, dtype=float).reshape(-1)
    if X.shape[0] != h.shape[0]:
        raise ValueError("points and values have different lengths")
    if not np.all(np.isfinite(h)):
        raise ValueError("values must be finite; drop infinite rows first")
    n = X.shape[1]
    if X.shape[0] < n + 1:
        raise DegenerateInput(f"need at least {n + 1} points in {n} dimensions")
    lo, hi = X.min(axis=0), X.max(axis=0)
    Z = (X - 0.5 * (lo + hi)) / np.where(hi > lo, 0.5 * (hi - lo), 1.0)
    sv = np.linalg.svd(Z - Z.mean(axis=0), compute_uv=False)
    if np.any(hi <= lo) or sv[-1] <= TAU_VIS_REL * max(1.0, sv[0]) * np.sqrt(len(X)):
        raise DegenerateInput("points do not span their ambient space")
    try:
        simplices, normals, offsets = convex_hull(np.c_[X, h])
    except DegenerateInput:
        simplices, normals, offsets = _affine_envelope(X, h)
    lower = normals[:, -1] < -TAU_DOWN
    return LowerEnvelope.from_simplices(X, h, simplices[lower], normals[lower], offsets[lower])


def evaluate_envelope(env: LowerEnvelope, x) -> EnvelopeValue:
    return env.evaluate(x)
