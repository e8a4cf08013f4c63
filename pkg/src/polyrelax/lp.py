"""Pointwise envelope evaluation by a dense revised simplex method.

The envelope of a sampled graph at ``x_hat`` is the optimal value of

    min  sum_i xi_i h_i
    s.t. sum_i xi_i = 1,  sum_i xi_i x_i = x_hat,  xi >= 0,

and an optimal basic solution is a barycentric certificate with at most
``n + 1`` nonzero weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import IterationLimit

FEAS_TOL = 1e-9
OPT_TOL = 1e-11
PIVOT_TOL = 1e-11
REFACTOR_EVERY = 50


@dataclass
class LpSolution:
    value: float
    weights: dict = field(default_factory=dict)
    status: str = "optimal"
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Simplex:
    """Revised simplex on ``min c x, A x = b, x >= 0`` with an explicit basis inverse."""

    def __init__(self, A, b, c, max_iter):
        self.A = A
        self.m, self.N = A.shape
        self.b = b
        self.c = c
        self.max_iter = max_iter
        self.iterations = 0
        # artificial columns are identity columns with ids N .. N+m-1
        self.basis = np.arange(self.N, self.N + self.m)
        self.Binv = np.eye(self.m)
        self.xB = b.copy()

    def column(self, j):
        if j < self.N:
            return self.A[:, j]
        e = np.zeros(self.m)
        e[j - self.N] = 1.0
        return e

    def refactor(self):
        B = np.column_stack([self.column(j) for j in self.basis])
        self.Binv = np.linalg.inv(B)
        self.xB = self.Binv @ self.b
        self.xB[np.abs(self.xB) < 1e-15] = 0.0

    def pivot(self, r, j, u):
        self.Binv[r] /= u[r]
        others = np.arange(self.m) != r
        self.Binv[others] -= np.outer(u[others], self.Binv[r])
        theta = self.xB[r] / u[r]
        self.xB[others] -= theta * u[others]
        self.xB[r] = theta
        self.basis[r] = j

    def run(self, cost):
        """Iterate to optimality for structural costs ``cost`` (artificials cost via ``cost_art``)."""
        cscale = max(1.0, float(np.abs(cost[: self.N]).max(initial=0.0)))
        degenerate = 0
        bland = False
        since_refactor = 0
        while True:
            cB = cost[self.basis]
            y = cB @ self.Binv
            red = (cost[: self.N] - y @ self.A) / cscale
            red[self.basis[self.basis < self.N]] = 0.0
            if bland:
                neg = np.flatnonzero(red < -OPT_TOL)
                if neg.size == 0:
                    return
                j = int(neg[0])
            else:
                j = int(np.argmin(red))
                if red[j] >= -OPT_TOL:
                    return
            u = self.Binv @ self.A[:, j]
            pos = np.flatnonzero(u > PIVOT_TOL)
            if pos.size == 0:
                raise RuntimeError("LP is unbounded; the convexity row makes this impossible")
            ratios = np.maximum(self.xB[pos], 0.0) / u[pos]
            best = ratios.min()
            ties = pos[ratios <= best + FEAS_TOL * 1e-3]
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(u[ties])])
            if best <= FEAS_TOL:
                degenerate += 1
                if degenerate > 10 * self.m:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self.pivot(r, j, u)
            self.iterations += 1
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0
            if self.iterations > self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} pivots")

    def drive_out_artificials(self):
        for r in range(self.m):
            if self.basis[r] < self.N:
                continue
            row = self.Binv[r] @ self.A
            row[self.basis[self.basis < self.N]] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-9:
                self.pivot(r, j, self.Binv @ self.A[:, j])


def solve_lp(A, b, c, max_iter=None):
    """Solve ``min c x, A x = b, x >= 0`` by two-phase revised simplex.

    Returns ``(status, x, iterations)`` with status ``"optimal"`` or
    ``"infeasible"``.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, N = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    if max_iter is None:
        max_iter = 50 * (m + N)
    lp = _Simplex(A, b, c, max_iter)

    phase1 = np.concatenate([np.zeros(N), np.ones(m)])
    lp.run(phase1)
    lp.refactor()
    infeas = float(np.sum(lp.xB[lp.basis >= N]))
    if infeas > FEAS_TOL * max(1.0, np.abs(b).max()):
        return "infeasible", None, lp.iterations
    lp.drive_out_artificials()
    lp.refactor()

    phase2 = np.concatenate([c, np.zeros(m)])
    lp.run(phase2)
    lp.refactor()
    x = np.zeros(N)
    structural = lp.basis < N
    x[lp.basis[structural]] = np.clip(lp.xB[structural], 0.0, None)
    return "optimal", x, lp.iterations


def row_scales(points, degrees=None, radius=None):
    """Per-coordinate divisor: ``radius ** degree`` when known, else the column maximum."""
    points = np.asarray(points, dtype=float)
    if degrees is not None and radius is not None:
        return float(radius) ** np.asarray(degrees, dtype=float)
    s = np.abs(points).max(axis=0)
    return np.where(s > 0, s, 1.0)


def envelope_lp(points, values, x_hat, degrees=None, radius=None, max_iter=None) -> LpSolution:
    """Envelope value at ``x_hat`` of the graph ``(points, values)`` by linear programming."""
    X = np.asarray(points, dtype=float)
    h = np.asarray(values, dtype=float).reshape(-1)
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty (N, n) array of points")
    if X.shape[1] != x_hat.shape[0]:
        raise ValueError(f"query has dimension {x_hat.shape[0]}, points have {X.shape[1]}")
    if not np.all(np.isfinite(h)):
        raise ValueError("costs must be finite")
    s = row_scales(X, degrees, radius)
    A = np.vstack([X.T / s[:, None], np.ones(X.shape[0])])
    b = np.append(x_hat / s, 1.0)
    status, xi, iters = solve_lp(A, b, h, max_iter=max_iter)
    if status != "optimal":
        return LpSolution(np.inf, {}, "infeasible", iters)
    support = np.flatnonzero(xi > 0.0)
    weights = {int(i): float(xi[i]) for i in support}
    return LpSolution(float(xi[support] @ h[support]), weights, "optimal", iters)


def pointwise_envelope_lp(graph, x_hat, max_iter=None) -> LpSolution:
    """Envelope of a :class:`~polyrelax.lattice.SampledGraph` at the lifted point ``x_hat``."""
    return envelope_lp(graph.lifted, graph.values, x_hat,
                       degrees=graph.degrees, radius=graph.radius, max_iter=max_iter)
