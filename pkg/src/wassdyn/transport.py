"""Exact Wasserstein distances between discrete measures.

The general solver is a network simplex on the complete bipartite transportation graph,
started from the northwest-corner basis. Degenerate pivots are not broken by a lexicographic
perturbation of the supplies: once a run of degenerate pivots exceeds m + n the entering rule
switches from most negative reduced cost to Bland's rule (first improving cell), which
cannot cycle.
One-dimensional inputs have a closed form through the quantile coupling. The W_1 dual
(Kantorovich-Rubinstein) potentials are read off the optimal simplex basis.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from wassdyn.errors import DimensionMismatchError, MeasureValidationError, SolverError, SupportTooLargeError
from wassdyn.measure import DiscreteMeasure, _check_p

logger = logging.getLogger(__name__)

# Largest m*n handled by the exact solver.
EXACT_LIMIT = 250_000
BRUTE_FORCE_LIMIT = 7

Method = Literal["auto", "exact", "1d", "dual"]


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Coupling ``gamma`` between ``mu`` (rows) and ``nu`` (columns)."""

    gamma: NDArray[np.float64]
    row_marginal: NDArray[np.float64]
    col_marginal: NDArray[np.float64]
    cost: float
    p: float

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.gamma.shape[0]), int(self.gamma.shape[1]))

    def marginal_error(self) -> float:
        rows = np.abs(self.gamma.sum(axis=1) - self.row_marginal).max()
        cols = np.abs(self.gamma.sum(axis=0) - self.col_marginal).max()
        return float(max(rows, cols))

    def to_rows(self, tol: float = 0.0) -> list[tuple[int, int, float]]:
        """Nonzero entries as ``(i, j, gamma_ij)`` in row-major order."""
        ii, jj = np.nonzero(self.gamma > tol)
        return [(int(i), int(j), float(self.gamma[i, j])) for i, j in zip(ii, jj, strict=True)]


@dataclass(frozen=True, eq=False)
class DualPotentials:
    """W_1 potentials: ``phi_i - psi_j <= |x_i - y_j|`` on the joint support."""

    phi: NDArray[np.float64]
    psi: NDArray[np.float64]

    def max_violation(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        c = cost_matrix(mu.locations, nu.locations, 1.0)
        slack = self.phi[:, None] - self.psi[None, :] - c
        return float(max(0.0, slack.max()))


def cost_matrix(x: NDArray[np.float64], y: NDArray[np.float64], p: float) -> NDArray[np.float64]:
    """``|x_i - y_j|^p`` for Euclidean norm."""
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchError(x.shape[1], y.shape[1], "measure")
    if x.shape[1] == 1:
        d = np.abs(x[:, 0][:, None] - y[:, 0][None, :])
    else:
        d = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
    return d if p == 1.0 else d**p


# --------------------------------------------------------------------------- network simplex


@dataclass
class _SimplexResult:
    flow: NDArray[np.float64]
    u: NDArray[np.float64]
    v: NDArray[np.float64]
    pivots: int


def _northwest_corner(a: NDArray[np.float64], b: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    m, n = a.shape[0], b.shape[0]
    flow = np.zeros((m, n))
    basic = np.zeros((m, n), dtype=bool)
    ra = a.copy()
    rb = b.copy()
    i = j = 0
    while True:
        x = min(ra[i], rb[j])
        flow[i, j] = x
        basic[i, j] = True
        ra[i] -= x
        rb[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return flow, basic


def _tree_walk(basic: NDArray[np.bool_], root: int) -> tuple[NDArray[np.int64], list[int]]:
    """BFS over the basis tree. Nodes ``0..m-1`` are rows, ``m..m+n-1`` columns."""
    m, n = basic.shape
    parent = np.full(m + n, -2, dtype=np.int64)
    parent[root] = -1
    order = [root]
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node < m:
            nbrs = np.flatnonzero(basic[node]) + m
        else:
            nbrs = np.flatnonzero(basic[:, node - m])
        for nb in nbrs:
            if parent[nb] == -2:
                parent[nb] = node
                order.append(int(nb))
                queue.append(int(nb))
    if len(order) != m + n:
        raise SolverError("basis is not a spanning tree")
    return parent, order


def _potentials(basic: NDArray[np.bool_], c: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    m, n = basic.shape
    parent, order = _tree_walk(basic, 0)
    u = np.zeros(m)
    v = np.zeros(n)
    for node in order[1:]:
        par = int(parent[node])
        if node >= m:
            v[node - m] = c[par, node - m] - u[par]
        else:
            u[node] = c[node, par - m] - v[par - m]
    return u, v


def _network_simplex(a: NDArray[np.float64], b: NDArray[np.float64], c: NDArray[np.float64]) -> _SimplexResult:
    m, n = c.shape
    flow, basic = _northwest_corner(a, b)
    scale = max(1.0, float(np.abs(c).max()))
    tol = 1e-12 * scale
    max_pivots = 50 * m * n + 1000
    degenerate_run = 0
    bland = False
    pivots = 0

    while True:
        u, v = _potentials(basic, c)
        if m == 1 or n == 1:
            return _SimplexResult(flow, u, v, pivots)
        reduced = c - u[:, None] - v[None, :]
        reduced[basic] = 0.0
        if bland:
            candidates = np.flatnonzero(reduced.ravel() < -tol)
            if candidates.size == 0:
                return _SimplexResult(flow, u, v, pivots)
            k = int(candidates[0])
        else:
            k = int(np.argmin(reduced))
            if reduced.flat[k] >= -tol:
                return _SimplexResult(flow, u, v, pivots)
        ie, je = divmod(k, n)

        # Cycle: entering cell plus the tree path from column je back to row ie.
        parent, _ = _tree_walk(basic, ie)
        path: list[tuple[int, int]] = []
        node = je + m
        while node != ie:
            par = int(parent[node])
            path.append((par, node - m) if node >= m else (node, par - m))
            node = par
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[i, j] for i, j in minus)
        leaving = min((i, j) for i, j in minus if flow[i, j] == theta)

        for i, j in plus:
            flow[i, j] += theta
        for i, j in minus:
            flow[i, j] -= theta
        flow[leaving] = 0.0
        basic[leaving] = False
        flow[ie, je] = theta
        basic[ie, je] = True

        pivots += 1
        if theta == 0.0:
            degenerate_run += 1
            if not bland and degenerate_run > m + n:
                logger.debug("switching to Bland's rule after %d degenerate pivots", degenerate_run)
                bland = True
        else:
            degenerate_run = 0
        if pivots > max_pivots:
            raise SolverError(f"network simplex exceeded {max_pivots} pivots on a {m}x{n} instance")


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if mu.dim != nu.dim:
        raise DimensionMismatchError(mu.dim, nu.dim, "measure")


def _solve(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> tuple[_SimplexResult, NDArray[np.float64]]:
    _check_pair(mu, nu)
    _check_p(p)
    cells = mu.size * nu.size
    if cells > EXACT_LIMIT:
        raise SupportTooLargeError(cells, EXACT_LIMIT)
    a = np.array(mu.weights)
    b = np.array(nu.weights) * (a.sum() / nu.weights.sum())
    c = cost_matrix(mu.locations, nu.locations, p)
    res = _network_simplex(a, b, c)
    logger.debug("network simplex %dx%d solved in %d pivots", mu.size, nu.size, res.pivots)
    return res, c


def wasserstein_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> tuple[float, TransportPlan]:
    """Exact ``w_p(mu, nu)`` and an optimal plan.

    Raises:
        DimensionMismatchError: measures live in different dimensions.
        SupportTooLargeError: ``mu.size * nu.size`` exceeds ``EXACT_LIMIT``.

    """
    res, c = _solve(mu, nu, p)
    cost = max(0.0, float(np.sum(res.flow * c)))
    plan = TransportPlan(
        gamma=res.flow,
        row_marginal=np.array(mu.weights),
        col_marginal=np.array(nu.weights),
        cost=cost,
        p=p,
    )
    return cost ** (1.0 / p), plan


def kr_dual(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, DualPotentials]:
    """W_1 through the Kantorovich-Rubinstein dual.

    Potentials come from the optimal basis (``u_i + v_j = |x_i - y_j|`` on basic cells) with
    ``phi = u`` and ``psi = -v``, shifted so that both weighted sums are equal.
    """
    res, _ = _solve(mu, nu, 1.0)
    a = mu.weights
    b = nu.weights
    shift = (float(b @ res.v) - float(a @ res.u)) / 2.0
    phi = res.u + shift
    psi = -(res.v - shift)
    value = float(a @ phi - b @ psi)
    return value, DualPotentials(phi=phi, psi=psi)


# --------------------------------------------------------------------------- 1-D closed form


def _quantile_pieces(
    mu: DiscreteMeasure, nu: DiscreteMeasure
) -> tuple[NDArray[np.float64], NDArray[np.int64], NDArray[np.int64]]:
    if mu.dim != 1 or nu.dim != 1:
        raise MeasureValidationError(f"quantile coupling needs 1-D measures, got dims {mu.dim} and {nu.dim}")
    ca = np.cumsum(mu.weights)
    cb = np.cumsum(nu.weights)
    ca[-1] = 1.0
    cb[-1] = 1.0
    qs = np.union1d(ca, cb)
    prev = np.concatenate(([0.0], qs[:-1]))
    dq = qs - prev
    mid = 0.5 * (qs + prev)
    ia = np.minimum(np.searchsorted(ca, mid, side="left"), mu.size - 1)
    ib = np.minimum(np.searchsorted(cb, mid, side="left"), nu.size - 1)
    return dq, ia, ib


def wasserstein_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> float:
    """``(int_0^1 |F_mu^-1(q) - F_nu^-1(q)|^p dq)^(1/p)`` by merging cumulative weights."""
    _check_p(p)
    dq, ia, ib = _quantile_pieces(mu, nu)
    gap = np.abs(mu.locations[ia, 0] - nu.locations[ib, 0])
    cost = float(np.dot(dq, gap**p))
    return max(0.0, cost) ** (1.0 / p)


def plan_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> TransportPlan:
    """The monotone (quantile) coupling, optimal for every ``p >= 1`` on the line."""
    _check_p(p)
    dq, ia, ib = _quantile_pieces(mu, nu)
    gamma = np.zeros((mu.size, nu.size))
    np.add.at(gamma, (ia, ib), dq)
    gap = np.abs(mu.locations[ia, 0] - nu.locations[ib, 0])
    return TransportPlan(
        gamma=gamma,
        row_marginal=np.array(mu.weights),
        col_marginal=np.array(nu.weights),
        cost=float(np.dot(dq, gap**p)),
        p=p,
    )


# --------------------------------------------------------------------------- oracle


def brute_force_wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> float:
    """Minimum assignment cost over all permutations; uniform measures of equal size only."""
    _check_pair(mu, nu)
    _check_p(p)
    n = mu.size
    if nu.size != n:
        raise MeasureValidationError(f"brute force needs equal support sizes, got {n} and {nu.size}")
    if n > BRUTE_FORCE_LIMIT:
        raise SupportTooLargeError(n, BRUTE_FORCE_LIMIT)
    for w in (mu.weights, nu.weights):
        if not np.allclose(w, 1.0 / n, rtol=0.0, atol=1e-12):
            raise MeasureValidationError("brute force needs uniform weights")
    c = cost_matrix(mu.locations, nu.locations, p)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    totals = c[np.arange(n)[None, :], perms].sum(axis=1)
    return float(totals.min() / n) ** (1.0 / p)


# --------------------------------------------------------------------------- dispatcher


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 1.0, method: Method = "auto") -> float:
    """``w_p(mu, nu)``; ``auto`` uses the quantile formula on the line and the simplex otherwise."""
    _check_pair(mu, nu)
    if method == "auto":
        method = "1d" if mu.dim == 1 else "exact"
    if method == "1d":
        return wasserstein_1d(mu, nu, p)
    if method == "exact":
        return wasserstein_exact(mu, nu, p)[0]
    if method == "dual":
        if not math.isclose(p, 1.0):
            raise MeasureValidationError("the dual method computes w_1 only")
        return kr_dual(mu, nu)[0]
    raise MeasureValidationError(f"unknown method {method!r}")
