"""Discrete probability measures on R^d with the Euclidean metric.

A ``DiscreteMeasure`` is a finite weighted point cloud. Locations are stored as an ``(n, d)``
array in canonical (lexicographic) order with duplicates merged; weights are positive and
sum to one. Both arrays are read-only, so measures can be shared freely between threads.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from wassdyn.errors import DimensionMismatchError, MeasureConstructionError, MeasureValidationError

logger = logging.getLogger(__name__)

Point = NDArray[np.float64]

MERGE_TOL = 1e-12
# Above this multiple of the cap, compression first coarsens on a uniform grid.
PREBIN_FACTOR = 4


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure ``sum_i w_i delta_{x_i}``."""

    locations: NDArray[np.float64]
    weights: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return int(self.locations.shape[1])

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def atoms(self) -> list[tuple[Point, float]]:
        return [(self.locations[i], float(self.weights[i])) for i in range(self.size)]

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        if self.size <= 4:
            body = ", ".join(f"{w:.6g}@{_fmt_point(x)}" for x, w in self.atoms)
        else:
            body = f"{self.size} atoms"
        return f"DiscreteMeasure(dim={self.dim}, {body})"

    def allclose(self, other: DiscreteMeasure, atol: float = 1e-12) -> bool:
        """Atom-for-atom comparison of two canonical measures."""
        if self.dim != other.dim or self.size != other.size:
            return False
        return bool(
            np.allclose(self.locations, other.locations, rtol=0.0, atol=atol)
            and np.allclose(self.weights, other.weights, rtol=0.0, atol=atol)
        )

    def mass_at(self, point: ArrayLike, tol: float = 1e-9) -> float:
        """Total weight of atoms within ``tol`` of ``point``."""
        x = as_point(point, self.dim)
        d = np.linalg.norm(self.locations - x, axis=1)
        return float(self.weights[d <= tol].sum())

    def to_rows(self) -> list[list[float]]:
        """``[weight, x1, ..., xd]`` rows, the layout of the measure file format."""
        return [[float(w), *map(float, x)] for x, w in self.atoms]


def _fmt_point(x: Point) -> str:
    if x.shape[0] == 1:
        return f"{x[0]:.6g}"
    return "(" + ",".join(f"{c:.6g}" for c in x) + ")"


def as_point(x: ArrayLike, dim: int | None = None) -> Point:
    """Coerce a scalar or sequence into a finite 1-D float array."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise MeasureValidationError(f"a point must be a scalar or a flat vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MeasureValidationError(f"non-finite coordinate in point {arr.tolist()}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(dim, arr.shape[0])
    return arr


def as_points(xs: ArrayLike, dim: int | None = None) -> NDArray[np.float64]:
    """Coerce a list of points into an ``(n, d)`` array; a flat list is read as 1-D points."""
    arr = np.asarray(xs, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise MeasureValidationError(f"point list must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MeasureValidationError("non-finite coordinate in point list")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatchError(dim, arr.shape[1])
    return arr


def measure_from_arrays(locations: ArrayLike, weights: ArrayLike) -> DiscreteMeasure:
    """Vectorized constructor: validate, drop zero weights, merge duplicates, renormalize."""
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    x = np.asarray(locations, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if x.shape[0] == w.shape[0] else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[0] != w.shape[0]:
        raise MeasureValidationError(
            f"locations of shape {x.shape} do not match {w.shape[0]} weights"
        )
    if x.shape[0] == 0:
        raise MeasureConstructionError("a measure needs at least one atom")
    if x.shape[1] < 1:
        raise MeasureValidationError("dimension must be at least 1")
    if not np.all(np.isfinite(w)):
        raise MeasureValidationError("non-finite weight")
    if not np.all(np.isfinite(x)):
        raise MeasureValidationError("non-finite coordinate")
    if np.any(w < 0):
        raise MeasureValidationError(f"negative weight {float(w.min())}")

    keep = w > 0
    if not np.any(keep):
        raise MeasureConstructionError("every weight is zero")
    x = x[keep]
    w = w[keep]

    order = np.lexsort(x.T[::-1])
    x = x[order]
    w = w[order]
    if x.shape[0] > 1:
        step = np.linalg.norm(np.diff(x, axis=0), axis=1)
        starts = np.concatenate(([True], step >= MERGE_TOL))
        if not np.all(starts):
            idx = np.flatnonzero(starts)
            w = np.add.reduceat(w, idx)
            x = x[idx]

    total = w.sum()
    w = w / total
    x = np.ascontiguousarray(x)
    x.setflags(write=False)
    w.setflags(write=False)
    return DiscreteMeasure(locations=x, weights=w)


def new_measure(atoms: Iterable[tuple[ArrayLike, float]]) -> DiscreteMeasure:
    """Build a measure from ``(location, weight)`` pairs.

    Zero-weight atoms are dropped, atoms closer than 1e-12 merged and weights renormalized.

    Raises:
        MeasureConstructionError: no atoms, or all weights zero.
        MeasureValidationError: NaN/inf, negative weights, mixed dimensions.

    """
    pairs = list(atoms)
    if not pairs:
        raise MeasureConstructionError("a measure needs at least one atom")
    points = [as_point(loc) for loc, _ in pairs]
    dims = {p.shape[0] for p in points}
    if len(dims) != 1:
        raise MeasureValidationError(f"atoms have inconsistent dimensions {sorted(dims)}")
    weights = np.array([float(w) for _, w in pairs], dtype=np.float64)
    return measure_from_arrays(np.vstack(points), weights)


def dirac(x: ArrayLike) -> DiscreteMeasure:
    p = as_point(x)
    return measure_from_arrays(p.reshape(1, -1), [1.0])


def uniform_measure(points: ArrayLike) -> DiscreteMeasure:
    """Equal weights on the given points (duplicates merged)."""
    x = as_points(points)
    return measure_from_arrays(x, np.full(x.shape[0], 1.0 / x.shape[0]))


def uniform_grid_measure(low: float, high: float, n: int) -> DiscreteMeasure:
    """``n`` equally weighted atoms evenly spaced on ``[low, high]`` (1-D)."""
    if n < 1:
        raise MeasureConstructionError("grid needs at least one atom")
    return uniform_measure(np.linspace(low, high, n).reshape(-1, 1))


def empirical_measure(mu: DiscreteMeasure, n: int, seed: int) -> DiscreteMeasure:
    """Empirical measure of ``n`` seeded i.i.d. draws from ``mu``.

    Used to subsample a measure whose support is too large for the exact solver.
    """
    if n < 1:
        raise MeasureConstructionError("empirical measure needs at least one draw")
    rng = np.random.default_rng(seed)
    idx = rng.choice(mu.size, size=n, replace=True, p=mu.weights)
    return measure_from_arrays(mu.locations[idx], np.full(n, 1.0 / n))


def moment_p(mu: DiscreteMeasure, x0: ArrayLike, p: float) -> float:
    """``sum_i w_i |x_i - x0|^p``, the p-th power of ``w_p(mu, delta_x0)``."""
    _check_p(p)
    x = as_point(x0, mu.dim)
    d = np.linalg.norm(mu.locations - x, axis=1)
    return float(np.dot(mu.weights, d**p))


def mix(first: DiscreteMeasure, second: DiscreteMeasure, t: float) -> DiscreteMeasure:
    """Convex combination ``t * first + (1 - t) * second``.

    Endpoints are exact: ``t = 0`` returns ``second``'s atoms only, ``t = 1`` ``first``'s.
    """
    if not (0.0 <= t <= 1.0) or math.isnan(t):
        raise MeasureValidationError(f"mixing parameter must lie in [0, 1], got {t}")
    if first.dim != second.dim:
        raise DimensionMismatchError(first.dim, second.dim, "measure")
    if t == 0.0:
        return second
    if t == 1.0:
        return first
    locs = np.vstack((first.locations, second.locations))
    w = np.concatenate((t * first.weights, (1.0 - t) * second.weights))
    return measure_from_arrays(locs, w)


def mix_many(parts: Sequence[tuple[DiscreteMeasure, float]]) -> DiscreteMeasure:
    """``sum_k c_k mu_k`` for nonnegative coefficients (renormalized)."""
    if not parts:
        raise MeasureConstructionError("nothing to mix")
    dim = parts[0][0].dim
    for mu, _ in parts:
        if mu.dim != dim:
            raise DimensionMismatchError(dim, mu.dim, "measure")
    locs = np.vstack([mu.locations for mu, _ in parts])
    w = np.concatenate([c * mu.weights for mu, c in parts])
    return measure_from_arrays(locs, w)


def distance_to_set(points: ArrayLike, anchors: ArrayLike) -> NDArray[np.float64]:
    """Euclidean distance from each point to the nearest anchor."""
    x = np.asarray(points, dtype=np.float64)
    a = np.asarray(anchors, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, x.shape[1] if x.ndim == 2 else 1)
    if x.ndim == 1:
        x = x.reshape(-1, a.shape[1])
    if a.shape[0] == 0:
        raise MeasureValidationError("anchor set must be nonempty")
    if a.shape[1] != x.shape[1]:
        raise DimensionMismatchError(x.shape[1], a.shape[1], "anchor")
    out = np.empty(x.shape[0], dtype=np.float64)
    block = max(1, 2_000_000 // max(1, a.shape[0] * a.shape[1]))
    for start in range(0, x.shape[0], block):
        chunk = x[start : start + block]
        d = np.linalg.norm(chunk[:, None, :] - a[None, :, :], axis=2)
        out[start : start + block] = d.min(axis=1)
    return out


def tail_mass(mu: DiscreteMeasure, anchor_set: ArrayLike, R: float) -> float:
    """Weight of the atoms farther than ``R`` from the anchor set."""
    if R < 0:
        raise MeasureValidationError(f"radius must be nonnegative, got {R}")
    d = distance_to_set(mu.locations, as_points(anchor_set, mu.dim))
    return float(mu.weights[d > R].sum())


def barycenter(mu: DiscreteMeasure) -> Point:
    return np.asarray(mu.weights @ mu.locations, dtype=np.float64)


def support_diameter(mu: DiscreteMeasure) -> float:
    if mu.size == 1:
        return 0.0
    if mu.dim == 1:
        return float(mu.locations[-1, 0] - mu.locations[0, 0])
    lo = mu.locations.min(axis=0)
    hi = mu.locations.max(axis=0)
    # Bounding-box diagonal: an upper bound, exact enough for residual envelopes.
    return float(np.linalg.norm(hi - lo))


# --------------------------------------------------------------------------- compression


def compress(mu: DiscreteMeasure, max_support: int, p: float = 1.0) -> tuple[DiscreteMeasure, float]:
    """Reduce the support to at most ``max_support`` atoms by barycentric merging.

    Closest pairs are merged greedily (lowest index on ties). Supports larger than
    ``PREBIN_FACTOR * max_support`` are first coarsened on a uniform grid.

    Returns:
        The compressed measure and an upper bound on ``w_p(mu, compressed)``: the cost of
        the plan sending every input atom to the barycenter it was merged into.

    """
    if max_support < 1:
        raise MeasureValidationError(f"max_support must be >= 1, got {max_support}")
    _check_p(p)
    if mu.size <= max_support:
        return mu, 0.0

    x = np.array(mu.locations)
    w = np.array(mu.weights)
    label = np.arange(x.shape[0])

    if x.shape[0] > PREBIN_FACTOR * max_support:
        cells = _grid_cells(x, PREBIN_FACTOR * max_support)
        _, inverse = np.unique(cells, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        x, w = _group_barycenters(x, w, inverse)
        label = inverse

    if x.shape[0] > max_support:
        if x.shape[1] == 1:
            x, w, owner = _greedy_merge_1d(x, w, max_support)
        else:
            x, w, owner = _greedy_merge_dense(x, w, max_support)
        label = owner[label]

    moved = np.linalg.norm(mu.locations - x[label], axis=1)
    cost = float(np.dot(mu.weights, moved**p))
    out = measure_from_arrays(x, w)
    bound = cost ** (1.0 / p)
    logger.debug("compressed %d -> %d atoms, w_%g bound %.3e", mu.size, out.size, p, bound)
    return out, bound


def _grid_cells(x: NDArray[np.float64], target: int) -> NDArray[np.int64]:
    d = x.shape[1]
    per_axis = max(1, int(math.floor(target ** (1.0 / d))))
    lo = x.min(axis=0)
    width = (x.max(axis=0) - lo) / per_axis
    width[width <= 0] = 1.0
    idx = np.floor((x - lo) / width).astype(np.int64)
    return np.clip(idx, 0, per_axis - 1)


def _group_barycenters(
    x: NDArray[np.float64], w: NDArray[np.float64], groups: NDArray[np.int64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    k = int(groups.max()) + 1
    gw = np.bincount(groups, weights=w, minlength=k)
    gx = np.column_stack([np.bincount(groups, weights=w * x[:, j], minlength=k) for j in range(x.shape[1])])
    return gx / gw[:, None], gw


def _resolve(parent: NDArray[np.int64]) -> NDArray[np.int64]:
    while True:
        nxt = parent[parent]
        if np.array_equal(nxt, parent):
            return parent
        parent = nxt


def _greedy_merge_1d(
    x: NDArray[np.float64], w: NDArray[np.float64], cap: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.int64]]:
    order = np.argsort(x[:, 0], kind="stable")
    pos = x[order, 0].copy()
    wt = w[order].copy()
    ids = order.copy()
    parent = np.arange(x.shape[0])
    gaps = np.diff(pos)
    while pos.shape[0] > cap:
        k = int(np.argmin(gaps))
        total = wt[k] + wt[k + 1]
        pos[k] = (wt[k] * pos[k] + wt[k + 1] * pos[k + 1]) / total
        wt[k] = total
        parent[ids[k + 1]] = ids[k]
        pos = np.delete(pos, k + 1)
        wt = np.delete(wt, k + 1)
        ids = np.delete(ids, k + 1)
        gaps = np.delete(gaps, k)
        if k > 0:
            gaps[k - 1] = pos[k] - pos[k - 1]
        if k < gaps.shape[0]:
            gaps[k] = pos[k + 1] - pos[k]
    return _finish_merge(x.shape[0], pos.reshape(-1, 1), wt, ids, parent)


def _greedy_merge_dense(
    x: NDArray[np.float64], w: NDArray[np.float64], cap: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.int64]]:
    n = x.shape[0]
    pos = x.copy()
    wt = w.copy()
    parent = np.arange(n)
    active = np.ones(n, dtype=bool)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    remaining = n
    while remaining > cap:
        flat = int(np.argmin(dist))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        total = wt[i] + wt[j]
        pos[i] = (wt[i] * pos[i] + wt[j] * pos[j]) / total
        wt[i] = total
        parent[j] = i
        active[j] = False
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        row = np.linalg.norm(pos - pos[i], axis=1)
        row[~active] = np.inf
        row[i] = np.inf
        dist[i, :] = row
        dist[:, i] = row
        remaining -= 1
    ids = np.flatnonzero(active)
    return _finish_merge(n, pos[ids], wt[ids], ids, parent)


def _finish_merge(
    n: int,
    pos: NDArray[np.float64],
    wt: NDArray[np.float64],
    ids: NDArray[np.int64],
    parent: NDArray[np.int64],
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.int64]]:
    root = _resolve(parent)
    slot = np.full(n, -1, dtype=np.int64)
    slot[ids] = np.arange(ids.shape[0])
    return pos, wt, slot[root]


# --------------------------------------------------------------------------- file format


def parse_measure_text(text: str, *, source: str = "<string>") -> DiscreteMeasure:
    """Parse ``weight x1 [x2 ... xd]`` lines; ``#`` starts a comment."""
    atoms: list[tuple[list[float], float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 2:
            raise MeasureValidationError(f"{source}:{lineno}: expected 'weight x1 [x2 ...]'")
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise MeasureValidationError(f"{source}:{lineno}: {exc}") from exc
        atoms.append((values[1:], values[0]))
    return new_measure(atoms)


def load_measure(path: str | Path) -> DiscreteMeasure:
    p = Path(path)
    return parse_measure_text(p.read_text(encoding="utf-8"), source=str(p))


def format_measure(mu: DiscreteMeasure, header: str | None = None) -> str:
    lines = [f"# {line}" for line in (header or "").splitlines() if line]
    for row in mu.to_rows():
        lines.append(" ".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def save_measure(mu: DiscreteMeasure, path: str | Path, header: str | None = None) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_measure(mu, header), encoding="utf-8")
    return p


def measure_from_json(obj: Any) -> DiscreteMeasure:
    """Inline measure from config documents.

    Accepted shapes: ``[[w, x1, ...], ...]``, ``{"dirac": [x...]}``,
    ``{"uniform_grid": {"low": a, "high": b, "n": k}}``, ``{"uniform": [[x...], ...]}``.
    """
    if isinstance(obj, list):
        atoms = []
        for row in obj:
            vals = [float(v) for v in row]
            if len(vals) < 2:
                raise MeasureValidationError(f"inline atom {row!r} needs a weight and coordinates")
            atoms.append((vals[1:], vals[0]))
        return new_measure(atoms)
    if isinstance(obj, dict) and len(obj) == 1:
        (kind, body), = obj.items()
        if kind == "dirac":
            return dirac(body)
        if kind == "uniform":
            return uniform_measure(body)
        if kind == "uniform_grid":
            return uniform_grid_measure(float(body["low"]), float(body["high"]), int(body["n"]))
    raise MeasureValidationError(f"unrecognized inline measure {obj!r}")


def _check_p(p: float) -> None:
    if not (p >= 1.0) or math.isinf(p):
        raise MeasureValidationError(f"order p must be a finite real >= 1, got {p}")
