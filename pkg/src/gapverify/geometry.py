"""Convex domains, their rasterization to uniform grids, and node-pair sampling.

A :class:`DomainSpec` describes the continuum domain; :func:`build_grid`
rasterizes it to a node-centered lattice (Dirichlet problems) and
:func:`build_cell_grid` to a cell-centered lattice (Neumann problems on boxes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import EmptyInterior, NoAdmissibleNodes, NonConvex

KINDS = ("interval", "rectangle", "disk", "ellipse", "convex-polygon")

_REL_TOL = 1e-12


@dataclass(frozen=True)
class DomainSpec:
    """A bounded convex domain in one or two dimensions.

    Use the ``interval``/``rectangle``/``disk``/``ellipse``/``polygon``
    constructors rather than the raw initializer. Box kinds store their lower
    corner in ``lo`` and side lengths in ``sides``; round kinds store
    ``center`` and semi-axes in ``axes``.
    """

    kind: str
    lo: tuple = ()
    sides: tuple = ()
    center: tuple = ()
    axes: tuple = ()
    vertices: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        for s in self.sides + self.axes:
            if not s > 0:
                raise ValueError("all size parameters must be positive")
        if self.kind == "convex-polygon":
            _check_convex(np.asarray(self.vertices, dtype=float))

    # constructors -------------------------------------------------------
    @classmethod
    def interval(cls, a: float, b: float) -> "DomainSpec":
        return cls("interval", lo=(float(a),), sides=(float(b) - float(a),))

    @classmethod
    def rectangle(cls, width: float, height: float, origin=(0.0, 0.0)) -> "DomainSpec":
        return cls("rectangle", lo=tuple(float(o) for o in origin),
                   sides=(float(width), float(height)))

    @classmethod
    def disk(cls, radius: float, center=(0.0, 0.0)) -> "DomainSpec":
        r = float(radius)
        return cls("disk", center=tuple(float(c) for c in center), axes=(r, r))

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0)) -> "DomainSpec":
        return cls("ellipse", center=tuple(float(c) for c in center),
                   axes=(float(a), float(b)))

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]]) -> "DomainSpec":
        verts = tuple((float(x), float(y)) for x, y in vertices)
        return cls("convex-polygon", vertices=verts)

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        kind = d.get("kind")
        if kind == "interval":
            a, b = d["endpoints"]
            return cls.interval(a, b)
        if kind == "rectangle":
            return cls.rectangle(d["width"], d["height"], d.get("origin", (0.0, 0.0)))
        if kind == "disk":
            return cls.disk(d["radius"], d.get("center", (0.0, 0.0)))
        if kind == "ellipse":
            return cls.ellipse(d["a"], d["b"], d.get("center", (0.0, 0.0)))
        if kind == "convex-polygon":
            return cls.polygon(d["vertices"])
        raise ValueError(f"unknown domain kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "interval":
            return {"kind": "interval", "endpoints": [self.lo[0], self.lo[0] + self.sides[0]]}
        if self.kind == "rectangle":
            return {"kind": "rectangle", "width": self.sides[0], "height": self.sides[1],
                    "origin": list(self.lo)}
        if self.kind == "disk":
            return {"kind": "disk", "radius": self.axes[0], "center": list(self.center)}
        if self.kind == "ellipse":
            return {"kind": "ellipse", "a": self.axes[0], "b": self.axes[1],
                    "center": list(self.center)}
        return {"kind": "convex-polygon", "vertices": [list(v) for v in self.vertices]}

    # geometry -----------------------------------------------------------
    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def has_corners(self) -> bool:
        return self.kind in ("rectangle", "convex-polygon")

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind in ("interval", "rectangle"):
            lo = np.array(self.lo)
            return lo, lo + np.array(self.sides)
        if self.kind in ("disk", "ellipse"):
            c, ax = np.array(self.center), np.array(self.axes)
            return c - ax, c + ax
        v = np.array(self.vertices)
        return v.min(axis=0), v.max(axis=0)

    def diameter(self) -> float:
        return diameter(self)

    def area(self) -> float:
        """Lebesgue measure (length in 1-D)."""
        if self.kind == "interval":
            return self.sides[0]
        if self.kind == "rectangle":
            return self.sides[0] * self.sides[1]
        if self.kind in ("disk", "ellipse"):
            return math.pi * self.axes[0] * self.axes[1]
        return abs(_signed_area(np.array(self.vertices)))

    def inradius(self) -> float:
        if self.kind in ("interval", "rectangle"):
            return min(self.sides) / 2
        if self.kind in ("disk", "ellipse"):
            return min(self.axes)
        return _chebyshev_radius(self._ccw())

    def centroid(self) -> np.ndarray:
        if self.kind in ("interval", "rectangle"):
            return np.array(self.lo) + np.array(self.sides) / 2
        if self.kind in ("disk", "ellipse"):
            return np.array(self.center)
        v = self._ccw()
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        a = cr.sum() / 2
        return np.array([((v[:, 0] + w[:, 0]) * cr).sum(), ((v[:, 1] + w[:, 1]) * cr).sum()]) / (6 * a)

    def contains(self, points: np.ndarray, strict: bool = True) -> np.ndarray:
        """Membership of ``points`` (shape ``(m, dim)``) in the open or closed domain."""
        p = np.asarray(points, dtype=float).reshape(-1, self.dim)
        tol = _REL_TOL * self.diameter()
        if self.kind in ("interval", "rectangle"):
            lo, hi = self.bounding_box()
            if strict:
                return np.all((p > lo + tol) & (p < hi - tol), axis=1)
            return np.all((p >= lo - tol) & (p <= hi + tol), axis=1)
        if self.kind in ("disk", "ellipse"):
            rho = np.sum(((p - np.array(self.center)) / np.array(self.axes)) ** 2, axis=1)
            return rho < 1 - _REL_TOL if strict else rho <= 1 + _REL_TOL
        v = self._ccw()
        e = np.roll(v, -1, axis=0) - v
        elen = np.hypot(e[:, 0], e[:, 1])
        d = ((p[:, None, 1] - v[None, :, 1]) * e[None, :, 0]
             - (p[:, None, 0] - v[None, :, 0]) * e[None, :, 1]) / elen
        return np.all(d > tol, axis=1) if strict else np.all(d >= -tol, axis=1)

    def boundary_points(self, spacing: float) -> np.ndarray:
        """Points on the boundary no farther apart than ``spacing``."""
        if self.kind == "interval":
            lo, hi = self.bounding_box()
            return np.array([lo, hi])
        if self.kind in ("disk", "ellipse"):
            perim = 2 * math.pi * max(self.axes)
            th = np.linspace(0, 2 * math.pi, max(16, int(perim / spacing) + 1), endpoint=False)
            return np.array(self.center) + np.column_stack(
                [self.axes[0] * np.cos(th), self.axes[1] * np.sin(th)])
        v = self._corners()
        pts = []
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            m = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
            s = np.arange(m)[:, None] / m
            pts.append(a + s * (b - a))
        return np.vstack(pts)

    def scaled(self, factor: float) -> "DomainSpec":
        """Image under x -> factor * x."""
        f = float(factor)
        return DomainSpec(self.kind, lo=tuple(f * x for x in self.lo),
                          sides=tuple(f * x for x in self.sides),
                          center=tuple(f * x for x in self.center),
                          axes=tuple(f * x for x in self.axes),
                          vertices=tuple((f * x, f * y) for x, y in self.vertices))

    def rotated(self, angle: float, about=(0.0, 0.0)) -> "DomainSpec":
        """Rigid rotation; box kinds become polygons."""
        if self.kind not in ("rectangle", "convex-polygon"):
            raise ValueError("rotation is only defined for polygonal domains")
        c, s = math.cos(angle), math.sin(angle)
        R = np.array([[c, -s], [s, c]])
        a = np.array(about)
        v = (self._corners() - a) @ R.T + a
        return DomainSpec.polygon(v)

    def _corners(self) -> np.ndarray:
        if self.kind == "rectangle":
            (x0, y0), (w, h) = self.lo, self.sides
            return np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]])
        return self._ccw()

    def _ccw(self) -> np.ndarray:
        v = np.array(self.vertices, dtype=float)
        return v if _signed_area(v) > 0 else v[::-1].copy()


def diameter(spec: DomainSpec) -> float:
    """Exact continuum diameter of the domain."""
    if spec.kind == "interval":
        return spec.sides[0]
    if spec.kind == "rectangle":
        return math.hypot(*spec.sides)
    if spec.kind in ("disk", "ellipse"):
        return 2 * max(spec.axes)
    v = np.array(spec.vertices)
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def _signed_area(v: np.ndarray) -> float:
    w = np.roll(v, -1, axis=0)
    return float((v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]).sum() / 2)


def _check_convex(v: np.ndarray) -> None:
    if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
        raise NonConvex("a polygon needs at least three 2-D vertices")
    e = np.roll(v, -1, axis=0) - v
    f = np.roll(e, -1, axis=0)
    cross = e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0]
    scale = float(np.abs(e).max()) ** 2
    if np.any(np.abs(cross) <= 1e-14 * scale):
        raise NonConvex("degenerate (collinear or repeated) vertices")
    if not (np.all(cross > 0) or np.all(cross < 0)):
        raise NonConvex("vertex turns change sign")
    turning = np.arctan2(cross, (e * f).sum(axis=1)).sum()
    if abs(abs(turning) - 2 * math.pi) > 1e-9:
        raise NonConvex("polygon winds more than once")


def _chebyshev_radius(v: np.ndarray) -> float:
    from scipy.optimize import linprog

    e = np.roll(v, -1, axis=0) - v
    n = np.column_stack([e[:, 1], -e[:, 0]])  # outward normals for CCW order
    n /= np.linalg.norm(n, axis=1)[:, None]
    b = (n * v).sum(axis=1)
    res = linprog(c=[0, 0, -1], A_ub=np.column_stack([n, np.ones(len(n))]), b_ub=b,
                  bounds=[(None, None), (None, None), (0, None)])
    return float(res.x[2])


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Uniform rasterization of a :class:`DomainSpec`.

    ``lattice`` holds integer coordinates of the interior nodes; ``index``
    maps the full lattice (shape ``shape``) to interior node numbers, with -1
    for excluded lattice points. Node ``i`` sits at
    ``origin + (lattice[i] + offset) * h`` where ``offset`` is 0 for
    node-centered and 1/2 for cell-centered grids.
    """

    spec: DomainSpec
    h: float
    origin: np.ndarray
    shape: tuple
    lattice: np.ndarray
    index: np.ndarray
    centering: str = "node"
    diameter: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "diameter", diameter(self.spec))

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def N(self) -> int:
        return self.lattice.shape[0]

    @cached_property
    def nodes(self) -> np.ndarray:
        off = 0.5 if self.centering == "cell" else 0.0
        return self.origin + (self.lattice + off) * self.h

    def neighbor(self, offset: Sequence[int]) -> np.ndarray:
        """Interior index of ``node + offset`` for every node, -1 where absent."""
        return self._neighbor(tuple(int(o) for o in offset))

    def _neighbor(self, offset: tuple) -> np.ndarray:
        cache = self.__dict__.setdefault("_nbr_cache", {})
        if offset not in cache:
            q = self.lattice + np.array(offset)
            ok = np.all((q >= 0) & (q < np.array(self.shape)), axis=1)
            out = np.full(self.N, -1, dtype=np.int64)
            out[ok] = self.index[tuple(q[ok].T)]
            cache[offset] = out
        return cache[offset]

    def axis_offsets(self) -> list[tuple]:
        out = []
        for d in range(self.dim):
            for s in (1, -1):
                o = [0] * self.dim
                o[d] = s
                out.append(tuple(o))
        return out

    def stencil_mask(self, kind: str = "gradient") -> np.ndarray:
        """Nodes whose difference stencil is made of interior nodes only.

        ``kind`` is ``"gradient"``, ``"hessian"`` or ``"none"`` (every node).
        """
        if kind == "none":
            return np.ones(self.N, dtype=bool)
        offs = self.axis_offsets()
        if kind == "hessian" and self.dim == 2:
            offs += [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        elif kind not in ("gradient", "hessian"):
            raise ValueError(f"unknown stencil {kind!r}")
        mask = np.ones(self.N, dtype=bool)
        for o in offs:
            mask &= self.neighbor(o) >= 0
        return mask

    def nearest_node(self, point: Sequence[float]) -> int:
        d = np.sum((self.nodes - np.asarray(point, dtype=float)) ** 2, axis=1)
        return int(np.argmin(d))


def build_grid(spec: DomainSpec, h: float) -> GridDomain:
    """Node-centered rasterization.

    Interior nodes are lattice points strictly inside the domain whose
    nearest axis neighbors all lie in the closed domain. The lattice is
    anchored at the lower corner of the bounding box.

    Raises
    ------
    ValueError
        If ``h`` is not smaller than the inradius.
    EmptyInterior
        If fewer than three interior lattice lines survive along some axis.
    """
    h = float(h)
    if not 0 < h < spec.inradius():
        raise ValueError(f"grid spacing {h} must lie in (0, inradius={spec.inradius()})")
    lo, hi = spec.bounding_box()
    counts = np.floor((hi - lo) / h + 1e-9).astype(int) + 1
    shape = tuple(int(c) for c in counts)
    axes = [lo[d] + h * np.arange(shape[d]) for d in range(spec.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.dim)
    strict = spec.contains(pts, strict=True).reshape(shape)
    closed = np.pad(spec.contains(pts, strict=False).reshape(shape), 1, constant_values=False)
    interior = strict.copy()
    core = tuple(slice(1, -1) for _ in shape)
    for d in range(spec.dim):
        for s in (1, -1):
            interior &= np.roll(closed, s, axis=d)[core]
    return _finish(spec, h, lo, shape, interior, "node")


def build_cell_grid(spec: DomainSpec, h: float) -> GridDomain:
    """Cell-centered grid on an interval or rectangle whose sides are multiples of ``h``."""
    if spec.kind not in ("interval", "rectangle"):
        raise ValueError("cell-centered grids are only defined for intervals and rectangles")
    h = float(h)
    n = np.array(spec.sides) / h
    if np.any(np.abs(n - np.round(n)) > 1e-9 * n):
        raise ValueError("side lengths must be integer multiples of h on a cell-centered grid")
    shape = tuple(int(round(x)) for x in n)
    lo, _ = spec.bounding_box()
    return _finish(spec, h, lo, shape, np.ones(shape, dtype=bool), "cell")


def _finish(spec, h, lo, shape, interior, centering) -> GridDomain:
    lattice = np.argwhere(interior)
    if lattice.shape[0] == 0:
        raise EmptyInterior("no lattice node qualifies as interior")
    for d in range(spec.dim):
        if np.unique(lattice[:, d]).size < 3:
            raise EmptyInterior("fewer than three interior nodes along an axis")
    index = np.full(shape, -1, dtype=np.int64)
    index[tuple(lattice.T)] = np.arange(lattice.shape[0])
    return GridDomain(spec=spec, h=h, origin=np.array(lo, dtype=float), shape=shape,
                      lattice=lattice, index=index, centering=centering)


# ---------------------------------------------------------------------------
# admissible node sets and pairs


def admissible_nodes(grid: GridDomain, field: np.ndarray, delta: float = 1e-2,
                     stencil: str = "gradient") -> np.ndarray:
    """Sorted indices of nodes with ``field >= delta * max(field)`` and a full stencil."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    f = np.asarray(field, dtype=float)
    keep = (f >= delta * f.max()) & grid.stencil_mask(stencil)
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        raise NoAdmissibleNodes(f"no node above the delta={delta} sublevel")
    return idx


def admissible_pairs(grid: GridDomain, field: np.ndarray, delta: float = 1e-2,
                     max_pairs: int = 100_000, seed: int = 0,
                     stencil: str = "gradient") -> np.ndarray:
    """Unordered pairs of admissible nodes, as an ``(P, 2)`` array with ``p[:, 0] < p[:, 1]``.

    All pairs are returned when there are at most ``max_pairs``; otherwise a
    uniform sample without replacement drawn from ``seed``. Output is sorted,
    so the result depends only on the arguments.
    """
    nodes = admissible_nodes(grid, field, delta, stencil)
    return sample_pairs(nodes, max_pairs, seed)


def sample_pairs(nodes: np.ndarray, max_pairs: int, seed: int) -> np.ndarray:
    n = nodes.size
    total = n * (n - 1) // 2
    if total <= max_pairs:
        i, j = np.triu_indices(n, k=1)
        out = np.column_stack([nodes[i], nodes[j]])
        return out[np.lexsort((out[:, 1], out[:, 0]))]
    rng = np.random.default_rng(seed)
    lin = np.sort(rng.choice(total, size=int(max_pairs), replace=False))
    i, j = _unrank_pairs(lin)
    out = np.column_stack([nodes[i], nodes[j]])
    return out[np.lexsort((out[:, 1], out[:, 0]))]


def _unrank_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # pairs (i, j), i < j, enumerated column-wise: k = j (j - 1) / 2 + i
    k = k.astype(np.int64)
    j = np.floor((1 + np.sqrt(1 + 8.0 * k)) / 2).astype(np.int64)
    j -= (j * (j - 1) // 2 > k)
    j += ((j + 1) * j // 2 <= k)
    i = k - j * (j - 1) // 2
    return i, j
