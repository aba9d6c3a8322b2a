"""Square-lattice geometry: boxes B(n), annuli A(n1,n2), rectangles, the dual
lattice, and domains cut out by dual circuits.

Conventions (used by every module downstream):

* a vertex is an integer point (x, y); B(n) is the set with max-norm <= n,
  and the boundary of B(n) means max-norm exactly n;
* vertices are indexed row-major by (y, x); edges are indexed with all
  horizontal edges first (row-major by their left endpoint), then all
  vertical edges (row-major by their bottom endpoint).  Building the same
  domain twice yields identical orderings;
* the dual lattice is (1/2, 1/2) + Z^2; the dual of an edge is the unit
  dual edge crossing it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

Vertex = tuple[int, int]


class LatticeError(ValueError):
    """Invalid geometry arguments (inverted bounds, bad circuits, ...)."""


@dataclass(eq=False)
class Domain:
    """A finite subgraph of Z^2 with dense, deterministic vertex/edge ids.

    Treat instances as immutable: every cached structure assumes the vertex
    and edge arrays never change, which also makes domains safe to share
    between concurrent trial workers.
    """

    kind: str
    params: tuple
    coords: np.ndarray  # (V, 2) int32, rows sorted by (y, x)
    edge_u: np.ndarray  # (E,) int32
    edge_v: np.ndarray  # (E,) int32
    _full_rect: tuple | None = field(default=None, repr=False)  # (x0, x1, y0, y1) if full grid

    @property
    def n_vertices(self) -> int:
        return self.coords.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_u.shape[0]

    @property
    def volume(self) -> int:
        """Number of sites (the paper's notion of volume for a full domain)."""
        return self.n_vertices

    @cached_property
    def bounds(self) -> tuple[int, int, int, int]:
        """(xmin, xmax, ymin, ymax) of the vertex set."""
        xs, ys = self.coords[:, 0], self.coords[:, 1]
        return int(xs.min()), int(xs.max()), int(ys.min()), int(ys.max())

    @cached_property
    def _vid_map(self) -> dict:
        return {(int(x), int(y)): i for i, (x, y) in enumerate(self.coords)}

    def has_vertex(self, x: int, y: int) -> bool:
        if self._full_rect is not None:
            x0, x1, y0, y1 = self._full_rect
            return x0 <= x <= x1 and y0 <= y <= y1
        return (x, y) in self._vid_map

    def vertex_id(self, x: int, y: int) -> int:
        if self._full_rect is not None:
            x0, x1, y0, y1 = self._full_rect
            if not (x0 <= x <= x1 and y0 <= y <= y1):
                raise KeyError((x, y))
            return (y - y0) * (x1 - x0 + 1) + (x - x0)
        return self._vid_map[(x, y)]

    def vertex_ids(self, vertices) -> np.ndarray:
        return np.array([self.vertex_id(x, y) for x, y in vertices], dtype=np.int64)

    def vertex(self, vid: int) -> Vertex:
        x, y = self.coords[vid]
        return int(x), int(y)

    def edge_endpoints(self, eid: int) -> tuple[Vertex, Vertex]:
        return self.vertex(int(self.edge_u[eid])), self.vertex(int(self.edge_v[eid]))

    @cached_property
    def max_norm(self) -> np.ndarray:
        """max(|x|, |y|) per vertex id."""
        return np.max(np.abs(self.coords.astype(np.int64)), axis=1)

    def ids_max_norm(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.max_norm == r).astype(np.int64)

    def ids_max_norm_le(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.max_norm <= r).astype(np.int64)

    def ids_in_rect(self, x1: int, x2: int, y1: int, y2: int) -> np.ndarray:
        xs, ys = self.coords[:, 0], self.coords[:, 1]
        return np.flatnonzero((xs >= x1) & (xs <= x2) & (ys >= y1) & (ys <= y2)).astype(np.int64)

    @cached_property
    def edge_grids(self):
        """Edge-id lookup grids: (hgrid, vgrid, x0, y0).

        hgrid[y - y0, x - x0] is the id of the edge (x,y)-(x+1,y), or -1;
        vgrid likewise for (x,y)-(x,y+1).  Lets circuit detection map dual
        steps to primal edge ids without a per-edge dict.
        """
        x0, x1, y0, y1 = self.bounds
        w, h = x1 - x0 + 1, y1 - y0 + 1
        hgrid = np.full((h, w), -1, dtype=np.int64)
        vgrid = np.full((h, w), -1, dtype=np.int64)
        ux = self.coords[self.edge_u, 0].astype(np.int64)
        uy = self.coords[self.edge_u, 1].astype(np.int64)
        vx = self.coords[self.edge_v, 0].astype(np.int64)
        horiz = vx == ux + 1
        eids = np.arange(self.n_edges, dtype=np.int64)
        hgrid[uy[horiz] - y0, ux[horiz] - x0] = eids[horiz]
        vgrid[uy[~horiz] - y0, ux[~horiz] - x0] = eids[~horiz]
        return hgrid, vgrid, x0, y0

    @cached_property
    def adjacency(self):
        """CSR adjacency: (indptr, neighbor vertex ids, incident edge ids)."""
        nv, ne = self.n_vertices, self.n_edges
        src = np.concatenate([self.edge_u, self.edge_v]).astype(np.int64)
        dst = np.concatenate([self.edge_v, self.edge_u]).astype(np.int64)
        eid = np.tile(np.arange(ne, dtype=np.int64), 2)
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(nv + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=nv), out=indptr[1:])
        return indptr, dst[order], eid[order]


def _full_grid(x1: int, x2: int, y1: int, y2: int, kind: str, params: tuple) -> Domain:
    w, h = x2 - x1 + 1, y2 - y1 + 1
    ys, xs = np.mgrid[y1 : y2 + 1, x1 : x2 + 1]
    coords = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.int32)

    vid = np.arange(w * h, dtype=np.int64).reshape(h, w)
    hu = vid[:, :-1].ravel()
    hv = vid[:, 1:].ravel()
    vu = vid[:-1, :].ravel()
    vv = vid[1:, :].ravel()
    edge_u = np.concatenate([hu, vu]).astype(np.int32)
    edge_v = np.concatenate([hv, vv]).astype(np.int32)
    return Domain(kind, params, coords, edge_u, edge_v, _full_rect=(x1, x2, y1, y2))


def _masked_grid(mask: np.ndarray, x0: int, y0: int, kind: str, params: tuple) -> Domain:
    """Vertex-induced subgraph of the grid cells where ``mask[y - y0, x - x0]``."""
    h, w = mask.shape
    idx = np.full(mask.size, -1, dtype=np.int64)
    flat = np.flatnonzero(mask.ravel())  # row-major == sorted by (y, x)
    idx[flat] = np.arange(flat.size)
    idx = idx.reshape(h, w)
    xs = (flat % w + x0).astype(np.int32)
    ys = (flat // w + y0).astype(np.int32)
    coords = np.stack([xs, ys], axis=1)

    hmask = mask[:, :-1] & mask[:, 1:]
    vmask = mask[:-1, :] & mask[1:, :]
    edge_u = np.concatenate([idx[:, :-1][hmask], idx[:-1, :][vmask]]).astype(np.int32)
    edge_v = np.concatenate([idx[:, 1:][hmask], idx[1:, :][vmask]]).astype(np.int32)
    return Domain(kind, params, coords, edge_u, edge_v)


def build_box(n: int) -> Domain:
    """B(n) = [-n, n]^2: (2n+1)^2 vertices, 2(2n+1)(2n) edges."""
    n = int(n)
    if n < 0:
        raise LatticeError(f"box radius must be >= 0, got {n}")
    return _full_grid(-n, n, -n, n, "box", (n,))


def build_rectangle(x1: int, x2: int, y1: int, y2: int) -> Domain:
    """Full grid on [x1, x2] x [y1, y2]."""
    if x1 > x2 or y1 > y2:
        raise LatticeError(f"inverted rectangle bounds ({x1},{x2},{y1},{y2})")
    return _full_grid(int(x1), int(x2), int(y1), int(y2), "rect", (x1, x2, y1, y2))


def build_annulus(n1: int, n2: int) -> Domain:
    """A(n1, n2) = B(n2) minus B(n1), as a vertex-induced subgraph."""
    n1, n2 = int(n1), int(n2)
    if not 0 <= n1 < n2:
        raise LatticeError(f"annulus needs 0 <= n1 < n2, got ({n1},{n2})")
    ys, xs = np.mgrid[-n2 : n2 + 1, -n2 : n2 + 1]
    mask = np.maximum(np.abs(xs), np.abs(ys)) > n1
    return _masked_grid(mask, -n2, -n2, "annulus", (n1, n2))


def dual_edge(u: Vertex, v: Vertex) -> tuple[tuple[float, float], tuple[float, float]]:
    """The unique dual edge crossing the primal edge u-v.

    Horizontal (x,y)-(x+1,y) maps to (x+1/2, y-1/2)-(x+1/2, y+1/2); vertical
    (x,y)-(x,y+1) maps to (x-1/2, y+1/2)-(x+1/2, y+1/2).  The map is a
    bijection between primal and crossing dual edges; primal_edge inverts it.
    """
    (x1, y1), (x2, y2) = u, v
    if (x1, y1) > (x2, y2):
        (x1, y1), (x2, y2) = (x2, y2), (x1, y1)
    if (x2 - x1, y2 - y1) == (1, 0):
        return ((x1 + 0.5, y1 - 0.5), (x1 + 0.5, y1 + 0.5))
    if (x2 - x1, y2 - y1) == (0, 1):
        return ((x1 - 0.5, y1 + 0.5), (x1 + 0.5, y1 + 0.5))
    raise LatticeError(f"not a nearest-neighbor edge: {u}-{v}")


def primal_edge(d1: tuple[float, float], d2: tuple[float, float]) -> tuple[Vertex, Vertex]:
    """Geometric inverse of dual_edge: the primal edge a dual edge crosses."""
    if d1 > d2:
        d1, d2 = d2, d1
    (a1, b1), (a2, b2) = d1, d2
    if (a2 - a1, b2 - b1) == (0.0, 1.0):  # vertical dual edge
        x, y = round(a1 - 0.5), round(b1 + 0.5)
        return (x, y), (x + 1, y)
    if (a2 - a1, b2 - b1) == (1.0, 0.0):  # horizontal dual edge
        x, y = round(a1 + 0.5), round(b1 - 0.5)
        return (x, y), (x, y + 1)
    raise LatticeError(f"not a unit dual edge: {d1}-{d2}")


@dataclass(eq=False)
class DualCircuit:
    """A simple closed path on the dual lattice (1/2,1/2)+Z^2.

    ``points`` holds each dual vertex once; closure back to points[0] is
    implicit.  Validated on construction: half-integer coordinates, unit
    steps, no repeated vertex.
    """

    points: np.ndarray  # (k, 2) float64

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
            raise LatticeError("dual circuit needs at least 4 dual vertices")
        doubled = pts * 2
        if not np.allclose(doubled, np.round(doubled)):
            raise LatticeError("dual vertices must have half-integer coordinates")
        if not np.all(np.abs(np.round(doubled)) % 2 == 1):
            raise LatticeError("dual vertices must lie on (1/2,1/2)+Z^2")
        # drop an explicit closing repeat of the start, if present
        if np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        steps = np.diff(np.vstack([pts, pts[:1]]), axis=0)
        if not np.all(np.abs(steps).sum(axis=1) == 1.0):
            raise LatticeError("consecutive dual vertices must be at distance 1")
        seen = {tuple(p) for p in pts}
        if len(seen) != len(pts):
            raise LatticeError("dual circuit must not repeat a vertex")
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_file(cls, path) -> "DualCircuit":
        """One dual vertex per line ('x y'); closed implicitly; '#' comments."""
        pts = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                x, y = line.split()
                pts.append((float(x), float(y)))
        return cls(np.asarray(pts, dtype=np.float64))

    def interior_mask(self):
        """Even-odd-rule interior test on the integer bounding grid.

        Returns (mask, x0, y0) with mask[y - y0, x - x0] true when the
        lattice point lies strictly inside the circuit.
        """
        pts2 = np.round(self.points * 2).astype(np.int64)  # doubled coords
        nxt = np.roll(pts2, -1, axis=0)
        vert = pts2[:, 0] == nxt[:, 0]
        seg_x = pts2[vert, 0]  # doubled x of vertical segments
        seg_y = (pts2[vert, 1] + nxt[vert, 1]) // 2  # doubled midpoint y (even)

        x0 = int(np.floor(self.points[:, 0].min()))
        x1 = int(np.ceil(self.points[:, 0].max()))
        y0 = int(np.floor(self.points[:, 1].min()))
        y1 = int(np.ceil(self.points[:, 1].max()))
        ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
        # crossings of the rightward ray from (x, y): vertical segments with
        # seg_x > 2x and doubled midpoint equal to 2y
        cross = (seg_x[None, None, :] > 2 * xs[:, :, None]) & (seg_y[None, None, :] == 2 * ys[:, :, None])
        mask = cross.sum(axis=2) % 2 == 1
        return mask, x0, y0


def boundary_dual_circuit(n: int) -> DualCircuit:
    """The dual circuit tracing the boundary of B(n) (all faces at ring n+1/2)."""
    h = n + 0.5
    pts = []
    for x in np.arange(-h, h):
        pts.append((x, -h))
    for y in np.arange(-h, h):
        pts.append((h, y))
    for x in np.arange(h, -h, -1):
        pts.append((x, h))
    for y in np.arange(h, -h, -1):
        pts.append((-h, y))
    return DualCircuit(np.asarray(pts, dtype=np.float64))


def domain_from_dual_circuit(gamma: DualCircuit) -> Domain:
    """Primal vertices strictly inside gamma, with the edges joining them.

    An edge between two interior vertices can never cross a simple dual
    circuit (it would have to cross an even number of times but can only be
    crossed at its midpoint), so keeping both-endpoint-interior edges is
    exact.
    """
    if not isinstance(gamma, DualCircuit):
        gamma = DualCircuit(np.asarray(gamma, dtype=np.float64))
    mask, x0, y0 = gamma.interior_mask()
    if not mask.any():
        raise LatticeError("dual circuit has empty interior")
    return _masked_grid(mask, x0, y0, "dual_interior", (len(gamma),))


def parse_domain(text: str) -> Domain:
    """CLI/config domain descriptions: box:N | annulus:N1:N2 | rect:X1:X2:Y1:Y2 | dual:PATH."""
    head, _, rest = text.partition(":")
    try:
        if head == "box":
            return build_box(int(rest))
        if head == "annulus":
            n1, n2 = rest.split(":")
            return build_annulus(int(n1), int(n2))
        if head == "rect":
            x1, x2, y1, y2 = rest.split(":")
            return build_rectangle(int(x1), int(x2), int(y1), int(y2))
        if head == "dual":
            return domain_from_dual_circuit(DualCircuit.from_file(rest))
    except LatticeError:
        raise
    except (ValueError, OSError) as exc:
        raise LatticeError(f"bad domain description {text!r}: {exc}") from None
    raise LatticeError(f"unknown domain kind {head!r}")
