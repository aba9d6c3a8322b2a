"""Ordinary bond percolation at a fixed parameter p: configuration sampling,
union-find clustering, crossings, circuits, arm events, largest clusters.

Circuit events use the complement criterion: an open circuit surrounds the
inner box of an annulus iff no dual-open path crosses the annulus between
its face rings.  This is linear-time with union-find and is validated in
the test suite against an explicit winding-parity cycle search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .lattice import Domain
from .rng import Stream


class PercolationError(ValueError):
    pass


@dataclass(eq=False)
class Configuration:
    """One bond configuration on a domain; ``open_mask[eid]`` per edge."""

    domain: Domain
    open_mask: np.ndarray  # (E,) uint8
    p: float  # provenance only

    def __post_init__(self):
        if self.open_mask.shape != (self.domain.n_edges,):
            raise PercolationError("open mask length must equal edge count")


@dataclass(eq=False)
class ClusterForest:
    """Path-compressed forest: ``root[v]`` per vertex, ``size`` valid at roots."""

    root: np.ndarray
    size: np.ndarray

    def volume_of(self, vid: int) -> int:
        return int(self.size[self.root[vid]])

    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.root == np.arange(self.root.size))

    def volumes(self) -> np.ndarray:
        return self.size[self.roots()]


def sample_config(domain: Domain, p: float, stream: Stream) -> Configuration:
    """Each edge open independently with probability p (edge-indexed draws)."""
    if not 0.0 <= p <= 1.0:
        raise PercolationError(f"p must be in [0,1], got {p}")
    u = stream.uniforms(domain.n_edges)
    return Configuration(domain, (u < p).astype(np.uint8), p)


def config_from_clocks(domain: Domain, tau: np.ndarray, p: float) -> Configuration:
    """The configuration seen at time p by the clock coupling (open iff tau <= p)."""
    return Configuration(domain, (tau <= p).astype(np.uint8), p)


def clusters(config: Configuration) -> ClusterForest:
    root, size = kernels.cluster_pass(
        config.domain.n_vertices, config.domain.edge_u, config.domain.edge_v, config.open_mask
    )
    return ClusterForest(root, size)


def _as_ids(domain: Domain, vertices) -> np.ndarray:
    arr = np.asarray(vertices)
    if arr.dtype.kind in "iu" and arr.ndim == 1:
        return arr.astype(np.int64)
    return domain.vertex_ids(vertices)


def connects(config: Configuration, a, b) -> bool:
    """True iff some open path joins vertex set A to vertex set B.

    Accepts (x, y) iterables or arrays of vertex ids; a shared vertex makes
    the sets connected even with every edge closed.
    """
    dom = config.domain
    a_ids = _as_ids(dom, a)
    b_ids = _as_ids(dom, b)
    if a_ids.size == 0 or b_ids.size == 0:
        return False
    return bool(
        kernels.uf_connected(dom.n_vertices, dom.edge_u, dom.edge_v, config.open_mask, a_ids, b_ids)
    )


def has_crossing(config: Configuration, bounds, orientation: str = "H") -> bool:
    """Open crossing of the rectangle [x1,x2]x[y1,y2] inside the domain.

    Only edges with both endpoints inside the rectangle count, so the event
    is a function of the rectangle's own configuration.  H joins the left
    vertex column to the right one; V joins bottom to top.
    """
    x1, x2, y1, y2 = bounds
    dom = config.domain
    if x1 > x2 or y1 > y2:
        raise PercolationError(f"inverted rectangle bounds {bounds}")
    for corner in ((x1, y1), (x1, y2), (x2, y1), (x2, y2)):
        if not dom.has_vertex(*corner):
            raise PercolationError(f"rectangle {bounds} not inside domain")
    xs = dom.coords[:, 0]
    ys = dom.coords[:, 1]
    inside = (xs >= x1) & (xs <= x2) & (ys >= y1) & (ys <= y2)
    use = config.open_mask.astype(bool) & inside[dom.edge_u] & inside[dom.edge_v]
    if orientation == "H":
        a = np.flatnonzero(inside & (xs == x1))
        b = np.flatnonzero(inside & (xs == x2))
    elif orientation == "V":
        a = np.flatnonzero(inside & (ys == y1))
        b = np.flatnonzero(inside & (ys == y2))
    else:
        raise PercolationError(f"orientation must be 'H' or 'V', got {orientation!r}")
    return bool(
        kernels.uf_connected(dom.n_vertices, dom.edge_u, dom.edge_v,
                             use.astype(np.uint8), a.astype(np.int64), b.astype(np.int64))
    )


def annulus_face_graph(domain: Domain, n1: int, n2: int):
    """Dual-step graph of the face band ring(face) in [n1, n2].

    Returns (n_faces, fu, fv, fcross, inner, outer): face pairs adjacent
    through a dual step, the domain edge id each step crosses (-1 when the
    crossed primal edge is not a domain edge, hence never open), and the
    face ids of the innermost / outermost rings.  A face (fx, fy) stands for
    the dual vertex (fx+1/2, fy+1/2); its ring is max over the folded
    coordinates, so ring == k means the dual point sits at max-norm k+1/2.
    """
    if not 0 <= n1 < n2:
        raise PercolationError(f"annulus needs 0 <= n1 < n2, got ({n1},{n2})")
    span = np.arange(-n2 - 1, n2 + 1, dtype=np.int64)
    fy, fx = np.meshgrid(span, span, indexing="ij")
    ring = np.maximum(np.maximum(fx, -1 - fx), np.maximum(fy, -1 - fy))
    band = (ring >= n1) & (ring <= n2)
    fid = np.full(band.shape, -1, dtype=np.int64)
    fid[band] = np.arange(int(band.sum()))

    hgrid, vgrid, gx0, gy0 = domain.edge_grids
    gh, gw = hgrid.shape

    def primal_lookup(grid, px, py, qx, qy):
        """Edge id at (px,py), restricted to annulus-internal edges.

        Steps whose crossed primal edge has an endpoint outside the annulus
        (on the inner box or beyond the outer ring) stay crossable: only an
        open edge of the annulus itself may block the dual path, so the
        criterion detects circuits lying entirely inside the annulus.
        """
        na = np.maximum(np.abs(px), np.abs(py))
        nb = np.maximum(np.abs(qx), np.abs(qy))
        internal = (np.minimum(na, nb) > n1) & (np.maximum(na, nb) <= n2)
        ok = internal & (px >= gx0) & (px < gx0 + gw) & (py >= gy0) & (py < gy0 + gh)
        out = np.full(px.shape, -1, dtype=np.int64)
        out[ok] = grid[py[ok] - gy0, px[ok] - gx0]
        return out

    # step to the right neighbor face: crosses the vertical primal edge
    # (fx+1, fy)-(fx+1, fy+1)
    right_ok = band[:, :-1] & band[:, 1:]
    ry, rx = np.nonzero(right_ok)
    fu_r = fid[ry, rx]
    fv_r = fid[ry, rx + 1]
    cross_r = primal_lookup(vgrid, fx[ry, rx] + 1, fy[ry, rx],
                            fx[ry, rx] + 1, fy[ry, rx] + 1)

    # step to the upper neighbor face: crosses the horizontal primal edge
    # (fx, fy+1)-(fx+1, fy+1)
    up_ok = band[:-1, :] & band[1:, :]
    uy, ux = np.nonzero(up_ok)
    fu_u = fid[uy, ux]
    fv_u = fid[uy + 1, ux]
    cross_u = primal_lookup(hgrid, fx[uy, ux], fy[uy, ux] + 1,
                            fx[uy, ux] + 1, fy[uy, ux] + 1)

    fu = np.concatenate([fu_r, fu_u])
    fv = np.concatenate([fv_r, fv_u])
    fcross = np.concatenate([cross_r, cross_u])
    inner = fid[ring == n1]
    outer = fid[ring == n2]
    return int(band.sum()), fu, fv, fcross, inner, outer


def has_open_circuit(config: Configuration, bounds) -> bool:
    """Open circuit inside the annulus A(n1, n2) surrounding the inner box.

    Equivalent by planar duality to the absence of a dual-open path from the
    annulus's inner face ring to its outer face ring; primal edges absent
    from the domain count as closed (their dual steps are always allowed).
    """
    n1, n2 = bounds
    n_faces, fu, fv, fcross, inner, outer = annulus_face_graph(config.domain, n1, n2)
    return bool(kernels.face_circuit_check(n_faces, fu, fv, fcross, inner, outer, config.open_mask))


def has_dual_open_circuit(config: Configuration, bounds) -> bool:
    """Dual-open circuit (all crossed primal edges closed) in the annulus.

    Exists iff no primal open path inside B(n2) joins the inner blob
    (max-norm <= n1) to the ring at max-norm n2.
    """
    n1, n2 = bounds
    if not 0 <= n1 < n2:
        raise PercolationError(f"annulus needs 0 <= n1 < n2, got ({n1},{n2})")
    dom = config.domain
    norms = dom.max_norm
    use = config.open_mask.astype(bool) & (norms[dom.edge_u] <= n2) & (norms[dom.edge_v] <= n2)
    a = dom.ids_max_norm_le(n1)
    b = dom.ids_max_norm(n2)
    if a.size == 0 or b.size == 0:
        return True
    return not bool(
        kernels.uf_connected(dom.n_vertices, dom.edge_u, dom.edge_v, use.astype(np.uint8), a, b)
    )


def largest_cluster_volume(config: Configuration) -> int:
    if config.domain.n_vertices == 0:
        raise PercolationError("empty domain has no clusters")
    return int(clusters(config).size.max())
