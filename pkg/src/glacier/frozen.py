"""Volume-frozen percolation: clock assignment, the clock-ordered opening
rule with a volume threshold, frozen clusters, freeze times, and holes.

Each edge e carries an i.i.d. uniform clock tau_e and tries to open at that
time; it may iff both endpoint clusters currently have volume strictly
below the threshold N.  A cluster whose volume reaches N stops growing
("freezes") and never changes afterwards, so the final forest doubles as
the freeze-time record.  One run is strictly sequential; independent runs
share nothing and may execute concurrently.

Conventions: equal clock values are ordered by edge id (relevant only for
hand-built clocks); with N == 1 every vertex is a frozen singleton and its
freeze time is 0 by convention (no merge ever happens).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import kernels
from .lattice import Domain
from .rng import Stream


class FrozenError(ValueError):
    pass


@dataclass(eq=False)
class ClockAssignment:
    domain: Domain
    tau: np.ndarray  # (E,) float64 in [0,1]
    order: np.ndarray  # (E,) int64, tau ascending, ties by edge id

    def __post_init__(self):
        if self.tau.shape != (self.domain.n_edges,):
            raise FrozenError("tau length must equal edge count")


def sample_clocks(domain: Domain, stream: Stream) -> ClockAssignment:
    tau = stream.uniforms(domain.n_edges)
    return ClockAssignment(domain, tau, np.argsort(tau, kind="stable"))


def clocks_from_times(domain: Domain, tau) -> ClockAssignment:
    """Clock assignment from explicit times (tests, hand traces)."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any((tau < 0) | (tau > 1)):
        raise FrozenError("clock values must lie in [0,1]")
    return ClockAssignment(domain, tau, np.argsort(tau, kind="stable"))


@njit(cache=True, nogil=True)
def _compress_all(parent):
    for v in range(parent.size):
        kernels._find(parent, v)


@dataclass(eq=False)
class FrozenState:
    """Full outcome of one frozen run; a pure function of (domain, N, tau)."""

    domain: Domain
    N: int
    open_mask: np.ndarray  # (E,) uint8 at time 1
    root: np.ndarray  # (V,) final root per vertex
    volume: np.ndarray  # (V,) cluster volume, valid at roots
    freeze_time: np.ndarray  # (V,) at roots: time the cluster froze, else NaN
    freeze_events: list  # [(time, volume)] per threshold-reaching merge, by time
    blocked: np.ndarray  # edge ids that tried to open and were refused, in clock order
    clocks: ClockAssignment

    def volume_of(self, vid: int) -> int:
        return int(self.volume[self.root[vid]])

    def frozen_roots(self) -> np.ndarray:
        r = np.flatnonzero(self.root == np.arange(self.root.size))
        return r[self.volume[r] >= self.N]


def run_frozen(domain: Domain, clocks: ClockAssignment, threshold: int) -> FrozenState:
    """Play every clock in order and return the state at time 1."""
    if threshold < 1:
        raise FrozenError(f"volume threshold must be >= 1, got {threshold}")
    nv, ne = domain.n_vertices, domain.n_edges
    open_mask = np.zeros(ne, dtype=np.uint8)
    parent = np.empty(nv, dtype=np.int64)
    size = np.empty(nv, dtype=np.int64)
    fpos = np.empty(nv, dtype=np.int64)
    kernels.frozen_pass(domain.edge_u, domain.edge_v, clocks.order, threshold,
                        open_mask, parent, size, fpos)
    _compress_all(parent)

    freeze_time = np.full(nv, np.nan)
    events = []
    frozen_roots = np.flatnonzero(fpos >= 0)
    for r in frozen_roots:
        t = float(clocks.tau[clocks.order[fpos[r]]])
        freeze_time[r] = t
        events.append((t, int(size[r])))
    if threshold == 1:
        freeze_time[parent == np.arange(nv)] = 0.0
    events.sort()
    blocked = clocks.order[open_mask[clocks.order] == 0]
    return FrozenState(domain, int(threshold), open_mask, parent, size,
                       freeze_time, events, blocked, clocks)


def _vid_checked(state: FrozenState, v) -> int:
    try:
        return state.domain.vertex_id(*v)
    except KeyError:
        raise FrozenError(f"vertex {v} outside domain") from None


def is_frozen(state: FrozenState, v) -> bool:
    """True iff v's final cluster has volume >= N."""
    return state.volume_of(_vid_checked(state, v)) >= state.N


def hole_containing(state: FrozenState, v):
    """The maximal lattice-connected component of unfrozen sites through v.

    Connectivity runs through domain edges regardless of their open/closed
    state.  Returns (hole vertex ids, boundary edge ids): the boundary edges
    are the domain edges with exactly one endpoint in the hole, whose dual
    edges trace the hole boundary.
    """
    vid = _vid_checked(state, v)
    if state.volume_of(vid) >= state.N:
        raise FrozenError(f"vertex {v} is frozen")
    indptr, nbr, eids = state.domain.adjacency
    unfrozen = state.volume[state.root] < state.N
    seen = np.zeros(state.domain.n_vertices, dtype=bool)
    seen[vid] = True
    stack = [vid]
    hole = [vid]
    boundary = []
    while stack:
        a = stack.pop()
        for k in range(indptr[a], indptr[a + 1]):
            w = nbr[k]
            if not unfrozen[w]:
                boundary.append(eids[k])
            elif not seen[w]:
                seen[w] = True
                hole.append(int(w))
                stack.append(int(w))
    return np.sort(np.array(hole, dtype=np.int64)), np.unique(np.array(boundary, dtype=np.int64))


def first_freeze_time_in(state: FrozenState, region):
    """Earliest freeze time among frozen clusters intersecting the region.

    Region is an iterable of (x, y) or an array of vertex ids.  Returns None
    if no frozen cluster touches the region; 0.0 for N == 1 by convention.
    """
    arr = np.asarray(region)
    if arr.dtype.kind in "iu" and arr.ndim == 1:
        ids = arr.astype(np.int64)
    else:
        ids = np.array([_vid_checked(state, v) for v in region], dtype=np.int64)
    if ids.size == 0:
        return None
    times = state.freeze_time[state.root[ids]]
    times = times[~np.isnan(times)]
    if times.size == 0:
        return None
    return float(times.min())


def write_trace(state: FrozenState, path) -> None:
    """Plain-text event log: one line per processed edge, in clock order:

        time edge_id u v action(open|blocked) volume_after

    For an opened edge, volume_after is its cluster's volume right after the
    opening; for a blocked edge it is the larger endpoint-cluster volume at
    that moment (the blocking certificate, necessarily >= N).
    """
    dom, n = state.domain, state.N
    parent = list(range(dom.n_vertices))
    size = [1] * dom.n_vertices

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    with open(path, "w") as fh:
        for eid in state.clocks.order:
            u, v = int(dom.edge_u[eid]), int(dom.edge_v[eid])
            ra, rb = find(u), find(v)
            if size[ra] < n and size[rb] < n:
                if ra != rb:
                    if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
                        ra, rb = rb, ra
                    parent[rb] = ra
                    size[ra] += size[rb]
                action, vol = "open", size[ra]
                assert state.open_mask[eid] == 1
            else:
                action, vol = "blocked", max(size[ra], size[rb])
                assert state.open_mask[eid] == 0
            fh.write(f"{state.clocks.tau[eid]:.17g} {eid} {u} {v} {action} {vol}\n")
