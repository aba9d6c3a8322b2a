"""Numba kernels: union-find cluster passes, the frozen-percolation sweep,
and per-trial batch drivers for the Monte Carlo estimators.

All batch kernels derive one private stream per trial from
``(master_seed, label_key, trial_index)`` (see :mod:`glacier.rng`), so a
batch split across worker threads in any way aggregates to the same result.
Kernels release the GIL; scratch arrays live per call (one call = one chunk
of trials on one worker).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import U64, fill_permutation, fill_uniforms, next_uniform, trial_state

INT = np.int64


@njit(cache=True, nogil=True, inline="always")
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True, inline="always")
def _union(parent, size, ra, rb):
    """Union by size; equal sizes keep the smaller root id. Returns winner."""
    if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@njit(cache=True, nogil=True)
def cluster_pass(nv, eu, ev, open_mask):
    """Union-find over the open edges; returns (root per vertex, size at roots)."""
    parent = np.arange(nv, dtype=INT)
    size = np.ones(nv, dtype=INT)
    for e in range(eu.size):
        if open_mask[e]:
            ra = _find(parent, INT(eu[e]))
            rb = _find(parent, INT(ev[e]))
            if ra != rb:
                _union(parent, size, ra, rb)
    for v in range(nv):
        _find(parent, v)
    return parent, size


@njit(cache=True, nogil=True)
def uf_connected(nv, eu, ev, use_mask, a_ids, b_ids):
    """True iff vertex sets A and B touch through edges with use_mask set.

    A shared vertex counts as connected even with no usable edges.
    """
    parent = np.arange(nv, dtype=INT)
    size = np.ones(nv, dtype=INT)
    for e in range(eu.size):
        if use_mask[e]:
            ra = _find(parent, INT(eu[e]))
            rb = _find(parent, INT(ev[e]))
            if ra != rb:
                _union(parent, size, ra, rb)
    mark = np.zeros(nv, dtype=np.uint8)
    for i in range(a_ids.size):
        mark[_find(parent, a_ids[i])] = 1
    for i in range(b_ids.size):
        if mark[_find(parent, b_ids[i])]:
            return True
    return False


@njit(cache=True, nogil=True)
def face_circuit_check(n_faces, fu, fv, fcross, inner, outer, open_mask):
    """Open circuit in an annulus via the dual-crossing criterion.

    Faces of the annulus band are unioned through steps whose crossed primal
    edge is absent (fcross < 0) or closed; a circuit surrounding the inner
    box exists iff no such dual path joins the inner face ring to the outer
    face ring.
    """
    parent = np.arange(n_faces + 2, dtype=INT)
    size = np.ones(n_faces + 2, dtype=INT)
    vin = INT(n_faces)
    vout = INT(n_faces + 1)
    for i in range(inner.size):
        ra = _find(parent, INT(inner[i]))
        rb = _find(parent, vin)
        if ra != rb:
            _union(parent, size, ra, rb)
    for i in range(outer.size):
        ra = _find(parent, INT(outer[i]))
        rb = _find(parent, vout)
        if ra != rb:
            _union(parent, size, ra, rb)
    for k in range(fu.size):
        e = fcross[k]
        if e < 0 or not open_mask[e]:
            ra = _find(parent, INT(fu[k]))
            rb = _find(parent, INT(fv[k]))
            if ra != rb:
                _union(parent, size, ra, rb)
    return _find(parent, vin) != _find(parent, vout)


# --------------------------------------------------------------------------
# frozen dynamics


@njit(cache=True, nogil=True)
def frozen_pass(eu, ev, order, threshold, open_out, parent, size, freeze_pos):
    """One frozen-percolation sweep in clock order.

    Edges are processed along ``order``; an edge opens iff both endpoint
    clusters currently have volume < threshold (including two endpoints in
    one common small cluster, which opens without merging).  freeze_pos
    records, at the surviving root, the order position of the merge that
    first pushed the cluster to volume >= threshold.
    """
    nv = parent.size
    for i in range(nv):
        parent[i] = i
        size[i] = 1
        freeze_pos[i] = -1
    for i in range(open_out.size):
        open_out[i] = 0
    for idx in range(order.size):
        e = order[idx]
        ra = _find(parent, INT(eu[e]))
        rb = _find(parent, INT(ev[e]))
        if size[ra] >= threshold or size[rb] >= threshold:
            continue
        open_out[e] = 1
        if ra != rb:
            win = _union(parent, size, ra, rb)
            if size[win] >= threshold:
                freeze_pos[win] = idx


# --------------------------------------------------------------------------
# growth-based reachability (one-arm / crossing events)


@njit(cache=True, nogil=True)
def _grow_reach(indptr, nbr, eids, p, sources, target_mask,
                estate, estamp, vstamp, stack, gen, state):
    """Percolation cluster growth from ``sources``; edge states decided on
    first touch with probability p.  Returns 1 as soon as a target vertex is
    absorbed (the event is monotone, so early exit is exact)."""
    top = 0
    for i in range(sources.size):
        s = sources[i]
        if vstamp[s] != gen:
            vstamp[s] = gen
            if target_mask[s]:
                return 1
            stack[top] = s
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for k in range(indptr[v], indptr[v + 1]):
            e = eids[k]
            if estamp[e] != gen:
                estamp[e] = gen
                if next_uniform(state) < p:
                    estate[e] = 1
                else:
                    estate[e] = 0
            if estate[e] == 1:
                w = nbr[k]
                if vstamp[w] != gen:
                    vstamp[w] = gen
                    if target_mask[w]:
                        return 1
                    stack[top] = w
                    top += 1
    return 0


@njit(cache=True, nogil=True)
def arm_batch(indptr, nbr, eids, ne, p, sources, target_mask, seed, key, t0, count):
    """Successes of {sources connect to targets} over trials t0..t0+count-1."""
    nv = indptr.size - 1
    estate = np.zeros(ne, dtype=np.uint8)
    estamp = np.full(ne, -1, dtype=INT)
    vstamp = np.full(nv, -1, dtype=INT)
    stack = np.empty(nv, dtype=INT)
    succ = 0
    for t in range(t0, t0 + count):
        state = trial_state(seed, key, np.uint64(t))
        succ += _grow_reach(indptr, nbr, eids, p, sources, target_mask,
                            estate, estamp, vstamp, stack, INT(t), state)
    return succ


@njit(cache=True, nogil=True)
def largest_batch(nv, eu, ev, p, seed, key, t0, count, out):
    """Largest open-cluster volume per trial (full union-find sweep)."""
    parent = np.empty(nv, dtype=INT)
    size = np.empty(nv, dtype=INT)
    for t in range(count):
        state = trial_state(seed, key, np.uint64(t0 + t))
        for i in range(nv):
            parent[i] = i
            size[i] = 1
        best = INT(1 if nv > 0 else 0)
        for e in range(eu.size):
            if next_uniform(state) < p:
                ra = _find(parent, INT(eu[e]))
                rb = _find(parent, INT(ev[e]))
                if ra != rb:
                    win = _union(parent, size, ra, rb)
                    if size[win] > best:
                        best = size[win]
        out[t] = best


@njit(cache=True, nogil=True)
def frozen_origin_batch(nv, eu, ev, threshold, origin, seed, key, t0, count):
    """Successes of {origin frozen at time 1}; clock order drawn directly as
    a uniform permutation (clock values are never needed for this event)."""
    ne = eu.size
    perm = np.empty(ne, dtype=INT)
    open_out = np.empty(ne, dtype=np.uint8)
    parent = np.empty(nv, dtype=INT)
    size = np.empty(nv, dtype=INT)
    fpos = np.empty(nv, dtype=INT)
    succ = 0
    for t in range(t0, t0 + count):
        state = trial_state(seed, key, np.uint64(t))
        fill_permutation(state, perm)
        frozen_pass(eu, ev, perm, threshold, open_out, parent, size, fpos)
        if size[_find(parent, INT(origin))] >= threshold:
            succ += 1
    return succ


@njit(cache=True, nogil=True)
def frozen_band_batch(nv, eu, ev, threshold, seed, key, t0, count, out_frozen, out_bad):
    """Per-trial frozen-cluster count and volume-band violations.

    A violation is a frozen cluster outside [threshold, 2*threshold - 2] or
    an unfrozen cluster of volume >= threshold.  With threshold 1 no merge
    ever happens, so the band degenerates to frozen singletons of volume 1.
    """
    ne = eu.size
    perm = np.empty(ne, dtype=INT)
    open_out = np.empty(ne, dtype=np.uint8)
    parent = np.empty(nv, dtype=INT)
    size = np.empty(nv, dtype=INT)
    fpos = np.empty(nv, dtype=INT)
    for t in range(count):
        state = trial_state(seed, key, np.uint64(t0 + t))
        fill_permutation(state, perm)
        frozen_pass(eu, ev, perm, threshold, open_out, parent, size, fpos)
        upper = max(threshold, 2 * threshold - 2)
        nfro = 0
        nbad = 0
        for v in range(nv):
            if parent[v] == v:
                vol = size[v]
                if vol >= threshold:
                    nfro += 1
                    if vol > upper:
                        nbad += 1
                elif vol > threshold - 1:
                    nbad += 1
        out_frozen[t] = nfro
        out_bad[t] = nbad


# --------------------------------------------------------------------------
# freeze-window diagnostics: one clock array per trial drives the frozen run
# and every static event through the time-p coupling (open iff tau <= p).
# Region evaluations use generation-stamped union-find so per-trial work is
# proportional to the touched region, not the domain.


@njit(cache=True, nogil=True, inline="always")
def _lazy_root(parent, size, stamp, gen, x):
    if stamp[x] != gen:
        stamp[x] = gen
        parent[x] = x
        size[x] = 1
        return x
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def _largest_sub(edge_ids, tau, p, eu, ev, parent, size, stamp, gen):
    """Largest cluster volume of the p-open subgraph spanned by edge_ids."""
    best = INT(1)
    for i in range(edge_ids.size):
        e = edge_ids[i]
        if tau[e] <= p:
            ra = _lazy_root(parent, size, stamp, gen, INT(eu[e]))
            rb = _lazy_root(parent, size, stamp, gen, INT(ev[e]))
            if ra != rb:
                win = _union(parent, size, ra, rb)
                if size[win] > best:
                    best = size[win]
    return best


@njit(cache=True, nogil=True)
def _conn_sub(edge_ids, tau, p, eu, ev, a_ids, b_ids,
              parent, size, stamp, gen, mark, markgen):
    """A-to-B connectivity of the p-open subgraph spanned by edge_ids."""
    for i in range(edge_ids.size):
        e = edge_ids[i]
        if tau[e] <= p:
            ra = _lazy_root(parent, size, stamp, gen, INT(eu[e]))
            rb = _lazy_root(parent, size, stamp, gen, INT(ev[e]))
            if ra != rb:
                _union(parent, size, ra, rb)
    for i in range(a_ids.size):
        mark[_lazy_root(parent, size, stamp, gen, a_ids[i])] = markgen
    for i in range(b_ids.size):
        if mark[_lazy_root(parent, size, stamp, gen, b_ids[i])] == markgen:
            return True
    return False


EV_E1A, EV_E1B, EV_E2, EV_E3A, EV_E3B, EV_E3C, EV_E4A, EV_E4B, EV_E5 = (
    1, 2, 4, 8, 16, 32, 64, 128, 256)


@njit(cache=True, nogil=True)
def freeze_diag_batch(
        nv, eu, ev, norms, indptr, nbr, threshold, p1, p2, box_radius,
        origin, center_ids,
        e1a_nf, e1a_fu, e1a_fv, e1a_fc, e1a_in, e1a_out,
        e1b_nf, e1b_fu, e1b_fv, e1b_fc, e1b_in, e1b_out,
        e2_edges, e3a_edges, e3b_edges,
        e4_valid, e4_src, e4_tgt, e4c_nf, e4c_fu, e4c_fv, e4c_fc, e4c_in, e4c_out,
        e5_valid, e5_edges, e5_a, e5_b,
        seed, key, t0, count,
        out_events, out_tstar, out_frozen0, out_rmin, out_rmax, out_touch):
    """Per-trial freeze-window diagnostics on one shared clock array.

    Records the first freeze time among clusters meeting the center box, the
    hole around the origin at that moment (radial extent of its boundary
    vertices and whether it touches the domain boundary), and the event
    bitmask E1..E5 evaluated on the p1/p2 configurations of the same clocks.
    """
    ne = eu.size
    tau = np.empty(ne, dtype=np.float64)
    open2 = np.empty(ne, dtype=np.uint8)
    open_out = np.empty(ne, dtype=np.uint8)
    parent = np.empty(nv, dtype=INT)
    size = np.empty(nv, dtype=INT)
    fpos = np.empty(nv, dtype=INT)
    sparent = np.empty(nv, dtype=INT)
    ssize = np.empty(nv, dtype=INT)
    sstamp = np.full(nv, -1, dtype=INT)
    mark = np.full(nv, -1, dtype=INT)
    visit = np.full(nv, -1, dtype=INT)
    stack = np.empty(nv, dtype=INT)
    all_edges = np.arange(ne, dtype=INT)

    for t in range(count):
        state = trial_state(seed, key, np.uint64(t0 + t))
        fill_uniforms(state, tau)
        order = np.argsort(tau, kind="mergesort")
        frozen_pass(eu, ev, order, threshold, open_out, parent, size, fpos)

        # first freeze among clusters intersecting the center box
        best_pos = INT(-1)
        for i in range(center_ids.size):
            r = _find(parent, center_ids[i])
            if fpos[r] >= 0 and (best_pos < 0 or fpos[r] < best_pos):
                best_pos = fpos[r]
        if best_pos >= 0:
            out_tstar[t] = tau[order[best_pos]]
        else:
            out_tstar[t] = np.nan

        # hole containing the origin at the first freeze
        out_rmin[t] = -1
        out_rmax[t] = -1
        out_frozen0[t] = 0
        out_touch[t] = 0
        if best_pos >= 0:
            ro = _find(parent, INT(origin))
            if fpos[ro] >= 0 and fpos[ro] <= best_pos:
                out_frozen0[t] = 1
            else:
                gen = INT(t0 + t)
                top = 0
                visit[origin] = gen
                stack[top] = INT(origin)
                top += 1
                rmin = INT(4 * box_radius)
                rmax = INT(-1)
                touch = 0
                while top > 0:
                    top -= 1
                    v = stack[top]
                    if norms[v] == box_radius:
                        touch = 1
                    boundary_vertex = False
                    for k in range(indptr[v], indptr[v + 1]):
                        w = nbr[k]
                        rw = _find(parent, INT(w))
                        if fpos[rw] >= 0 and fpos[rw] <= best_pos:
                            boundary_vertex = True
                        elif visit[w] != gen:
                            visit[w] = gen
                            stack[top] = w
                            top += 1
                    if boundary_vertex:
                        if norms[v] < rmin:
                            rmin = norms[v]
                        if norms[v] > rmax:
                            rmax = norms[v]
                out_rmin[t] = rmin if rmax >= 0 else -1
                out_rmax[t] = rmax
                out_touch[t] = touch

        # static events on the same clocks (p-open means tau <= p)
        for e in range(ne):
            open2[e] = tau[e] <= p2
        events = 0
        gbase = INT(8) * INT(t0 + t)
        if face_circuit_check(e1a_nf, e1a_fu, e1a_fv, e1a_fc, e1a_in, e1a_out, open2):
            events |= EV_E1A
        if face_circuit_check(e1b_nf, e1b_fu, e1b_fv, e1b_fc, e1b_in, e1b_out, open2):
            events |= EV_E1B
        if _largest_sub(e2_edges, tau, p1, eu, ev, sparent, ssize, sstamp, gbase) >= threshold:
            events |= EV_E2
        if _largest_sub(e3a_edges, tau, p1, eu, ev, sparent, ssize, sstamp, gbase + 1) < threshold:
            events |= EV_E3A
        if _largest_sub(e3b_edges, tau, p1, eu, ev, sparent, ssize, sstamp, gbase + 2) < threshold:
            events |= EV_E3B
        best = INT(1)
        for e in range(ne):
            if open2[e]:
                ra = _lazy_root(sparent, ssize, sstamp, gbase + 3, INT(eu[e]))
                rb = _lazy_root(sparent, ssize, sstamp, gbase + 3, INT(ev[e]))
                if ra != rb:
                    win = _union(sparent, ssize, ra, rb)
                    if ssize[win] > best:
                        best = ssize[win]
        if best < threshold:
            events |= EV_E3C
        if e4_valid:
            if _conn_sub(all_edges, tau, p2, eu, ev, e4_src, e4_tgt,
                         sparent, ssize, sstamp, gbase + 4, mark, gbase + 4):
                events |= EV_E4A
            if face_circuit_check(e4c_nf, e4c_fu, e4c_fv, e4c_fc, e4c_in, e4c_out, open2):
                events |= EV_E4B
        if e5_valid:
            if not _conn_sub(e5_edges, tau, p1, eu, ev, e5_a, e5_b,
                             sparent, ssize, sstamp, gbase + 5, mark, gbase + 5):
                events |= EV_E5
        out_events[t] = events

