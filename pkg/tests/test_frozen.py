"""The frozen dynamics: hand traces, exhaustive oracle, invariants."""

import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from glacier.frozen import (FrozenError, clocks_from_times, first_freeze_time_in,
                            hole_containing, is_frozen, run_frozen, sample_clocks,
                            write_trace)
from glacier.lattice import build_annulus, build_box, build_rectangle
from glacier.rng import Stream

from oracles import frozen_oracle


def test_sample_clocks_basics():
    empty = build_box(0)
    cl = sample_clocks(empty, Stream(1, "c", 0))
    assert cl.tau.size == 0 and cl.order.size == 0

    b2 = build_box(2)
    cl = sample_clocks(b2, Stream(1, "c", 1))
    assert sorted(cl.order.tolist()) == list(range(40))
    assert np.all(np.diff(cl.tau[cl.order]) >= 0)


def test_clock_mean():
    dom = build_rectangle(0, 224, 0, 224)  # 100800 edges
    tau = sample_clocks(dom, Stream(2, "mean", 0)).tau
    stderr = (1 / 12) ** 0.5 / tau.size ** 0.5
    assert abs(tau.mean() - 0.5) < 3 * stderr


def test_tie_break_by_edge_id():
    path = build_rectangle(0, 3, 0, 0)
    cl = clocks_from_times(path, [0.5, 0.5, 0.5])
    assert cl.order.tolist() == [0, 1, 2]


def test_three_path_trace():
    path3 = build_rectangle(0, 2, 0, 0)
    st = run_frozen(path3, clocks_from_times(path3, [0.2, 0.7]), 2)
    assert st.open_mask.tolist() == [1, 0]
    assert st.freeze_events == [(0.2, 2)]
    assert st.blocked.tolist() == [1]
    assert is_frozen(st, (0, 0)) and is_frozen(st, (1, 0)) and not is_frozen(st, (2, 0))
    hole, boundary = hole_containing(st, (2, 0))
    assert hole.tolist() == [2] and boundary.tolist() == [1]
    assert first_freeze_time_in(st, [(0, 0)]) == 0.2
    assert first_freeze_time_in(st, [(2, 0)]) is None
    # the other clock order: both edges open, single frozen cluster of 3
    st2 = run_frozen(path3, clocks_from_times(path3, [0.7, 0.2]), 2)
    assert st2.open_mask.tolist() == [1, 0] or st2.open_mask.tolist() == [0, 1]
    assert st2.freeze_events == [(0.2, 2)]


def test_threshold_one_and_huge():
    b1 = build_box(1)
    cl = sample_clocks(b1, Stream(3, "t", 0))
    st1 = run_frozen(b1, cl, 1)
    assert not st1.open_mask.any()
    assert all(is_frozen(st1, tuple(v)) for v in b1.coords)
    assert first_freeze_time_in(st1, [(0, 0)]) == 0.0
    assert st1.freeze_events == []
    with pytest.raises(FrozenError):
        hole_containing(st1, (0, 0))

    st_big = run_frozen(b1, cl, 10)
    assert st_big.open_mask.all()
    assert st_big.volume_of(0) == 9
    assert not any(is_frozen(st_big, tuple(v)) for v in b1.coords)
    assert first_freeze_time_in(st_big, [(0, 0)]) is None
    hole, boundary = hole_containing(st_big, (0, 0))
    assert hole.size == 9 and boundary.size == 0


def test_vertex_outside_domain_errors():
    b1 = build_box(1)
    st = run_frozen(b1, sample_clocks(b1, Stream(3, "t", 1)), 3)
    with pytest.raises(FrozenError):
        is_frozen(st, (5, 5))
    with pytest.raises(FrozenError):
        hole_containing(st, (5, 5))


SMALL_DOMAINS = [
    build_rectangle(0, 1, 0, 0),   # 1 edge
    build_rectangle(0, 3, 0, 0),   # 3-edge path
    build_rectangle(0, 1, 0, 1),   # 4-edge square
    build_rectangle(0, 2, 0, 1),   # 7 edges
    build_annulus(0, 1),           # 8-edge ring
]


@pytest.mark.parametrize("dom", SMALL_DOMAINS, ids=lambda d: f"{d.kind}{d.params}")
def test_exhaustive_permutations_match_oracle(dom):
    """Every clock order on every small domain: engine state == oracle state."""
    ne, nv = dom.n_edges, dom.n_vertices
    thresholds = sorted({1, 2, 3, (nv + 1) // 2, nv, nv + 1})
    for perm in itertools.permutations(range(ne)):
        tau = np.empty(ne)
        tau[list(perm)] = (np.arange(ne) + 1.0) / (ne + 1.0)
        clocks = clocks_from_times(dom, tau)
        assert clocks.order.tolist() == list(perm)
        for thr in thresholds:
            st = run_frozen(dom, clocks, thr)
            open_ids, label, volume = frozen_oracle(dom, clocks.order, thr)
            assert set(np.flatnonzero(st.open_mask).tolist()) == open_ids
            # identical partition and identical frozen flags
            for v in range(nv):
                assert st.volume_of(v) == volume[label[v]]
                assert (st.volume_of(v) >= thr) == (volume[label[v]] >= thr)


def test_volume_band_property():
    for t, (n, thr) in enumerate([(2, 2), (5, 4), (8, 10), (10, 3), (6, 25)]):
        dom = build_box(n)
        st = run_frozen(dom, sample_clocks(dom, Stream(7, "band", t)), thr)
        roots = np.flatnonzero(st.root == np.arange(dom.n_vertices))
        vols = st.volume[roots]
        frozen = vols >= thr
        assert np.all(vols[frozen] <= 2 * thr - 2)
        assert np.all(vols[~frozen] <= thr - 1)


def test_blocking_certificate_via_trace(tmp_path):
    # write_trace replays the dynamics independently and asserts agreement
    # edge-by-edge; blocked lines carry the witnessing volume >= N
    dom = build_box(4)
    st = run_frozen(dom, sample_clocks(dom, Stream(11, "trace", 0)), 9)
    path = tmp_path / "trace.txt"
    write_trace(st, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == dom.n_edges
    times = []
    for line in lines:
        t, eid, u, v, action, vol = line.split()
        times.append(float(t))
        if action == "blocked":
            assert int(vol) >= 9
        else:
            assert int(vol) <= 2 * 9 - 2
    assert times == sorted(times)


def test_replay_determinism_across_threads():
    dom = build_box(20)
    clocks = sample_clocks(dom, Stream(13, "det", 0))

    def run(_):
        st = run_frozen(dom, clocks, 37)
        return (st.open_mask.tobytes(), st.root.tobytes(), st.volume.tobytes(),
                tuple(st.freeze_events))

    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(run, range(8)))
    assert all(r == results[0] for r in results)


def test_dominated_coupling():
    dom = build_box(6)
    clocks = sample_clocks(dom, Stream(17, "dom", 0))
    st = run_frozen(dom, clocks, 12)
    unconstrained = run_frozen(dom, clocks, dom.n_vertices + 1)
    assert unconstrained.open_mask.all()
    assert np.all(st.open_mask <= unconstrained.open_mask)


def test_hole_structure_mid_run():
    # a frozen cluster splits the rest into lattice-connected holes
    dom = build_box(8)
    st = run_frozen(dom, sample_clocks(dom, Stream(19, "hole", 2)), 40)
    unfrozen = [v for v in range(dom.n_vertices)
                if st.volume[st.root[v]] < 40]
    if not unfrozen:
        pytest.skip("everything froze in this draw")
    seen = set()
    for v in unfrozen:
        if v in seen:
            continue
        hole, boundary = hole_containing(st, dom.vertex(v))
        seen.update(hole.tolist())
        hole_set = set(hole.tolist())
        # boundary edges have exactly one endpoint in the hole
        for eid in boundary:
            u, w = int(dom.edge_u[eid]), int(dom.edge_v[eid])
            assert (u in hole_set) != (w in hole_set)
        # maximality: no unfrozen vertex adjacent to the hole outside it
        indptr, nbr, _ = dom.adjacency
        for h in hole_set:
            for k in range(indptr[h], indptr[h + 1]):
                w = int(nbr[k])
                if st.volume[st.root[w]] < 40:
                    assert w in hole_set


def test_first_freeze_time_matches_events():
    dom = build_box(10)
    st = run_frozen(dom, sample_clocks(dom, Stream(23, "fft", 1)), 30)
    if not st.freeze_events:
        pytest.skip("no freezing in this draw")
    t_all = first_freeze_time_in(st, np.arange(dom.n_vertices))
    assert t_all == st.freeze_events[0][0]
