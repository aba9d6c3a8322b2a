"""Monte Carlo estimators of the scalar functions driving the experiments:
one-arm probability, finite-box density proxy, crossing probabilities, the
characteristic length, and the frozen-origin probability F_N(n).

Reproducibility contract: identical (parameters, master_seed, trials) give a
bit-identical Estimate, independent of worker count and scheduling.  Every
trial draws from a private stream keyed by (master_seed, label, trial); the
label encodes the estimator and its defining parameters.  Aggregation uses
exact integer success counts, never order-dependent float accumulation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .lattice import Domain, build_box, build_rectangle
from .rng import U64, label_key


class EstimatorError(ValueError):
    pass


def default_workers() -> int:
    env = os.environ.get("GLACIER_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


@dataclass
class Estimate:
    """A Monte Carlo point estimate with its provenance."""

    value: float
    stderr: float
    trials: int
    master_seed: int
    label: str
    meta: dict = field(default_factory=dict)

    @property
    def ci95(self) -> float:
        return 1.96 * self.stderr

    def record(self) -> dict:
        rec = {
            "params": {k: v for k, v in self.meta.items() if k != "probes"},
            "value": self.value,
            "stderr": self.stderr,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "label": self.label,
        }
        if "probes" in self.meta:
            rec["probes"] = self.meta["probes"]
        return rec


def joint_stderr(a: Estimate, b: Estimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def _chunks(trials: int, workers: int):
    pieces = max(1, min(trials, workers * 8))
    step = trials // pieces
    extra = trials % pieces
    start = 0
    for i in range(pieces):
        count = step + (1 if i < extra else 0)
        if count:
            yield start, count
        start += count


def _parallel_sum(chunk_fn, trials: int, workers: int) -> int:
    if workers <= 1:
        return sum(chunk_fn(t0, c) for t0, c in _chunks(trials, 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(chunk_fn, t0, c) for t0, c in _chunks(trials, workers)]
        return sum(f.result() for f in futs)


def _parallel_run(chunk_fn, trials: int, workers: int) -> None:
    """Run chunk_fn(t0, count) for side effects (filling per-trial slices)."""
    if workers <= 1:
        for t0, c in _chunks(trials, 1):
            chunk_fn(t0, c)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(chunk_fn, t0, c) for t0, c in _chunks(trials, workers)]
        for f in futs:
            f.result()


def _bernoulli(successes: int, trials: int, master_seed: int, label: str, **meta) -> Estimate:
    value = successes / trials
    stderr = math.sqrt(value * (1.0 - value) / trials)
    return Estimate(value, stderr, trials, master_seed, label, dict(meta))


def _check_positive_trials(trials: int) -> int:
    trials = int(trials)
    if trials < 1:
        raise EstimatorError(f"trials must be >= 1, got {trials}")
    return trials


def _arm_estimate(domain: Domain, p: float, sources: np.ndarray, target_mask: np.ndarray,
                  trials: int, master_seed: int, label: str, workers: int,
                  meta: dict | None = None) -> Estimate:
    indptr, nbr, eids = domain.adjacency
    key = label_key(label)
    seed = U64(master_seed & ((1 << 64) - 1))
    ne = domain.n_edges

    def chunk(t0, count):
        return kernels.arm_batch(indptr, nbr, eids, ne, p, sources, target_mask,
                                 seed, key, t0, count)

    succ = _parallel_sum(chunk, trials, workers)
    return _bernoulli(succ, trials, master_seed, label, **(meta or {}))


def estimate_pi(n: int, trials: int, master_seed: int, workers: int | None = None) -> Estimate:
    """One-arm probability pi(n): origin connected to max-norm-n ring at p = 1/2."""
    n = int(n)
    if n < 0:
        raise EstimatorError(f"n must be >= 0, got {n}")
    label = f"pi:n={n}"
    if n == 0:
        return Estimate(1.0, 0.0, _check_positive_trials(trials), master_seed, label,
                        {"n": 0, "exact": True})
    trials = _check_positive_trials(trials)
    workers = workers or default_workers()
    dom = build_box(n)
    sources = np.array([dom.vertex_id(0, 0)], dtype=np.int64)
    target = (dom.max_norm == n).astype(np.uint8)
    return _arm_estimate(dom, 0.5, sources, target, trials, master_seed, label, workers,
                         meta={"n": n})


PI1_EXACT = 15.0 / 16.0  # origin touches its ring iff any of its 4 edges is open


@lru_cache(maxsize=256)
def _cached_L(p: float, master_seed: int, tol: float, n_cap: int) -> tuple:
    est = estimate_L(p, master_seed, tol=tol, n_cap=n_cap)
    return est.value, est.stderr, est.trials, tuple(est.meta["probes"])


def theta_proxy_box(p: float, master_seed: int, n_cap: int = 4096) -> int:
    """The enforced proxy box for theta: max(50, 8 * L_hat(p))."""
    lval, *_ = _cached_L(float(p), int(master_seed), 0.01, int(n_cap))
    return max(50, int(8 * lval))


def estimate_theta(p: float, n: int, trials: int, master_seed: int,
                   workers: int | None = None, n_cap: int = 4096) -> Estimate:
    """Finite-box proxy for the infinite-cluster density: P_p(0 <-> ring n).

    Only meaningful above criticality, and biased upward against the true
    density (the proxy also counts clusters that die beyond the box); the
    bias shrinks as n grows.  Rejects p <= 1/2 and any box smaller than
    8 * L_hat(p).
    """
    p = float(p)
    if not p > 0.5:
        raise EstimatorError(f"theta proxy needs p > 1/2, got {p}")
    n = int(n)
    lval, lerr, ltrials, _ = _cached_L(p, int(master_seed), 0.01, int(n_cap))
    if n < 8 * lval:
        raise EstimatorError(
            f"theta proxy box n={n} below enforced floor 8*L_hat(p)={8 * int(lval)}")
    trials = _check_positive_trials(trials)
    workers = workers or default_workers()
    label = f"theta:p={p!r}:n={n}"
    dom = build_box(n)
    sources = np.array([dom.vertex_id(0, 0)], dtype=np.int64)
    target = (dom.max_norm == n).astype(np.uint8)
    return _arm_estimate(dom, p, sources, target, trials, master_seed, label, workers,
                         meta={"p": p, "n": n, "L_hat": int(lval)})


def _crossing_rect_estimate(p: float, x2: int, y2: int, trials: int, master_seed: int,
                            label: str, workers: int, meta: dict | None = None) -> Estimate:
    dom = build_rectangle(0, x2, 0, y2)
    xs = dom.coords[:, 0]
    sources = np.flatnonzero(xs == 0).astype(np.int64)
    target = (xs == x2).astype(np.uint8)
    return _arm_estimate(dom, p, sources, target, trials, master_seed, label, workers, meta)


def estimate_crossing(p: float, n: int, trials: int, master_seed: int,
                      workers: int | None = None) -> Estimate:
    """Horizontal-crossing probability of [0, 2n] x [0, n] at parameter p."""
    n = int(n)
    if n < 1:
        raise EstimatorError(f"n must be >= 1, got {n}")
    trials = _check_positive_trials(trials)
    workers = workers or default_workers()
    label = f"cross:p={float(p)!r}:n={n}"
    return _crossing_rect_estimate(float(p), 2 * n, n, trials, master_seed, label, workers,
                                   meta={"p": float(p), "n": n})


def estimate_selfdual_crossing(n: int, trials: int, master_seed: int,
                               workers: int | None = None) -> Estimate:
    """Left-right crossing of the (n+1)-wide, n-tall vertex rectangle at p = 1/2.

    That is the grid [0, n] x [0, n-1], whose crossing probability is exactly
    1/2 by self-duality.
    """
    n = int(n)
    if n < 1:
        raise EstimatorError(f"n must be >= 1, got {n}")
    trials = _check_positive_trials(trials)
    workers = workers or default_workers()
    label = f"selfdual:n={n}"
    return _crossing_rect_estimate(0.5, n, n - 1, trials, master_seed, label, workers,
                                   meta={"n": n})


def estimate_L(p: float, master_seed: int, trials_per_probe: int | None = None,
               tol: float = 0.01, n_cap: int = 4096,
               workers: int | None = None) -> Estimate:
    """Characteristic length L_{1/4}: smallest n whose 2n x n rectangle crosses
    with probability >= 3/4, located by doubling then binary search.

    Statistical surrogate of a deterministic quantity: probes use enough
    trials for stderr <= tol at the decision boundary (or the explicit
    trials_per_probe), the returned stderr is the half-width of the final
    bracket, and meta records every probe.  Probe streams are keyed by n
    only, so estimates at different p share samples; pathwise monotonicity
    in p then makes the search consistent across p, and L(p) = L(1-p) holds
    exactly under the same master_seed.
    """
    p = float(p)
    if p == 0.5:
        raise EstimatorError("L is undefined at p = 1/2")
    if p < 0.5:
        p = 1.0 - p
    workers = workers or default_workers()
    per_probe = trials_per_probe or math.ceil(0.75 * 0.25 / (tol * tol))
    probes = []

    def probe(n: int) -> float:
        est = _crossing_rect_estimate(p, 2 * n, n, per_probe, master_seed,
                                      f"L:n={n}", workers, meta={"n": n})
        probes.append((n, est.value, est.trials))
        return est.value

    n = 1
    while True:
        if probe(n) >= 0.75:
            hi = n
            break
        if n >= n_cap:
            raise EstimatorError(
                f"characteristic length exceeds cap n_cap={n_cap} at p={p}")
        n = min(2 * n, n_cap)
    lo = hi // 2  # crossing estimate at lo was < 3/4 (or lo == 0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid) >= 0.75:
            hi = mid
        else:
            lo = mid
    total = sum(t for _, _, t in probes)
    stderr = (hi - lo) / 2.0
    return Estimate(float(hi), stderr, total, master_seed, f"L:p={p!r}",
                    {"p": p, "tol": tol, "n_cap": n_cap, "probes": probes})


def estimate_F(threshold: int, n: int, trials: int, master_seed: int,
               workers: int | None = None) -> Estimate:
    """F_N(n): probability the origin is frozen at time 1 in B(n).

    Clock order is drawn directly as a uniform permutation (argsort of
    i.i.d. clocks is uniform and the event never needs the clock values).
    """
    threshold, n = int(threshold), int(n)
    if threshold < 1:
        raise EstimatorError(f"volume threshold must be >= 1, got {threshold}")
    if n < 0:
        raise EstimatorError(f"n must be >= 0, got {n}")
    trials = _check_positive_trials(trials)
    workers = workers or default_workers()
    label = f"F:N={threshold}:n={n}"
    dom = build_box(n)
    origin = dom.vertex_id(0, 0)
    seed = U64(master_seed & ((1 << 64) - 1))
    key = label_key(label)

    def chunk(t0, count):
        return kernels.frozen_origin_batch(dom.n_vertices, dom.edge_u, dom.edge_v,
                                           threshold, origin, seed, key, t0, count)

    succ = _parallel_sum(chunk, trials, workers)
    return _bernoulli(succ, trials, master_seed, label, N=threshold, n=n,
                      box_volume=dom.n_vertices)


def estimate_largest_volumes(p: float, n: int, trials: int, master_seed: int,
                             workers: int | None = None) -> np.ndarray:
    """Per-trial largest open-cluster volume in B(n) at parameter p."""
    trials = _check_positive_trials(trials)
    workers = workers or default_workers()
    dom = build_box(int(n))
    seed = U64(master_seed & ((1 << 64) - 1))
    key = label_key(f"largest:p={float(p)!r}:n={int(n)}")
    out = np.empty(trials, dtype=np.int64)

    def chunk(t0, count):
        kernels.largest_batch(dom.n_vertices, dom.edge_u, dom.edge_v, float(p),
                              seed, key, t0, count, out[t0:t0 + count])

    _parallel_run(chunk, trials, workers)
    return out


def reference_phi(c: float) -> float:
    """Limit profile of F_N(ceil(C sqrt(N))): 1/(4 C^2) above C = 1/2, else 0."""
    c = float(c)
    if c <= 0:
        raise EstimatorError(f"C must be positive, got {c}")
    if c == 0.5:
        raise EstimatorError("phi is undefined at C = 1/2")
    return 0.0 if c < 0.5 else 1.0 / (4.0 * c * c)


@dataclass
class PiTable:
    """pi estimates over a grid of radii (pi(0) = 1 exactly)."""

    entries: dict  # n -> Estimate
    master_seed: int

    def radii(self) -> list[int]:
        return sorted(self.entries)

    def value(self, n: int) -> float:
        return self.entries[n].value


def build_pi_table(ns, trials: int, master_seed: int, workers: int | None = None) -> PiTable:
    entries = {int(n): estimate_pi(int(n), trials, master_seed, workers) for n in ns}
    return PiTable(entries, master_seed)
