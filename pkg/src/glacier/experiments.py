"""Experiment orchestration: the C-sqrt(N) freezing profile, the
exceptional-scale profile, the freeze-window solver, and the freeze/event
diagnostics, with plain-text configs, CSV output, and a JSON manifest.

Reproducibility: every CSV row carries (master_seed, trials, stderr) and
re-running a row's parameters reproduces its value byte for byte at any
worker count.  Timing lives only in the manifest's ``timing`` section; the
CSV wall_ms column is left empty so that CSV bytes stay deterministic.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .estimators import (Estimate, EstimatorError, default_workers, estimate_F,
                         estimate_L, _arm_estimate, _parallel_run)
from .lattice import build_box
from .rng import U64, label_key
from .scales import compute_scales
from .static import annulus_face_graph


class ConfigError(ValueError):
    pass


class WindowUnreachableError(RuntimeError):
    """The theta targets cannot be met by the finite-box proxy at this scale."""


CSV_HEADER = "experiment,N,n_or_C,point_label,estimate,stderr,trials,master_seed,wall_ms"


@dataclass
class ExperimentConfig:
    """Knobs for every experiment; unused fields are ignored by each runner."""

    name: str = "experiment"
    Ns: tuple = ()
    C_grid: tuple = ()
    trials: int = 1000
    master_seed: int = 0
    out_dir: str = ""
    workers: int = 0  # 0 = auto
    C1: float = 1.0
    C2: float = 2.0
    C3: float = 1.0
    C4: float = 0.25
    delta: float = 0.01
    depth: int = 3
    level: int = 2  # freeze-diag runs at scale m_level
    pi_stderr: float = 0.002
    exact_pi1: bool = True
    event_scale: str = "mk"  # annuli for E4/E5 from m_{k-1} ("mk") or L_hat(p2) ("Lp2")
    p1_override: float = 0.0  # 0 = solve the window
    p2_override: float = 0.0
    theta_trials: int = 4000
    theta_box_cap: int = 512
    max_box_vertices: int = 20_000_000

    def validate(self, need: tuple = ()) -> "ExperimentConfig":
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0.0 < self.delta <= 0.1:
            raise ConfigError(f"delta must be in (0, 0.1], got {self.delta}")
        if not 0.0 < self.C1 < self.C2:
            raise ConfigError(f"need 0 < C1 < C2, got C1={self.C1} C2={self.C2}")
        if self.C3 <= 0 or self.C4 <= 0:
            raise ConfigError("C3 and C4 must be positive")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.event_scale not in ("mk", "Lp2"):
            raise ConfigError(f"event_scale must be mk or Lp2, got {self.event_scale!r}")
        if "Ns" in need and not self.Ns:
            raise ConfigError("at least one N value is required")
        if "C_grid" in need and not self.C_grid:
            raise ConfigError("a non-empty C grid is required")
        if "profile" in need:
            if any(n < 100 for n in self.Ns):
                raise ConfigError("scale profile needs N >= 100")
            if self.level > self.depth:
                raise ConfigError(f"level {self.level} exceeds depth {self.depth}")
        return self

    @property
    def effective_workers(self) -> int:
        return self.workers if self.workers >= 1 else default_workers()

    def to_text(self) -> str:
        lines = ["# glacier experiment config"]
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


_INT_FIELDS = {"trials", "master_seed", "workers", "depth", "level", "theta_trials",
               "theta_box_cap", "max_box_vertices"}
_FLOAT_FIELDS = {"C1", "C2", "C3", "C4", "delta", "pi_stderr", "p1_override", "p2_override"}
_BOOL_FIELDS = {"exact_pi1"}
_TUPLE_FIELDS = {"Ns": int, "C_grid": float}


def parse_config_items(items: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for k, raw in items.items():
        if k not in known:
            raise ConfigError(f"unknown config key {k!r}")
        raw = raw.strip() if isinstance(raw, str) else raw
        try:
            if k in _TUPLE_FIELDS:
                conv = _TUPLE_FIELDS[k]
                if isinstance(raw, (tuple, list)):
                    kwargs[k] = tuple(conv(x) for x in raw)
                else:
                    kwargs[k] = tuple(conv(x) for x in str(raw).split(",") if x.strip())
            elif k in _INT_FIELDS:
                kwargs[k] = int(raw)
            elif k in _FLOAT_FIELDS:
                kwargs[k] = float(raw)
            elif k in _BOOL_FIELDS:
                kwargs[k] = str(raw).lower() in ("1", "true", "yes", "on")
            else:
                kwargs[k] = str(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {k!r}: {exc}") from None
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str) -> ExperimentConfig:
    """Plain-text config: key=value per line, '#' comments."""
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        items[k.strip()] = v.strip()
    return parse_config_items(items)


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


# --------------------------------------------------------------------------
# output plumbing


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path, rows) -> None:
    """Fixed schema; rows sorted by (experiment, N, point_label); wall_ms empty."""
    rows = sorted(rows, key=lambda r: (r["experiment"], r["N"], r["point_label"]))
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r["experiment"], _fmt(r["N"]), _fmt(r["n_or_C"]), r["point_label"],
            _fmt(r["estimate"]), _fmt(r["stderr"]), _fmt(r["trials"]),
            _fmt(r["master_seed"]), "",
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def _estimate_row(experiment: str, N, n_or_c, point_label: str, est: Estimate) -> dict:
    return {
        "experiment": experiment, "N": N, "n_or_C": n_or_c, "point_label": point_label,
        "estimate": est.value, "stderr": est.stderr, "trials": est.trials,
        "master_seed": est.master_seed,
    }


def run_manifest(config: ExperimentConfig, timing: dict | None = None,
                 outputs: tuple = (), extra: dict | None = None) -> dict:
    """Write manifest.json next to the CSVs; returns the manifest dict.

    Everything outside the ``timing`` section is deterministic for a fixed
    config, so reruns differ only in timestamps and measured durations.
    """
    if not config.out_dir:
        raise ConfigError("manifest requires an output directory")
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "version": f"glacier-{__version__}",
            "name": config.name,
            "master_seed": config.master_seed,
            "config_text": config.to_text(),
            "config": asdict(config),
            "outputs": sorted(outputs),
            "timing": timing or {},
        }
        if extra:
            manifest.update(extra)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write manifest in {config.out_dir!r}: {exc}") from None
    return manifest


def _write_outputs(config, rows, points, timing, extra=None):
    written = []
    if config.out_dir:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{config.name}.csv"
        write_csv(csv_path, rows)
        points_path = out / f"{config.name}_points.json"
        points_path.write_text(json.dumps(points, indent=2, sort_keys=True) + "\n")
        written = [csv_path.name, points_path.name]
        run_manifest(config, timing, tuple(written), extra)
    return written


# --------------------------------------------------------------------------
# Proposition-1 profile: F_N(ceil(C sqrt(N))) against 1/(4 C^2)


def run_prop1_profile(config: ExperimentConfig):
    """Estimate F at n = ceil(C sqrt(N)) over the (C, N) grid.

    Points whose box would exceed the vertex cap are skipped with a warning
    entry; points whose box volume is below N are flagged (F is exactly 0
    there).  The companion points JSON pairs each C with its limit value
    1/(4 C^2).
    """
    from .estimators import reference_phi

    config.validate(("Ns", "C_grid"))
    rows, points, skipped = [], [], []
    per_point_ms = {}
    t_start = time.time()
    for n_val in config.Ns:
        for c in config.C_grid:
            n = math.ceil(c * math.sqrt(n_val))
            label = f"C={_fmt(float(c))}"
            if (2 * n + 1) ** 2 > config.max_box_vertices:
                print(f"warning: skipping N={n_val} C={c}: box B({n}) exceeds "
                      f"the vertex cap {config.max_box_vertices}", file=sys.stderr)
                skipped.append({"N": n_val, "C": c, "n": n, "reason": "box over vertex cap"})
                continue
            t0 = time.time()
            est = estimate_F(n_val, n, config.trials, config.master_seed,
                             config.effective_workers)
            per_point_ms[f"N={n_val},{label}"] = round(1000 * (time.time() - t0), 1)
            rows.append(_estimate_row("prop1", n_val, float(c), label, est))
            points.append({
                "N": n_val, "C": float(c), "n": n,
                "estimate": est.value, "stderr": est.stderr, "trials": est.trials,
                "phi": None if c == 0.5 else reference_phi(c),
                "box_volume": (2 * n + 1) ** 2,
                "volume_below_threshold": (2 * n + 1) ** 2 < n_val,
            })
    timing = {"started_unix": t_start, "wall_ms": round(1000 * (time.time() - t_start), 1),
              "per_point_ms": per_point_ms}
    _write_outputs(config, rows, points, timing, {"skipped": skipped})
    return rows, points


# --------------------------------------------------------------------------
# theta inversion and the freeze window


class SyntheticTheta:
    """Exact monotone curve standing in for the Monte Carlo proxy (tests)."""

    def __init__(self, fn):
        self.fn = fn

    def evaluate(self, p: float, trials: int | None = None) -> Estimate:
        return Estimate(float(self.fn(p)), 0.0, 1, 0, "theta:synthetic", {"p": p})


class MonteCarloTheta:
    """Finite-box theta proxy with the enforced box max(50, 8 L_hat(p)).

    Near criticality the policy box outgrows any budget, so boxes are capped
    at ``box_cap`` and evaluations mark themselves ``capped``; a capped value
    cannot fall below the one-arm probability of the capped box, which is
    what makes small theta targets unreachable at desk scale.
    """

    def __init__(self, master_seed: int, trials: int = 4000, box_cap: int = 512,
                 workers: int | None = None):
        self.master_seed = master_seed
        self.trials = trials
        self.box_cap = box_cap
        self.workers = workers or default_workers()
        self._boxes = {}
        self._memo = {}

    def _box_for(self, p: float) -> tuple:
        if p not in self._boxes:
            try:
                lest = estimate_L(p, self.master_seed, n_cap=max(1, self.box_cap // 8),
                                  workers=self.workers)
                box = max(50, min(8 * int(lest.value), self.box_cap))
                capped = False
            except EstimatorError:
                box, capped = self.box_cap, True
            self._boxes[p] = (box, capped)
        return self._boxes[p]

    def evaluate(self, p: float, trials: int | None = None) -> Estimate:
        p = float(p)
        trials = int(trials or self.trials)
        if not 0.5 < p < 1.0:
            raise EstimatorError(f"theta proxy defined for p in (1/2, 1), got {p}")
        if (p, trials) in self._memo:
            return self._memo[(p, trials)]
        box, capped = self._box_for(p)
        dom = build_box(box)
        sources = np.array([dom.vertex_id(0, 0)], dtype=np.int64)
        target = (dom.max_norm == box).astype(np.uint8)
        est = _arm_estimate(dom, p, sources, target, trials, self.master_seed,
                            f"theta:p={p!r}:n={box}", self.workers,
                            meta={"p": p, "n": box, "capped": capped})
        self._memo[(p, trials)] = est
        return est


@dataclass
class FreezeWindow:
    """The (p2, p1) interval bracketing the first freeze at a given scale."""

    p1: float
    p2: float
    N: int
    scale: int
    C1: float
    C2: float
    delta: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.5 < self.p2 <= self.p1 < 1.0):
            raise WindowUnreachableError(
                f"freeze window must satisfy 1/2 < p2 <= p1 < 1, got ({self.p2}, {self.p1})")


def _invert_theta(theta_source, target: float, iterations: int = 20) -> tuple:
    """Bisection of the monotone proxy p -> theta_hat(p) over p in (0.5, 0.999).

    Early iterations run at the source's base trial count; the last six (and
    the certification of the result) use eight times as many so the residual
    check is limited by the bisection grid, not by Monte Carlo noise.
    """
    top = theta_source.evaluate(0.99)
    if not 0.0 < target < top.value:
        raise WindowUnreachableError(
            f"window unreachable at this scale: theta target {target:.6g} outside "
            f"(0, theta_hat(0.99)={top.value:.6g})")
    base = getattr(theta_source, "trials", None)
    lo, hi = 0.5, 0.999
    probes = []
    for it in range(iterations):
        mid = 0.5 * (lo + hi)
        fine = base is not None and it >= iterations - 6
        est = theta_source.evaluate(mid, 8 * base) if fine else theta_source.evaluate(mid)
        probes.append((mid, est.value, est.stderr))
        if est.value < target:
            lo = mid
        else:
            hi = mid
    p_hat = hi  # smallest probed p with theta_hat >= target
    final = (theta_source.evaluate(p_hat, 8 * base) if base is not None
             else theta_source.evaluate(p_hat))
    residual = abs(final.value - target) / target
    if lo == 0.5 and residual > 0.02 and final.value > target:
        raise WindowUnreachableError(
            f"window unreachable at this scale: theta target {target:.6g} lies below "
            f"the proxy floor {final.value:.6g} (capped box "
            f"{final.meta.get('n', '?')}); no p > 1/2 attains it")
    return p_hat, final, residual, probes


def solve_freeze_window(N: int, scale: int, C1: float, C2: float, delta: float,
                        theta_source=None, master_seed: int = 0,
                        iterations: int = 20) -> FreezeWindow:
    """Solve theta(p2) (2 C2 s)^2 = N(1-delta) and
    theta(p1) (2 * 9/10 * C1 s)^2 = N(1+delta) by inverting the finite-box
    proxy with bisection.

    Raises WindowUnreachableError when a target falls outside the proxy's
    attainable range (above theta_hat(0.99), or below the capped-box floor;
    the floor case is what happens at the deeper exceptional scales, where
    the targets shrink like the one-arm probability but the proxy cannot go
    below the one-arm probability of any affordable box).
    """
    if scale < 1 or N < 1:
        raise ConfigError("N and scale must be positive")
    if not 0 < C1 < C2:
        raise ConfigError(f"need 0 < C1 < C2, got C1={C1} C2={C2}")
    if theta_source is None:
        theta_source = MonteCarloTheta(master_seed)
    target_p2 = N * (1.0 - delta) / (2.0 * C2 * scale) ** 2
    target_p1 = N * (1.0 + delta) / (2.0 * 0.9 * C1 * scale) ** 2
    p2, est2, res2, probes2 = _invert_theta(theta_source, target_p2, iterations)
    p1, est1, res1, probes1 = _invert_theta(theta_source, target_p1, iterations)
    meta = {
        "targets": {"p1": target_p1, "p2": target_p2},
        "theta_at": {"p1": est1.value, "p2": est2.value},
        "residuals": {"p1": res1, "p2": res2},
        "probes": {"p1": probes1, "p2": probes2},
    }
    return FreezeWindow(p1=p1, p2=min(p2, p1), N=int(N), scale=int(scale),
                        C1=C1, C2=C2, delta=delta, meta=meta)


# --------------------------------------------------------------------------
# exceptional-scale profile


def run_scale_profile(config: ExperimentConfig):
    """F_N at the scales m_1, g_1, m_2, g_2, m_3 (g_k geometric midpoints).

    Emits one row per point with confidence intervals, and flags whether the
    m_2 estimate exceeds both midpoint estimates with non-overlapping 95%
    intervals (the directional expectation; recorded, not asserted).
    """
    config.validate(("Ns", "profile"))
    pi_source = "exact1" if config.exact_pi1 else "mc"
    rows, points = [], []
    per_point_ms = {}
    t_start = time.time()
    for n_val in config.Ns:
        table = compute_scales(n_val, 3, pi_source, config.master_seed,
                               config.pi_stderr, config.max_box_vertices,
                               config.effective_workers)
        m1, m2, m3 = table.scales[1], table.scales[2], table.scales[3]
        g1 = math.ceil(math.sqrt(m1 * m2))
        g2 = math.ceil(math.sqrt(m2 * m3))
        grid = [("m1", m1), ("g1", g1), ("m2", m2), ("g2", g2), ("m3", m3)]
        ests = {}
        for tag, n in grid:
            t0 = time.time()
            est = estimate_F(n_val, n, config.trials, config.master_seed,
                             config.effective_workers)
            per_point_ms[f"N={n_val},{tag}"] = round(1000 * (time.time() - t0), 1)
            ests[tag] = est
            rows.append(_estimate_row("profile", n_val, n, tag, est))
        separated = {
            "m2_vs_g1": ests["m2"].value - ests["m2"].ci95 > ests["g1"].value + ests["g1"].ci95,
            "m2_vs_g2": ests["m2"].value - ests["m2"].ci95 > ests["g2"].value + ests["g2"].ci95,
        }
        points.append({
            "N": n_val,
            "scales": {tag: n for tag, n in grid},
            "scale_table": table.rows(),
            "estimates": {tag: {"value": e.value, "stderr": e.stderr, "ci95": e.ci95,
                                "trials": e.trials} for tag, e in ests.items()},
            "m2_separated": separated,
        })
    timing = {"started_unix": t_start, "wall_ms": round(1000 * (time.time() - t_start), 1),
              "per_point_ms": per_point_ms}
    _write_outputs(config, rows, points, timing)
    return rows, points


# --------------------------------------------------------------------------
# freeze-window and event diagnostics


def _region_edge_ids(dom, inner: int, outer: int) -> np.ndarray:
    """Edges with both endpoints at max-norm in (inner, outer]; inner < 0 keeps all."""
    nm = dom.max_norm
    ok = (nm[dom.edge_u] <= outer) & (nm[dom.edge_v] <= outer)
    if inner >= 0:
        ok &= (nm[dom.edge_u] > inner) & (nm[dom.edge_v] > inner)
    return np.flatnonzero(ok).astype(np.int64)


def _face_graph_or_empty(dom, n1: int, n2: int, valid: bool):
    if not valid:
        empty = np.zeros(0, dtype=np.int64)
        return 0, empty, empty, empty, empty, empty
    return annulus_face_graph(dom, n1, n2)


def run_freeze_diagnostics(config: ExperimentConfig):
    """First-freeze histogram, in-window fraction, hole radii, and the E1-E5
    event frequencies at the configured scale (m_level geometry).

    One clock array per trial drives everything: the frozen run and the
    p1/p2 configurations are the paper's natural coupling.  E4/E5 are
    evaluated only when their annuli fit the geometry (at desk scale the
    default constants usually do not fit; validity flags are emitted).
    """
    config.validate(("Ns", "profile"))
    pi_source = "exact1" if config.exact_pi1 else "mc"
    rows, points = [], []
    per_point_ms = {}
    t_start = time.time()
    for n_val in config.Ns:
        t0 = time.time()
        table = compute_scales(n_val, config.level, pi_source, config.master_seed,
                               config.pi_stderr, config.max_box_vertices,
                               config.effective_workers)
        m_scale = table.scales[config.level]
        m_prev = table.scales[config.level - 1]

        if config.p1_override > 0 and config.p2_override > 0:
            window = FreezeWindow(p1=config.p1_override, p2=config.p2_override,
                                  N=n_val, scale=m_scale, C1=config.C1, C2=config.C2,
                                  delta=config.delta, meta={"override": True})
        else:
            theta_source = MonteCarloTheta(config.master_seed, config.theta_trials,
                                           config.theta_box_cap, config.effective_workers)
            window = solve_freeze_window(n_val, m_scale, config.C1, config.C2,
                                         config.delta, theta_source, config.master_seed)

        stats = _diagnose_window(config, n_val, m_scale, m_prev, window)
        per_point_ms[f"N={n_val}"] = round(1000 * (time.time() - t0), 1)
        for tag, est in stats["frequencies"].items():
            rows.append(_estimate_row("freeze-diag", n_val, m_scale, tag, est))
        stats["frequencies"] = {tag: {"value": e.value, "stderr": e.stderr, "trials": e.trials}
                                for tag, e in stats["frequencies"].items()}
        points.append(stats)
    timing = {"started_unix": t_start, "wall_ms": round(1000 * (time.time() - t_start), 1),
              "per_point_ms": per_point_ms}
    _write_outputs(config, rows, points, timing)
    return rows, points


def _diagnose_window(config: ExperimentConfig, n_val: int, m_scale: int, m_prev: int,
                     window: FreezeWindow) -> dict:
    box_r = math.ceil(config.C2 * m_scale)
    dom = build_box(box_r)
    if dom.n_vertices > config.max_box_vertices:
        raise ConfigError(f"diagnostic box B({box_r}) exceeds the vertex cap")
    r_c1 = math.ceil(config.C1 * m_scale)
    r_92 = math.ceil(0.9 * config.C1 * m_scale)
    r_82 = math.ceil(0.8 * config.C1 * m_scale)
    r_72 = math.ceil(0.7 * config.C1 * m_scale)
    if not (0 < r_72 < r_82 <= r_92 < r_c1 <= box_r):
        raise ConfigError(
            f"diagnostic rings collapsed at scale {m_scale} with C1={config.C1}: "
            f"got radii ({r_72}, {r_82}, {r_92}, {r_c1}) in B({box_r})")

    if config.event_scale == "mk":
        e5_in, e5_out = math.ceil(config.C3 * m_prev), math.ceil(2 * config.C3 * m_prev)
        e4_in, e4c_in, e4c_out = e5_out, e5_out, math.ceil(4 * config.C3 * m_prev)
    else:
        lref = window.meta.get("L_p2")
        if lref is None:
            lref = estimate_L(window.p2, config.master_seed,
                              n_cap=max(64, config.theta_box_cap),
                              workers=config.effective_workers).value
        e5_in, e5_out = math.ceil(config.C4 * lref), math.ceil(config.C3 * lref)
        e4_in, e4c_in, e4c_out = e5_out, e5_out, math.ceil(2 * config.C3 * lref)

    e4_valid = 0 < e4_in < r_c1 and 0 < e4c_in < e4c_out <= box_r
    e5_valid = 0 < e5_in < e5_out <= box_r

    norms = dom.max_norm.astype(np.int64)
    indptr, nbr, _ = dom.adjacency
    origin = dom.vertex_id(0, 0)
    center_ids = dom.ids_max_norm_le(r_92)
    e1a = _face_graph_or_empty(dom, r_72, r_82, True)
    e1b = _face_graph_or_empty(dom, r_92, r_c1, True)
    e2_edges = _region_edge_ids(dom, -1, r_92)
    e3a_edges = _region_edge_ids(dom, -1, r_82)
    e3b_edges = _region_edge_ids(dom, r_72, r_c1)
    e4c = _face_graph_or_empty(dom, e4c_in, e4c_out, e4_valid)
    e4_src = dom.ids_max_norm_le(e4_in) if e4_valid else np.zeros(0, dtype=np.int64)
    e4_tgt = dom.ids_max_norm(r_c1) if e4_valid else np.zeros(0, dtype=np.int64)
    e5_edges = (_region_edge_ids(dom, -1, e5_out) if e5_valid
                else np.zeros(0, dtype=np.int64))
    e5_a = dom.ids_max_norm_le(e5_in) if e5_valid else np.zeros(0, dtype=np.int64)
    e5_b = dom.ids_max_norm(e5_out) if e5_valid else np.zeros(0, dtype=np.int64)

    trials = config.trials
    out_events = np.zeros(trials, dtype=np.int64)
    out_tstar = np.zeros(trials, dtype=np.float64)
    out_frozen0 = np.zeros(trials, dtype=np.uint8)
    out_rmin = np.zeros(trials, dtype=np.int64)
    out_rmax = np.zeros(trials, dtype=np.int64)
    out_touch = np.zeros(trials, dtype=np.uint8)
    seed = U64(config.master_seed & ((1 << 64) - 1))
    key = label_key(f"freeze-diag:N={n_val}:scale={m_scale}:C2={config.C2!r}")

    def chunk(t0, count):
        kernels.freeze_diag_batch(
            dom.n_vertices, dom.edge_u, dom.edge_v, norms, indptr, nbr,
            n_val, window.p1, window.p2, box_r, origin, center_ids,
            e1a[0], e1a[1], e1a[2], e1a[3], e1a[4], e1a[5],
            e1b[0], e1b[1], e1b[2], e1b[3], e1b[4], e1b[5],
            e2_edges, e3a_edges, e3b_edges,
            e4_valid, e4_src, e4_tgt,
            e4c[0], e4c[1], e4c[2], e4c[3], e4c[4], e4c[5],
            e5_valid, e5_edges, e5_a, e5_b,
            seed, key, t0, count,
            out_events[t0:t0 + count], out_tstar[t0:t0 + count],
            out_frozen0[t0:t0 + count], out_rmin[t0:t0 + count],
            out_rmax[t0:t0 + count], out_touch[t0:t0 + count])

    _parallel_run(chunk, trials, config.effective_workers)

    def freq(label: str, flags: np.ndarray) -> Estimate:
        succ = int(flags.sum())
        v = succ / trials
        return Estimate(v, math.sqrt(v * (1 - v) / trials), trials, config.master_seed,
                        label, {"N": n_val, "scale": m_scale})

    ev = out_events
    has_t = ~np.isnan(out_tstar)
    in_window = has_t & (out_tstar > window.p2) & (out_tstar < window.p1)
    freqs = {
        "first_freeze_in_window": freq("in_window", in_window),
        "E1": freq("E1", (ev & kernels.EV_E1A > 0) & (ev & kernels.EV_E1B > 0)),
        "E2": freq("E2", ev & kernels.EV_E2 > 0),
        "E3": freq("E3", (ev & kernels.EV_E3A > 0) & (ev & kernels.EV_E3B > 0)
                   & (ev & kernels.EV_E3C > 0)),
    }
    if e4_valid:
        freqs["E4"] = freq("E4", (ev & kernels.EV_E4A > 0) & (ev & kernels.EV_E4B > 0))
    if e5_valid:
        freqs["E5"] = freq("E5", ev & kernels.EV_E5 > 0)

    t_vals = np.sort(out_tstar[has_t])
    hist_counts, hist_edges = np.histogram(t_vals, bins=20) if t_vals.size else (np.zeros(0), np.zeros(0))
    hole_def = out_rmax >= 0
    stats = {
        "N": n_val, "scale": m_scale, "scale_prev": m_prev, "box_radius": box_r,
        "window": {"p1": window.p1, "p2": window.p2, "meta": window.meta},
        "geometry": {"r_c1": r_c1, "r_92": r_92, "r_82": r_82, "r_72": r_72,
                     "e4_valid": bool(e4_valid), "e5_valid": bool(e5_valid),
                     "e4_annulus": [e4c_in, e4c_out], "e5_annulus": [e5_in, e5_out]},
        "trials": trials,
        "frequencies": freqs,
        "first_freeze": {
            "defined_fraction": float(has_t.mean()),
            "histogram_counts": hist_counts.tolist(),
            "histogram_edges": hist_edges.tolist(),
            "quantiles": {q: float(np.quantile(t_vals, q)) for q in (0.1, 0.5, 0.9)}
            if t_vals.size else {},
        },
        "hole": {
            "origin_in_first_cluster_fraction": float(out_frozen0.mean()),
            "defined_fraction": float(hole_def.mean()),
            "touches_boundary_fraction": float(out_touch.mean()),
            "rmin_over_prev_scale": {q: float(np.quantile(out_rmin[hole_def] / m_prev, q))
                                     for q in (0.1, 0.5, 0.9)} if hole_def.any() else {},
            "rmax_over_prev_scale": {q: float(np.quantile(out_rmax[hole_def] / m_prev, q))
                                     for q in (0.1, 0.5, 0.9)} if hole_def.any() else {},
        },
    }
    return stats
