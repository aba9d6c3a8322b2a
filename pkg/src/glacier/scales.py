"""The exceptional scales m_k(N): m_0 = 1 and
m_{k+1} = ceil(sqrt(N / pi_hat(m_k))), evaluated with the exact one-arm
value 15/16 at radius 1 and Monte Carlo estimates deeper, plus the
diagnostic reports on scale ratios and the volume plateau m_k^2 pi(m_k).

Ceilings are always applied (the recursion is integer-valued here), and the
one-arm uncertainty is propagated to an integer interval per level:
[ceil with pi+3*stderr, ceil with pi-3*stderr].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .estimators import PI1_EXACT, Estimate, estimate_pi


class ScaleError(ValueError):
    pass


#: trials that guarantee a Bernoulli stderr <= target for any success rate
def trials_for_stderr(target: float) -> int:
    return math.ceil(0.25 / (target * target))


@dataclass
class ScaleTable:
    """m_0..m_K with the pi estimates that produced each step."""

    N: int
    scales: list  # [m_0, ..., m_K]
    pi_used: list  # [Estimate at m_0, ..., Estimate at m_{K-1}]
    intervals: list  # [(m_lo, m_hi) for m_1..m_K]
    master_seed: int
    pi_mode: str

    @property
    def depth(self) -> int:
        return len(self.scales) - 1

    def rows(self) -> list:
        out = []
        for k in range(1, len(self.scales)):
            est = self.pi_used[k - 1]
            lo, hi = self.intervals[k - 1]
            out.append({
                "k": k, "m_k": self.scales[k],
                "pi_hat": est.value, "pi_stderr": est.stderr,
                "m_lo": lo, "m_hi": hi,
            })
        return out


def _next_scale(N: int, pi_value: float) -> int:
    return math.ceil(math.sqrt(N / pi_value))


def compute_scales(N: int, depth: int, pi_source="exact1", master_seed: int = 0,
                   stderr_target: float = 0.002, max_box_vertices: int = 20_000_000,
                   workers: int | None = None) -> ScaleTable:
    """Evaluate the scale recursion down to ``depth`` levels.

    pi_source: "exact1" uses the exact value 15/16 for the first step and
    Monte Carlo beyond; "mc" estimates every level; a callable n -> Estimate
    substitutes for the estimator entirely (synthetic tests).
    """
    N = int(N)
    if N < 2:
        raise ScaleError(f"N must be >= 2, got {N}")
    if depth < 1:
        raise ScaleError(f"depth must be >= 1, got {depth}")

    def pi_at(n: int) -> Estimate:
        if callable(pi_source):
            return pi_source(n)
        if pi_source == "exact1" and n == 1:
            return Estimate(PI1_EXACT, 0.0, 0, master_seed, "pi:exact:n=1",
                            {"n": 1, "exact": True})
        if pi_source not in ("exact1", "mc"):
            raise ScaleError(f"unknown pi_source {pi_source!r}")
        return estimate_pi(n, trials_for_stderr(stderr_target), master_seed, workers)

    scales = [1]
    pi_used = []
    intervals = []
    for _ in range(depth):
        est = pi_at(scales[-1])
        if not 0.0 < est.value <= 1.0:
            raise ScaleError(f"pi estimate out of (0,1]: {est.value} at n={scales[-1]}")
        m_next = _next_scale(N, est.value)
        if (2 * m_next + 1) ** 2 > max_box_vertices:
            raise ScaleError(
                f"scale m={m_next} needs a box of {(2 * m_next + 1) ** 2} vertices, "
                f"over the cap {max_box_vertices}")
        hi_pi = min(1.0, est.value + 3 * est.stderr)
        lo_pi = max(est.value - 3 * est.stderr, 1e-12)
        intervals.append((_next_scale(N, hi_pi), _next_scale(N, lo_pi)))
        pi_used.append(est)
        scales.append(m_next)
    mode = pi_source if isinstance(pi_source, str) else "callable"
    return ScaleTable(N, scales, pi_used, intervals, master_seed, mode)


def check_scale_bounds(table: ScaleTable) -> list:
    """Per-level ratio report against the a-priori upper bound N^(3^-k).

    The matching lower bound holds for some unknown positive exponent, so
    only the observed exponent log(ratio)/log(N) is reported for it.
    """
    if table.depth < 2:
        raise ScaleError("scale-bound report needs depth >= 2")
    out = []
    for k in range(table.depth):
        ratio = table.scales[k + 1] / table.scales[k]
        upper = table.N ** (3.0 ** (-k))
        out.append({
            "k": k,
            "ratio": ratio,
            "observed_exponent": math.log(ratio) / math.log(table.N),
            "upper_bound": upper,
            "upper_ok": ratio <= upper,
        })
    return out


def check_volume_plateau(table: ScaleTable, workers: int | None = None,
                         stderr_target: float = 0.002) -> list:
    """Report m_k^2 pi_hat(m_k) / N per level (k = 1..K).

    By construction the sequence sits just below 1 up to ceiling slack and
    creeps toward it; each row carries the ratio, its stderr, the ceiling
    slack (1 + 1/m_k)^2 - 1, and an in-band flag ratio <= 1 + slack + 3 sigma.
    """
    out = []
    for k in range(1, table.depth + 1):
        m = table.scales[k]
        if k < table.depth:
            est = table.pi_used[k]  # pi at m_k already computed for the next level
        else:
            est = estimate_pi(m, trials_for_stderr(stderr_target), table.master_seed, workers)
        ratio = m * m * est.value / table.N
        sigma = m * m * est.stderr / table.N
        slack = (1.0 + 1.0 / m) ** 2 - 1.0
        out.append({
            "k": k, "m_k": m, "pi_hat": est.value,
            "ratio": ratio, "ratio_stderr": sigma,
            "ceiling_slack": slack,
            "in_band": 0.0 < ratio <= 1.0 + slack + 3 * sigma,
        })
    return out
