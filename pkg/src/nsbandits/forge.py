"""Single-change instances that lock classical policies onto a bad arm, and the
parameter arithmetic behind the UCB construction."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .instance import Instance, Segment, det_segment, validate_instance


class ForgeError(ValueError):
    """A construction precondition does not hold."""


def alpha(T: float) -> float:
    """Confidence scale sqrt(2 ln T) of the known-horizon UCB index."""
    if T < 1:
        raise ForgeError(f"T={T} < 1")
    return math.sqrt(2.0 * math.log(T))


def ucb_precondition(T: int, K: int) -> bool:
    return T > 4 * K * math.log(T)


def ucb_c_interval(T: int, K: int) -> tuple[float, float]:
    """Range [(T a / 2K)^(2/3), (T a / K)^(2/3)] for the per-arm pre-change pull count."""
    if not ucb_precondition(T, K):
        raise ForgeError(f"need T > 4K ln T, got T={T}, 4K ln T={4 * K * math.log(T):.4g}")
    a = alpha(T)
    return (T * a / (2 * K)) ** (2 / 3), (T * a / K) ** (2 / 3)


def check_inertia_condition(c: int, delta: float, T: int, K: int, known_horizon: bool = True) -> bool:
    """True iff an arm that alone collects reward ``delta`` after the change keeps
    a strictly larger UCB index than every untouched arm, for x = 1..T-Kc
    post-change pulls.

    The log argument is T for the known-horizon index and Kc + x for the
    anytime one.
    """
    if not 1 <= K * c + 1 <= T:
        raise ForgeError(f"need 1 <= Kc+1 <= T, got c={c}, K={K}, T={T}")
    x = np.arange(1, T - K * c + 1, dtype=float)
    if x.size == 0:
        return True
    logs = np.full_like(x, math.log(T)) if known_horizon else np.log(K * c + x)
    lhs = delta * x / (c + x) + np.sqrt(2.0 * logs / (c + x))
    rhs = np.sqrt(2.0 * logs / c)
    return bool(np.all(lhs > rhs))


@dataclass(frozen=True)
class UcbForgeParams:
    T: int
    K: int
    alpha: float
    c: int
    delta: float
    breakpoint: int

    def sidecar(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


def forge_ucb(T: int, K: int) -> tuple[Instance, UcbForgeParams]:
    """All arms pay 0 for Kc rounds, then (1, delta, ..., delta).

    Uses the smallest admissible integer c and delta = alpha/sqrt(c).
    """
    if K < 2:
        raise ForgeError(f"need K >= 2, got {K}")
    lo, hi = ucb_c_interval(T, K)
    c = math.ceil(lo)
    assert c <= hi, f"no integer in [{lo}, {hi}]"
    a = alpha(T)
    delta = a / math.sqrt(c)
    if delta * math.sqrt(c) < a:
        # keep delta*sqrt(c) - alpha >= 0 exactly in floating point
        delta = math.nextafter(delta, math.inf)
    assert c > a * a and delta < 1.0
    assert delta * math.sqrt(c) - a >= 0.0
    bp = K * c + 1
    if bp > T:
        raise ForgeError(f"breakpoint {bp} beyond horizon {T}")
    params = UcbForgeParams(T=T, K=K, alpha=a, c=c, delta=delta, breakpoint=bp)
    for known in (True, False):
        if not check_inertia_condition(c, delta, T, K, known):
            raise ForgeError(f"lock-in condition fails ({'known' if known else 'anytime'} horizon)")
    inst = Instance(K, T, (
        det_segment(1, K * c, [0.0] * K),
        det_segment(bp, T, [1.0] + [delta] * (K - 1)),
    ))
    return inst, params


def forge_etc(T: int, K: int, m: int) -> Instance:
    """Arm K pays 1 during exploration, then only arm 1 pays."""
    if m < 1 or K < 2:
        raise ForgeError(f"need m >= 1 and K >= 2, got m={m}, K={K}")
    if m * K >= T:
        raise ForgeError(f"commit phase empty: mK={m * K} >= T={T}")
    return Instance(K, T, (
        det_segment(1, m * K, [0.0] * (K - 1) + [1.0]),
        det_segment(m * K + 1, T, [1.0] + [0.0] * (K - 1)),
    ))


def forge_eg_early(T: int, K: int) -> Instance:
    """Arm 1 pays during the K initialization rounds, arm 2 afterwards."""
    if K < 2:
        raise ForgeError(f"need K >= 2, got {K}")
    if T <= K:
        raise ForgeError(f"need T > K, got T={T}, K={K}")
    return Instance(K, T, (
        det_segment(1, K, [1.0] + [0.0] * (K - 1)),
        det_segment(K + 1, T, [0.0, 1.0] + [0.0] * (K - 2)),
    ), init_rounds=K)


def forge_eg_mid(T: int, K: int) -> Instance:
    """Arm 1 pays 0.5 throughout; arm 2 switches from 0 to 1 at T/2 + 1."""
    if K < 2:
        raise ForgeError(f"need K >= 2, got {K}")
    if T % 2 or T < 2 * K:
        raise ForgeError(f"need even T >= 2K, got T={T}, K={K}")
    h = T // 2
    return Instance(K, T, (
        det_segment(1, h, [0.5] + [0.0] * (K - 1)),
        det_segment(h + 1, T, [0.5, 1.0] + [0.0] * (K - 2)),
    ))


COMPOSITE_KINDS = ("ucb", "etc", "eg-early", "eg-mid")


def forge_single(kind: str, T: int, K: int, m: int | None = None) -> Instance:
    if kind == "ucb":
        return forge_ucb(T, K)[0]
    if kind == "etc":
        if m is None:
            raise ForgeError("etc forge needs m")
        return forge_etc(T, K, m)
    if kind == "eg-early":
        return forge_eg_early(T, K)
    if kind in ("eg-mid", "eg"):
        return forge_eg_mid(T, K)
    raise ForgeError(f"unknown forge kind {kind!r}")


def forge_restart_composite(
    T: int, K: int, d: int, gamma: int, kind: str = "ucb", m: int | None = None
) -> Instance:
    """Horizon split into d restart blocks of length T/d.

    The last min(d, gamma) blocks each hold a copy of the single-change
    ``kind`` instance aligned with the block start; earlier blocks pay 0 on
    every arm. Adjacent identical pieces are merged, so a UCB copy directly
    after the zero filler adds only its own change.
    """
    if d < 1 or T % d:
        raise ForgeError(f"restart count d={d} must divide T={T}")
    if gamma < 0:
        raise ForgeError(f"gamma must be >= 0, got {gamma}")
    L = T // d
    n = min(d, gamma)
    pieces: list[tuple[int, int, tuple]] = []
    if d - n:
        pieces.append((1, (d - n) * L, det_segment(1, 1, [0.0] * K).arms))
    for j in range(d - n, d):
        off = j * L
        for seg in forge_single(kind, L, K, m).segments:
            pieces.append((seg.start + off, seg.end + off, seg.arms))
    merged: list[list] = []
    for a, b, arms in pieces:
        if merged and merged[-1][2] == arms:
            merged[-1][1] = b
        else:
            merged.append([a, b, arms])
    inst = Instance(K, T, tuple(Segment(a, b, arms) for a, b, arms in merged))
    report = validate_instance(inst)
    assert report.ok, report.violations
    return inst
