"""Piecewise-stationary bandit instances, reward sampling and oracle accounting.

Rounds are 1-based and segment bounds are inclusive throughout the package.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"deterministic reward {self.value} outside [0, 1]")

    @property
    def mean(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"success probability {self.p} outside [0, 1]")

    @property
    def mean(self) -> float:
        return float(self.p)


RewardSpec = Union[Deterministic, Bernoulli]


def expected_reward(spec: RewardSpec) -> float:
    return spec.mean


def sample_reward(spec: RewardSpec, rng: np.random.Generator) -> float:
    """Draw one reward. Deterministic arms never touch the stream."""
    if isinstance(spec, Deterministic):
        return spec.value
    return 1.0 if rng.random() < spec.p else 0.0


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    arms: tuple[RewardSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "arms", tuple(self.arms))

    @property
    def means(self) -> tuple[float, ...]:
        return tuple(a.mean for a in self.arms)

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Instance:
    """K arms over rounds 1..T, described by contiguous constant-reward segments.

    ``init_rounds`` leading rounds are played but excluded from regret.
    Construction does not validate; call :func:`validate_instance` or
    :meth:`require_valid`.
    """

    K: int
    T: int
    segments: tuple[Segment, ...]
    init_rounds: int = 0
    _starts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(
            self, "_starts", np.array([s.start for s in self.segments], dtype=np.int64)
        )

    @property
    def breakpoints(self) -> int:
        return len(self.segments) - 1

    def segment_at(self, t: int) -> Segment:
        if not 1 <= t <= self.T:
            raise ValueError(f"round {t} outside [1, {self.T}]")
        i = int(np.searchsorted(self._starts, t, side="right")) - 1
        return self.segments[i]

    def means_at(self, t: int) -> tuple[float, ...]:
        return self.segment_at(t).means

    def require_valid(self, max_breakpoints: int | None = None) -> "Instance":
        report = validate_instance(self, max_breakpoints)
        if not report.ok:
            raise ValueError("invalid instance: " + "; ".join(report.violations))
        return self

    def round_means(self) -> np.ndarray:
        """Expected rewards as a (T, K) array; row t-1 is round t."""
        out = np.empty((self.T, self.K))
        for seg in self.segments:
            out[seg.start - 1 : seg.end] = seg.means
        return out

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "T": self.T,
            "init_rounds": self.init_rounds,
            "segments": [
                {"start": s.start, "end": s.end, "arms": [_spec_to_dict(a) for a in s.arms]}
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        try:
            segments = [
                Segment(int(s["start"]), int(s["end"]), tuple(_spec_from_dict(a) for a in s["arms"]))
                for s in data["segments"]
            ]
            return cls(int(data["K"]), int(data["T"]), tuple(segments), int(data.get("init_rounds", 0)))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed instance record: {exc!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Instance":
        return cls.from_json(Path(path).read_text())


def _spec_to_dict(spec: RewardSpec) -> dict:
    # json uses repr(), the shortest string that round-trips the double exactly
    if isinstance(spec, Deterministic):
        return {"kind": "det", "value": spec.value}
    return {"kind": "bernoulli", "p": spec.p}


def _spec_from_dict(d: dict) -> RewardSpec:
    kind = d.get("kind")
    if kind == "det":
        return Deterministic(float(d["value"]))
    if kind == "bernoulli":
        return Bernoulli(float(d["p"]))
    raise ValueError(f"unknown reward kind {kind!r}")


def det_segment(start: int, end: int, values: Sequence[float]) -> Segment:
    return Segment(start, end, tuple(Deterministic(float(v)) for v in values))


@dataclass
class ValidationReport:
    ok: bool
    breakpoints: int
    violations: list[str]


def validate_instance(inst: Instance, max_breakpoints: int | None = None) -> ValidationReport:
    """Collect every structural violation of ``inst``.

    With ``max_breakpoints`` the instance must also belong to the class of
    instances with at most that many breakpoints.
    """
    v: list[str] = []
    if inst.K < 2:
        v.append(f"K={inst.K} < 2")
    if inst.T < 1:
        v.append(f"T={inst.T} < 1")
    if not 0 <= inst.init_rounds < max(inst.T, 1):
        v.append(f"init_rounds={inst.init_rounds} not in [0, T)")
    segs = inst.segments
    if not segs:
        v.append("no segments")
    else:
        if segs[0].start != 1:
            v.append(f"first segment starts at {segs[0].start}, not 1")
        if segs[-1].end != inst.T:
            v.append(f"last segment ends at {segs[-1].end}, not T={inst.T}")
    for i, seg in enumerate(segs):
        if seg.start < 1 or seg.end < seg.start:
            v.append(f"segment {i} has bad bounds [{seg.start}, {seg.end}]")
        if len(seg.arms) != inst.K:
            v.append(f"segment {i} has {len(seg.arms)} arms, expected {inst.K}")
        if i == 0:
            continue
        prev = segs[i - 1]
        if seg.start > prev.end + 1:
            v.append(f"gap at round {prev.end + 1}" if seg.start == prev.end + 2
                     else f"gap at rounds {prev.end + 1}..{seg.start - 1}")
        elif seg.start <= prev.end:
            v.append(f"segments {i - 1} and {i} overlap at round {seg.start}")
        if seg.arms == prev.arms:
            v.append(f"segments {i - 1} and {i} have identical arms (no change at round {seg.start})")
    bp = max(len(segs) - 1, 0)
    if max_breakpoints is not None and bp > max_breakpoints:
        v.append(f"{bp} breakpoints exceed budget {max_breakpoints}")
    return ValidationReport(ok=not v, breakpoints=bp, violations=v)


def optimal_arm(inst: Instance, t: int) -> int:
    """Lowest-index arm with the largest expected reward at round ``t`` (1-based)."""
    means = inst.means_at(t)
    return int(np.argmax(means)) + 1


def oracle_cumulative_reward(inst: Instance, start: int = 1, stop: int | None = None) -> float:
    """Sum of the best expected reward over rounds start..stop, skipping init rounds."""
    stop = inst.T if stop is None else stop
    if not 1 <= start <= stop <= inst.T:
        raise ValueError(f"bad round range [{start}, {stop}] for T={inst.T}")
    lo = max(start, inst.init_rounds + 1)
    terms = []
    for seg in inst.segments:
        a, b = max(seg.start, lo), min(seg.end, stop)
        if a <= b:
            terms.append((b - a + 1) * max(seg.means))
    return math.fsum(terms)
