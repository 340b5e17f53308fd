"""Bandit policies: explore-then-commit, epsilon-greedy, UCB (known horizon and
anytime) and a periodic-restart wrapper.

Arms are 1-based at the API surface. Every random decision draws exactly one
``rng.random()`` double per use so that the compiled kernel, which reads the
same bit generator, reproduces these trajectories bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


# -- specs -------------------------------------------------------------------


@dataclass(frozen=True)
class ETC:
    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"ETC needs m >= 1, got {self.m}")


@dataclass(frozen=True)
class EpsilonGreedy:
    eps: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")


@dataclass(frozen=True)
class UcbKnownHorizon:
    pass


@dataclass(frozen=True)
class UcbAnytime:
    pass


@dataclass(frozen=True)
class Restarted:
    inner: "PolicySpec"
    d: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"restart count must be >= 1, got {self.d}")
        if isinstance(self.inner, Restarted):
            raise ValueError("restart wrappers cannot be nested")


PolicySpec = Union[ETC, EpsilonGreedy, UcbKnownHorizon, UcbAnytime, Restarted]


def parse_policy(text: str) -> PolicySpec:
    """Parse a designation such as ``etc:m=20`` or ``restart:d=4:ucb-known``."""
    head, _, rest = text.strip().partition(":")
    try:
        if head == "ucb-known" and not rest:
            return UcbKnownHorizon()
        if head == "ucb-anytime" and not rest:
            return UcbAnytime()
        if head == "etc" and rest.startswith("m="):
            return ETC(int(rest[2:]))
        if head == "eps-greedy" and rest.startswith("eps="):
            return EpsilonGreedy(float(rest[4:]))
        if head == "restart" and rest.startswith("d="):
            d, _, inner = rest[2:].partition(":")
            return Restarted(parse_policy(inner), int(d))
    except ValueError as exc:
        raise ValueError(f"bad policy designation {text!r}: {exc}") from exc
    raise ValueError(f"bad policy designation {text!r}")


def format_policy(spec: PolicySpec) -> str:
    if isinstance(spec, ETC):
        return f"etc:m={spec.m}"
    if isinstance(spec, EpsilonGreedy):
        return f"eps-greedy:eps={spec.eps!r}"
    if isinstance(spec, UcbKnownHorizon):
        return "ucb-known"
    if isinstance(spec, UcbAnytime):
        return "ucb-anytime"
    return f"restart:d={spec.d}:{format_policy(spec.inner)}"


# -- tie resolution ----------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    """Break ties uniformly at random from the episode stream."""

    def choose(self, cands: list[int], rng: np.random.Generator) -> int:
        if len(cands) == 1:
            return cands[0]
        return cands[int(rng.random() * len(cands))]


@dataclass(frozen=True)
class Fixed:
    """Pick ``arm`` whenever it is among the tied arms, otherwise uniform."""

    arm: int

    def choose(self, cands: list[int], rng: np.random.Generator) -> int:
        if len(cands) == 1:
            return cands[0]
        if self.arm in cands:
            return self.arm
        return Uniform().choose(cands, rng)


class Sequence:
    """Consume ``arms`` one per genuine tie; uniform once exhausted.

    Stateful. :func:`fresh_resolver` hands each episode its own copy.
    """

    def __init__(self, arms) -> None:
        self.arms = tuple(int(a) for a in arms)
        self._pos = 0

    def choose(self, cands: list[int], rng: np.random.Generator) -> int:
        if len(cands) == 1:
            return cands[0]
        if self._pos < len(self.arms):
            arm = self.arms[self._pos]
            self._pos += 1
            if arm not in cands:
                raise ValueError(f"tie sequence arm {arm} not among tied arms {cands}")
            return arm
        return Uniform().choose(cands, rng)

    def __repr__(self) -> str:
        return f"Sequence({list(self.arms)})"


TieResolver = Union[Uniform, Fixed, Sequence]


def fresh_resolver(tie: TieResolver | None) -> TieResolver:
    if tie is None:
        return Uniform()
    if isinstance(tie, Sequence):
        return Sequence(tie.arms)
    return tie


def argmax_set(values: list[float]) -> list[int]:
    """1-based indices attaining the maximum (exact float equality)."""
    best = max(values)
    return [k + 1 for k, v in enumerate(values) if v == best]


def ucb_index(mean: float, n: int, logterm: float) -> float:
    if n == 0:
        return math.inf
    return mean + math.sqrt(2.0 * logterm / n)


# -- states ------------------------------------------------------------------


class PolicyState:
    """Per-episode counts and reward sums shared by all policies."""

    def __init__(self, K: int, horizon: int) -> None:
        self.K = K
        self.horizon = horizon
        self.t = 1
        self.counts = [0] * K
        self.sums = [0.0] * K

    def select(self, tie: TieResolver, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def observe(self, arm: int, reward: float) -> None:
        k = arm - 1
        self.counts[k] += 1
        self.sums[k] += reward
        self.t += 1

    def means(self) -> list[float]:
        return [s / n if n else math.nan for s, n in zip(self.sums, self.counts)]

    def indices(self) -> list[float] | None:
        return None


class EtcState(PolicyState):
    def __init__(self, K: int, horizon: int, m: int) -> None:
        super().__init__(K, horizon)
        self.m = m
        self.committed: int | None = None

    @property
    def explore_rounds(self) -> int:
        return self.m * self.K

    def select(self, tie, rng):
        if self.t <= self.explore_rounds:
            return (self.t - 1) % self.K + 1
        if self.committed is None:
            self.committed = tie.choose(argmax_set(self.means()), rng)
        return self.committed


class EpsilonGreedyState(PolicyState):
    # rounds 1..K are a forced round-robin so every mean is defined afterwards
    def __init__(self, K: int, horizon: int, eps: float) -> None:
        super().__init__(K, horizon)
        self.eps = eps

    def select(self, tie, rng):
        if self.t <= self.K:
            return self.t
        if rng.random() < self.eps:
            return int(rng.random() * self.K) + 1
        return tie.choose(argmax_set(self.means()), rng)


class UcbState(PolicyState):
    def __init__(self, K: int, horizon: int, anytime: bool) -> None:
        super().__init__(K, horizon)
        self.anytime = anytime

    def logterm(self) -> float:
        # the anytime rule must never look at self.horizon
        return math.log(self.t) if self.anytime else math.log(self.horizon)

    def indices(self) -> list[float]:
        lt = self.logterm()
        return [
            s / n + math.sqrt(2.0 * lt / n) if n else math.inf
            for s, n in zip(self.sums, self.counts)
        ]

    def select(self, tie, rng):
        return tie.choose(argmax_set(self.indices()), rng)


def restart_boundaries(horizon: int, d: int) -> list[int]:
    """First rounds of restart segments 2..d: floor(i*T/d) + 1."""
    return [i * horizon // d + 1 for i in range(1, d)]


class RestartedState(PolicyState):
    def __init__(self, K: int, horizon: int, inner: PolicySpec, d: int) -> None:
        super().__init__(K, horizon)
        self.inner_spec = inner
        self.d = d
        starts = [1] + restart_boundaries(horizon, d)
        ends = [s - 1 for s in starts[1:]] + [horizon]
        self.segment_bounds = list(zip(starts, ends))
        if any(b < a for a, b in self.segment_bounds):
            raise ValueError(f"horizon {horizon} too short for {d} restarts")
        for a, b in self.segment_bounds:
            init_policy(inner, K, b - a + 1)  # surface inner precondition failures now
        self.segment = 0
        self.inner = self._fresh_inner()

    def _fresh_inner(self) -> PolicyState:
        a, b = self.segment_bounds[self.segment]
        return init_policy(self.inner_spec, self.K, b - a + 1)

    def select(self, tie, rng):
        return self.inner.select(tie, rng)

    def observe(self, arm, reward):
        super().observe(arm, reward)
        self.inner.observe(arm, reward)
        if self.segment + 1 < self.d and self.t == self.segment_bounds[self.segment + 1][0]:
            self.segment += 1
            self.inner = self._fresh_inner()

    def means(self):
        return self.inner.means()

    def indices(self):
        return self.inner.indices()


# -- functional surface ------------------------------------------------------


def init_policy(spec: PolicySpec, K: int, horizon: int) -> PolicyState:
    if K < 2:
        raise ValueError(f"need K >= 2 arms, got {K}")
    if horizon < 1:
        raise ValueError(f"need horizon >= 1, got {horizon}")
    if isinstance(spec, ETC):
        if spec.m * K > horizon:
            raise ValueError(f"ETC exploration mK={spec.m * K} exceeds horizon {horizon}")
        return EtcState(K, horizon, spec.m)
    if isinstance(spec, EpsilonGreedy):
        return EpsilonGreedyState(K, horizon, spec.eps)
    if isinstance(spec, UcbKnownHorizon):
        return UcbState(K, horizon, anytime=False)
    if isinstance(spec, UcbAnytime):
        return UcbState(K, horizon, anytime=True)
    if isinstance(spec, Restarted):
        return RestartedState(K, horizon, spec.inner, spec.d)
    raise TypeError(f"unknown policy spec {spec!r}")


def select_arm(state: PolicyState, tie: TieResolver | None, rng: np.random.Generator) -> int:
    if state.t > state.horizon:
        raise RuntimeError(f"episode exhausted at round {state.t} (horizon {state.horizon})")
    return state.select(Uniform() if tie is None else tie, rng)


def observe(state: PolicyState, arm: int, reward: float) -> PolicyState:
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward {reward} outside [0, 1]")
    if not 1 <= arm <= state.K:
        raise ValueError(f"arm {arm} outside 1..{state.K}")
    state.observe(arm, reward)
    return state


def empirical_mean(state: PolicyState, arm: int) -> float:
    n = state.counts[arm - 1]
    if n == 0:
        raise ValueError(f"arm {arm} has not been pulled")
    return state.sums[arm - 1] / n
