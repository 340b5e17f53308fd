"""Episode simulation, regret accounting and Monte-Carlo estimation.

Two interchangeable episode loops exist: the compiled ``_kernel`` and the
reference loop below built on the policy classes. The kernel is used when it
imported and the request allows it (no trace, no ``Sequence`` tie resolver).
Set ``NSBANDITS_PURE=1`` to force the Python loop.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .instance import Bernoulli, Instance, sample_reward
from .policies import (
    ETC,
    EpsilonGreedy,
    Fixed,
    PolicySpec,
    Restarted,
    Sequence,
    TieResolver,
    UcbAnytime,
    UcbKnownHorizon,
    Uniform,
    fresh_resolver,
    init_policy,
    observe,
    select_arm,
)

try:
    from . import _kernel
except ImportError:  # pragma: no cover - depends on the build
    _kernel = None

DEFAULT_SEED = 20251017

BACKEND = "python" if _kernel is None or os.environ.get("NSBANDITS_PURE") else "cython"


def episode_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Stream of replication ``rep``: the rep-th spawned child of SeedSequence(seed)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(rep,))))


@dataclass
class Trajectory:
    """One episode. ``arms`` are 1-based; row t-1 of every array is round t.

    ``counts[s, k]`` pulls of arm k+1 in segment s, counting only rounds after
    ``init_rounds``; regret is computed from these.
    """

    arms: np.ndarray
    rewards: np.ndarray
    counts: np.ndarray
    regret: float
    init_rounds: int
    means: np.ndarray | None = None
    indices: np.ndarray | None = None

    @property
    def T(self) -> int:
        return len(self.arms)

    def records(self) -> Iterator[tuple[int, int, float, bool]]:
        """(round, arm, reward, counted) per round."""
        for t, (a, r) in enumerate(zip(self.arms.tolist(), self.rewards.tolist()), start=1):
            yield t, a, r, t > self.init_rounds


@dataclass
class RegretReport:
    mean: float
    stderr: float
    reps: int
    seed: int
    ci95: tuple[float, float]
    samples: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "reps": self.reps, "seed": self.seed,
                "ci95": list(self.ci95)}


# -- accounting ----------------------------------------------------------------


def _gaps(inst: Instance) -> np.ndarray:
    m = np.array([seg.means for seg in inst.segments])
    return m.max(axis=1, keepdims=True) - m


def _segment_of_round(inst: Instance) -> np.ndarray:
    return np.repeat(np.arange(len(inst.segments)), [len(s) for s in inst.segments])


def regret_from_counts(inst: Instance, counts: np.ndarray) -> float:
    return math.fsum((counts * _gaps(inst)).ravel().tolist())


def counts_from_arms(inst: Instance, arms: np.ndarray) -> np.ndarray:
    if len(arms) != inst.T:
        raise ValueError(f"trajectory has {len(arms)} rounds, instance T={inst.T}")
    arms = np.asarray(arms)
    if arms.min() < 1 or arms.max() > inst.K:
        raise ValueError(f"arm index outside 1..{inst.K}")
    seg = _segment_of_round(inst)[inst.init_rounds:]
    flat = seg * inst.K + (arms[inst.init_rounds:] - 1)
    S = len(inst.segments)
    return np.bincount(flat, minlength=S * inst.K).reshape(S, inst.K).astype(np.int64)


def realized_regret(inst: Instance, traj: Trajectory) -> float:
    """Regret recomputed from the pulled arms: sum over counted rounds of the
    best expected reward minus the pulled arm's expected reward."""
    return regret_from_counts(inst, counts_from_arms(inst, traj.arms))


def step_regrets(inst: Instance, arms: np.ndarray) -> np.ndarray:
    means = inst.round_means()
    steps = means.max(axis=1) - means[np.arange(inst.T), np.asarray(arms) - 1]
    steps[: inst.init_rounds] = 0.0
    return steps


# -- episode loops ---------------------------------------------------------------


def _run_python(inst, spec, tie, rng, horizon, trace):
    state = init_policy(spec, inst.K, horizon)
    T, K = inst.T, inst.K
    arms = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    means = np.empty((T, K)) if trace else None
    indices = None
    if trace and state.indices() is not None:
        indices = np.empty((T, K))
    for seg in inst.segments:
        specs = seg.arms
        for t in range(seg.start, seg.end + 1):
            if trace:
                means[t - 1] = state.means()
                if indices is not None:
                    indices[t - 1] = state.indices()
            arm = select_arm(state, tie, rng)
            r = sample_reward(specs[arm - 1], rng)
            observe(state, arm, r)
            arms[t - 1] = arm
            rewards[t - 1] = r
    return arms, rewards, counts_from_arms(inst, arms), means, indices


_POLICY_CODES = {ETC: 0, EpsilonGreedy: 1, UcbKnownHorizon: 2, UcbAnytime: 3}


def _kernel_inputs(inst: Instance):
    seg_end = np.array([s.end for s in inst.segments], dtype=np.int_)
    param = np.array([[a.mean for a in s.arms] for s in inst.segments], dtype=np.float64)
    bern = np.array([[isinstance(a, Bernoulli) for a in s.arms] for s in inst.segments], dtype=np.int8)
    return seg_end, param, bern


def _run_kernel(inst, spec, tie, rng, horizon, prepared=None):
    d, inner = (spec.d, spec.inner) if isinstance(spec, Restarted) else (1, spec)
    m = inner.m if isinstance(inner, ETC) else 0
    eps = inner.eps if isinstance(inner, EpsilonGreedy) else 0.0
    tie_arm = tie.arm if isinstance(tie, Fixed) else 0
    seg_end, param, bern = prepared if prepared is not None else _kernel_inputs(inst)
    arms = np.empty(inst.T, dtype=np.intc)
    rewards = np.empty(inst.T)
    counts = np.zeros((len(inst.segments), inst.K), dtype=np.int_)
    _kernel.run_episode(seg_end, param, bern, inst.K, inst.T, inst.init_rounds, horizon,
                        _POLICY_CODES[type(inner)], m, eps, d, tie_arm, rng.bit_generator,
                        arms, rewards, counts)
    return arms.astype(np.int64), rewards, counts.astype(np.int64)


def _use_kernel(tie, trace, backend):
    if backend is None:
        backend = BACKEND
    if backend not in ("python", "cython"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "cython" and _kernel is None:
        raise RuntimeError("compiled kernel not available")
    return backend == "cython" and not trace and not isinstance(tie, Sequence)


def _check_args(inst, spec, horizon):
    inst.require_valid()
    horizon = inst.T if horizon is None else horizon
    init_policy(spec, inst.K, horizon)  # precondition errors before any stream use
    return horizon


def run_episode(
    inst: Instance,
    spec: PolicySpec,
    seed: int = DEFAULT_SEED,
    tie: TieResolver | None = None,
    trace: bool = False,
    *,
    rng: np.random.Generator | None = None,
    horizon: int | None = None,
    backend: str | None = None,
) -> Trajectory:
    """Play one episode of ``spec`` on ``inst``.

    Policy randomness, uniform tie-breaks and Bernoulli rewards all draw from
    one stream: ``rng`` if given, else one seeded from ``seed``. ``horizon``
    overrides the horizon the policy is told (default ``inst.T``).
    """
    horizon = _check_args(inst, spec, horizon)
    tie = fresh_resolver(tie)
    rng = episode_rng(seed) if rng is None else rng
    means = indices = None
    if _use_kernel(tie, trace, backend):
        arms, rewards, counts = _run_kernel(inst, spec, tie, rng, horizon)
    else:
        arms, rewards, counts, means, indices = _run_python(inst, spec, tie, rng, horizon, trace)
    return Trajectory(arms, rewards, counts, regret_from_counts(inst, counts),
                      inst.init_rounds, means, indices)


def iter_replications(
    inst: Instance,
    spec: PolicySpec,
    reps: int,
    seed: int = DEFAULT_SEED,
    tie: TieResolver | None = None,
    *,
    backend: str | None = None,
) -> Iterator[Trajectory]:
    """Independent episodes; replication r uses :func:`replication_rng` (seed, r)."""
    horizon = _check_args(inst, spec, None)
    kernel = _use_kernel(fresh_resolver(tie), False, backend)
    prepared = _kernel_inputs(inst) if kernel else None
    for r in range(reps):
        rng = replication_rng(seed, r)
        t = fresh_resolver(tie)
        if kernel:
            arms, rewards, counts = _run_kernel(inst, spec, t, rng, horizon, prepared)
        else:
            arms, rewards, counts, _, _ = _run_python(inst, spec, t, rng, horizon, False)
        yield Trajectory(arms, rewards, counts, regret_from_counts(inst, counts), inst.init_rounds)


def summarize(values, seed: int, keep: bool = False) -> RegretReport:
    """Mean and standard error with exact (fsum) accumulation in index order."""
    vals = [float(v) for v in values]
    n = len(vals)
    if n < 2:
        raise ValueError(f"need at least 2 replications, got {n}")
    mean = math.fsum(vals) / n
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    se = math.sqrt(var / n)
    return RegretReport(mean, se, n, seed, (mean - 1.96 * se, mean + 1.96 * se),
                        np.array(vals) if keep else None)


def monte_carlo_regret(
    inst: Instance,
    spec: PolicySpec,
    reps: int,
    seed: int = DEFAULT_SEED,
    tie: TieResolver | None = None,
    *,
    keep_samples: bool = False,
    backend: str | None = None,
) -> RegretReport:
    if reps < 2:
        raise ValueError(f"need reps >= 2, got {reps}")
    regrets = [tr.regret for tr in iter_replications(inst, spec, reps, seed, tie, backend=backend)]
    return summarize(regrets, seed, keep_samples)


# -- trace output ----------------------------------------------------------------


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def write_trace_csv(inst: Instance, traj: Trajectory, out) -> None:
    """Per-round CSV; ``out`` is a path or a text stream.

    Means and UCB indices are the values the policy saw when choosing the
    round's arm; unpulled arms show ``nan`` means and ``inf`` indices.
    """
    K = inst.K
    header = ["round", "arm", "reward", "oracle_arm", "oracle_mean", "step_regret", "cum_regret"]
    if traj.means is not None:
        header += [f"mean_{k}" for k in range(1, K + 1)]
    if traj.indices is not None:
        header += [f"index_{k}" for k in range(1, K + 1)]
    rm = inst.round_means()
    steps = step_regrets(inst, traj.arms)
    own = isinstance(out, (str, os.PathLike))
    fh = open(out, "w", newline="") if own else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        cum = 0.0
        for i in range(inst.T):
            cum += steps[i]
            row = [i + 1, int(traj.arms[i]), _fmt(traj.rewards[i]), int(np.argmax(rm[i])) + 1,
                   _fmt(rm[i].max()), _fmt(steps[i]), _fmt(cum)]
            if traj.means is not None:
                row += [_fmt(v) for v in traj.means[i]]
            if traj.indices is not None:
                row += [_fmt(v) for v in traj.indices[i]]
            w.writerow(row)
    finally:
        if own:
            fh.close()


def trace_csv_text(inst: Instance, traj: Trajectory) -> str:
    buf = io.StringIO()
    write_trace_csv(inst, traj, buf)
    return buf.getvalue()


# -- exact evaluation on the forged UCB instance -----------------------------------


def exact_ucb_regret(params, anytime: bool = False, seed: int = DEFAULT_SEED) -> float:
    """Expected regret of UCB on the forged single-change instance.

    Randomness only enters through the K-way tie at the change round, so the
    expectation is the uniform mixture over which arm wins that tie. Each
    branch is replayed with a ``Fixed`` resolver and checked: branch 1 loses
    nothing after the change, every other branch loses (T - Kc)(1 - delta) and
    never pulls arm 1 again.
    """
    from .forge import check_inertia_condition

    T, K, c, delta = params.T, params.K, params.c, params.delta
    if not check_inertia_condition(c, delta, T, K, known_horizon=True):
        raise ValueError("lock-in condition fails for these parameters")
    if anytime and not check_inertia_condition(c, delta, T, K, known_horizon=False):
        raise ValueError("anytime lock-in condition fails for these parameters")
    inst = _ucb_instance(T, K, c, delta)
    spec = UcbAnytime() if anytime else UcbKnownHorizon()
    bp = K * c + 1
    locked = (T - K * c) * (1 - delta)
    branches = []
    for j in range(1, K + 1):
        tr = run_episode(inst, spec, seed, Fixed(j))
        post = tr.arms[bp - 1:]
        if j == 1:
            ok = bool(np.all(post == 1)) and tr.regret == 0.0
        else:
            ok = bool(np.all(post == j)) and math.isclose(tr.regret, locked, rel_tol=1e-12)
        if not ok:
            raise AssertionError(f"tie branch {j} did not lock in as predicted")
        branches.append(tr.regret)
    value = (1 - 1 / K) * locked
    assert math.isclose(math.fsum(branches) / K, value, rel_tol=1e-12)
    return value


def _ucb_instance(T, K, c, delta):
    from .instance import det_segment

    return Instance(K, T, (det_segment(1, K * c, [0.0] * K),
                           det_segment(K * c + 1, T, [1.0] + [delta] * (K - 1))))
