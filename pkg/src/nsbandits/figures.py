"""Per-round data behind the three illustrative two-armed runs."""
from __future__ import annotations

from .engine import DEFAULT_SEED, run_episode, write_trace_csv
from .forge import forge_eg_mid, forge_etc, forge_ucb
from .policies import ETC, EpsilonGreedy, Fixed, UcbKnownHorizon

FIGURE_IDS = (1, 2, 3)


def figure_run(fig_id: int, seed: int = DEFAULT_SEED):
    """(instance, trajectory) for figure ``fig_id``.

    1: known-horizon UCB on the forged T=1000 instance, tie at the change won by arm 2.
    2: ETC with m=10 on the forged T=100 instance (change at round 21).
    3: epsilon-greedy (eps=0.1) on the mid-horizon instance with T=400.
    """
    if fig_id == 1:
        inst, _ = forge_ucb(1000, 2)
        return inst, run_episode(inst, UcbKnownHorizon(), seed, Fixed(2), trace=True)
    if fig_id == 2:
        inst = forge_etc(100, 2, 10)
        return inst, run_episode(inst, ETC(10), seed, trace=True)
    if fig_id == 3:
        inst = forge_eg_mid(400, 2)
        return inst, run_episode(inst, EpsilonGreedy(0.1), seed, trace=True)
    raise ValueError(f"unknown figure id {fig_id}; choose from {FIGURE_IDS}")


def emit_figure_data(fig_id: int, out, seed: int = DEFAULT_SEED) -> None:
    inst, traj = figure_run(fig_id, seed)
    write_trace_csv(inst, traj, out)
