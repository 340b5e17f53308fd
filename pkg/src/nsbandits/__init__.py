"""Piecewise-stationary multi-armed bandits: policies, adversarial single-change
instances, lower-bound calculators and certificates."""
from .bounds import BoundValue
from .engine import BACKEND, RegretReport, Trajectory, monte_carlo_regret, run_episode
from .forge import ForgeError, forge_eg_early, forge_eg_mid, forge_etc, forge_restart_composite, forge_ucb
from .instance import Bernoulli, Deterministic, Instance, Segment, validate_instance
from .policies import (
    ETC,
    EpsilonGreedy,
    Fixed,
    Restarted,
    Sequence,
    UcbAnytime,
    UcbKnownHorizon,
    Uniform,
    parse_policy,
)
from .verify import Certificate, certify

__version__ = "0.1.0"
