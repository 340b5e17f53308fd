"""Closed-form oracles and per-theorem certificates.

A certificate builds the forged instance for one lower bound, evaluates the
policy on it (exactly where the randomness is a single enumerable tie,
otherwise by Monte Carlo) and records whether the bound is met.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds
from .engine import (
    DEFAULT_SEED,
    exact_ucb_regret,
    iter_replications,
    monte_carlo_regret,
    run_episode,
)
from .forge import (
    forge_eg_early,
    forge_eg_mid,
    forge_etc,
    forge_restart_composite,
    forge_ucb,
)
from .instance import Instance, det_segment, validate_instance
from .policies import ETC, EpsilonGreedy, Restarted, UcbAnytime, UcbKnownHorizon

THEOREMS = ("ETC_T1", "EG_T2", "UCB_T3", "UCB_C1", "RESTART_T4", "RESTART_T5", "RESTART_C2")

ALIASES = {
    "etc": "ETC_T1", "eg": "EG_T2", "eps-greedy": "EG_T2", "ucb": "UCB_T3",
    "ucb-anytime": "UCB_C1", "restart-stationary": "RESTART_T4",
    "restart-change": "RESTART_T5", "restart": "RESTART_C2",
}

SIGMAS = 3.0


def canonical_theorem(name: str) -> str:
    key = ALIASES.get(name.lower(), name.upper())
    if key not in THEOREMS:
        raise ValueError(f"unknown theorem {name!r}; choose from {', '.join(THEOREMS)}")
    return key


# -- oracles ---------------------------------------------------------------------


def eg_tau_closed_form(T: int, K: int, eps: float) -> float:
    """E[min(tau, T)] for tau geometric with success probability eps/K."""
    if eps == 0:
        return float(T)
    p = eps / K
    if p >= 1:
        return 1.0
    return -math.expm1(T * math.log1p(-p)) / p


def lemma2_check(x: float, r: int) -> bool:
    """(1 - x)^r <= 1 / (1 + r x) on the domain x in (0, 1] where it is used."""
    if not 0.0 < x <= 1.0 or r < 0:
        raise ValueError(f"need x in (0, 1] and r >= 0, got x={x}, r={r}")
    return (1.0 - x) ** r <= 1.0 / (1.0 + r * x)


def variance_with_stderr(samples) -> tuple[float, float]:
    """Unbiased sample variance and the standard error of that estimate."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 samples")
    dev = x - x.mean()
    s2 = float(dev @ dev) / (n - 1)
    m4 = float(np.mean(dev**4))
    var_s2 = (m4 - (n - 3) / (n - 1) * s2 * s2) / n
    return s2, math.sqrt(max(var_s2, 0.0))


def eg_var_bound_check(T: int, K: int, eps: float, sample_var: float, var_stderr: float = 0.0) -> bool:
    """Empirical Var(tau) against (K/eps) T with a 3-sigma allowance."""
    return sample_var <= (K / eps) * T + SIGMAS * var_stderr


def eg_early_discovery_times(T: int, K: int, eps: float, reps: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Rounds after the change until arm 2 is first pulled (inclusive), capped at T - K."""
    inst = forge_eg_early(T, K)
    out = np.empty(reps)
    for r, tr in enumerate(iter_replications(inst, EpsilonGreedy(eps), reps, seed)):
        hits = np.flatnonzero(tr.arms[K:] == 2)
        out[r] = hits[0] + 1 if hits.size else T - K
    return out


def eg_mid_tau_samples(
    T: int, K: int, eps: float, reps: int, seed: int = DEFAULT_SEED, extension: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Samples of (tau, B) on the mid-horizon instance run past T.

    B is arm 2's pull count in rounds 1..T/2 and tau the number of rounds
    after T/2 until arm 2's running mean reaches arm 1's 0.5, i.e. until arm 2
    has been pulled B more times. The post-change phase is extended to
    ``extension`` rounds so tau is not censored by the horizon.
    """
    h = T // 2
    base = forge_eg_mid(T, K)
    ext = 10 * T if extension is None else extension
    inst = Instance(K, h + ext, (base.segments[0], det_segment(h + 1, h + ext, base.segments[1].means)))
    taus = np.empty(reps)
    bs = np.empty(reps)
    for r, tr in enumerate(iter_replications(inst, EpsilonGreedy(eps), reps, seed)):
        b = int(np.count_nonzero(tr.arms[:h] == 2))
        cum = np.cumsum(tr.arms[h:] == 2)
        hit = np.searchsorted(cum, b)  # first index with cum >= b
        if hit >= cum.size:
            raise RuntimeError(f"tau censored after {ext} rounds; raise extension")
        taus[r] = hit + 1
        bs[r] = b
    return taus, bs


# -- certificates ------------------------------------------------------------------


@dataclass
class Certificate:
    theorem: str
    params: dict
    bound: bounds.BoundValue
    measured_mean: float | None
    measured_stderr: float | None
    exact: float | None
    passed: bool
    reps: int
    seed: int
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "params": self.params,
            "bound": self.bound.value,
            "exact": self.exact,
            "measured_mean": self.measured_mean,
            "measured_stderr": self.measured_stderr,
            "reps": self.reps,
            "seed": self.seed,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        bound = bounds.BoundValue(float(d["bound"]), d["theorem"], dict(d["params"]))
        return cls(d["theorem"], dict(d["params"]), bound, d["measured_mean"], d["measured_stderr"],
                   d["exact"], bool(d["pass"]), int(d["reps"]), int(d["seed"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _verdict(bound: float, exact=None, mean=None, se=None, equality=False) -> bool:
    if exact is not None and mean is None:
        return exact >= bound
    ok = mean + SIGMAS * se >= bound
    if exact is not None:
        ok = ok and exact >= bound
        if equality:
            ok = ok and abs(mean - exact) <= SIGMAS * se
    return ok


def _certify_etc(p, reps, seed):
    T, K, m = p["T"], p["K"], p["m"]
    inst = forge_etc(T, K, m)
    exact = run_episode(inst, ETC(m), seed).regret
    b = bounds.etc_bound(T, m, K)
    return Certificate("ETC_T1", {"T": T, "K": K, "m": m, "breakpoint": m * K + 1}, b,
                       None, None, exact, _verdict(b.value, exact), 1, seed)


def _certify_eg(p, reps, seed):
    T, K, eps = p["T"], p["K"], p["eps"]
    early = monte_carlo_regret(forge_eg_early(T, K), EpsilonGreedy(eps), reps, seed)
    mid = monte_carlo_regret(forge_eg_mid(T, K), EpsilonGreedy(eps), reps, seed)
    best = max((early, mid), key=lambda r: r.mean)
    b = bounds.eg_bound_combined(T)
    params = {
        "T": T, "K": K, "eps": eps,
        "early_mean": early.mean, "early_stderr": early.stderr,
        "early_bound": bounds.eg_bound_early(T, K, eps).value,
        "mid_mean": mid.mean, "mid_stderr": mid.stderr,
        "mid_bound": bounds.eg_bound_mid(T, K, eps).value if eps > 0 else None,
        "instance": "early" if best is early else "mid",
    }
    return Certificate("EG_T2", params, b, best.mean, best.stderr, None,
                       _verdict(b.value, mean=best.mean, se=best.stderr), reps, seed)


def _certify_ucb(p, reps, seed, anytime):
    T, K = p["T"], p["K"]
    inst, fp = forge_ucb(T, K)
    spec = UcbAnytime() if anytime else UcbKnownHorizon()
    exact = exact_ucb_regret(fp, anytime=anytime, seed=seed)
    mc = monte_carlo_regret(inst, spec, reps, seed)
    floor = bounds.ucb_floor(T, K)
    b = bounds.BoundValue(floor, "ucb:floor", {"T": T, "K": K})
    params = {
        "T": T, "K": K, "alpha": fp.alpha, "c": fp.c, "delta": fp.delta, "breakpoint": fp.breakpoint,
        "exact_expression": bounds.ucb_bound_exact(T, K, fp.c, fp.delta).value,
        "closed_paper": bounds.ucb_bound_closed(T, K, "paper").value,
        "closed_corrected": bounds.ucb_bound_closed(T, K, "corrected").value,
    }
    ok = _verdict(floor, exact, mc.mean, mc.stderr, equality=True)
    return Certificate("UCB_C1" if anytime else "UCB_T3", params, b, mc.mean, mc.stderr, exact,
                       ok, reps, seed)


def _certify_restart_stationary(p, reps, seed):
    K, d, T = p["K"], p["d"], p["T"]
    b = bounds.restart_stationary_bound(K, d, T)
    # independent route: d sub-horizons of length T/d, each worth sqrt(K T/d)/20
    per_segment = d * math.sqrt(K * T / d) / 20
    monotone = all(
        bounds.restart_stationary_bound(K, j, T).value < bounds.restart_stationary_bound(K, j + 1, T).value
        for j in range(1, d) if K <= T / (j + 1)
    )
    ok = math.isclose(per_segment, b.value, rel_tol=1e-12) and monotone
    return Certificate("RESTART_T4", {"K": K, "d": d, "T": T, "monotone_in_d": monotone}, b,
                       None, None, per_segment, ok, 0, seed)


def _certify_restart_change(p, reps, seed):
    a, T, d, g, K = p["a"], p["T"], p["d"], p["gamma"], p["K"]
    b = bounds.restart_change_bound(a, T, d, g, K)
    n = min(d, g)
    per_segment = n * a * T / d + max(d - g, 0) * math.sqrt(K * T / d) / 20
    at_d = bounds.restart_change_bound(a, T, d, d, K).value
    above = bounds.restart_change_bound(a, T, d, d + 1, K).value
    continuous = math.isclose(at_d, above, rel_tol=1e-12)
    ok = math.isclose(per_segment, b.value, rel_tol=1e-12) and continuous
    return Certificate("RESTART_T5", {"a": a, "T": T, "d": d, "gamma": g, "K": K,
                                      "continuous_at_d": continuous}, b, None, None, per_segment,
                       ok, 0, seed)


def _restart_policy(kind, d, p):
    if kind == "ucb":
        return Restarted(UcbKnownHorizon(), d)
    if kind == "ucb-anytime":
        return Restarted(UcbAnytime(), d)
    if kind == "etc":
        return Restarted(ETC(p["m"]), d)
    if kind in ("eg-early", "eg-mid"):
        return Restarted(EpsilonGreedy(p["eps"]), d)
    raise ValueError(f"unknown restart kind {kind!r}")


def _certify_restart_corollary(p, reps, seed):
    T, K, d, g = p["T"], p["K"], p["d"], p["gamma"]
    kind = p.get("kind", "ucb")
    forge_kind = "ucb" if kind == "ucb-anytime" else kind
    inst = forge_restart_composite(T, K, d, g, forge_kind, p.get("m"))
    spec = _restart_policy(kind, d, p)
    full = bounds.restart_corollary_bound(kind, T, d, g, K)
    linear = full.extras["linear"]
    # the stationary term needs an external hard instance; only the part the
    # embedded single-change copies realize is gated
    b = bounds.BoundValue(linear, full.formula_id + ":linear", full.inputs)
    mc = monte_carlo_regret(inst, spec, reps, seed)
    params = {"T": T, "K": K, "d": d, "gamma": g, "kind": kind,
              "breakpoints": validate_instance(inst).breakpoints, "full_bound": full.value}
    for key in ("m", "eps"):
        if key in p:
            params[key] = p[key]
    return Certificate("RESTART_C2", params, b, mc.mean, mc.stderr, None,
                       _verdict(linear, mean=mc.mean, se=mc.stderr), reps, seed)


DEFAULT_REPS = {"ETC_T1": 1, "EG_T2": 10_000, "UCB_T3": 10_000, "UCB_C1": 10_000,
                "RESTART_T4": 0, "RESTART_T5": 0, "RESTART_C2": 10_000}


def certify(theorem_id: str, params: dict, reps: int | None = None, seed: int = DEFAULT_SEED) -> Certificate:
    """Certify one theorem on concrete parameters.

    Forge precondition failures propagate as ``ForgeError``/``ValueError``.
    """
    tid = canonical_theorem(theorem_id)
    reps = DEFAULT_REPS[tid] if reps is None else reps
    if tid == "ETC_T1":
        return _certify_etc(params, reps, seed)
    if tid == "EG_T2":
        return _certify_eg(params, reps, seed)
    if tid in ("UCB_T3", "UCB_C1"):
        return _certify_ucb(params, reps, seed, anytime=tid == "UCB_C1")
    if tid == "RESTART_T4":
        return _certify_restart_stationary(params, reps, seed)
    if tid == "RESTART_T5":
        return _certify_restart_change(params, reps, seed)
    return _certify_restart_corollary(params, reps, seed)
