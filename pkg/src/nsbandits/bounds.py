"""Closed-form worst-case regret lower bounds for the policies in this package.

Each calculator returns a :class:`BoundValue` in regret units (rounds x reward).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


UCB_FLOOR_CONST = 0.07
EG_CONST = 0.125


@dataclass(frozen=True)
class BoundValue:
    value: float
    formula_id: str
    inputs: dict
    extras: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return self.value <= 0.0

    def to_dict(self) -> dict:
        return {"value": self.value, "formula": self.formula_id, "inputs": dict(self.inputs),
                "extras": dict(self.extras), "vacuous": self.vacuous}


def etc_bound(T: int, m: int, K: int) -> BoundValue:
    if m < 1 or m * K > T:
        raise ValueError(f"need 1 <= m <= T/K, got m={m}, T={T}, K={K}")
    return BoundValue(T - m, "etc:T-m", {"T": T, "m": m, "K": K},
                      {"weaker": (1 - 1 / K) * T})


def eg_bound_early(T: int, K: int, eps: float) -> BoundValue:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    return BoundValue(T / (1 + (eps / K) * T), "eg:early", {"T": T, "K": K, "eps": eps})


def eg_bound_mid(T: int, K: int, eps: float) -> BoundValue:
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    return BoundValue(0.25 * (T - math.sqrt(K * T / eps)), "eg:mid", {"T": T, "K": K, "eps": eps})


def eg_bound_combined(T: int) -> BoundValue:
    return BoundValue(T / 8, "eg:T/8", {"T": T})


def ucb_floor(T: int, K: int) -> float:
    return UCB_FLOOR_CONST * (1 - 1 / K) * T


def ucb_bound_exact(T: int, K: int, c: int, delta: float) -> BoundValue:
    """Regret of the forged UCB instance: the tie at the change misses arm 1
    with probability 1 - 1/K, after which every remaining round loses 1 - delta."""
    return BoundValue((1 - 1 / K) * (T - K * c) * (1 - delta), "ucb:exact",
                      {"T": T, "K": K, "c": c, "delta": delta})


def ucb_bound_closed(T: int, K: int, form: str = "paper") -> BoundValue:
    """Closed form obtained by substituting the ends of the admissible c range.

    ``paper`` uses (K ln T / T)^(1/3) in the second factor, ``corrected`` the
    (4K ln T / T)^(1/3) that alpha * (T alpha / 2K)^(-1/3) reduces to.
    """
    if not T > 4 * K * math.log(T):
        raise ValueError(f"need T > 4K ln T, got T={T}, K={K}")
    lnT = math.log(T)
    first = 1 - (2 * K * lnT / T) ** (1 / 3)
    if form == "paper":
        second = 1 - (K * lnT / T) ** (1 / 3)
    elif form == "corrected":
        second = 1 - (4 * K * lnT / T) ** (1 / 3)
    else:
        raise ValueError(f"unknown form {form!r}")
    return BoundValue((1 - 1 / K) * T * first * second, f"ucb:closed:{form}",
                      {"T": T, "K": K}, {"floor": ucb_floor(T, K)})


def restart_stationary_bound(K: int, d: int, T: int) -> BoundValue:
    if d < 1 or K > T / d:
        raise ValueError(f"need d >= 1 and K <= T/d, got K={K}, d={d}, T={T}")
    return BoundValue(math.sqrt(K * d * T) / 20, "restart:stationary", {"K": K, "d": d, "T": T})


def restart_change_bound(a: float, T: int, d: int, gamma: int, K: int) -> BoundValue:
    if not 0.0 < a <= 1.0:
        raise ValueError(f"rate a must lie in (0, 1], got {a}")
    if gamma < 0 or d < 1:
        raise ValueError(f"need gamma >= 0 and d >= 1, got gamma={gamma}, d={d}")
    inputs = {"a": a, "T": T, "d": d, "gamma": gamma, "K": K}
    if gamma > d:
        return BoundValue(a * T, "restart:change", inputs, {"linear": a * T, "stationary": 0.0})
    linear = gamma / d * a * T
    stationary = (1 - gamma / d) * math.sqrt(K * d * T) / 20
    return BoundValue(linear + stationary, "restart:change", inputs,
                      {"linear": linear, "stationary": stationary})


def single_change_rate(kind: str, K: int) -> float:
    """Per-round constant a of the single-change bound aT for each policy family."""
    if kind == "etc":
        return 1 - 1 / K
    if kind in ("eg", "eg-early", "eg-mid"):
        return EG_CONST
    if kind in ("ucb", "ucb-anytime"):
        return UCB_FLOOR_CONST * (1 - 1 / K)
    raise ValueError(f"unknown policy family {kind!r}")


def restart_corollary_bound(kind: str, T: int, d: int, gamma: int, K: int) -> BoundValue:
    """Restarted-policy bound: min(d, gamma)/d * aT plus the stationary term when gamma <= d.

    ``extras['linear']`` is the part realized by embedded single-change copies;
    the stationary part needs an external hard stationary instance.
    """
    a = single_change_rate(kind, K)
    linear = min(d, gamma) / d * a * T
    stationary = (1 - gamma / d) * math.sqrt(K * d * T) / 20 if gamma <= d else 0.0
    return BoundValue(linear + stationary, f"restart:corollary:{kind}",
                      {"T": T, "d": d, "gamma": gamma, "K": K, "a": a},
                      {"linear": linear, "stationary": stationary})
