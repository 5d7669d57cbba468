"""JSON forms of problems, preferences and profiles.

Exactness-sensitive numbers may be written as ``"p/q"`` strings; the
mandatory sentinel is written as the string ``"-inf"``.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .distributions import Distribution, distribution_from_dict
from .model import MANDATORY, EquilibriumProfile, Preferences, StoppingProblem

PROBLEM_KEYS = {"horizon", "payoff_law", "payoff_laws", "terminal_value"}
PREFS_KEYS = {"beta", "beta_hat", "delta"}


def num_out(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x.numerator)
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


def num_in(x):
    if isinstance(x, str):
        s = x.strip()
        if s in ("-inf", "-Infinity"):
            return MANDATORY
        if "/" in s:
            return Fraction(s)
        return float(s)
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValueError(f"expected a number, got {x!r}")
    return x


def reject_unknown(d: dict, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise ValueError(f"{where} must be a JSON object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ValueError(f"unknown field(s) in {where}: {', '.join(extra)}")


def problem_to_dict(problem: StoppingProblem) -> dict:
    d = {"horizon": problem.horizon, "terminal_value": num_out(problem.terminal_value)}
    if problem.is_stationary:
        d["payoff_law"] = problem.payoff_laws[0].to_dict()
    else:
        d["payoff_laws"] = [F.to_dict() for F in problem.payoff_laws]
    return d


def problem_from_dict(d: dict) -> StoppingProblem:
    reject_unknown(d, PROBLEM_KEYS, "problem")
    if "horizon" not in d:
        raise ValueError("problem needs a horizon")
    T = d["horizon"]
    if not isinstance(T, int) or isinstance(T, bool):
        raise ValueError("horizon must be an integer")
    tv = d.get("terminal_value", "-inf")
    tv = MANDATORY if tv is None else num_in(tv)
    if ("payoff_law" in d) == ("payoff_laws" in d):
        raise ValueError("give exactly one of payoff_law or payoff_laws")
    if "payoff_law" in d:
        return StoppingProblem.stationary(distribution_from_dict(d["payoff_law"]), T, tv)
    laws = tuple(distribution_from_dict(x) for x in d["payoff_laws"])
    return StoppingProblem(T, laws, tv)


def prefs_to_dict(prefs: Preferences) -> dict:
    return {k: num_out(getattr(prefs, k)) for k in ("beta", "beta_hat", "delta")}


def prefs_from_dict(d: dict) -> Preferences:
    reject_unknown(d, PREFS_KEYS, "preferences")
    if "beta" not in d:
        raise ValueError("preferences need beta")
    beta = num_in(d["beta"])
    return Preferences(beta, num_in(d.get("beta_hat", beta)), num_in(d.get("delta", 1.0)))


def profile_to_dict(profile: EquilibriumProfile) -> dict:
    return {
        "v": [num_out(x) for x in profile.v],
        "c": [num_out(x) for x in profile.c],
        "p": [num_out(x) for x in profile.p],
        "q": [num_out(x) for x in profile.q],
    }


def distribution_to_dict(F: Distribution) -> dict:
    return F.to_dict()
