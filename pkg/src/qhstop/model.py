"""Perception-perfect equilibria of the quasi-hyperbolic stopping problem.

Self ``t`` stops iff its draw strictly exceeds its continuation value ``v_t``.
Continuation values solve, backwards from ``v_T = ybar``,

    v_t = beta*delta*PE_{t+1}(r v_{t+1}) + F_{t+1}(r v_{t+1}) * delta * v_{t+1},

with ``r = beta_hat / beta`` and ``PE(w) = E[y; y > w]``.  A terminal value of
``-inf`` marks a mandatory task: the last self always stops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .distributions import Distribution, partial_expectation

MANDATORY = -math.inf


def _is_neginf(x) -> bool:
    return isinstance(x, float) and x == -math.inf


def _times(prob, value):
    """``prob * value`` with 0 * (-inf) read as 0."""
    if prob == 0:
        return 0
    return prob * value


def _exact(x):
    if _is_neginf(x):
        return x
    return Fraction(x)


@dataclass(frozen=True)
class Preferences:
    beta: float
    beta_hat: float
    delta: float

    def __post_init__(self):
        for name in ("beta", "beta_hat", "delta"):
            val = getattr(self, name)
            if not 0 < val <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {val!r}")

    @classmethod
    def sophisticated(cls, beta, delta) -> "Preferences":
        return cls(beta, beta, delta)

    @classmethod
    def naive(cls, beta, delta) -> "Preferences":
        return cls(beta, 1, delta)

    @property
    def is_sophisticated(self) -> bool:
        return self.beta_hat == self.beta

    @property
    def is_naive(self) -> bool:
        return self.beta_hat == 1

    @property
    def ratio(self):
        return self.beta_hat / self.beta

    def penalty_from_terminal(self, ybar):
        """Period T+1 utility penalty ``ybar / (beta*delta)`` implied by ``v_T = ybar``."""
        return ybar / (self.beta * self.delta)

    def terminal_from_penalty(self, penalty):
        return penalty * self.beta * self.delta

    def as_exact(self) -> "Preferences":
        return Preferences(Fraction(self.beta), Fraction(self.beta_hat), Fraction(self.delta))


@dataclass(frozen=True)
class StoppingProblem:
    horizon: int
    payoff_laws: tuple
    terminal_value: float = MANDATORY

    def __post_init__(self):
        laws = tuple(self.payoff_laws)
        object.__setattr__(self, "payoff_laws", laws)
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError("horizon must be an integer >= 1")
        if len(laws) != self.horizon:
            raise ValueError(f"expected {self.horizon} payoff laws, got {len(laws)}")
        tv = self.terminal_value
        if isinstance(tv, float) and (math.isnan(tv) or tv == math.inf):
            raise ValueError("terminal value must be finite or -inf")

    @classmethod
    def stationary(cls, law: Distribution, horizon: int, terminal_value=MANDATORY) -> "StoppingProblem":
        return cls(horizon, (law,) * horizon, terminal_value)

    @property
    def is_stationary(self) -> bool:
        first = self.payoff_laws[0]
        return all(F is first or F == first for F in self.payoff_laws[1:])

    @property
    def mandatory(self) -> bool:
        return _is_neginf(self.terminal_value)


@dataclass(frozen=True)
class EquilibriumProfile:
    """Actual cutoffs ``v``, perceived cutoffs ``c`` and conditional stop probabilities ``p``."""

    v: tuple
    c: tuple
    p: tuple

    def __len__(self):
        return len(self.v)

    def floats(self) -> "EquilibriumProfile":
        return EquilibriumProfile(*(tuple(float(x) for x in seq) for seq in (self.v, self.c, self.p)))

    @property
    def q(self) -> tuple:
        return completion_masses(self.p)[0]


@dataclass(frozen=True)
class WelfareReport:
    self_values: tuple
    self1_value_beta: float
    never_completed: float = 0.0
    flags: tuple = field(default_factory=tuple)


def completion_masses(p: Sequence) -> tuple[tuple, object]:
    """Unconditional completion masses ``q_t`` and the never-completed remainder."""
    q = []
    alive = 1
    for pt in p:
        q.append(alive * pt)
        alive = alive * (1 - pt)
    return tuple(q), alive


def conditional_from_masses(q: Sequence) -> tuple:
    """Inverse of :func:`completion_masses`; undefined hazards (nobody left) are NaN."""
    p = []
    alive = 1.0
    for qt in q:
        if alive <= 0:
            p.append(math.nan)
            continue
        p.append(qt / alive)
        alive -= qt
    return tuple(p)


def solve_equilibrium(problem: StoppingProblem, prefs: Preferences, exact: bool = False) -> EquilibriumProfile:
    """Backward recursion for cutoffs; ties break toward waiting.

    With ``exact=True`` preferences and terminal value are lifted to
    Fractions, which keeps the whole recursion exact on discrete and
    piecewise-uniform laws holding rational data.
    """
    T = problem.horizon
    laws = problem.payoff_laws
    ybar = problem.terminal_value
    if exact:
        prefs = prefs.as_exact()
        if not all(getattr(F, "exact_capable", False) for F in laws):
            raise TypeError("exact solve needs exact-capable payoff laws")
        ybar = _exact(ybar)
    beta, delta, r = prefs.beta, prefs.delta, prefs.ratio

    v = [None] * T
    v[T - 1] = ybar
    for t in range(T - 2, -1, -1):
        nxt = v[t + 1]
        F = laws[t + 1]
        w = nxt if _is_neginf(nxt) else r * nxt
        pe = partial_expectation(F, w)
        v[t] = beta * delta * pe + _times(F.cdf(w), delta * nxt)
        if isinstance(v[t], float) and math.isnan(v[t]):
            raise ValueError(f"continuation value at t={t + 1} is NaN")

    p = [1 - laws[t].cdf(v[t]) for t in range(T)]
    c = [x if _is_neginf(x) else r * x for x in v]
    return EquilibriumProfile(tuple(v), tuple(c), tuple(p))


def g_eval(F: Distribution, prefs: Preferences, w):
    """``beta_hat*delta*PE(w) + F(w)*delta*w``; maps ``r v_{t+1}`` to ``r v_t``."""
    return prefs.beta_hat * prefs.delta * partial_expectation(F, w) + _times(F.cdf(w), prefs.delta * w)


def evaluate_welfare(problem: StoppingProblem, prefs: Preferences, profile: EquilibriumProfile) -> WelfareReport:
    """Long-run (undiscounted by beta) value of entering each period, plus Self 1's beta-weighted value."""
    T = problem.horizon
    if len(profile.v) != T:
        raise ValueError(f"profile has {len(profile.v)} periods, problem has {T}")
    beta, delta = prefs.beta, prefs.delta
    ybar = problem.terminal_value
    flags = []
    # delta * W_{T+1} is the discounted penalty ybar / beta
    tail = ybar if _is_neginf(ybar) else ybar / beta
    W = [None] * (T + 1)
    W[T] = None
    for t in range(T - 1, -1, -1):
        F, vt = problem.payoff_laws[t], profile.v[t]
        cont = tail if t == T - 1 else delta * W[t + 1]
        W[t] = partial_expectation(F, vt) + _times(F.cdf(vt), cont)
    _, never = completion_masses(profile.p)
    if _is_neginf(ybar) and never > 0:
        flags.append("mandatory task left undone with positive probability")
    F1, v1 = problem.payoff_laws[0], profile.v[0]
    cont1 = ybar if T == 1 else beta * delta * W[1]
    self1 = partial_expectation(F1, v1) + _times(F1.cdf(v1), cont1)
    return WelfareReport(tuple(W[:T]), self1, never, tuple(flags))


def simulate_stopping(problem: StoppingProblem, profile: EquilibriumProfile, n_paths: int,
                      seed=None) -> dict:
    """Monte Carlo run of the agent: draw ``y_t`` and stop iff ``y_t > v_t``.

    Returns per-period conditional frequencies, at-risk counts and standard errors.
    """
    rng = np.random.default_rng(seed)
    alive = n_paths
    freq, at_risk, se = [], [], []
    for t, F in enumerate(problem.payoff_laws):
        at_risk.append(alive)
        if alive == 0:
            freq.append(math.nan)
            se.append(math.nan)
            continue
        y = F.sample(rng, alive)
        vt = profile.v[t]
        stops = int(alive if _is_neginf(vt) else np.count_nonzero(y > float(vt)))
        f = stops / alive
        freq.append(f)
        pt = float(profile.p[t])
        se.append(math.sqrt(max(pt * (1 - pt), 0.0) / alive))
        alive -= stops
    return {"freq": np.array(freq), "at_risk": np.array(at_risk), "se": np.array(se)}
