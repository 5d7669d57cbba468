"""Stationary payoff laws that rationalize a given stopping profile.

``rationalize_sophisticated`` places T+2 atoms at the continuation values and
solves for them forward in exact rational arithmetic.  ``rationalize_naive``
looks for a fixed point of the monotone map from candidate continuation
values to the continuation values of a piecewise-uniform law built on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .distributions import Affine, Discrete, Distribution, PiecewiseUniform
from .model import (
    EquilibriumProfile,
    Preferences,
    StoppingProblem,
    solve_equilibrium,
)

C1_RETRIES = 5
C1_GROWTH = 10


class FixedPointError(RuntimeError):
    """The lattice iteration did not settle within the iteration budget."""

    def __init__(self, msg, gap):
        super().__init__(msg)
        self.gap = gap


@dataclass(frozen=True)
class StoppingData:
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(self.p))
        if not self.p:
            raise ValueError("need at least one period")

    @property
    def horizon(self) -> int:
        return len(self.p)

    def validate(self) -> None:
        p = self.p
        if not 0 < p[0]:
            raise ValueError("p_1 must be positive")
        if not p[-1] < 1:
            raise ValueError("p_T must be below one")
        for t in range(len(p) - 1):
            if p[t + 1] < p[t]:
                raise ValueError(f"stopping probabilities fall at t={t + 2}")


@dataclass(frozen=True)
class RationalizationResult:
    distribution: Distribution
    profile: EquilibriumProfile
    prefs: Preferences
    terminal_value: object
    construction_log: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.profile.p)

    def problem(self) -> StoppingProblem:
        return StoppingProblem.stationary(self.distribution, self.horizon, self.terminal_value)

    def log_json(self) -> dict:
        def out(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, (list, tuple)):
                return [out(y) for y in x]
            return x
        return {k: out(v) for k, v in self.construction_log.items()}


def _as_data(data) -> StoppingData:
    return data if isinstance(data, StoppingData) else StoppingData(tuple(data))


def default_c1(p: Sequence, beta, delta, ybar):
    """Twice the lower bound on c1 that makes the forward atoms increase."""
    T = len(p)
    gamma = delta * (1 - p[-1]) / 2
    bound = 0
    if T > 1:
        g = gamma ** (T - 1)
        bound = max(0, -(1 - beta) * delta * ybar * (1 - g) / ((1 - gamma) * g))
    return 2 * bound if bound > 0 else 1 + abs(ybar)


def _forward_atoms(f, beta, delta, ybar, c1):
    T = len(f) - 2
    pi = [ybar - c1, ybar]
    cum = [f[0]]
    for j in range(1, T + 1):
        cum.append(cum[-1] + f[j])
    for k in range(2, T + 1):
        step = (1 - beta) * delta * f[k - 1] * pi[k - 1] + delta * cum[k - 2] * (pi[k - 1] - pi[k - 2])
        pi.append(pi[k - 1] + step)
    # closure at k = T pins the top atom
    top = (pi[T] - beta * delta * f[T] * pi[T] - delta * pi[T - 1] * cum[T - 1]) / (beta * delta * f[T + 1])
    pi.append(top)
    return pi


def rationalize_sophisticated(data, prefs: Preferences, y_lower, c1=None) -> RationalizationResult:
    """Discrete law with T+2 atoms under which a sophisticate stops with probabilities ``p``.

    All arithmetic is carried out on Fractions, so the returned law
    reproduces ``p`` exactly when re-solved with ``exact=True``.
    """
    data = _as_data(data)
    data.validate()
    if not prefs.is_sophisticated:
        raise ValueError("sophisticated construction needs beta_hat == beta")
    if not math.isfinite(y_lower):
        raise ValueError("terminal value must be finite")
    T = data.horizon
    ex = prefs.as_exact()
    beta, delta = ex.beta, ex.delta
    ybar = Fraction(y_lower)
    p = [Fraction(x) for x in data.p]

    f = [(1 - p[-1]) / 2, (1 - p[-1]) / 2]
    f += [p[T - k + 1] - p[T - k] for k in range(2, T + 1)]
    f.append(p[0])

    c = Fraction(c1) if c1 is not None else default_c1(p, beta, delta, ybar)
    if not c > 0:
        raise ValueError("c1 must be positive")
    for attempt in range(C1_RETRIES + 1):
        pi = _forward_atoms(f, beta, delta, ybar, c)
        increasing = all(a < b for a, b in zip(pi, pi[1:]))
        if increasing and (T < 2 or pi[T] > 0):
            break
        c *= C1_GROWTH
    else:
        raise ValueError(f"atoms failed to increase after {C1_RETRIES} enlargements of c1")

    F = Discrete(tuple(pi), tuple(f))
    problem = StoppingProblem.stationary(F, T, ybar)
    profile = solve_equilibrium(problem, ex, exact=True)
    log = {"atoms": pi, "weights": f, "c1": c, "c1_enlargements": attempt}
    return RationalizationResult(F, profile, ex, ybar, log)


def naive_law(v: Sequence[float], p: Sequence[float], ybar: float, c1: float, c2: float) -> PiecewiseUniform:
    """Piecewise-uniform law whose band masses are fixed by ``p`` and whose cut points are ``v``.

    ``v`` holds the candidate continuation values ``v_1 >= ... >= v_{T-1}``.
    """
    T = len(p)
    top = v[0] if T > 1 else ybar
    pi = [ybar - c1, ybar] + list(reversed(v)) + [top + c2]
    f = [1 - p[-1]] + [p[T - k] - p[T - k - 1] for k in range(1, T)] + [p[0]]
    return PiecewiseUniform(tuple((pi[k], pi[k + 1], f[k]) for k in range(T + 1)))


def naive_operator(v: Sequence[float], p: Sequence[float], prefs: Preferences, ybar: float,
                   c1: float, c2: float) -> list[float]:
    """One application of the monotone map on candidate continuation values."""
    F = naive_law(v, p, ybar, c1, c2)
    prof = solve_equilibrium(StoppingProblem.stationary(F, len(p), ybar), prefs)
    return list(prof.v[:-1])


POLISH_STEPS = 200


def _iterate(start, p, prefs, ybar, c1, c2, tol, max_iter, polish=True):
    v = list(start)
    gap = math.inf
    for it in range(1, max_iter + 1):
        w = naive_operator(v, p, prefs, ybar, c1, c2)
        gap = max((abs(a - b) for a, b in zip(v, w)), default=0.0)
        v = w
        if gap < tol:
            break
    else:
        raise FixedPointError(f"no fixed point within {max_iter} iterations (last step {gap:.3g})", gap)
    if polish:
        # a tol-sized error in v is amplified by the band densities in p, so keep
        # going while the steps still shrink
        for _ in range(POLISH_STEPS):
            if gap == 0:
                break
            w = naive_operator(v, p, prefs, ybar, c1, c2)
            step = max(abs(a - b) for a, b in zip(v, w))
            if step >= gap:
                break
            v, gap, it = w, step, it + 1
    return v, it, gap


def rationalize_naive(data, prefs: Preferences, y_lower: float, c1: float = 1.0, c2: float = 1.0,
                      tol: float = 1e-10, max_iter: int = 100_000, polish: bool = True) -> RationalizationResult:
    """Continuous piecewise-uniform law under which a fully naive agent stops with probabilities ``p``.

    The map is iterated from both corners of the lattice of non-increasing
    sequences in ``[ybar, delta c2 / (1 - delta)]``; the bottom-started limit
    is returned and the distance between the two limits is logged.  With
    ``polish`` the iteration continues past ``tol`` for as long as the steps
    keep shrinking.
    """
    data = _as_data(data)
    data.validate()
    if not prefs.is_naive:
        raise ValueError("naive construction needs beta_hat == 1")
    if not prefs.delta < 1:
        raise ValueError("naive construction needs delta < 1")
    if not y_lower < 0:
        raise ValueError("naive construction needs a strictly negative terminal value")
    if not (c1 > 0 and c2 > 0):
        raise ValueError("c1 and c2 must be positive")
    p = [float(x) for x in data.p]
    T = len(p)
    ybar = float(y_lower)
    ceiling = prefs.delta * c2 / (1 - prefs.delta)

    low, it_low, _ = _iterate([ybar] * (T - 1), p, prefs, ybar, c1, c2, tol, max_iter, polish)
    high, it_high, _ = _iterate([ceiling] * (T - 1), p, prefs, ybar, c1, c2, tol, max_iter, polish)
    spread = max((abs(a - b) for a, b in zip(low, high)), default=0.0)

    F = naive_law(low, p, ybar, c1, c2)
    profile = solve_equilibrium(StoppingProblem.stationary(F, T, ybar), prefs)
    log = {
        "fixed_point": low,
        "fixed_point_from_top": high,
        "top_bottom_gap": spread,
        "iterations_bottom": it_low,
        "iterations_top": it_high,
        "c1": c1,
        "c2": c2,
        "segments": [list(s) for s in F.segments],
    }
    return RationalizationResult(F, profile, prefs, ybar, log)


def moment_renormalize(result: RationalizationResult, target_mean, target_sd) -> RationalizationResult:
    """Shift and rescale a law rationalizing a patient time-consistent agent.

    Under beta = beta_hat = delta = 1 the map ``y -> k2*y + k`` together with
    ``ybar -> k2*ybar + k`` moves every cutoff the same way, so the stopping
    probabilities are untouched.
    """
    prefs = result.prefs
    if not (prefs.beta == 1 and prefs.beta_hat == 1 and prefs.delta == 1):
        raise ValueError("moment renormalization needs beta = beta_hat = delta = 1")
    if not target_sd > 0:
        raise ValueError("target sd must be positive")
    F = result.distribution
    m, var = F.mean(), F.var()
    if not var > 0:
        raise ValueError("current law is degenerate (zero variance)")
    scale = Fraction(target_sd / math.sqrt(var))
    shift = Fraction(target_mean) - scale * Fraction(m)
    G = Affine(F, shift, scale)
    ybar = result.terminal_value
    new_ybar = ybar if (isinstance(ybar, float) and math.isinf(ybar)) else scale * ybar + shift
    problem = StoppingProblem.stationary(G, result.horizon, new_ybar)
    profile = solve_equilibrium(problem, prefs, exact=G.exact_capable)
    drift = max(abs(float(a) - float(b)) for a, b in zip(profile.p, result.profile.p))
    if drift > 1e-10:
        raise ArithmeticError(f"stopping probabilities moved by {drift:.3g} under the affine map")
    log = dict(result.construction_log, shift=shift, scale=scale)
    return RationalizationResult(G, profile, prefs, new_ybar, log)
