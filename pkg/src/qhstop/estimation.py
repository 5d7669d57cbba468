"""Grid-search estimation of beta under parametric payoff families."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .distributions import Distribution, NegLogNormal, from_mean_sd
from .model import (
    MANDATORY,
    EquilibriumProfile,
    Preferences,
    StoppingProblem,
    completion_masses,
    solve_equilibrium,
)

CRITERIA = ("squared_distance", "likelihood")

# stopping probabilities of a time-consistent agent facing Uniform[-1, 1], T=5, mandatory
EXAMPLE2_P = (0.25827, 0.304687, 0.375, 0.5, 1.0)


@dataclass(frozen=True)
class BetaGrid:
    lo: float = 0.3
    hi: float = 1.0
    step: float = 0.0005

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if not self.lo < self.hi:
            raise ValueError("grid needs lo < hi")

    def values(self) -> np.ndarray:
        n = int(round((self.hi - self.lo) / self.step))
        return np.round(self.lo + self.step * np.arange(n + 1), 12)


@dataclass(frozen=True)
class EstimationSpec:
    family: str
    mean: float = 0.0
    sd: float = 0.577
    delta: float = 1.0
    sophisticated: bool = True
    criterion: str = "squared_distance"
    beta_grid: BetaGrid = field(default_factory=BetaGrid)
    horizon: int = 5
    terminal_value: float = MANDATORY
    family_options: dict = field(default_factory=dict)
    # squared distance over unconditional completion masses (q) or hazards (p)
    distance_on: str = "unconditional"

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.distance_on not in ("conditional", "unconditional"):
            raise ValueError("distance_on must be 'conditional' or 'unconditional'")
        if not self.sd > 0:
            raise ValueError("sd must be positive")

    def law(self) -> Distribution:
        return from_mean_sd(self.family, self.mean, self.sd, **self.family_options)

    def prefs(self, beta: float) -> Preferences:
        return Preferences(beta, beta if self.sophisticated else 1.0, self.delta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["terminal_value"] = None if math.isinf(self.terminal_value) else self.terminal_value
        return d


@dataclass(frozen=True)
class EstimateResult:
    beta_hat: float
    criterion_value: float
    per_beta_curve: tuple
    criterion: str = "squared_distance"

    @property
    def distance(self) -> float:
        """Euclidean distance for the squared-distance criterion, the criterion value otherwise."""
        if self.criterion == "squared_distance":
            return math.sqrt(self.criterion_value)
        return self.criterion_value

    def curve_array(self) -> np.ndarray:
        return np.asarray(self.per_beta_curve, float)


def model_profile(spec: EstimationSpec, beta: float, law: Distribution | None = None) -> EquilibriumProfile:
    law = spec.law() if law is None else law
    problem = StoppingProblem.stationary(law, spec.horizon, spec.terminal_value)
    return solve_equilibrium(problem, spec.prefs(beta))


def cross_entropy(q_data: Sequence[float], q_model: Sequence[float]) -> float:
    """``-sum q_data * log q_model``; cells with no data mass contribute nothing."""
    total = 0.0
    for qd, qm in zip(q_data, q_model):
        if qd <= 0:
            continue
        if qm <= 0:
            return math.inf
        total -= qd * math.log(qm)
    return total


def _outcome_masses(p: Sequence[float]) -> list[float]:
    q, never = completion_masses([float(x) for x in p])
    return list(q) + [float(never)]


def criterion_value(model_p: Sequence[float], data_p: Sequence[float], criterion: str,
                    distance_on: str = "unconditional") -> float:
    if len(model_p) != len(data_p):
        raise ValueError("model and data profiles differ in length")
    if criterion == "squared_distance":
        if distance_on == "conditional":
            a, b = np.asarray(model_p, float), np.asarray(data_p, float)
        else:
            a, b = np.asarray(_outcome_masses(model_p)), np.asarray(_outcome_masses(data_p))
        return float(np.sum((a - b) ** 2))
    if criterion == "likelihood":
        return cross_entropy(_outcome_masses(data_p), _outcome_masses(model_p))
    raise ValueError(f"unknown criterion {criterion!r}")


def beta_curve(spec: EstimationSpec, data_p: Sequence[float], threads: int = 1) -> np.ndarray:
    law = spec.law()
    grid = spec.beta_grid.values()

    def one(beta):
        prof = model_profile(spec, float(beta), law)
        return criterion_value(prof.p, data_p, spec.criterion, spec.distance_on)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(one, grid))
    else:
        vals = [one(b) for b in grid]
    return np.column_stack([grid, np.asarray(vals, float)])


def estimate_beta(spec: EstimationSpec, data_p: Sequence[float], threads: int = 1) -> EstimateResult:
    """Exhaustive grid scan; ties go to the smaller beta."""
    curve = beta_curve(spec, data_p, threads)
    vals = curve[:, 1]
    if not np.isfinite(vals).any():
        raise ValueError("criterion is infinite on the whole grid")
    # argmin returns the first (smallest-beta) minimiser
    i = int(np.argmin(np.where(np.isfinite(vals), vals, np.inf)))
    return EstimateResult(float(curve[i, 0]), float(vals[i]), tuple(map(tuple, curve.tolist())), spec.criterion)


def completion_histogram(problem: StoppingProblem, prefs: Preferences) -> tuple[tuple, float]:
    """Unconditional completion masses ``q_1..q_T`` and the never-completed mass."""
    prof = solve_equilibrium(problem, prefs)
    q, never = completion_masses([float(x) for x in prof.p])
    return q, float(never)


PENALTY_READINGS = ("terminal", "beta_scaled")


@dataclass(frozen=True)
class CompletionSpec:
    """Stationary negated log-normal costs with a terminal penalty, as used for completion-time bars.

    ``penalty_reading="terminal"`` uses the penalty directly as Self T's
    continuation value; ``"beta_scaled"`` treats it as the period T+1 utility
    and converts with ``beta*delta``.
    """

    mu: float
    eta: float
    beta: float
    horizon: int = 10
    penalty: float = -5.0
    delta: float = 1.0
    eta_is_variance: bool = True
    penalty_reading: str = "terminal"

    def __post_init__(self):
        if self.penalty_reading not in PENALTY_READINGS:
            raise ValueError(f"penalty_reading must be one of {PENALTY_READINGS}")

    def prefs(self) -> Preferences:
        return Preferences.sophisticated(self.beta, self.delta)

    def problem(self) -> StoppingProblem:
        law = NegLogNormal.from_log_params(self.mu, self.eta, self.eta_is_variance)
        ybar = self.penalty
        if self.penalty_reading == "beta_scaled":
            ybar = self.prefs().terminal_from_penalty(self.penalty)
        return StoppingProblem.stationary(law, self.horizon, ybar)

    def profile(self) -> EquilibriumProfile:
        return solve_equilibrium(self.problem(), self.prefs())


# time-consistent agent with moderate costs vs present-biased agent with dispersed costs
EXAMPLE1_RED = CompletionSpec(mu=1.0, eta=1.0, beta=1.0)
EXAMPLE1_BLUE = CompletionSpec(mu=0.0, eta=2.3, beta=0.7)


def bars(specs: dict) -> dict:
    """Per-period conditional (p) and unconditional (q) completion probabilities for each named spec."""
    out = {}
    for name, spec in specs.items():
        p = [float(x) for x in spec.profile().p]
        q, never = completion_masses(p)
        out[name] = {"p": p, "q": list(q), "never": float(never)}
    return out
