"""Set identification of (beta, delta) from stopping probabilities plus continuation values.

Data ``(v, p)`` are observed continuation values and conditional stopping
probabilities of a sophisticated agent with linear utility in money.  A
mandatory task has ``v_T = -inf`` and ``p_T = 1``; products of the form
``0 * (-inf)`` are read as 0 throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import Discrete, Distribution
from .model import completion_masses, conditional_from_masses

SLACK = 1e-12
TIE_TOL = 1e-9


@dataclass(frozen=True)
class RichData:
    v: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(x) for x in self.v))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if len(self.v) != len(self.p):
            raise ValueError(f"v has {len(self.v)} entries but p has {len(self.p)}")

    @property
    def horizon(self) -> int:
        return len(self.v)

    def prefix(self, T: int) -> "RichData":
        return RichData(self.v[:T], self.p[:T])


@dataclass(frozen=True)
class Plausibility:
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


@dataclass
class IdentifiedSet:
    beta_grid: np.ndarray
    delta_grid: np.ndarray
    mask: np.ndarray  # shape (len(beta_grid), len(delta_grid))
    witness: Discrete | None = None
    witness_cell: tuple | None = None
    errors: dict = field(default_factory=dict)

    def beta_interval(self, delta: float) -> tuple[float, float] | None:
        j = int(np.argmin(np.abs(self.delta_grid - delta)))
        col = self.beta_grid[self.mask[:, j]]
        if col.size == 0:
            return None
        return float(col.min()), float(col.max())

    def cells(self):
        for i, b in enumerate(self.beta_grid):
            for j, d in enumerate(self.delta_grid):
                yield float(b), float(d), bool(self.mask[i, j])


def _mul(a, x):
    return 0.0 if a == 0 else a * x


def check_plausible(data: RichData) -> Plausibility:
    """Weakly decreasing ``v`` and weakly increasing ``p``."""
    bad = []
    for t in range(data.horizon - 1):
        if data.v[t + 1] > data.v[t]:
            bad.append(f"v[{t + 2}]={data.v[t + 1]!r} exceeds v[{t + 1}]={data.v[t]!r}")
        if data.p[t + 1] < data.p[t]:
            bad.append(f"p[{t + 2}]={data.p[t + 1]!r} is below p[{t + 1}]={data.p[t]!r}")
    return Plausibility(not bad, tuple(bad))


def _numerator(v, p, t, delta):
    """delta^{-1}(v_t - v_{t-1}) + (1-p_t) v_t - (1-p_{t+1}) v_{t+1}  (1-based t)."""
    vtm1, vt, vtp1 = v[t - 2], v[t - 1], v[t]
    pt, ptp1 = p[t - 1], p[t]
    return (vt - vtm1) / delta + _mul(1 - pt, vt) - _mul(1 - ptp1, vtp1)


def check_consistent(data: RichData, beta: float, delta: float, terminal_value: float | None = None,
                     slack: float = SLACK) -> bool:
    """Whether plausible data is consistent with sophisticated (beta, delta).

    (i)  beta * (v_2 (p_2 - p_1) + v_1 p_1) < delta^{-1} v_1 - (1 - p_2) v_2
    (ii) beta v_{t+1} < v_{t+1} a(delta, t) <= beta v_t for t = 2..T-1,
    both evaluated after multiplying through by the positive band mass.
    """
    v, p = data.v, data.p
    T = data.horizon
    if T < 2:
        raise ValueError("need at least two periods of data")
    plaus = check_plausible(data)
    if not plaus:
        raise ValueError("data is not plausible: " + "; ".join(plaus.violations))
    if not p[0] > 0:
        raise ValueError("first-period stopping probability must be positive")
    if terminal_value is not None and v[-1] != terminal_value:
        return False

    lhs = beta * (_mul(p[1] - p[0], v[1]) + v[0] * p[0])
    rhs = v[0] / delta - _mul(1 - p[1], v[1])
    if not lhs < rhs - slack:
        return False

    for t in range(2, T):
        dp = p[t] - p[t - 1]
        num = _numerator(v, p, t, delta)
        if dp == 0:
            if abs(num) > TIE_TOL:
                return False
            continue
        # beta v_{t+1} dp < num <= beta v_t dp
        if not _mul(dp, beta * v[t]) < num - slack:
            return False
        if not num <= beta * v[t - 1] * dp + slack:
            return False
    return True


def _consistency_mask(data: RichData, betas: np.ndarray, deltas: np.ndarray, slack: float = SLACK) -> np.ndarray:
    """Vectorised :func:`check_consistent` over a (beta, delta) grid."""
    v, p = data.v, data.p
    T = data.horizon
    B = np.asarray(betas, float)[:, None]
    D = np.asarray(deltas, float)[None, :]
    with np.errstate(invalid="ignore"):
        lhs = B * (_mul(p[1] - p[0], v[1]) + v[0] * p[0])
        rhs = v[0] / D - _mul(1 - p[1], v[1])
        mask = lhs < rhs - slack
        for t in range(2, T):
            dp = p[t] - p[t - 1]
            num = (v[t - 1] - v[t - 2]) / D + _mul(1 - p[t - 1], v[t - 1]) - _mul(1 - p[t], v[t])
            if dp == 0:
                mask &= np.abs(num) <= TIE_TOL
                continue
            low = B * v[t] * dp if math.isfinite(v[t]) else np.full_like(B, -math.inf)
            mask &= low < num - slack
            mask &= num <= B * v[t - 1] * dp + slack
    return np.broadcast_to(mask, (len(betas), len(deltas))).copy()


def witness_distribution(data: RichData, beta: float, delta: float) -> Discrete:
    """A (T+1)-atom distribution reproducing the data at a consistent (beta, delta).

    Interior atoms come from differencing the partial-expectation equations;
    the top two atoms split the slack of the first-period inequality.
    """
    v, p = data.v, data.p
    T = data.horizon
    if not check_consistent(data, beta, delta):
        raise ValueError(f"data is not consistent with beta={beta}, delta={delta}")
    f = [1 - p[-1]] + [p[T - k] - p[T - k - 1] for k in range(1, T)] + [p[0]]
    pi = [None] * (T + 1)
    for t in range(2, T):
        dp = p[t] - p[t - 1]
        k = T - t
        if dp == 0:
            pi[k] = v[t - 1]
        else:
            # clamp rounding spill past the band's closed upper edge
            pi[k] = min(_numerator(v, p, t, delta) / (beta * dp), v[t - 1])
    # band just below v_1 and the open top band
    R1 = (v[0] / delta - _mul(1 - p[1], v[1])) / beta
    fl, ft = f[T - 1], f[T]
    if fl > 0:
        lo = v[1] if math.isfinite(v[1]) else v[0] - 1.0
        floor = fl * lo + ft * v[0]
        gap = R1 - floor
        # stay off the band edges so re-solving in floats keeps the atom inside
        step = min((v[0] - lo) / 2, gap / (2 * fl))
        pi[T - 1] = lo + step
    else:
        pi[T - 1] = v[0]
    pi[T] = (R1 - fl * pi[T - 1]) / ft
    base = v[-1] if math.isfinite(v[-1]) else min(x for x in pi[1:] if x is not None)
    pi[0] = base - 1.0
    return Discrete(tuple(pi), tuple(f))


def reduce_to_mass_points(data: RichData, G: Distribution) -> Discrete:
    """Collapse G onto its conditional means over the bands cut by the observed v.

    Band k (k = 0..T) is (v_{T-k+1}, v_{T-k}] with v_{T+1} = -inf and v_0 = +inf;
    its required weight is taken from the stopping data.
    """
    v, p = data.v, data.p
    T = data.horizon
    f = [1 - p[-1]] + [p[T - k] - p[T - k - 1] for k in range(1, T)] + [p[0]]
    edges = [-math.inf] + list(reversed(v)) + [math.inf]
    pts, wts = [], []

    def cum(x):
        if x == -math.inf:
            return 0
        return 1 if x == math.inf else G.cdf(x)

    for k in range(T + 1):
        lo, hi = edges[k], edges[k + 1]
        mass = cum(hi) - cum(lo)
        if abs(float(mass) - float(f[k])) > 1e-9:
            raise ValueError(f"band {k} carries mass {float(mass)!r}, data requires {f[k]!r}")
        if f[k] == 0:
            # placeholder atom; filled in below when the band is empty or unbounded
            pts.append(hi if math.isfinite(hi) else None)
            wts.append(0.0)
            continue
        # E[y; lo < y <= hi] = PE(lo) - PE(hi)
        upper = G.pe(lo) if math.isfinite(lo) else G.mean()
        cut = G.pe(hi) if math.isfinite(hi) else 0
        mean = (upper - cut) / mass
        # the band mean lies in (lo, hi]; undo rounding spill at the closed edge
        if math.isfinite(hi):
            mean = min(mean, hi)
        pts.append(mean)
        wts.append(f[k])
    if pts[0] is None:
        # mandatory data: the bottom band is empty and sits at -inf
        pts[0] = min(x for x in pts[1:] if x is not None) - 1.0
    if pts[-1] is None:
        pts[-1] = max(x for x in pts[:-1] if x is not None) + 1.0
    return Discrete(tuple(pts), tuple(wts))


def identified_set(data: RichData, beta_grid: Sequence[float] | None = None,
                   delta_grid: Sequence[float] | None = None, witness: bool = False,
                   terminal_value: float | None = None) -> IdentifiedSet:
    if not check_plausible(data):
        raise ValueError("data is not plausible")
    betas = np.asarray(default_beta_grid() if beta_grid is None else beta_grid, float)
    deltas = np.asarray(default_delta_grid() if delta_grid is None else delta_grid, float)
    mask = _consistency_mask(data, betas, deltas)
    if terminal_value is not None and data.v[-1] != terminal_value:
        mask[:] = False
    out = IdentifiedSet(betas, deltas, mask)
    if witness and mask.any():
        i, j = map(int, np.argwhere(mask)[0])
        try:
            out.witness = witness_distribution(data, float(betas[i]), float(deltas[j]))
            out.witness_cell = (float(betas[i]), float(deltas[j]))
        except ValueError as exc:
            out.errors[(float(betas[i]), float(deltas[j]))] = str(exc)
    return out


def default_beta_grid() -> np.ndarray:
    return np.round(np.arange(0.3, 1.5 + 1e-9, 0.005), 10)


def default_delta_grid() -> np.ndarray:
    return np.round(np.arange(0.8, 1.0 + 1e-9, 0.0005), 10)


def aggregate_mixture(profiles: Sequence[tuple[float, Sequence[float]]]) -> dict:
    """Mix types' completion-time laws and return the aggregate hazards.

    Returns ``p`` (aggregate conditional probabilities), ``q`` (unconditional
    masses) and ``never`` (mass that never completes).
    """
    if not profiles:
        raise ValueError("need at least one profile")
    T = len(profiles[0][1])
    weights = [w for w, _ in profiles]
    if any(w <= 0 for w in weights) or abs(sum(weights) - 1) > 1e-12:
        raise ValueError("type weights must be positive and sum to one")
    q = np.zeros(T)
    never = 0.0
    for w, p in profiles:
        if len(p) != T:
            raise ValueError("all profiles need the same horizon")
        qi, ni = completion_masses(p)
        q += w * np.asarray(qi, float)
        never += w * float(ni)
    return {"p": conditional_from_masses(q.tolist()), "q": tuple(q.tolist()), "never": never}
