"""Sieve schedules, feasibility, entropy bounds and growth-rate diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidInputError
from .network import Theta


@dataclass(frozen=True)
class SieveSchedule:
    """Growth rules r_n = floor(r_scale * n**r_exponent), V_n = v_scale * n**v_exponent.

    ``m_value`` fixes M_n; when ``None`` the hidden-weight bound defaults to
    ``max(10, V_n)``.
    """

    r_exponent: float = 0.25
    v_scale: float = 10.0
    v_exponent: float = 0.25
    d: int = 1
    r_scale: float = 1.0
    m_value: Optional[float] = None

    def __post_init__(self):
        if self.r_exponent < 0 or self.v_exponent < 0:
            raise InvalidInputError("growth exponents must be nonnegative")
        if self.r_scale < 1:
            raise InvalidInputError("r_scale must be >= 1 so that r_n >= 1")
        if not self.v_scale > 4:
            raise DomainError(f"V_n must exceed 4; v_scale={self.v_scale} gives V_1 <= 4")
        if self.d < 1:
            raise InvalidInputError("d must be >= 1")
        if self.m_value is not None and not self.m_value > 0:
            raise InvalidInputError("M_n must be positive")


CONSISTENCY = SieveSchedule(r_exponent=1 / 4, v_scale=10.0, v_exponent=1 / 4)
NORMALITY = SieveSchedule(r_exponent=1 / 8, v_scale=10.0, v_exponent=1 / 10)


@dataclass(frozen=True)
class SieveDims:
    r: int
    V: float
    M: float
    p: int


@dataclass(frozen=True)
class EntropyQuery:
    epsilon: float
    n: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be positive")
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")


def n_params(r: int, d: int) -> int:
    return r * (d + 2) + 1


def dims(schedule: SieveSchedule, n: int) -> SieveDims:
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    # small slack so exact powers (e.g. 10**4 ** 0.25) do not round down
    r = max(1, math.floor(schedule.r_scale * n ** schedule.r_exponent + 1e-9))
    V = schedule.v_scale * n ** schedule.v_exponent
    M = schedule.m_value if schedule.m_value is not None else max(10.0, V)
    return SieveDims(r=r, V=V, M=M, p=n_params(r, schedule.d))


def is_feasible(theta: Theta, r_n: int, V_n: float, M_n: float = math.inf) -> bool:
    """Membership of ``theta`` in the sieve class with bounds (r_n, V_n, M_n)."""
    return theta.r <= r_n and theta.output_l1() <= V_n and theta.hidden_l1() <= M_n


def log_covering_bound(query: EntropyQuery, r_n: int, V_n: float, d: int) -> float:
    """Upper bound on log N(eps, F_{r_n}, sup-norm) from the pseudo-dimension argument."""
    if not V_n > 4:
        raise DomainError(f"covering bound requires V_n > 4, got {V_n}")
    p = n_params(r_n, d)
    q = V_n / 4.0
    return p * math.log(4.0 * math.e * p * q * q / (query.epsilon * (q - 1.0)))


def _grid(n_grid: Sequence[int]) -> list[int]:
    grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidInputError("n_grid must be strictly increasing")
    if grid and grid[0] < 1:
        raise InvalidInputError("n_grid entries must be >= 1")
    return grid


def consistency_ratio(r_n: int, V_n: float, d: int, n: int) -> float:
    p = n_params(r_n, d)
    return p * V_n**2 * math.log(V_n * p) / n


def normality_ratio(r_n: int, V_n: float, d: int, n: int) -> float:
    k = r_n * (d + 2)
    return k * V_n * math.log(k * V_n) / n**0.25


def check_consistency_rate(schedule: SieveSchedule, n_grid: Sequence[int]) -> np.ndarray:
    """[r_n(d+2)+1] V_n^2 log(V_n [r_n(d+2)+1]) / n at each grid point.

    Consistency needs this to vanish as n grows.
    """
    out = []
    for n in _grid(n_grid):
        s = dims(schedule, n)
        out.append(consistency_ratio(s.r, s.V, schedule.d, n))
    return np.array(out)


def check_normality_rate(schedule: SieveSchedule, n_grid: Sequence[int]) -> np.ndarray:
    """r_n(d+2) V_n log[r_n V_n (d+2)] / n^{1/4} at each grid point."""
    out = []
    for n in _grid(n_grid):
        s = dims(schedule, n)
        out.append(normality_ratio(s.r, s.V, schedule.d, n))
    return np.array(out)


def check_moment_condition(schedule: SieveSchedule, n_grid: Sequence[int], lam: float) -> np.ndarray:
    """n rho_n^{-2} / V_n^lam with rho_n^{-1} = sqrt(r_n(d+2) log n / n).

    ``lam`` is the extra moment order of the noise (E|eps|^{2+lam} finite);
    there is no default because it depends on the noise distribution.
    """
    if not lam > 0:
        raise InvalidInputError("lam must be positive")
    out = []
    for n in _grid(n_grid):
        if n < 2:
            raise InvalidInputError("moment condition needs n >= 2")
        s = dims(schedule, n)
        out.append(s.r * (schedule.d + 2) * math.log(n) / s.V**lam)
    return np.array(out)


def predicted_rate(schedule: SieveSchedule, n: int) -> float:
    """Stochastic part of the convergence rate, sqrt(r_n (d+2) log n / n).

    The approximation error of the sieve is not computable and is left out.
    """
    if n < 2:
        raise InvalidInputError("predicted_rate needs n >= 2")
    r = dims(schedule, n).r
    return math.sqrt(r * (schedule.d + 2) * math.log(n) / n)
