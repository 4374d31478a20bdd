"""Fitting networks in the sieve class by a subgradient scheme.

Output weights (alpha_0..alpha_r) follow the loss gradient while the l1
constraint sum |alpha_j| <= V_n holds and the sign subgradient of the
constraint otherwise, with step ``scale / log(e + k)``. Hidden weights take
plain gradient steps. The reported estimate is the lowest-loss feasible
iterate seen along the way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from . import _kernel
from .errors import InvalidInputError
from .network import Dataset, Theta, grad

StepRule = Literal["diminishing", "constant"]


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 20000
    alpha_step_scale: float = 0.1
    gamma_learning_rate: float = 0.1
    init_scale: float = 0.5
    seed: int = 0
    eta_n: float = 0.0
    step_rule: StepRule = "diminishing"

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidInputError("iterations must be >= 1")
        if not self.alpha_step_scale > 0 or not self.gamma_learning_rate > 0:
            raise InvalidInputError("step sizes must be positive")
        if self.init_scale < 0:
            raise InvalidInputError("init_scale must be nonnegative")
        if self.eta_n < 0:
            raise InvalidInputError("eta_n must be nonnegative")
        if self.step_rule not in ("diminishing", "constant"):
            raise InvalidInputError(f"unknown step rule {self.step_rule!r}")


@dataclass(frozen=True)
class FitResult:
    theta_hat: Theta
    final_loss: float
    loss_trace: np.ndarray
    feasible: bool
    iterations_run: int
    feasible_trace: np.ndarray = field(repr=False, default=None)
    last_theta: Optional[Theta] = field(repr=False, default=None)


def step_size(k: int, scale: float = 0.1) -> float:
    """Nonsummable diminishing step ``scale / log(e + k)``."""
    if k < 0 or not scale > 0:
        raise InvalidInputError("need k >= 0 and scale > 0")
    return scale / math.log(math.e + k)


def alpha_subgradient(theta: Theta, data: Dataset, V_n: float) -> np.ndarray:
    """Search direction over (alpha_0, ..., alpha_r).

    Loss gradient when the output-weight l1 constraint holds, otherwise the
    sign vector of alpha (0 chosen at alpha_j = 0).
    """
    if theta.output_l1() <= V_n:
        g = grad(theta, data)
        return np.concatenate([[g.alpha0], g.alpha])
    return np.sign(np.concatenate([[theta.alpha0], theta.alpha]))


def initialize(r_n: int, d: int, config: TrainConfig, V_n: Optional[float] = None) -> Theta:
    """Uniform draw on [-init_scale, init_scale], deterministic in ``config.seed``.

    Output weights are shrunk when needed so the start lies inside
    sum |alpha_j| <= V_n.
    """
    if r_n < 1 or d < 1:
        raise InvalidInputError("r_n and d must be >= 1")
    rng = np.random.default_rng(config.seed)
    s = config.init_scale
    alpha0 = rng.uniform(-s, s)
    alpha = rng.uniform(-s, s, r_n)
    gamma0 = rng.uniform(-s, s, r_n)
    gamma = rng.uniform(-s, s, (r_n, d))
    if V_n is not None:
        l1 = abs(alpha0) + np.abs(alpha).sum()
        if l1 > V_n:
            shrink = 0.5 * V_n / l1
            alpha0 *= shrink
            alpha = alpha * shrink
    return Theta(alpha0, alpha, gamma0, gamma)


def fit(data: Dataset, r_n: int, V_n: float, config: TrainConfig = TrainConfig(),
        init: Optional[Theta] = None) -> FitResult:
    """Approximate least-squares fit over networks with ``r_n`` units and sum |alpha_j| <= V_n."""
    if r_n < 1:
        raise InvalidInputError("r_n must be >= 1")
    if not V_n > 4:
        raise InvalidInputError(f"V_n must exceed 4, got {V_n}")
    theta0 = init if init is not None else initialize(r_n, data.d, config, V_n)
    if theta0.r != r_n or theta0.d != data.d:
        raise InvalidInputError("initial theta does not match (r_n, d)")
    if theta0.output_l1() > V_n:
        raise InvalidInputError("initial theta violates the output-weight bound")

    alpha = np.array(theta0.alpha)
    gamma0 = np.array(theta0.gamma0)
    gamma = np.array(theta0.gamma)
    rule = _kernel.DIMINISHING if config.step_rule == "diminishing" else _kernel.CONSTANT
    a0, a, g0, g, best, trace, feas, k, last_a0 = _kernel.run(
        data.x, data.y, theta0.alpha0, alpha, gamma0, gamma, float(V_n),
        config.iterations, rule, config.alpha_step_scale, config.gamma_learning_rate,
        config.eta_n,
    )
    theta_hat = Theta(a0, a, g0, g)
    return FitResult(
        theta_hat=theta_hat,
        final_loss=float(best),
        loss_trace=trace,
        feasible=theta_hat.output_l1() <= V_n,
        iterations_run=int(k),
        feasible_trace=feas,
        last_theta=Theta(last_a0, alpha, gamma0, gamma),
    )
