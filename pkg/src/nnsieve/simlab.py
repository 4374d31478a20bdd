"""Simulation studies: true functions, data generation and the three experiments.

Every replicate draws its data and initialisation from seeds derived from
``(master_seed, n, replicate)`` only, so a replicate can be rerun on its own
and the different true functions see identical covariates and noise.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from . import stats
from .errors import InvalidInputError
from .network import Dataset, Theta, empirical_norm, predict, sigmoid
from .sieve import CONSISTENCY, NORMALITY, SieveSchedule, dims
from .trainer import TrainConfig, fit

Truth = Literal["NN", "TRIG", "ND"]
TRUTHS: tuple = ("NN", "TRIG", "ND")

CONSISTENCY_NS = (50, 100, 200, 500, 1000, 2000)
NORMALITY_NS = (50, 100, 200, 300, 400, 500)

# two-unit network used as the NN truth
TRUE_THETA = Theta(alpha0=-1.0, alpha=[1.0, -1.0], gamma0=[1.0, 1.0], gamma=[[2.0], [-1.0]])


def true_function(kind: str, x):
    """Evaluate one of the simulation truths (scalar or array ``x``)."""
    x = np.asarray(x, dtype=float)
    if kind == "NN":
        out = -1.0 + sigmoid(2.0 * x + 1.0) - sigmoid(-x + 1.0)
    elif kind == "TRIG":
        out = np.sin(np.pi * x / 3.0) + np.cos(np.pi * x / 4.0 + 1.0) / 3.0
    elif kind == "ND":
        pos = np.sqrt(np.maximum(x, 0.0)) * (x - 0.25)
        out = np.where(x <= 0.0, -2.0 * x, pos)
    else:
        raise InvalidInputError(f"unknown truth {kind!r}; expected one of {TRUTHS}")
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Scenario:
    truth: str = "NN"
    noise_sd: float = 0.7
    n: int = 500
    schedule: SieveSchedule = CONSISTENCY
    train: TrainConfig = TrainConfig()
    replicates: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.truth not in TRUTHS:
            raise InvalidInputError(f"unknown truth {self.truth!r}")
        if self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be nonnegative")
        if self.n < 1 or self.replicates < 1:
            raise InvalidInputError("n and replicates must be >= 1")


def inconsistency_scenario(**overrides) -> Scenario:
    base = Scenario(
        truth="NN", noise_sd=0.1, n=500,
        schedule=SieveSchedule(r_exponent=0.0, r_scale=2.0, v_scale=math.inf, v_exponent=0.0),
        train=TrainConfig(iterations=30000, step_rule="constant", alpha_step_scale=0.1,
                          gamma_learning_rate=0.1),
        replicates=1,
    )
    return replace(base, **overrides)


def consistency_scenario(**overrides) -> Scenario:
    base = Scenario(noise_sd=0.7, schedule=CONSISTENCY, train=TrainConfig(iterations=20000))
    return replace(base, **overrides)


def normality_scenario(**overrides) -> Scenario:
    base = Scenario(noise_sd=1.0, schedule=NORMALITY, train=TrainConfig(iterations=20000),
                    replicates=200)
    return replace(base, **overrides)


def replicate_seeds(master: int, n: int, replicate: int) -> tuple[int, int]:
    """(data_seed, init_seed) for one replicate, independent of run order."""
    ss = np.random.SeedSequence(master, spawn_key=(n, replicate))
    data_seed, init_seed = ss.generate_state(2, dtype=np.uint64)
    return int(data_seed), int(init_seed)


def generate(scenario: Scenario, seed: int) -> Dataset:
    """x_i ~ N(0, 1), y_i = f0(x_i) + eps_i with eps_i ~ N(0, noise_sd^2)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(scenario.n)
    eps = rng.standard_normal(scenario.n) * scenario.noise_sd
    f0 = true_function(scenario.truth, x)
    return Dataset(x=x, y=f0 + eps, f0_values=f0)


def _flip(theta: Theta, perm, flips) -> Theta:
    alpha = theta.alpha[list(perm)].copy()
    gamma0 = theta.gamma0[list(perm)].copy()
    gamma = theta.gamma[list(perm)].copy()
    alpha0 = theta.alpha0
    for j, f in enumerate(flips):
        if f:
            # a*s(z) = a - a*s(-z)
            alpha0 += alpha[j]
            alpha[j] = -alpha[j]
            gamma0[j] = -gamma0[j]
            gamma[j] = -gamma[j]
    return Theta(alpha0, alpha, gamma0, gamma)


def table_vector(theta: Theta) -> np.ndarray:
    """Parameters in table order: gamma_j, alpha_j, gamma0_j, alpha0."""
    return np.concatenate([theta.gamma.ravel(), theta.alpha, theta.gamma0, [theta.alpha0]])


def match_units(estimate: Theta, truth: Theta) -> tuple[Theta, float]:
    """Relabel and sign-flip the hidden units of ``estimate`` to be closest to ``truth``.

    Searches every permutation and flip pattern (the function is unchanged by
    both) and returns the equivalent parameters with the smallest max-norm
    distance, together with that distance.
    """
    if estimate.r != truth.r or estimate.d != truth.d:
        raise InvalidInputError("estimate and truth must have the same shape")
    if estimate.r > 7:
        raise InvalidInputError("exhaustive unit matching is limited to r <= 7")
    target = table_vector(truth)
    best, best_dist = estimate, math.inf
    for perm in itertools.permutations(range(estimate.r)):
        for flips in itertools.product((False, True), repeat=estimate.r):
            cand = _flip(estimate, perm, flips)
            dist = float(np.max(np.abs(table_vector(cand) - target)))
            if dist < best_dist:
                best, best_dist = cand, dist
    return best, best_dist


@dataclass
class ReplicateRecord:
    truth: str
    n: int
    replicate: int
    r: int
    V: float
    err: float
    loss: float
    t_known: float
    t_plugin: float
    theta: Theta = field(repr=False)
    param_distance: Optional[float] = None
    matched: Optional[Theta] = field(default=None, repr=False)


@dataclass
class ExperimentReport:
    name: str
    records: list
    table: list
    tests: list = field(default_factory=list)
    qq: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)


def run_replicate(scenario: Scenario, replicate: int, match_truth: bool = False) -> ReplicateRecord:
    data_seed, init_seed = replicate_seeds(scenario.seed, scenario.n, replicate)
    data = generate(scenario, data_seed)
    s = dims(scenario.schedule, scenario.n)
    res = fit(data, s.r, s.V, replace(scenario.train, seed=init_seed))
    fhat = predict(res.theta_hat, data.x)
    err = empirical_norm(fhat, data.f0_values) ** 2
    sigma = scenario.noise_sd if scenario.noise_sd > 0 else 1.0
    t_known = stats.normality_statistic(fhat, data.f0_values, sigma)
    sig_hat = math.sqrt(res.final_loss)
    t_plugin = stats.normality_statistic(fhat, data.f0_values, sig_hat) if sig_hat > 0 else math.nan
    rec = ReplicateRecord(scenario.truth, scenario.n, replicate, s.r, s.V, err, res.final_loss,
                          t_known, t_plugin, res.theta_hat)
    if match_truth and res.theta_hat.r == TRUE_THETA.r:
        rec.matched, rec.param_distance = match_units(res.theta_hat, TRUE_THETA)
    return rec


def _job(args):
    return run_replicate(*args)


def _run_all(jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order whatever the completion order
        return list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_inconsistency(scenario: Scenario = None, workers: int = 1) -> ExperimentReport:
    """Fit a two-unit network to data from a two-unit network and compare parameters."""
    scenario = scenario or inconsistency_scenario()
    if scenario.truth != "NN":
        raise InvalidInputError("the parameter comparison needs the NN truth")
    jobs = [(scenario, i, True) for i in range(scenario.replicates)]
    records = _run_all(jobs, workers)
    names = ["gamma_1", "gamma_2", "alpha_1", "alpha_2", "gamma0_1", "gamma0_2", "alpha0"]
    table = [dict(row="true", **dict(zip(names, table_vector(TRUE_THETA))),
                  err=0.0, loss=math.nan, param_distance=0.0)]
    for rec in records:
        vec = table_vector(rec.matched) if rec.matched is not None else table_vector(rec.theta)
        table.append(dict(row=f"estimate_{rec.replicate}", **dict(zip(names, vec)),
                          err=rec.err, loss=rec.loss, param_distance=rec.param_distance))
    return ExperimentReport("inconsistency", records, table)


def run_consistency(scenario: Scenario = None, ns: Sequence[int] = CONSISTENCY_NS,
                    truths: Sequence[str] = TRUTHS, workers: int = 1) -> ExperimentReport:
    """Empirical error and training loss over a grid of sample sizes."""
    scenario = scenario or consistency_scenario()
    cells = [(t, n) for n in ns for t in truths]
    jobs = [(replace(scenario, truth=t, n=n), i, False)
            for t, n in cells for i in range(scenario.replicates)]
    records = _run_all(jobs, workers)
    table = []
    for t, n in cells:
        rs = [r for r in records if r.truth == t and r.n == n]
        table.append(dict(n=n, truth=t, err=float(np.mean([r.err for r in rs])),
                          loss=float(np.mean([r.loss for r in rs]))))
    return ExperimentReport("consistency", records, table)


def run_normality(scenario: Scenario = None, ns: Sequence[int] = NORMALITY_NS,
                  truths: Sequence[str] = TRUTHS, workers: int = 1) -> ExperimentReport:
    """Replicated fits, normality tests on the standardised residual sums, Q-Q data."""
    scenario = scenario or normality_scenario()
    cells = [(t, n) for n in ns for t in truths]
    jobs = [(replace(scenario, truth=t, n=n), i, False)
            for t, n in cells for i in range(scenario.replicates)]
    records = _run_all(jobs, workers)
    tests, qq, summary = [], {}, []
    for t, n in cells:
        tk = np.array([r.t_known for r in records if r.truth == t and r.n == n])
        tp = np.array([r.t_plugin for r in records if r.truth == t and r.n == n])
        reports = [stats.shapiro_wilk(tk)] if tk.size >= 3 else []
        reports.append(stats.ks_test_std_normal(tk))
        for rep in reports:
            tests.append(dict(truth=t, n=n, test=rep.test_name, statistic=rep.statistic_value,
                              p_value=rep.p_value))
        qq[(t, n)] = stats.qq_points(tk)
        summary.append(dict(truth=t, n=n, mean_t=float(tk.mean()),
                            sd_t=float(tk.std(ddof=1)) if tk.size > 1 else math.nan,
                            mean_t_plugin=float(tp.mean()),
                            sd_t_plugin=float(tp.std(ddof=1)) if tp.size > 1 else math.nan))
    return ExperimentReport("normality", records, tests, tests=tests, qq=qq, summary=summary)
