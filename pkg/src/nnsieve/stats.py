"""Plug-in statistics and normality tests for the fitted residual sums."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DegenerateSampleError, InvalidInputError, UnsupportedSampleSizeError

_STD = NormalDist()


@dataclass(frozen=True)
class TestReport:
    test_name: str
    statistic_value: float
    p_value: float

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidInputError(f"p-value {self.p_value} outside [0, 1]")


def _sample(values, name="sample") -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    return arr


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def norm_ppf(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"probability {p} outside (0, 1)")
    return _STD.inv_cdf(p)


def sigma_hat_sq(residuals) -> float:
    """Mean squared residual."""
    r = _sample(residuals, "residuals")
    return float(r @ r) / r.size


def normality_statistic(fhat_values, f0_values, sigma: float = 1.0) -> float:
    """sum_i [fhat(x_i) - f0(x_i)] / (sigma * sqrt(n))."""
    fh = _sample(fhat_values, "fhat_values")
    f0 = _sample(f0_values, "f0_values")
    if fh.shape != f0.shape:
        raise InvalidInputError(f"length mismatch: {fh.size} vs {f0.size}")
    if not sigma > 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    return float((fh - f0).sum()) / (sigma * math.sqrt(fh.size))


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        # theta-function form converges fast for small lam
        c = math.pi**2 / (8.0 * lam * lam)
        s = sum(math.exp(-(2 * k - 1) ** 2 * c) for k in range(1, 12))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-18:
            break
    return min(1.0, max(0.0, total))


def ks_statistic(sample) -> float:
    x = np.sort(_sample(sample))
    m = x.size
    cdf = np.array([norm_cdf(v) for v in x])
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))


def ks_test_std_normal(sample) -> TestReport:
    """One-sample Kolmogorov-Smirnov test against N(0, 1).

    The p-value uses the limiting distribution at
    (sqrt(m) + 0.12 + 0.11 / sqrt(m)) * D.
    """
    x = _sample(sample)
    D = ks_statistic(x)
    rm = math.sqrt(x.size)
    p = kolmogorov_sf((rm + 0.12 + 0.11 / rm) * D)
    return TestReport("kolmogorov-smirnov", D, p)


# Royston (1995) polynomial approximations, lowest order first
_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coefs, x: float) -> float:
    out = 0.0
    for c in reversed(coefs):
        out = out * x + c
    return out


def shapiro_wilk_coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights a_1..a_n (ascending order statistics), unit norm."""
    if n < 3:
        raise UnsupportedSampleSizeError("Shapiro-Wilk needs at least 3 observations")
    half = n // 2
    a = np.zeros(half)
    if n == 3:
        a[0] = math.sqrt(0.5)
    else:
        m = np.array([norm_ppf((i + 1 - 0.375) / (n + 0.25)) for i in range(half)])
        summ2 = 2.0 * float(m @ m)
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1**2 - 2 * a2**2))
            a[2:] = -m[2:] / fac
            a[1] = a2
        else:
            fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1**2))
            a[1:] = -m[1:] / fac
        a[0] = a1
    full = np.zeros(n)
    full[:half] = -a
    full[n - half:] = a[::-1]
    return full


def shapiro_wilk(sample) -> TestReport:
    """Shapiro-Wilk W with Royston's normalising transform for the p-value."""
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n < 3 or n > 5000:
        raise UnsupportedSampleSizeError(f"Shapiro-Wilk supports 3 <= n <= 5000, got {n}")
    rng = x[-1] - x[0]
    if not rng > 0:
        raise DegenerateSampleError("sample has zero range")
    a = shapiro_wilk_coefficients(n)
    xs = x / rng
    xc = xs - xs.mean()
    ac = a - a.mean()
    ssa = float(ac @ ac)
    ssx = float(xc @ xc)
    sax = float(ac @ xc)
    root = math.sqrt(ssa * ssx)
    w1 = (root - sax) * (root + sax) / (ssa * ssx)
    w = min(1.0, 1.0 - w1)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.pi / 3.0)
        return TestReport("shapiro-wilk", w, min(1.0, max(0.0, p)))
    if w1 <= 0.0:
        return TestReport("shapiro-wilk", w, 1.0)
    y = math.log(w1)
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return TestReport("shapiro-wilk", w, 0.0)
        y = -math.log(gamma - y)
        mean = _poly(_C3, n)
        sd = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mean = _poly(_C5, ln)
        sd = math.exp(_poly(_C6, ln))
    return TestReport("shapiro-wilk", w, norm_sf((y - mean) / sd))


def qq_points(sample) -> np.ndarray:
    """(theoretical, empirical) pairs: (Phi^{-1}((i - 0.5)/n), x_(i)); shape (n, 2)."""
    x = np.sort(_sample(sample))
    n = x.size
    theo = np.array([norm_ppf((i - 0.5) / n) for i in range(1, n + 1)])
    return np.column_stack([theo, x])
