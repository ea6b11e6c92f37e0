"""Closed-form error bounds for greedy approximation on A1(D).

All evaluators are pure functions of their arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algorithms import WeakSchedule


class BoundOutOfRegime(ValueError):
    """Requested iteration count lies outside the range a bound covers."""


def regime_limit(epsilon: float) -> int:
    """floor(epsilon**-2), robust to rounding (0.1**-2 is 99.99999999999999)."""
    return int(math.floor(1.0 / (epsilon * epsilon) + 1e-9))


def _check_b(b: float):
    if not 0.0 < b <= 1.0:
        raise ValueError(f"b={b} outside (0, 1]")


def e_m_clean(schedule: WeakSchedule, b: float, m: int) -> float:
    """Rate bound for WGA(tau, b) on f in A1(D).

    ``(1 + b(2-b) sum_{k<=m} t_k^2) ** (-(2-b) t_m / (2 (2 + (2-b) t_m)))``,
    equal to 1 at m = 0.
    """
    _check_b(b)
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return 1.0
    ts = schedule.prefix(m)
    t_m = float(ts[-1])
    base = 1.0 + b * (2.0 - b) * float(np.sum(ts * ts))
    expo = (2.0 - b) * t_m / (2.0 * (2.0 + (2.0 - b) * t_m))
    return base ** (-expo)


def beta_k(b: float, h: float, t_k: float) -> float:
    _check_b(b)
    if not 0.0 < h <= 1.0:
        raise ValueError(f"h={h} outside (0, 1]")
    if not 0.0 < t_k <= 1.0:
        raise ValueError(f"t={t_k} outside (0, 1]")
    return (1.0 - b / 2.0) * h * t_k


@dataclass(frozen=True)
class NoisyBoundParams:
    epsilon: float
    B: float
    h: float
    f_norm: float
    b: float = 1.0
    schedule: WeakSchedule = WeakSchedule()

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon={self.epsilon} outside (0, 1]")
        if not self.B > 0.0:
            raise ValueError(f"B={self.B} must be positive")
        if not 0.0 < self.h < 1.0:
            raise ValueError(f"h={self.h} outside (0, 1)")
        if not self.f_norm >= 0.0:
            raise ValueError(f"f_norm={self.f_norm} must be >= 0")
        _check_b(self.b)


def _check_regime(epsilon: float, m: int):
    if m < 1:
        raise ValueError("noisy bounds need m >= 1")
    limit = regime_limit(epsilon)
    if m > limit:
        raise BoundOutOfRegime(f"m={m} exceeds floor(eps^-2)={limit} for eps={epsilon}")


def _rate_term(p: "NoisyBoundParams", ts: np.ndarray, scaled_norm: float, weak_sum: float) -> float:
    """``||f||^(1/(1+bm)) (B+1)^(b1/(1+bm)) ((scaled_norm/(B+1))^-2 + weak_sum)^(-bm/(2(1+bm)))``.

    Evaluated in logs so that tiny ``||f||`` does not overflow.
    """
    beta_1 = beta_k(p.b, p.h, float(ts[0]))
    beta_m = beta_k(p.b, p.h, float(ts[-1]))
    log_B1 = math.log(p.B + 1.0)
    log_first = -2.0 * (math.log(scaled_norm) - log_B1)
    log_inner = float(np.logaddexp(log_first, math.log(weak_sum))) if weak_sum > 0 else log_first
    log_rate = (
        math.log(p.f_norm) / (1.0 + beta_m)
        + beta_1 * log_B1 / (1.0 + beta_m)
        - beta_m * log_inner / (2.0 * (1.0 + beta_m))
    )
    return math.exp(log_rate)


def noisy_bound(params: NoisyBoundParams, m: int) -> float:
    """Error bound for WGA(tau, b) run on a noisy signal, valid for m <= eps^-2.

    ``max(eps/(1-h), ||f||^(1/(1+beta_m)) (B+1)^(beta_1/(1+beta_m)) e)`` with
    ``e = ((h ||f|| / (B+1))^-2 + b(2-b) sum t_k^2) ** (-beta_m / (2 (1+beta_m)))``
    and ``beta_k = (1 - b/2) h t_k``.
    """
    p = params
    _check_regime(p.epsilon, m)
    floor_term = p.epsilon / (1.0 - p.h)
    if p.f_norm == 0.0:
        return floor_term
    ts = p.schedule.prefix(m)
    weak_sum = p.b * (2.0 - p.b) * float(np.sum(ts * ts))
    return max(floor_term, _rate_term(p, ts, p.h * p.f_norm, weak_sum))


def noisy_bound_derived(params: NoisyBoundParams, m: int) -> float:
    """Same bound with h^2 kept inside the weakness sum.

    ``e = ((||f|| / (B+1))^-2 + b(2-b) sum (h t_k)^2) ** (-beta_m / (2 (1+beta_m)))``.
    This exceeds ``noisy_bound`` by the factor ``h ** (-beta_m / (1+beta_m))``
    and is the form that follows from the recursion for ``a_m / B_m^2``;
    ``noisy_bound`` can fail for b < 1 or t < 1 with small h.
    """
    p = params
    _check_regime(p.epsilon, m)
    floor_term = p.epsilon / (1.0 - p.h)
    if p.f_norm == 0.0:
        return floor_term
    ts = p.schedule.prefix(m)
    hts = p.h * ts
    weak_sum = p.b * (2.0 - p.b) * float(np.sum(hts * hts))
    return max(floor_term, _rate_term(p, ts, p.f_norm, weak_sum))


def noisy_bound_const(t: float, b: float, h: float, epsilon: float, B: float, m: int) -> float:
    """Constant-schedule form: ``max(eps/(1-h), (B+1) (b(2-b) m h^2 t^2)^(-beta/(2(1+beta))))``."""
    NoisyBoundParams(epsilon, B, h, 0.0, b, WeakSchedule.constant(t))
    _check_regime(epsilon, m)
    beta = beta_k(b, h, t)
    rate = (B + 1.0) * (b * (2.0 - b) * m * h * h * t * t) ** (-beta / (2.0 * (1.0 + beta)))
    return max(epsilon / (1.0 - h), rate)


def oga_noisy_bound(epsilon: float, B: float, m: int) -> float:
    """``max(2 eps, 4 (B + eps) (1 + m)^(-1/2))`` for the OGA on noisy data."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if not B > 0:
        raise ValueError("B must be positive")
    if m < 0:
        raise ValueError("m must be >= 0")
    return max(2.0 * epsilon, 4.0 * (B + epsilon) / math.sqrt(1.0 + m))


def oga_clean_bound(m: int) -> float:
    if m < 1:
        raise ValueError("oga_clean_bound needs m >= 1")
    return 1.0 / math.sqrt(m)


def hl1_bound(C: float, v: Sequence[float], m: int) -> float:
    """``(1/C + sum_{k<=m} v_k)^-1``."""
    if not C > 0:
        raise ValueError("C must be positive")
    if not 0 <= m <= len(v):
        raise ValueError(f"m={m} outside [0, {len(v)}]")
    return 1.0 / (1.0 / C + math.fsum(v[:m]))


def hl1_bounds(C: float, v: Sequence[float]) -> np.ndarray:
    """``hl1_bound(C, v, m)`` for every m = 0..len(v) at once."""
    if not C > 0:
        raise ValueError("C must be positive")
    csum = np.concatenate([[0.0], np.cumsum(np.asarray(v, dtype=np.float64))])
    return 1.0 / (1.0 / C + csum)


def hl1_worst_sequence(C: float, v: Sequence[float]) -> list[float]:
    """Extremal sequence x_0 = C, x_m = max(0, x_{m-1} (1 - x_{m-1} v_m))."""
    xs = [float(C)]
    x = float(C)
    for vk in v:
        x = max(0.0, x * (1.0 - x * vk))
        xs.append(x)
    return xs
