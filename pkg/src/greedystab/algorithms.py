"""Weak greedy (WGA), pure greedy (PGA) and orthogonal greedy (OGA) runners.

``run_paired`` runs the WGA on a noisy signal while pushing the clean signal
through the same sequence of selected atoms, and checks the exact identities
satisfied by the difference of the two residual sequences.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import POLICIES, Dictionary, as_vector, weak_atom

log = logging.getLogger(__name__)

ENERGY_RTOL = 1e-10
DEPENDENT_ATOM_TOL = 1e-10
ORTHONORMAL_TOL = 1e-8

TERMINATIONS = ("max_iter", "residual_below_atol", "orthogonal_residual", "dependent_atom")


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    """An exact algebraic identity failed beyond rounding tolerance."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class WeakSchedule:
    """Nonincreasing weakness sequence t_1, t_2, ... with entries in (0, 1].

    An explicit schedule shorter than the run repeats its last value.
    """

    kind: str = "constant"
    t: float = 1.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not 0.0 < self.t <= 1.0:
                raise ConfigError(f"t={self.t} outside (0, 1]")
        elif self.kind == "explicit":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise ConfigError("explicit schedule is empty")
            if any(not 0.0 < v <= 1.0 for v in vals):
                raise ConfigError("schedule entries must lie in (0, 1]")
            if any(b > a for a, b in zip(vals, vals[1:])):
                raise ConfigError("schedule must be nonincreasing")
            object.__setattr__(self, "values", vals)
        else:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, t: float) -> "WeakSchedule":
        return cls("constant", float(t))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "WeakSchedule":
        return cls("explicit", values=tuple(values))

    def at(self, m: int) -> float:
        """t_m for 1-based m."""
        if m < 1:
            raise ValueError("schedule is indexed from m=1")
        if self.kind == "constant":
            return self.t
        return self.values[min(m, len(self.values)) - 1]

    def prefix(self, m: int) -> np.ndarray:
        """Array [t_1, ..., t_m]."""
        if self.kind == "constant":
            return np.full(m, self.t)
        vals = np.asarray(self.values)
        if m <= vals.size:
            return vals[:m].copy()
        return np.concatenate([vals, np.full(m - vals.size, vals[-1])])

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "t": self.t}
        return {"kind": "explicit", "values": list(self.values)}


@dataclass(frozen=True)
class GreedyConfig:
    b: float = 1.0
    schedule: WeakSchedule = field(default_factory=WeakSchedule)
    policy: str = "max"
    max_iter: int = 100
    residual_atol: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.b <= 1.0:
            raise ConfigError(f"b={self.b} outside the valid range (0, 1]")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(f"max_iter={self.max_iter} must be a positive integer")
        if not self.residual_atol >= 0.0:
            raise ConfigError(f"residual_atol={self.residual_atol} must be >= 0")

    @classmethod
    def pga(cls, max_iter: int = 100, residual_atol: float = 1e-12) -> "GreedyConfig":
        return cls(1.0, WeakSchedule.constant(1.0), "max", max_iter, residual_atol)

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "schedule": self.schedule.to_dict(),
            "policy": self.policy,
            "max_iter": int(self.max_iter),
            "residual_atol": self.residual_atol,
        }


@dataclass(frozen=True)
class IterationRecord:
    m: int
    atom_index: int
    sign: int
    y_m: float
    coeff: float
    residual_norm: float
    # selection value was zero: nothing was subtracted
    stalled: bool = False


@dataclass(frozen=True)
class Trace:
    """Result of one greedy run.

    For the WGA, ``coeff`` is the applied multiple ``b * y_m`` of the signed
    atom, so ``f0 - sum(coeff * sign * g)`` reproduces ``residual``. For the
    OGA, ``coeff`` is the component of ``f_{m-1}`` along the new
    orthonormalized direction.
    """

    initial_norm: float
    records: tuple
    termination: str
    residual: np.ndarray
    algo: str = "wga"

    @property
    def residual_norms(self) -> np.ndarray:
        return np.array([r.residual_norm for r in self.records])

    def to_csv(self) -> str:
        lines = ["iter,atom_index,sign,y,coeff,residual_norm"]
        for r in self.records:
            lines.append(f"{r.m},{r.atom_index},{r.sign},{r.y_m:.17g},{r.coeff:.17g},{r.residual_norm:.17g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        obj = {
            "algo": self.algo,
            "initial_norm": self.initial_norm,
            "termination": self.termination,
            "records": [
                {
                    "iter": r.m,
                    "atom_index": r.atom_index,
                    "sign": r.sign,
                    "y": r.y_m,
                    "coeff": r.coeff,
                    "residual_norm": r.residual_norm,
                }
                for r in self.records
            ],
        }
        return json.dumps(obj, indent=2) + "\n"


def _check_dims(f: np.ndarray, D: Dictionary):
    if f.shape != (D.dim,):
        raise ConfigError(f"signal has dimension {f.size}, dictionary has {D.dim}")


def wga_step(f_prev, D: Dictionary, t_m: float, b: float, policy: str = "max", m: int = 1):
    """One WGA(tau, b) iteration.

    Returns ``(f_next, record)``. If every atom is orthogonal to ``f_prev``
    the residual is returned unchanged and ``record.stalled`` is set.
    """
    if not 0.0 < b <= 1.0:
        raise ConfigError(f"b={b} outside (0, 1]")
    sel = weak_atom(f_prev, D, t_m, policy)
    prev_sq = float(np.dot(f_prev, f_prev))
    if sel.value == 0.0:
        return f_prev, IterationRecord(m, sel.index, sel.sign, 0.0, 0.0, math.sqrt(prev_sq), stalled=True)
    y = sel.value
    coeff = b * y
    f_next = f_prev - (coeff * sel.sign) * D.atoms[sel.index]
    next_sq = float(np.dot(f_next, f_next))
    expected = prev_sq - b * (2.0 - b) * y * y
    if abs(next_sq - expected) > ENERGY_RTOL * prev_sq:
        raise InvariantViolation(m, f"energy identity off by {abs(next_sq - expected):.3e}")
    return f_next, IterationRecord(m, sel.index, sel.sign, y, coeff, math.sqrt(next_sq))


def run_wga(f, D: Dictionary, config: GreedyConfig) -> Trace:
    """Run WGA(tau, b) from ``f``; PGA is ``GreedyConfig.pga()``."""
    f = as_vector(f)
    _check_dims(f, D)
    records = []
    residual = f
    norm = float(np.linalg.norm(f))
    initial_norm = norm
    termination = "max_iter"
    if norm <= config.residual_atol:
        termination = "residual_below_atol"
    else:
        for m in range(1, config.max_iter + 1):
            residual, rec = wga_step(residual, D, config.schedule.at(m), config.b, config.policy, m)
            if rec.stalled:
                termination = "orthogonal_residual"
                break
            records.append(rec)
            if rec.residual_norm <= config.residual_atol:
                termination = "residual_below_atol"
                break
    log.debug("wga: %d iterations, termination=%s", len(records), termination)
    return Trace(initial_norm, tuple(records), termination, residual, "wga")


def project_residual(f0, basis) -> np.ndarray:
    """``f0`` minus its orthogonal projection onto span(``basis``)."""
    f0 = np.asarray(f0, dtype=np.float64)
    U = np.asarray(basis, dtype=np.float64).reshape(-1, f0.size)
    if U.shape[0] == 0:
        return f0.copy()
    return f0 - U.T @ (U @ f0)


def _orthogonalize(g: np.ndarray, U: np.ndarray) -> np.ndarray:
    # modified Gram-Schmidt, two passes
    w = g.copy()
    for _ in range(2):
        for u in U:
            w -= np.dot(u, w) * u
    return w


def run_oga(f, D: Dictionary, config: GreedyConfig) -> Trace:
    """Run the weak orthogonal greedy algorithm; OGA is the case t = 1.

    ``config.b`` is ignored: the approximant is always the full orthogonal
    projection onto the selected atoms.
    """
    f = as_vector(f)
    _check_dims(f, D)
    basis = np.empty((0, D.dim))
    records = []
    residual = f.copy()
    initial_norm = float(np.linalg.norm(f))
    termination = "max_iter"
    if initial_norm <= config.residual_atol:
        termination = "residual_below_atol"
    else:
        for m in range(1, config.max_iter + 1):
            sel = weak_atom(residual, D, config.schedule.at(m), config.policy)
            if sel.value == 0.0:
                termination = "orthogonal_residual"
                break
            w = _orthogonalize(D.atoms[sel.index], basis)
            wn = float(np.linalg.norm(w))
            if wn < DEPENDENT_ATOM_TOL:
                termination = "dependent_atom"
                break
            u = w / wn
            coeff = float(np.dot(residual, u))
            basis = np.vstack([basis, u])
            residual = project_residual(f, basis)
            norm = float(np.linalg.norm(residual))
            records.append(IterationRecord(m, sel.index, sel.sign, sel.value, coeff, norm))
            if norm <= config.residual_atol:
                termination = "residual_below_atol"
                break
    log.debug("oga: %d iterations, termination=%s", len(records), termination)
    return Trace(initial_norm, tuple(records), termination, residual, "oga")


@dataclass(frozen=True)
class PairedTrace:
    """Noisy WGA run plus the clean sequence driven by the same atoms.

    ``clean_residuals`` and ``delta_norms`` are indexed from k = 0.
    ``delta_inner_sq_sum`` is b(2-b) * sum_j <delta_{j-1}, phi_j>^2.
    """

    noisy: Trace
    clean_residuals: tuple
    delta_norms: tuple
    delta_inner_sq_sum: float
    # <f_{k-1}^eps, phi_k> for k = 1, 2, ...
    clean_inner: tuple = ()
    max_delta_mismatch: float = 0.0


def run_paired(f_clean, noise, D: Dictionary, config: GreedyConfig) -> PairedTrace:
    """Run the WGA on ``f_clean + noise`` and track delta_k = f_k - f_k^eps.

    The clean sequence is ``f_k^eps = f_{k-1}^eps - b <f_{k-1}^eps, phi_k> phi_k``
    with ``phi_k`` the signed atom chosen on the noisy residual. delta_k is
    advanced by its own recursion and cross-checked against the difference
    of the two sequences; the norm identity, monotonicity and the energy
    budget of delta are verified at every step. Any failure raises
    ``InvariantViolation``.
    """
    f_clean = as_vector(f_clean)
    noise = as_vector(noise)
    _check_dims(f_clean, D)
    _check_dims(noise, D)
    if float(np.linalg.norm(noise)) > 1.0 + 1e-12:
        raise ConfigError("noise norm must be at most 1")
    f = f_clean + noise
    trace = run_wga(f, D, config)
    b = config.b
    scale = max(float(np.linalg.norm(f)), float(np.linalg.norm(f_clean)), 1.0)

    g = f.copy()
    ge = f_clean.copy()
    delta = g - ge
    d0_sq = float(np.dot(delta, delta))
    clean_norms = [float(np.linalg.norm(ge))]
    delta_norms = [math.sqrt(d0_sq)]
    inner_sum = 0.0
    clean_inner = []
    worst_mismatch = 0.0
    for rec in trace.records:
        k = rec.m
        phi = rec.sign * D.atoms[rec.atom_index]
        g = g - (b * float(np.dot(g, phi))) * phi
        ce = float(np.dot(ge, phi))
        clean_inner.append(ce)
        ge = ge - (b * ce) * phi
        c = float(np.dot(delta, phi))
        prev_sq = float(np.dot(delta, delta))
        delta = delta - (b * c) * phi
        cur_sq = float(np.dot(delta, delta))
        inner_sum += b * (2.0 - b) * c * c

        mismatch = float(np.linalg.norm(delta - (g - ge)))
        worst_mismatch = max(worst_mismatch, mismatch)
        if mismatch > 1e-9 * scale:
            raise InvariantViolation(k, f"delta recursion departs from f_k - f_k^eps by {mismatch:.3e}")
        if abs(cur_sq - (prev_sq - b * (2.0 - b) * c * c)) > ENERGY_RTOL * prev_sq:
            raise InvariantViolation(k, "norm identity for delta_k failed")
        if math.sqrt(cur_sq) > delta_norms[-1] * (1.0 + 1e-12) + 1e-300:
            raise InvariantViolation(k, "||delta_k|| increased")
        if inner_sum > d0_sq + 1e-10:
            raise InvariantViolation(k, "delta energy budget exceeded")
        clean_norms.append(float(np.linalg.norm(ge)))
        delta_norms.append(math.sqrt(cur_sq))
    return PairedTrace(trace, tuple(clean_norms), tuple(delta_norms), inner_sum, tuple(clean_inner), worst_mismatch)
