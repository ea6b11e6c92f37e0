"""Certified A1(D) signals, noise, the stability experiment and two demos."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .algorithms import GreedyConfig, run_paired, run_wga
from .bounds import NoisyBoundParams, beta_k, e_m_clean, noisy_bound, noisy_bound_derived, regime_limit
from .core import Dictionary, as_vector

BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class A1Certificate:
    """signal == scale * sum(weights[i] * signs[i] * g[indices[i]]), sum(weights) <= 1."""

    indices: tuple
    signs: tuple
    weights: tuple
    scale: float

    def __post_init__(self):
        if not (len(self.indices) == len(self.signs) == len(self.weights)):
            raise ValueError("certificate fields have different lengths")
        if any(w < 0 for w in self.weights):
            raise ValueError("certificate weights must be nonnegative")
        if sum(self.weights) > 1.0 + 1e-12:
            raise ValueError("certificate weights sum above 1")
        if not self.scale > 0:
            raise ValueError("certificate scale must be positive")

    def reconstruct(self, D: Dictionary) -> np.ndarray:
        coef = np.asarray(self.weights) * np.asarray(self.signs)
        return self.scale * (coef @ D.atoms[list(self.indices)])


def make_dictionary(kind: str, dim: int, count: int, seed: int = 0) -> Dictionary:
    """Generate an ``orthonormal``, ``random-unit`` or ``coherent`` dictionary.

    ``orthonormal`` returns the first ``count`` standard basis vectors.
    ``coherent`` draws random unit atoms and then bends every odd atom
    towards its even neighbour, which pushes the mutual coherence above 0.9.
    """
    if dim < 1 or count < 1:
        raise ValueError("dim and count must be >= 1")
    if kind == "orthonormal":
        if count > dim:
            raise ValueError(f"an orthonormal dictionary has at most dim={dim} atoms")
        return Dictionary(np.eye(dim)[:count], label=f"orthonormal:{count}:{dim}")
    rng = np.random.default_rng(seed)
    if kind == "random-unit":
        return Dictionary.from_rows(rng.standard_normal((count, dim)), label=f"random-unit:{count}:{dim}")
    if kind == "coherent":
        if count < 2:
            raise ValueError("a coherent dictionary needs at least 2 atoms")
        a = rng.standard_normal((count, dim))
        a /= np.linalg.norm(a, axis=1)[:, None]
        for i in range(0, count - 1, 2):
            a[i + 1] = a[i] + 0.2 * a[i + 1]
        return Dictionary.from_rows(a, label=f"coherent:{count}:{dim}")
    raise ValueError(f"unknown dictionary kind {kind!r}")


def gen_a1_signal(D: Dictionary, B: float, sparsity: int, rng_seed: int):
    """Draw f = B * sum w_i s_i g_i with ``sparsity`` distinct atoms.

    Weights are uniform on the simplex (normalized exponentials), signs are
    fair coin flips. Returns ``(signal, certificate)``.
    """
    if not B > 0:
        raise ValueError("B must be positive")
    if not 1 <= sparsity <= len(D):
        raise ValueError(f"sparsity={sparsity} outside [1, {len(D)}]")
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(D), size=sparsity, replace=False)
    signs = rng.choice([-1, 1], size=sparsity)
    w = rng.exponential(size=sparsity)
    w = w / w.sum()
    w = w / max(1.0, math.fsum(w))
    cert = A1Certificate(
        tuple(int(i) for i in idx), tuple(int(s) for s in signs), tuple(float(x) for x in w), float(B)
    )
    return cert.reconstruct(D), cert


def _unit_direction(rng, dim: int) -> np.ndarray:
    while True:
        z = rng.standard_normal(dim)
        n = np.linalg.norm(z)
        if n > 0:
            return z / n


def add_noise(f_clean, epsilon: float, mode: str = "exact", rng_seed: int = 0, direction=None) -> np.ndarray:
    """Return ``f_clean + e`` with ``||e|| = epsilon`` or ``||e|| ~ U[0, epsilon]``.

    The direction is uniform on the sphere unless ``direction`` is given.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon={epsilon} outside (0, 1]")
    f_clean = as_vector(f_clean)
    rng = np.random.default_rng(rng_seed)
    if direction is None:
        u = _unit_direction(rng, f_clean.size)
    else:
        u = as_vector(direction)
        if u.shape != f_clean.shape:
            raise ValueError("noise direction has the wrong dimension")
        u = u / np.linalg.norm(u)
    if mode == "exact":
        r = epsilon
    elif mode == "at_most":
        r = epsilon * rng.uniform()
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    return f_clean + r * u


@dataclass(frozen=True)
class StabilityRow:
    m: int
    residual_norm: float
    bound_value: float
    B_m: float
    a1_tracked: float
    delta_norm: float
    bound_satisfied: bool
    clean_run_residual: float
    clean_rate_bound: float
    derived_bound_value: float


@dataclass(frozen=True)
class StabilityReport:
    config: dict
    rows: tuple
    summary: dict

    @property
    def all_satisfied(self) -> bool:
        return all(r.bound_satisfied for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "summary": self.summary,
            "rows": [
                {
                    "m": r.m,
                    "residual": r.residual_norm,
                    "bound": r.bound_value,
                    "B_m": r.B_m,
                    "a1_tracked": r.a1_tracked,
                    "delta_norm": r.delta_norm,
                    "ok": r.bound_satisfied,
                    "clean_run_residual": r.clean_run_residual,
                    "clean_rate_bound": r.clean_rate_bound,
                    "derived_bound": r.derived_bound_value,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def csv_lines(self, prefix: str = "") -> list[str]:
        return [
            f"{prefix}{r.m},{r.residual_norm:.17g},{r.bound_value:.17g},{r.B_m:.17g},"
            f"{r.delta_norm:.17g},{int(r.bound_satisfied)}"
            for r in self.rows
        ]

    def to_csv(self) -> str:
        return "\n".join(["m,residual,bound,B_m,delta_norm,ok", *self.csv_lines()]) + "\n"


def stability_experiment(
    D: Dictionary,
    B: float,
    sparsity: int,
    epsilon: float,
    h: float,
    config: GreedyConfig,
    rng_seed: int,
    noise_mode: str = "exact",
    noise_direction=None,
    bound_form: str = "displayed",
) -> StabilityReport:
    """Run the WGA on a noisy version of a certified A1(D) signal.

    At every iteration m <= floor(eps^-2) the noisy residual is compared with
    ``noisy_bound``. The clean signal is also run through the WGA on its own
    and compared with ``B * e_m_clean``. Violations are recorded in the
    report, never raised.

    ``bound_form`` picks which bound decides ``bound_satisfied``:
    ``"displayed"`` (``noisy_bound``) or ``"derived"``
    (``noisy_bound_derived``). Both values are reported.
    """
    if bound_form not in ("displayed", "derived"):
        raise ValueError(f"unknown bound form {bound_form!r}")
    if not 0.0 < h < 1.0:
        raise ValueError(f"h={h} outside (0, 1)")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon={epsilon} outside (0, 1]")
    limit = regime_limit(epsilon)
    cfg = GreedyConfig(config.b, config.schedule, config.policy, min(config.max_iter, limit), config.residual_atol)
    f_clean, cert = gen_a1_signal(D, B, sparsity, rng_seed)
    f = add_noise(f_clean, epsilon, noise_mode, rng_seed + 1, noise_direction)
    noise = f - f_clean
    paired = run_paired(f_clean, noise, D, cfg)
    clean_run = run_wga(f_clean, D, cfg)
    clean_res = clean_run.residual_norms
    clean_final = float(np.linalg.norm(clean_run.residual))
    f_norm = float(np.linalg.norm(f))
    params = NoisyBoundParams(epsilon, B, h, f_norm, cfg.b, cfg.schedule)

    rows = []
    B_m = B + 1.0
    a1 = B * math.fsum(cert.weights)
    for rec, ce, dn in zip(paired.noisy.records, paired.clean_inner, paired.delta_norms[1:]):
        m = rec.m
        B_m += cfg.b * rec.y_m
        a1 += cfg.b * abs(ce)
        shown = noisy_bound(params, m)
        derived = noisy_bound_derived(params, m)
        bound = shown if bound_form == "displayed" else derived
        clean_val = float(clean_res[m - 1]) if m <= clean_res.size else clean_final
        rows.append(
            StabilityRow(
                m, rec.residual_norm, bound, B_m, a1, dn,
                rec.residual_norm <= bound + BOUND_SLACK,
                clean_val, B * e_m_clean(cfg.schedule, cfg.b, m), derived,
            )
        )

    lo = math.ceil(1.0 / (4.0 * epsilon * epsilon) - 1e-9)
    window = [r for r in rows if lo <= r.m <= limit]
    t_end = cfg.schedule.at(max(1, limit))
    beta = beta_k(cfg.b, h, t_end)
    beta_clean = beta_k(cfg.b, 1.0, t_end)
    summary = {
        "iterations": len(rows),
        "termination": paired.noisy.termination,
        "bound_form": bound_form,
        "all_satisfied": all(r.bound_satisfied for r in rows),
        "derived_all_satisfied": all(r.residual_norm <= r.derived_bound_value + BOUND_SLACK for r in rows),
        "max_violation": max((r.residual_norm - r.bound_value for r in rows), default=0.0),
        "a1_tracking_ok": all(r.a1_tracked <= r.B_m + 1e-12 for r in rows),
        "clean_rate_ok": all(r.clean_run_residual <= r.clean_rate_bound + BOUND_SLACK for r in rows),
        "noise_norm": float(np.linalg.norm(noise)),
        "f_norm": f_norm,
        "delta_inner_sq_sum": paired.delta_inner_sq_sum,
        "window": [lo, limit],
        "noisy_exponent": beta / (1.0 + beta),
        "clean_exponent": beta_clean / (1.0 + beta_clean),
    }
    if window:
        last = window[-1]
        summary["window_residual"] = last.residual_norm
        summary["window_C1"] = last.residual_norm / epsilon ** summary["noisy_exponent"]
        summary["window_clean_residual"] = last.clean_run_residual
        summary["window_C2"] = last.clean_run_residual / epsilon ** summary["clean_exponent"]
    echo = {
        "dictionary": D.label,
        "dim": D.dim,
        "atoms": len(D),
        "B": B,
        "sparsity": sparsity,
        "epsilon": epsilon,
        "h": h,
        "seed": rng_seed,
        "noise_mode": noise_mode,
        "greedy": cfg.to_dict(),
    }
    return StabilityReport(echo, tuple(rows), summary)


def instability_demo(epsilon: float) -> dict:
    """One PGA step on (1+eps, 1) and (1, 1+eps) over {e1, e2}."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    D = Dictionary.orthonormal(2)
    v1 = np.array([1.0 + epsilon, 1.0])
    v2 = np.array([1.0, 1.0 + epsilon])
    cfg = GreedyConfig.pga(max_iter=1)
    r1 = run_wga(v1, D, cfg).residual
    r2 = run_wga(v2, D, cfg).residual
    d1 = float(np.linalg.norm(r1 - r2))
    d2 = float(np.linalg.norm(v1 - v2))
    return {"d1": d1, "d2": d2, "ratio": d1 / d2}


def linear_baseline_demo(K: float, k: int, f, f_eps) -> dict:
    """Check ``||S_k f - S_k f_eps|| <= K ||f - f_eps||`` for S_k = projection onto the first k coordinates."""
    f = as_vector(f)
    f_eps = as_vector(f_eps)
    if f.shape != f_eps.shape:
        raise ValueError("f and f_eps differ in dimension")
    if not 0 <= k <= f.size:
        raise ValueError(f"k={k} outside [0, {f.size}]")
    if K < 1:
        raise ValueError("K must be >= 1")
    diff = f - f_eps
    lhs = float(np.linalg.norm(diff[:k]))
    rhs = float(np.linalg.norm(diff))
    return {"k": k, "K": K, "lhs": lhs, "noise": rhs, "holds": lhs <= K * rhs}
