"""Acceptance suite: one test per criterion, reported as PASS/FAIL lines by conftest."""
import hashlib
import json
import math
import time

import numpy as np
import pytest

from greedystab.algorithms import GreedyConfig, WeakSchedule, run_oga, run_paired, run_wga
from greedystab.bounds import e_m_clean, hl1_bounds, hl1_worst_sequence, oga_clean_bound, oga_noisy_bound, regime_limit
from greedystab.cli import main
from greedystab.core import Dictionary
from greedystab.experiments import add_noise, gen_a1_signal, instability_demo, make_dictionary

pytestmark = pytest.mark.acceptance


def norms_from_zero(trace):
    """||f_m|| for m = 0, 1, ..., len(records)."""
    return np.concatenate([[trace.initial_norm], trace.residual_norms])


TRIALS = 100
STAB_EPS = (0.2, 0.1, 0.05)
STAB_H = (0.5, 0.9)
STAB_TRIALS = 20


def clean_dictionaries():
    return [Dictionary.orthonormal(64), make_dictionary("random-unit", 64, 256, seed=0)]


def stability_grid():
    for eps in STAB_EPS:
        for h in STAB_H:
            for trial in range(STAB_TRIALS):
                yield eps, h, trial


def test_criterion_1_clean_rate():
    start = time.perf_counter()
    cases = [(1.0, 1.0, "max"), (0.5, 1.0, "threshold_first"), (1.0, 0.5, "max")]
    worst = -math.inf
    for D in clean_dictionaries():
        for t, b, policy in cases:
            sched = WeakSchedule.constant(t)
            cfg = GreedyConfig(b, sched, policy, max_iter=2000)
            bound = np.array([e_m_clean(sched, b, m) for m in range(2001)])
            for seed in range(TRIALS):
                f, _ = gen_a1_signal(D, 1.0, 8, seed)
                norms = norms_from_zero(run_wga(f, D, cfg))
                m = np.arange(len(norms))
                worst = max(worst, float(np.max(norms - bound[m])))
    elapsed = time.perf_counter() - start
    print(f"criterion 1: max(||f_m|| - e_m) = {worst:.3e}, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed < 60


def test_criterion_2_pga_rate_instance():
    one = WeakSchedule.constant(1.0)
    assert abs(e_m_clean(one, 1.0, 63) - 0.5) <= 1e-15
    for m in range(0, 5000):
        assert e_m_clean(one, 1.0, m) == (1 + m) ** (-1 / 6)


def displayed_bound(eps, h, B, f_norm, m):
    # independent evaluation for t = b = 1: beta = h / 2
    beta = h / 2
    rate = f_norm ** (1 / (1 + beta)) * (B + 1) ** (beta / (1 + beta)) * (
        (h * f_norm / (B + 1)) ** -2 + m
    ) ** (-beta / (2 * (1 + beta)))
    return max(eps / (1 - h), rate)


def test_criterion_3_stability_bound(tmp_path):
    start = time.perf_counter()
    out = tmp_path / "r.json"
    codes, worst, rows_checked = [], -math.inf, 0
    for eps, h, trial in stability_grid():
        argv = [
            "stability", "--gen", "orthonormal:64", "--B", "1", "--sparsity", "8",
            "--eps", str(eps), "--h", str(h), "--seed", str(trial), "--out", str(out),
        ]
        codes.append(main(argv))
        rep = json.loads(out.read_text())
        f_norm = rep["summary"]["f_norm"]
        assert len(rep["rows"]) <= regime_limit(eps)
        for row in rep["rows"]:
            worst = max(worst, row["residual"] - displayed_bound(eps, h, 1.0, f_norm, row["m"]))
            rows_checked += 1
    elapsed = time.perf_counter() - start
    print(f"criterion 3: {len(codes)} trials, {rows_checked} rows, max excess {worst:.3e}, {elapsed:.1f} s")
    assert codes == [0] * len(codes)
    assert worst <= 1e-9
    assert elapsed < 120


def test_criterion_4_proof_identities():
    rng = np.random.default_rng(2024)
    dicts = {
        "orthonormal": Dictionary.orthonormal(32),
        "random-unit": make_dictionary("random-unit", 32, 96, seed=1),
        "coherent": make_dictionary("coherent", 32, 64, seed=2),
    }
    kinds = list(dicts)
    worst_rel, worst_budget = 0.0, -math.inf
    for run in range(1000):
        D = dicts[kinds[run % 3]]
        b = float(rng.uniform(0.05, 1.0))
        t = float(rng.uniform(0.1, 1.0))
        eps = float(rng.uniform(1e-3, 1.0))
        policy = ("max", "threshold_first")[run % 2]
        cfg = GreedyConfig(b, WeakSchedule.constant(t), policy, max_iter=200, residual_atol=0.0)
        f, _ = gen_a1_signal(D, float(rng.uniform(0.1, 3.0)), int(rng.integers(1, 16)), run)
        noise = add_noise(np.zeros(D.dim), eps, "exact", run + 10_000)
        pt = run_paired(f, noise, D, cfg)
        # recompute delta from scratch using the selected atoms only
        delta = noise.copy()
        norms, budget = [float(np.linalg.norm(delta))], 0.0
        for rec in pt.noisy.records:
            phi = rec.sign * D.atoms[rec.atom_index]
            c = float(delta @ phi)
            prev = float(delta @ delta)
            delta = delta - b * c * phi
            cur = float(delta @ delta)
            if prev > 0:
                worst_rel = max(worst_rel, abs(cur - (prev - b * (2 - b) * c * c)) / prev)
            budget += b * (2 - b) * c * c
            norms.append(math.sqrt(cur))
        assert all(y <= x for x, y in zip(norms, norms[1:])), "||delta_k|| increased"
        assert len(pt.noisy.records) <= 200
        np.testing.assert_allclose(pt.delta_norms, norms, rtol=1e-9, atol=1e-12)
        worst_budget = max(worst_budget, budget - eps * eps)
    print(f"criterion 4: worst St2a rel {worst_rel:.3e}, worst St3a excess {worst_budget:.3e}")
    assert worst_rel <= 1e-10
    assert worst_budget <= 1e-10


def test_criterion_5a_oga_orthogonality():
    worst = 0.0
    for D in clean_dictionaries():
        for seed in range(TRIALS):
            f, _ = gen_a1_signal(D, 1.0, 8, seed)
            tr = run_oga(f, D, GreedyConfig(max_iter=2000))
            chosen = D.atoms[[r.atom_index for r in tr.records]]
            if len(chosen):
                worst = max(worst, float(np.max(np.abs(chosen @ tr.residual))) / np.linalg.norm(f))
    print(f"criterion 5a: max |<f_m, g>| / ||f|| = {worst:.3e}")
    assert worst <= 1e-8


def test_criterion_5b_oga_clean_rate():
    worst = -math.inf
    for D in clean_dictionaries():
        for seed in range(TRIALS):
            f, _ = gen_a1_signal(D, 1.0, 8, seed)
            norms = norms_from_zero(run_oga(f, D, GreedyConfig(max_iter=2000)))
            for m in range(1, len(norms)):
                worst = max(worst, norms[m] - oga_clean_bound(m))
    print(f"criterion 5b: max(||f_m|| - m^-1/2) = {worst:.3e}")
    assert worst <= 1e-9


def test_criterion_5c_oga_noisy_bound():
    D = Dictionary.orthonormal(64)
    worst = -math.inf
    for eps, h, trial in stability_grid():
        # same signal and noise as the stability trial with this seed
        f, _ = gen_a1_signal(D, 1.0, 8, trial)
        f_noisy = add_noise(f, eps, "exact", trial + 1)
        norms = norms_from_zero(run_oga(f_noisy, D, GreedyConfig(max_iter=2000)))
        for m, r in enumerate(norms):
            worst = max(worst, r - oga_noisy_bound(eps, 1.0, m))
    print(f"criterion 5c: max(||f_m|| - noisy OGA bound) = {worst:.3e}")
    assert worst <= 1e-9


def test_criterion_5d_oga_not_worse_than_pga():
    # declared grid: random-unit 64 x 256, A1 signals (B = 1, sparsity 8), seeds 0..99
    D = make_dictionary("random-unit", 64, 256, seed=0)
    failures, worst = 0, 0.0
    for seed in range(TRIALS):
        f, _ = gen_a1_signal(D, 1.0, 8, seed)
        oga = norms_from_zero(run_oga(f, D, GreedyConfig(max_iter=2000)))
        pga = norms_from_zero(run_wga(f, D, GreedyConfig.pga(max_iter=2000)))
        n = min(len(oga), len(pga))
        excess = oga[:n] - pga[:n]
        if np.any(excess > 1e-12):
            failures += 1
            worst = max(worst, float(excess.max()))
    print(f"criterion 5d: {failures}/{TRIALS} trials with OGA above PGA, worst excess {worst:.3e}")
    assert failures == 0


@pytest.mark.parametrize("eps", [0.1, 0.01, 0.001])
def test_criterion_6_instability_demo(eps):
    rep = instability_demo(eps)
    assert abs(rep["d1"] - math.sqrt(2)) <= 1e-12
    assert abs(rep["d2"] - eps * math.sqrt(2)) <= 1e-12
    assert rep["ratio"] == pytest.approx(1 / eps, rel=1e-9)


def test_criterion_7_hl1():
    rng = np.random.default_rng(7)
    worst = -math.inf
    for case in range(10_000):
        C = float(rng.choice([0.1, 0.5, 1.0, 2.0, 10.0]))
        m = int(rng.integers(1, 201))
        v = rng.uniform(0, 1, m) * rng.choice([1.0, 0.1, 0.01])
        bound = hl1_bounds(C, v)
        worst = max(worst, float(np.max(np.array(hl1_worst_sequence(C, v)) - bound)))
        # sub-extremal: x_0 <= C and each step shrinks at least as much as the extremal step
        x = C * float(rng.uniform(0, 1))
        xs = [x]
        for vk in v:
            x = max(0.0, x - float(rng.uniform(1, 3)) * x * x * vk)
            xs.append(x)
        worst = max(worst, float(np.max(np.array(xs) - bound)))
    print(f"criterion 7: max excess {worst:.3e}")
    assert worst <= 1e-12


def sort_oracle(x):
    order = sorted(range(len(x)), key=lambda i: -abs(x[i]))
    norms = [math.sqrt(math.fsum(x[i] ** 2 for i in order[k + 1:])) for k in range(len(order))]
    return order, norms


def test_criterion_8_sort_oracle():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 65))
        x = rng.standard_normal(n)
        mags = np.abs(x)
        assert len(np.unique(mags)) == n
        D = Dictionary.orthonormal(n)
        tr = run_wga(x, D, GreedyConfig.pga(max_iter=n, residual_atol=0.0))
        order, norms = sort_oracle(x.tolist())
        assert [r.atom_index for r in tr.records] == order
        worst = max(worst, float(np.max(np.abs(tr.residual_norms - norms))))
    print(f"criterion 8: max residual difference {worst:.3e}")
    assert worst <= 1e-12


def test_criterion_9_determinism(tmp_path):
    d = tmp_path / "d.csv"
    s = tmp_path / "s.csv"
    main(["gen-dict", "--kind", "random-unit", "--dim", "16", "--count", "40", "--seed", "5", "--out", str(d)])
    f, _ = gen_a1_signal(make_dictionary("random-unit", 16, 40, 5), 1.0, 6, 3)
    s.write_text(",".join(repr(float(x)) for x in f) + "\n")
    variants = [
        ["run", "--algo", "wga", "--dict", str(d), "--signal", str(s), "--b", "0.7", "--max-iter", "300"],
        ["run", "--algo", "oga", "--dict", str(d), "--signal", str(s), "--format", "json"],
        ["bounds", "--which", "clean", "--t", "0.5", "--b", "0.8", "--m-max", "500"],
        ["bounds", "--which", "noisy", "--eps", "0.05", "--h", "0.7", "--f-norm", "0.9", "--m-max", "400"],
        ["bounds", "--which", "hl1", "--C", "2", "--v", "0.3", "--m-max", "200"],
        ["stability", "--gen", "random:128:32", "--eps", "0.1", "--seed", "11"],
        ["stability", "--eps", "0.2", "--trials", "6", "--jobs", "3", "--format", "csv", "--seed", "4"],
        ["demo", "instability", "--eps", "0.001"],
        ["demo", "linear", "--k", "3", "--dim", "8", "--seed", "2"],
        ["gen-dict", "--kind", "coherent", "--dim", "8", "--count", "16", "--seed", "9"],
    ]
    for i, argv in enumerate(variants):
        digests = []
        for rep in range(2):
            out = tmp_path / f"v{i}_{rep}.out"
            assert main(argv + ["--out", str(out)]) == 0, argv
            digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert digests[0] == digests[1], argv
    print(f"criterion 9: {len(variants)} variants byte-identical")
