"""Acceptance criteria, one test each.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line per
criterion. Runtime budgets are part of the pass condition.
"""

import json
import time

import numpy as np
import oracles as o
import pytest

from qcpower import channels as ch
from qcpower import commutators as cm
from qcpower import qcp as q
from qcpower.cli import run
from qcpower.discord import discord
from qcpower.linalg import commutator, frobenius_norm, pauli_string, random_unitary
from qcpower.states import (
    DensityMatrix,
    apply_local_unitary,
    cq_build,
    flagged_cq,
    psi_family,
    random_density,
    save_state,
    to_two_qubit_bloch,
)

RESULTS = {}


def report(n, name, ok, detail, elapsed, budget=None):
    ok = bool(ok) and (budget is None or elapsed < budget)
    lim = f" < {budget:g}s" if budget else ""
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:>2} {name}: {detail} [{elapsed:.1f}s{lim}]"
    RESULTS[n] = line
    print("\n" + line)
    assert ok, line


@pytest.fixture(scope="module", autouse=True)
def summary():
    yield
    print("\n=== acceptance summary ===")
    for n in sorted(RESULTS):
        print(RESULTS[n])


def test_criterion_01_bloch_commutator_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        b1 = to_two_qubit_bloch(random_density(4, rng, dims=(2, 2)))
        b2 = to_two_qubit_bloch(random_density(4, rng, dims=(2, 2)))
        dense = commutator(o.bloch_operator(b1.r, b1.s, b1.T), o.bloch_operator(b2.r, b2.s, b2.T))
        worst = max(worst, frobenius_norm(cm.bloch_commutator(b1, b2).operator() - dense))
    report(1, "bloch-commutator soundness", worst <= 1e-10, f"max Frobenius error {worst:.2e}",
           time.perf_counter() - t0, 10)


def test_criterion_02_phase_damping():
    t0 = time.perf_counter()
    const = 1 / (2 * np.sqrt(2))  # frozen from the dense oracle
    errs = []
    for p in (0.1, 0.3, 0.5, 0.9):
        pd = ch.phase_damping(p)
        nrm = frobenius_norm(cm.output_commutator(pd, pd, psi_family(0, 0), psi_family(1, 1)))
        errs.append(abs(nrm / (p * np.sqrt(1 - p)) - const) / const)
    ends = [frobenius_norm(cm.output_commutator(ch.phase_damping(p), ch.phase_damping(p),
                                                psi_family(0, 0), psi_family(1, 1))) for p in (0.0, 1.0)]
    ok = max(errs) <= 1e-8 and max(ends) <= 1e-12
    report(2, "phase-damping super-activation", ok,
           f"max rel err {max(errs):.1e}, norms at p=0,1: {ends[0]:.1e}, {ends[1]:.1e}",
           time.perf_counter() - t0, 1)


def test_criterion_03_theorem1_exclusions():
    t0 = time.perf_counter()
    cd = ch.completely_decohering()
    u1, u2 = ch.unitary(random_unitary(2, np.random.default_rng(1))), ch.parse_channel_spec("unitary:H")
    none_cd = q.superactivation_witness(cd, cd, with_discord=False) is None
    none_u = q.superactivation_witness(u1, u2, with_discord=False) is None
    w = q.superactivation_witness(cd, ch.phase_damping(0.5), strategy="product", with_discord=False)
    ok = none_cd and none_u and w is not None and w.commutator_norm > 1e-8
    detail = f"(cd,cd) empty={none_cd}, (U,U) empty={none_u}, (cd,pd:0.5) norm={w.commutator_norm if w else 0:.4f}"
    report(3, "theorem 1 exclusions", ok, detail, time.perf_counter() - t0, 5)


def test_criterion_04_theorem2_cases():
    t0 = time.perf_counter()
    a, b = 0.4, 0.3
    r1, n1, t1 = cm.DEFAULT_CASE1["r"], cm.DEFAULT_CASE1["n"], cm.DEFAULT_CASE1["t"]
    r2, t2 = cm.DEFAULT_CASE2["r"], cm.DEFAULT_CASE2["t"]
    cases = {
        "case1": ("case1", ch.projecting_depolarizing(a), ch.projecting_depolarizing(b),
                  0.25 * a * b * r1 * t1 * (1 - n1) * np.hypot(a, b)),
        "case2": ("case2", ch.projecting_depolarizing(a), ch.dephase_then_depolarize(b), a * a * b * r2 * t2 / 2),
        "case3": ("case3", ch.isotropic(a, 2), ch.isotropic(b, 2), a * b * r2 * t2 * (a - b) / 2),
    }
    rel = {}
    for name, (case, c1, c2, expect) in cases.items():
        x1, x2 = cm.theorem2_witness(case)
        rel[name] = abs(frobenius_norm(cm.output_commutator(c1, c2, x1, x2)) - expect) / expect
    worst_iso = 0.0
    for pair in cm.constrained_pair_sampler(seed=0, count=1000):
        b1, b2 = to_two_qubit_bloch(pair.x1), to_two_qubit_bloch(pair.x2)
        for s in (0.7, -0.2):
            y1, y2 = cm.local_transfer(b1, [s] * 3, [s] * 3), cm.local_transfer(b2, [s] * 3, [s] * 3)
            worst_iso = max(worst_iso, cm.bloch_commutator(y1, y2).norm())
    ok = max(rel.values()) <= 1e-8 and worst_iso <= 1e-10
    detail = ", ".join(f"{k} rel {v:.1e}" for k, v in rel.items()) + f", identical isotropic max {worst_iso:.1e}"
    report(4, "theorem 2 case matrix", ok, detail, time.perf_counter() - t0, 30)


def test_criterion_05_d4_counterexample():
    t0 = time.perf_counter()
    support = pauli_string(list(cm.D4_RESIDUAL_SUPPORT))
    ratios, off = [], 0.0
    for t1, t2 in [(0.1, 0.1), (0.05, 0.2), (0.2, 0.03), (-0.1, 0.15)]:
        res = cm.commut1_residual(*cm.d4_counterexample(t1, t2))
        coeff = np.trace(support @ res) / 16
        off = max(off, frobenius_norm(res - coeff * support))
        ratios.append(coeff / (t1 * t2))
    zero = max(frobenius_norm(cm.commut1_residual(*cm.d4_counterexample(t1, t2))) for t1, t2 in [(0, 0.2), (0.2, 0)])
    spread = max(abs(r - ratios[0]) for r in ratios)
    ok = abs(ratios[0]) > 1e-6 and spread <= 1e-12 and off <= 1e-14 and zero <= 1e-14
    detail = f"coeff/(t1 t2) = {ratios[0]:.6g}, spread {spread:.1e}, off-support {off:.1e}, zero case {zero:.1e}"
    report(5, "d=4 counterexample", ok, detail, time.perf_counter() - t0, 1)


def test_criterion_06_discord_correctness():
    t0 = time.perf_counter()
    bell = abs(discord(psi_family(0, 0)).value - 1)
    rng = np.random.default_rng(6)
    cq_worst = 0.0
    for _ in range(5):
        u = random_unitary(2, rng)
        cq = flagged_cq(rng.dirichlet([1, 1]), u)
        m = cq_build(cq).mat
        blocks = [random_density(2, rng).mat for _ in range(2)]
        proj = [np.outer(u[:, k], u[:, k].conj()) for k in range(2)]
        m = sum(w * np.kron(p, b) for w, p, b in zip(cq.weights, proj, blocks))
        cq_worst = max(cq_worst, abs(discord(DensityMatrix(m, (2, 2))).value))
    inv = 0.0
    for k in range(50):
        dims = (2, 2) if k % 2 == 0 else (2, 3)
        rho = random_density(int(np.prod(dims)), rng, dims=dims)
        us = [random_unitary(d, rng) for d in dims]
        inv = max(inv, abs(discord(apply_local_unitary(rho, us)).value - discord(rho).value))
    grid = 0.0
    for _ in range(20):
        rho = random_density(4, rng, dims=(2, 2))
        grid = max(grid, abs(discord(rho).value - o.grid_discord_qubit(rho.mat, 2)))
    ok = bell <= 1e-6 and cq_worst <= 1e-6 and inv <= 2e-4 and grid <= 1e-4
    detail = f"|bell-1| {bell:.1e}, CQ max {cq_worst:.1e}, LU invariance {inv:.1e}, grid oracle {grid:.1e}"
    report(6, "discord correctness", ok, detail, time.perf_counter() - t0, 60)


def _random_output(rng):
    menu = [ch.mp_std2(), ch.phase_damping(rng.uniform()), ch.depolarizing(rng.uniform()),
            ch.projecting_depolarizing(rng.uniform(0, 0.5)), ch.unitary(random_unitary(2, rng))]
    c = menu[rng.integers(len(menu))]
    cq = flagged_cq(rng.dirichlet([1, 1]), random_unitary(2, rng))
    return q.output_state(c, cq)


def test_criterion_07_additivity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    gaps = []
    for _ in range(10):
        r1, r2 = _random_output(rng), _random_output(rng)
        joint = discord(r1 @ r2, measured=(0, 2)).value
        gaps.append(abs(joint - discord(r1).value - discord(r2).value))
    report(7, "discord additivity on product outputs", max(gaps) <= 1e-3, f"max gap {max(gaps):.1e}",
           time.perf_counter() - t0, 180)


def _family_channel(rng):
    kind = rng.integers(7)
    if kind == 0:
        return ch.phase_damping(rng.uniform(0.1, 0.9))
    if kind == 1:
        return ch.depolarizing(rng.uniform(0.1, 0.9))
    if kind == 2:
        return ch.projecting_depolarizing(rng.uniform(0.1, 0.5))
    if kind == 3:
        return ch.dephase_then_depolarize(rng.uniform(0.1, 0.9))
    if kind == 4:
        lam = np.sort(rng.dirichlet(np.ones(4)))[::-1]
        return ch.pauli(ch.PauliParams(tuple(lam)))
    if kind == 5:
        return ch.mp_std2()
    return ch.completely_decohering()


def test_criterion_08_theorem3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    margins, failed = [], []
    for k in range(20):
        c1, c2 = _family_channel(rng), _family_channel(rng)
        rep = q.verify_theorem3(c1, c2, q.TheoremConfig(seed=k))
        margins.append(rep.quantities["margin"])
        if not rep.passed:
            failed.append(f"{c1.label}x{c2.label}")
    detail = f"{20 - len(failed)}/20 pass, min margin {min(margins):.1e}, max margin {max(margins):.3f}"
    if failed:
        detail += f", failed: {failed}"
    report(8, "theorem 3 super-additivity", not failed, detail, time.perf_counter() - t0, 180)


def test_criterion_09_theorem4():
    t0 = time.perf_counter()
    rep = q.verify_theorem4(ch.mp_std2(), ch.completely_decohering())
    qty = rep.quantities
    ok = rep.passed and abs(qty["difference"]) <= 2e-2 and qty["block_inequality_holds"]
    detail = (f"Q(mp)={qty['q_mp']:.7f}, Q(mp x cd)={qty['q_composite']:.7f}, diff {qty['difference']:.1e}, "
              f"blocks {qty['lhs_discord']:.7f} <= {qty['rhs_weighted_blocks']:.7f}")
    report(9, "theorem 4 measure-prepare with decohering", ok, detail, time.perf_counter() - t0, 120)


def test_criterion_10_genuine_correlation():
    t0 = time.perf_counter()
    reps = [q.genuine_correlation_demo(a, with_discord=(a == 1.0)) for a in (0.25, 0.5, 1.0)]
    scaled = [r.quantities["commutator_norm"] / r.inputs["a"] ** 2 for r in reps]
    rel = max(abs(s - scaled[0]) / scaled[0] for s in scaled)
    marg = reps[-1].quantities["max_input_pairwise_discord"]
    ok = rel <= 1e-8 and marg <= 1e-6 and all(r.passed for r in reps)
    detail = f"norm/a^2 = {scaled[0]:.6g} (spread {rel:.1e}), max pairwise input discord {marg:.1e}"
    report(10, "genuine-correlation demo", ok, detail, time.perf_counter() - t0, 30)


def test_criterion_11_cli_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    state = tmp_path / "state.json"
    save_state(random_density(4, np.random.default_rng(11), dims=(2, 2)), state)
    commands = [
        ["discord", "--state", str(state)],
        ["discord", "--preset", "psi-flag", "--restarts", "2"],
        ["qcp", "--channel", "mp:std2", "--restarts", "1"],
        ["superactivation", "--channel1", "cd", "--channel2", "pd:0.5"],
        ["verify", "--theorem", "1", "--channel1", "cd", "--channel2", "pd:0.5", "--trials", "100"],
        ["verify", "--theorem", "2", "--channel1", "pd:0.5", "--channel2", "pd:0.5", "--trials", "100"],
        ["verify", "--theorem", "3", "--channel1", "pd:0.3", "--channel2", "dep:0.6", "--restarts", "1"],
        ["verify", "--theorem", "pd", "--param", "0.3"],
        ["verify", "--theorem", "genuine", "--param", "0.5"],
        ["commutator", "--case", "case1", "--channel1", "projdep:0.4", "--channel2", "projdep:0.3"],
        ["spec", "mp:std2"],
    ]
    bad = []
    for argv in commands:
        outs = []
        for _ in range(2):
            code = run(argv + ["--seed", "5", "--format", "json"])
            outs.append((code, capsys.readouterr().out))
        json.loads(outs[0][1])
        if outs[0] != outs[1] or outs[0][0] not in (0, 1):
            bad.append(argv[0])
    subcommands = {a[0] for a in commands}
    with capsys.disabled():
        report(11, "CLI determinism", not bad,
               f"{len(commands)} runs over {len(subcommands)} subcommands byte-identical" + (f"; differ: {bad}" if bad else ""),
               time.perf_counter() - t0)
