"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest -v tests/test_acceptance.py`; the verbose test line is the
per-criterion verdict. Statistical criteria use pinned seeds.
"""

import itertools
import math
from types import SimpleNamespace

import numpy as np
import pytest

from ppm_sdp.certificate import algebraic_identity_suite, build_certificate, verify_certificate
from ppm_sdp.graph_model import (
    AdversarySpec,
    Graph,
    PlantedPartitionParams,
    apply_adversary,
    sample_ppm,
)
from ppm_sdp.harness import labels_agree, tail_exponent_demo
from ppm_sdp.oracle import mle_unknown_sizes
from ppm_sdp.sdp import (
    SolverOptions,
    build_known_sizes,
    build_unknown_sizes,
    centered_partition_matrix,
    objective_value,
    round_to_partition,
    solve,
)
from ppm_sdp.thresholds import (
    ch_divergence_closed_form,
    ch_divergence_numeric,
    compute_omega,
    bm_dominates,
    feasibility_report,
    ppm_rate_matrix,
)

DESK_PARAMS = PlantedPartitionParams(
    n=300, r=3, pi=(0.5, 0.3, 0.2), p_tilde=21.0, q_tilde=2.0
)
DESK_SEEDS = 20
DESK_OPTS = SolverOptions(tol=1e-5, max_iters=5000)


def verdict(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} failed: {detail}"


@pytest.fixture(scope="module")
def desk_runs():
    """Shared 20-seed sweep at the desk-scale parameters (criteria 5 and 6)."""
    omega = compute_omega(DESK_PARAMS.p, DESK_PARAMS.q)
    runs = []
    for seed in range(DESK_SEEDS):
        g, truth = sample_ppm(DESK_PARAMS, seed)
        out = {"g": g, "truth": truth, "omega": omega}
        sol_k = solve(build_known_sizes(g, truth.sizes()), DESK_OPTS)
        rk = round_to_partition(sol_k, truth.r, DESK_OPTS.round_tol)
        out["known"] = rk.success and labels_agree(rk.labels, truth)
        sol_u = solve(build_unknown_sizes(g, truth.r, omega), DESK_OPTS)
        ru = round_to_partition(sol_u, truth.r, DESK_OPTS.round_tol)
        out["unknown"] = ru.success and labels_agree(ru.labels, truth)
        cert = build_certificate(g, truth, DESK_PARAMS)
        out["verified"] = verify_certificate(g, truth, cert).verified
        runs.append(out)
    return runs


def test_criterion_1_threshold_algebra():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        r = int(rng.integers(2, 5))
        pi = rng.dirichlet([2.0] * r)
        pi = np.maximum(pi, 0.02)
        pi /= pi.sum()
        qt = float(rng.uniform(0.5, 5.0))
        pt = qt + float(rng.uniform(0.1, 30.0))
        i, j = (int(x) for x in rng.choice(r, size=2, replace=False))
        par = SimpleNamespace(p_tilde=pt, q_tilde=qt, pi=tuple(pi))
        closed = ch_divergence_closed_form(par, i, j)
        numeric, _ = ch_divergence_numeric(ppm_rate_matrix(pt, qt, r), pi, i, j)
        worst = max(worst, abs(closed - numeric))
    symmetric_ok = True
    for pt, qt, pic in [(8, 2, 0.5), (12, 3, 0.25), (20, 5, 0.1)]:
        par = SimpleNamespace(p_tilde=pt, q_tilde=qt, pi=(pic, pic, 1 - 2 * pic) if pic < 0.5 else (pic, pic))
        value = ch_divergence_closed_form(par, 0, 1)
        expect = pic * (math.sqrt(pt) - math.sqrt(qt)) ** 2
        symmetric_ok &= abs(value - expect) <= 1e-12 * max(1.0, expect)
    boundary = ch_divergence_closed_form(
        SimpleNamespace(p_tilde=8.0, q_tilde=2.0, pi=(0.5, 0.5)), 0, 1
    )
    ok = worst <= 1e-9 and symmetric_ok and boundary == 1.0
    verdict(1, ok, f"worst closed-vs-numeric gap {worst:.2e}, boundary value {boundary!r}")


def test_criterion_2_omega_sandwich():
    rng = np.random.default_rng(202)
    violations = 0
    for _ in range(10**4):
        q, p = np.sort(rng.uniform(1e-4, 1 - 1e-4, size=2))
        if p <= q:
            continue
        w = compute_omega(float(p), float(q))
        violations += not (q < w < p)
    verdict(2, violations == 0, f"{violations} violations on 10^4 random (p, q) pairs")


def test_criterion_3_certificate_identities():
    rng = np.random.default_rng(303)
    worst_rel = 0.0
    for _ in range(50):
        r = int(rng.integers(2, 4))
        pi = rng.dirichlet([4.0] * r)
        pi = np.maximum(pi, 0.15)
        pi = tuple((pi / pi.sum()).tolist())
        pt = float(rng.uniform(15.0, 30.0))
        qt = float(rng.uniform(1.0, 4.0))
        par = PlantedPartitionParams(n=200, r=r, pi=pi, p_tilde=pt, q_tilde=qt)
        g, truth = sample_ppm(par, int(rng.integers(0, 2**31)))
        cert = build_certificate(g, truth, par)
        suite = {x[0]: x[1:] for x in algebraic_identity_suite(cert, g, truth)}
        for name in ("y_quadratic_form", "lambda_y_prime"):
            lhs, rhs, passed = suite[name]
            assert passed, f"{name} failed: {lhs} vs {rhs}"
            worst_rel = max(worst_rel, abs(lhs - rhs) / max(abs(rhs), 1.0))
    verdict(3, worst_rel <= 1e-9, f"worst relative identity error {worst_rel:.2e}")


def test_criterion_4_oracle_equivalence():
    rng = np.random.default_rng(404)
    disagreements = 0
    checked = 0
    for _ in range(200):
        r = int(rng.integers(2, 4))
        n = int(rng.integers(4 * r, 13))
        pi = rng.dirichlet([5.0] * r)
        pi = np.maximum(pi, 1.5 / n)
        pi = tuple((pi / pi.sum()).tolist())
        qt = float(rng.uniform(0.05, 0.4))
        hi = n / math.log(n) - 1e-6
        pt = float(rng.uniform(0.75 * hi, hi))
        try:
            par = PlantedPartitionParams(n=n, r=r, pi=pi, p_tilde=pt, q_tilde=qt)
            g, truth = sample_ppm(par, int(rng.integers(0, 2**31)))
        except Exception:
            continue
        omega = compute_omega(par.p, par.q)
        sol = solve(build_unknown_sizes(g, r, omega), DESK_OPTS)
        rounding = round_to_partition(sol, r, DESK_OPTS.round_tol)
        if not (sol.converged and rounding.success):
            continue
        cert = build_certificate(g, truth, par)
        if not verify_certificate(g, truth, cert).verified:
            continue
        checked += 1
        res = mle_unknown_sizes(g, r, omega)
        if not (res.is_unique and labels_agree(res.best_labels, rounding.labels)):
            disagreements += 1
    verdict(
        4,
        disagreements == 0,
        f"{checked} verified instances cross-checked, {disagreements} disagreements",
    )


def test_criterion_5_desk_scale_recovery(desk_runs):
    min_div = feasibility_report(params=DESK_PARAMS).min_value
    known_rate = sum(r["known"] for r in desk_runs) / DESK_SEEDS
    unknown_rate = sum(r["unknown"] for r in desk_runs) / DESK_SEEDS
    verified_rate = sum(r["verified"] for r in desk_runs) / DESK_SEEDS
    ok = known_rate >= 0.9 and unknown_rate >= 0.9 and verified_rate >= 0.8
    verdict(
        5,
        ok,
        f"minD={min_div:.3f}, known={known_rate:.2f}, unknown={unknown_rate:.2f}, "
        f"verified={verified_rate:.2f} over {DESK_SEEDS} seeds",
    )


def test_criterion_6_semirandom_robustness(desk_runs):
    adversaries = [
        AdversarySpec(kind="random_monotone", params={"delta_add": 0.3, "delta_rem": 0.3}),
        AdversarySpec(kind="subcommunity_plant", params={"community": 0, "size": 20, "density": 1.0}),
    ]
    violations = 0
    pairs = 0
    for seed, run in enumerate(desk_runs):
        if not run["unknown"]:
            continue  # paired check only applies where the clean graph recovers
        for spec in adversaries:
            g2 = apply_adversary(run["g"], run["truth"], spec, seed)
            sol = solve(build_unknown_sizes(g2, run["truth"].r, run["omega"]), DESK_OPTS)
            rounding = round_to_partition(sol, run["truth"].r, DESK_OPTS.round_tol)
            recovered = rounding.success and labels_agree(rounding.labels, run["truth"])
            pairs += 1
            violations += not recovered
    verdict(6, violations == 0, f"{pairs} adversarial paired runs, {violations} regressions")


def test_criterion_7_monotone_objective_arithmetic():
    par = PlantedPartitionParams(n=60, r=3, pi=(0.4, 0.3, 0.3), p_tilde=10, q_tilde=2)
    g, truth = sample_ppm(par, 1)
    lab = truth.as_array()
    x_hat = centered_partition_matrix(truth)
    omega = compute_omega(par.p, par.q)
    intra_missing = next(
        (u, v)
        for u, v in itertools.combinations(range(g.n), 2)
        if lab[u] == lab[v] and (u, v) not in g.edges
    )
    inter_edge = next((u, v) for u, v in g.sorted_edges() if lab[u] != lab[v])
    g_add = Graph(n=g.n, edges=g.edges | {intra_missing})
    g_rem = Graph(n=g.n, edges=g.edges - {inter_edge})
    gain_add = objective_value(g_add, x_hat, omega) - objective_value(g, x_hat, omega)
    gain_rem = objective_value(g_rem, x_hat, omega) - objective_value(g, x_hat, omega)
    exact_ok = gain_add == pytest.approx(2.0, abs=1e-12) and gain_rem == pytest.approx(
        2.0 / (truth.r - 1), abs=1e-12
    )
    # any feasible X gains at most those amounts; take entrywise-feasible
    # points from the solver trajectory
    sol = solve(
        build_unknown_sizes(g, truth.r, omega),
        SolverOptions(tol=1e-5, max_iters=5000, keep_iterates=25),
    )
    lb = -1.0 / (truth.r - 1)
    bound_ok = True
    for x in sol.iterates[:10] + [sol.X]:
        x = np.clip(x, lb, 1.0)
        np.fill_diagonal(x, 1.0)
        d_add = objective_value(g_add, x, omega) - objective_value(g, x, omega)
        d_rem = objective_value(g_rem, x, omega) - objective_value(g, x, omega)
        bound_ok &= d_add <= 2.0 + 1e-12 and d_rem <= 2.0 / (truth.r - 1) + 1e-12
    verdict(
        7,
        exact_ok and bound_ok,
        f"gain on truth: +{gain_add:.12f} intra, +{gain_rem:.12f} inter removal; "
        f"feasible iterates within bounds: {bound_ok}",
    )


def test_criterion_8_counterexample_pair():
    a, b, c, eps = 31.4, 15.0, 10.0, 1.0
    q1 = np.array([[a, b, c + eps], [b, a, c], [c + eps, c, a]])
    q2 = np.array([[a, b, c], [b, a, c], [c, c, a]])
    pi = [1 / 3] * 3
    d1 = feasibility_report(q_tilde=q1, pi=pi).min_value
    d2 = feasibility_report(q_tilde=q2, pi=pi).min_value
    divergences_ok = d1 > 1.0 > d2
    # the pair is comparable in BM-ordering: the lower-divergence model is
    # the dominating one (intra rates equal, inter rates no larger), so a
    # monotone adversary can simulate it from the higher-divergence model
    ordered = bm_dominates(q2, q1) and not bm_dominates(q1, q2)
    verdict(
        8,
        divergences_ok and ordered,
        f"minD(Q1)={d1:.7f} > 1 > minD(Q2)={d2:.7f}; BM-ordered with Q2 dominating",
    )


def test_criterion_9_tail_exponent():
    par = PlantedPartitionParams(n=10**4, r=2, pi=(0.5, 0.5), p_tilde=8.0, q_tilde=2.0)
    result = tail_exponent_demo(par, 0, 1, trials=10**5, seed=1)
    gap = abs(result.exponent - result.divergence)
    verdict(
        9,
        result.divergence == pytest.approx(1.0) and gap <= 0.3,
        f"estimated exponent {result.exponent:.4f} vs divergence "
        f"{result.divergence:.4f} ({result.events} events in {result.trials} trials)",
    )
