"""Desk-scale acceptance criteria 1-10.

Each test prints one ``PASS criterion k: ...`` or ``FAIL criterion k: ...`` line
(also repeated in the terminal summary) and then asserts the verdict.
"""
import json
import math

import numpy as np
import pytest
from conftest import SEED, config, record_acceptance

from stable_she import harness
from stable_she.cli import EXIT_CONFIG, main

# pinned tolerances
NOISE_SIGMAS = 3.0  # |empirical - target| <= 3 SE + analytic small-jump bias
MEAN_FIELD_SIGMAS, MEAN_FIELD_ALLOWANCE = 3.0, 0.01
HEAT_DEGENERATION_TOL = 1e-10
RK4_TOL = 1e-8
STRANG_MIN_ORDER = 1.8
SAMPLER_MIN_P = 0.01
WAIT_MAX_Z = 3.0
TIME_CHANGE_MAX_RATIO = 1.0  # |tau(gamma(T_k)) - T_k| / (dt max ||Z||_alpha^alpha)
GAP_SIGMAS, GAP_ALLOWANCE = 3.0, 0.02
MARTINGALE_SIGMAS = 3.0
MOMENT_Q = 1.3


def verdict(k, ok, detail):
    record_acceptance(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def sampler_rows():
    return {r.check: r for r in harness.run_sampler_check(config("sampler-check"))}


@pytest.fixture(scope="module")
def moment_rows(y_paths):
    rows, envelope = harness.run_moment_and_martingale_suite(config("moments-martingale"), y_paths=y_paths)
    return rows, envelope


@pytest.mark.slow
def test_criterion_1_noise_laplace_functional(noise_cfg, noise_draws):
    assert noise_cfg.noise.eps == 1e-4 and noise_draws.size == 100_000
    rows = harness.run_noise_check(noise_cfg, samples=noise_draws)
    assert [r.lam for r in rows] == [0.25, 0.5, 1.0]
    ok = all(abs(r.empirical - r.target) <= NOISE_SIGMAS * r.se + r.bias_bound for r in rows)
    detail = "; ".join(
        f"lambda={r.lam:g} emp={r.empirical:.5f} target={r.target:.5f} 3SE+bias={NOISE_SIGMAS * r.se + r.bias_bound:.5f}"
        for r in rows
    )
    verdict(1, ok, detail)


@pytest.mark.slow
def test_criterion_2_mean_field_identity(y_paths):
    cfg = config("she-mean")
    rows, _ = harness.run_she_mean(cfg, paths=y_paths)
    assert [r.check for r in rows] == ["mean_field_t=0.1", "mean_field_t=0.25"]
    assert cfg.allowance.mean_field == MEAN_FIELD_ALLOWANCE
    ok = all(r.value <= MEAN_FIELD_ALLOWANCE for r in rows)
    clamp = harness.clamp_fraction(y_paths)
    detail = "; ".join(f"{r.check} worst |mean-P_t phi|-3SE={r.value:.2e}" for r in rows)
    verdict(2, ok, f"{detail} (allowance {MEAN_FIELD_ALLOWANCE}; clamp fraction {clamp:.2e})")


def test_criterion_3_pde_solver():
    rows = {r.check: r for r in harness.run_pde_convergence(config("pde-convergence"))}
    heat, rk4 = rows["heat_degeneration_sup"].value, rows["reaction_vs_rk4"].value
    order, viol = rows["strang_order"].value, rows["comparison_violations"].value
    ok = heat <= HEAT_DEGENERATION_TOL and rk4 <= RK4_TOL and order >= STRANG_MIN_ORDER and viol == 0
    verdict(3, ok, f"heat sup={heat:.1e} rk4={rk4:.1e} strang order={order:.3f} comparison violations={viol:g}/100")


def test_criterion_4_dual_samplers(sampler_rows):
    ks = sampler_rows["jump_height_ks_p"].value
    floor = sampler_rows["jump_height_min_times_n"].value
    z = sampler_rows["waiting_time_mean_z"].value
    chi = sampler_rows["location_chi2_p"].value
    ok = ks > SAMPLER_MIN_P and floor >= 1.0 and z <= WAIT_MAX_Z and chi > SAMPLER_MIN_P
    verdict(4, ok, f"height KS p={ks:.3f} min(S)*n={floor:.4f} wait z={z:.2f} location chi2 p={chi:.3f}")


def test_criterion_5_time_change_inverse(sampler_rows):
    worst = sampler_rows["time_change_worst_ratio"].value
    verdict(5, worst <= TIME_CHANGE_MAX_RATIO, f"worst |tau(gamma(T_k))-T_k|/(dt max||Z||^alpha)={worst:.2e} over 200 paths")


@pytest.mark.slow
def test_criterion_6_duality_gap(gap_result):
    reports = gap_result.reports
    assert [r.n for r in reports] == [4, 16, 64]
    assert all(r.y_side.replicas == 2000 and r.z_side.replicas == 2000 for r in reports)
    bounded = all(r.gap <= GAP_SIGMAS * r.combined_se + GAP_ALLOWANCE for r in reports)
    ok = bounded and gap_result.monotone and gap_result.y_identical
    rows = "; ".join(
        f"n={r.n} Y={r.y_side.estimate:.4f}±{r.y_side.std_error:.4f} Z={r.z_side.estimate:.4f}±{r.z_side.std_error:.4f} "
        f"gap={r.gap:.4f} scale={r.theory_scale:.3f}"
        for r in reports
    )
    verdict(6, ok, f"{rows}; monotone={gap_result.monotone} Y identical={gap_result.y_identical}")


@pytest.mark.slow
def test_criterion_7_martingale_residual(moment_rows):
    rows, _ = moment_rows
    positive = [r for r in rows if r.t > 0]
    assert [r.t for r in positive] == [0.1, 0.2, 0.3, 0.4]
    zs = [abs(r.martingale_mean) / r.martingale_se for r in positive]
    ok = all(z <= MARTINGALE_SIGMAS for z in zs)
    verdict(7, ok, "residual z-scores " + ", ".join(f"t={r.t:g}:{z:.2f}" for r, z in zip(positive, zs)))


@pytest.mark.slow
def test_criterion_8_moment_envelope(moment_rows):
    rows, (c1, c2) = moment_rows
    positive = [r for r in rows if r.t > 0]
    finite = all(math.isfinite(r.moment_max) for r in positive)
    under = all(r.moment_max <= c1 * math.exp(c2 * r.t) * (1 + 1e-12) for r in positive)
    assert rows[0].t == 0.0
    detail = ", ".join(f"t={r.t:g}:{r.moment_max:.4f}" for r in positive)
    verdict(8, finite and under, f"q={MOMENT_Q} cell-max moments {detail}; envelope {c1:.4f}*exp({c2:.4f} t)")


def test_criterion_9_gronwall_bound():
    rows = harness.run_gronwall_check(config("gronwall"))
    assert len(rows) == 9
    ok = all(r.passed for r in rows)
    worst = min(rows, key=lambda r: r.min_log_margin)
    verdict(9, ok, f"9/9 (gamma, c) pairs, smallest log-margin {worst.min_log_margin:.4f} at gamma={worst.gamma}, c={worst.c}"
            if ok else "; ".join(f"gamma={r.gamma} c={r.c} margin={r.min_log_margin:.3g}" for r in rows))


SMALL_RUNS = [
    {"experiment": "noise-check", "replicas": 3000, "noise": {"eps": 0.01}},
    {"experiment": "she-mean", "replicas": 60},
    {"experiment": "pde-convergence", "pde": {"pairs": 10}},
    {"experiment": "sampler-check", "replicas": 3000},
    {"experiment": "duality-gap", "replicas": 60},
    {"experiment": "moments-martingale", "replicas": 60},
    {"experiment": "gronwall"},
]


def test_criterion_10_reproducibility(tmp_path):
    mismatched = []
    for doc in SMALL_RUNS:
        name = doc["experiment"]
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps({"seed": SEED, **doc}))
        first, rerun, wide = (tmp_path / name / tag for tag in ("first", "rerun", "workers8"))
        codes = [main(["--config", str(cfg), "--out", str(first), "--workers", "1"])]
        codes.append(main(["--config", str(first / "manifest.json"), "--out", str(rerun), "--workers", "1"]))
        codes.append(main(["--config", str(first / "manifest.json"), "--out", str(wide), "--workers", "8"]))
        assert EXIT_CONFIG not in codes
        blobs = [(d / "results.csv").read_bytes() for d in (first, rerun, wide)]
        if not (blobs[0] == blobs[1] == blobs[2]) or len(set(codes)) != 1:
            mismatched.append(name)
        manifest = json.loads((first / "manifest.json").read_text())
        assert manifest["seed"] == SEED and manifest["config"]["experiment"] == name
    ok = not mismatched
    verdict(10, ok, "results.csv byte-identical for manifest re-run and --workers 1 vs 8 on all 7 experiments"
            if ok else f"mismatch in {mismatched}")


def test_acceptance_tolerances_match_shipped_defaults():
    cfg = config("duality-gap")
    assert cfg.allowance.gap == GAP_ALLOWANCE and cfg.n_list == (4, 16, 64) and cfg.replicas == 2000
    assert config("moments-martingale").q == MOMENT_Q
    assert config("gronwall").gronwall.points == 100
    assert np.isclose(cfg.model.grid.dx, 0.05) and cfg.model.dt == 1e-3
