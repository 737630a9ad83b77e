"""Acceptance criteria, one verdict line per criterion in the terminal summary."""

from __future__ import annotations

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

import conftest
from edrpricing import cli
from edrpricing.empirics import cross_section_regression, event_study_volatility, ols_fit
from edrpricing.equilibrium import AsAdSpec, as_ad_price_path
from edrpricing.errors import NoRealSolutionError
from edrpricing.frontier import efficiency_frontier, refrontier, sample_portfolios
from edrpricing.leverage import (
    LeverageSpec,
    PowerFrontierSpec,
    leveraged_expected_return,
    power_frontier_optimum,
)
from edrpricing.prospect_utility import (
    KTUtilityParams,
    calibrate_risk_aversion,
    iso_utility_curvature,
    iso_utility_slope,
    risk_neutral_amplitude,
    rnc_residual,
    rnc_slope,
    trace_risk_neutral_curve,
    CALIBRATION_FRACTIONS,
    CALIBRATION_RETURNS,
)
from edrpricing.returns_core import EmpiricalDistribution, load_returns_csv
from edrpricing.risk_measures import (
    conditional_value_at_risk,
    expected_downside_risk,
    gaussian_edr,
    prospect,
    value_at_risk,
)
from edrpricing.synthetic import cross_section_universe, market_from, regime_volatility_series, three_asset_universe

from designs import false_positive_rate, null_pvalues
from oracles import REFERENCE_CALIBRATION, amplitude_closed_form, cubic_root, dominated_pairwise, normal_equations


def verdict(number, ok, detail):
    conftest.ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}: {detail}")
    assert ok, detail


def _random_atoms(rng, n_min=2, n_max=30):
    n = int(rng.integers(n_min, n_max + 1))
    outcomes = rng.normal(0.0, 0.3, n) * rng.choice([1.0, 0.01, 10.0])
    weights = rng.random(n) + 1e-3
    return EmpiricalDistribution.from_atoms(outcomes, weights, normalize=True)


def test_1_risk_neutral_anchor():
    t0 = time.perf_counter()
    y = risk_neutral_amplitude(KTUtilityParams(5.0, reference=-0.05))
    elapsed = time.perf_counter() - t0
    amp = 0.05 + y
    ok = abs(y - 0.0718) <= 5e-4 and abs(amp - 0.122) <= 5e-4 and elapsed < 1.0
    ok &= abs(y - amplitude_closed_form(5.0, 2.25, 0.05)) < 1e-9
    verdict(1, ok, f"risk-neutral anchor y={y:.6f} amplitude={amp:.6f} in {elapsed * 1e3:.2f} ms")


def test_2_calibration_table():
    t0 = time.perf_counter()
    table = [[calibrate_risk_aversion(x, e) for x in CALIBRATION_FRACTIONS] for e in CALIBRATION_RETURNS]
    elapsed = time.perf_counter() - t0
    worst = max(abs(v - r) for row, ref in zip(table, REFERENCE_CALIBRATION) for v, r in zip(row, ref))
    steps = max(abs((table[i + 1][j] - table[i][j]) - 0.01) for i in range(19) for j in range(6))
    ok = worst <= 1e-5 and steps <= 1e-12 and elapsed < 1.0
    ok &= abs(table[0][0] - 0.665896) <= 1e-6 and abs(table[-1][-1] - 3.393772) <= 1e-6
    verdict(2, ok, f"calibration 120 cells max error {worst:.2e}, row step error {steps:.1e}, {elapsed * 1e3:.2f} ms")


def test_3_gaussian_edr():
    x = np.random.default_rng(2015).normal(0.05, 0.2, 1_000_000)
    edr, _ = expected_downside_risk(EmpiricalDistribution.from_samples(x))
    exact = gaussian_edr(0.05, 0.2)
    coarse = 0.05 - 0.8 * 0.2
    ok = abs(exact - (0.05 - math.sqrt(2 / math.pi) * 0.2)) < 1e-15
    ok &= abs(edr - exact) < 0.002 and abs(edr - coarse) < 0.001
    verdict(3, ok, f"gaussian EDR sample {edr:.5f} vs exact {exact:.5f} and 0.8-form {coarse:.5f}")


def test_4_identity_suite():
    rng = np.random.default_rng(4)
    worst, cvar_breaks, edr_breaks = 0.0, 0, 0
    for _ in range(1000):
        dist = _random_atoms(rng)
        edr, alpha = expected_downside_risk(dist)
        mean = dist.mean()
        edr_breaks += edr > mean
        if alpha < 1.0:
            worst = max(worst, abs(alpha * edr + (1 - alpha) * prospect(dist) - mean))
        for level in rng.uniform(0.001, 1.0, 20):
            cvar_breaks += conditional_value_at_risk(dist, level) > value_at_risk(dist, level)
    ok = worst < 1e-10 and cvar_breaks == 0 and edr_breaks == 0
    verdict(4, ok, f"identities on 1000 distributions: residual {worst:.1e}, CVaR>VaR {cvar_breaks}, EDR>mean {edr_breaks}")


@pytest.mark.parametrize("a", [2.0, 5.0, 10.0])
@pytest.mark.parametrize("x", [0.02, 0.05])
def test_5_rnc_properties(a, x):
    params = KTUtilityParams(a, reference=-x)
    label = f"5.{a:g}/{x:g}"
    try:
        curve = trace_risk_neutral_curve(params, n_points=1001)
    except NoRealSolutionError:
        bound = -math.log(1 - (2.25 - 1) / (2 * 2.25)) / a
        verdict(label, False, f"RNC a={a:g} x={x:g}: no risk-neutral amplitude exists (needs x < {bound:.4f})")
    y = curve.y
    c1 = np.array([p.expected_return for p in curve.points])
    c2 = np.array([p.shrink for p in curve.points])
    amp = np.array([p.amplitude for p in curve.points])
    resid = max(abs(rnc_residual(params, x, y, u, v)) for u, v in zip(c1, c2))
    monotone = bool(np.all(np.diff(amp) < 0))
    pinned = c2[0] == 0.0 and c2[-1] == y and len(curve.points) == 1001
    fd = np.gradient(c2, c1)
    analytic = np.array([rnc_slope(params, x, y, u, v) for u, v in zip(c1, c2)])
    slope_err = float(np.max(np.abs(fd[1:-1] - analytic[1:-1])))
    ok = resid < 1e-7 and monotone and pinned and slope_err < 1e-3
    verdict(
        label,
        ok,
        f"RNC a={a:g} x={x:g}: residual {resid:.1e}, amplitude strictly falling {monotone}, "
        f"endpoints pinned {pinned}, slope error {slope_err:.1e}",
    )


def test_6_iso_utility_geometry():
    rng = np.random.default_rng(6)
    low = high = bad = 0
    while low < 1000 or high < 1000:
        a = rng.uniform(0.5, 20.0)
        edr = rng.uniform(-0.5, 0.2)
        e = edr + rng.uniform(0.0, 0.5)
        k = a / 0.64 * (e - edr)
        if abs(k - 1.0) < 1e-9:
            continue
        slope, _ = iso_utility_slope(a, e, edr)
        if k < 1 and low < 1000:
            low += 1
            bad += not (iso_utility_curvature(a, e, edr) > 0 and (slope < 0 or k == 0))
        elif k > 1 and high < 1000:
            high += 1
            bad += not slope > 1
    verdict(6, bad == 0, f"iso-utility geometry on {low} k<1 and {high} k>1 triples: {bad} violations")


def test_7_leverage_truncation():
    hand = EmpiricalDistribution.from_atoms([-0.6, -0.4, 0.1], [0.05, 0.05, 0.9])
    e_hand = leveraged_expected_return(hand, LeverageSpec(1.0, 0.02, 0.5)).e_lev
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        dist = _random_atoms(rng, 1, 30)
        spec = LeverageSpec(rng.uniform(0, 5), rng.uniform(0, 0.1), rng.uniform(0.01, 0.99))
        b = leveraged_expected_return(dist, spec)
        worst = max(worst, abs(b.decomposed - b.e_lev))
    mc = leveraged_expected_return(
        EmpiricalDistribution.from_samples(np.random.default_rng(2015).normal(0.05, 0.3, 1_000_000)),
        LeverageSpec(1.0, 0.02, 0.5),
    )
    ok = abs(e_hand - 0.11) < 1e-15 and worst < 1e-12 and mc.tail_probability > 0 and mc.truncation_gain > 0
    verdict(
        7,
        ok,
        f"leverage hand example {e_hand:.15f}, decomposition error {worst:.1e}, "
        f"normal tail mass {mc.tail_probability:.4f} gain {mc.truncation_gain:.2e}",
    )


def test_8_power_frontier():
    opt = power_frontier_optimum(PowerFrontierSpec(0.5, 0.1, 4.0, 2.0))
    s = opt.sigma_opt
    # a^2 s^2 (s - beta) = alpha^2
    residual = 16 * s**3 - 1.6 * s**2 - 0.25
    ok = abs(residual) < 1e-9 and abs(s - cubic_root([16, -1.6, 0, -0.25], 0.1)) < 1e-9
    ok &= abs(s - 0.2883) < 5e-4 and opt.sigma_lev_literal < s and opt.sigma_lev_fixedpoint < s
    verdict(
        8,
        ok,
        f"power frontier sigma_opt {s:.10f} cubic residual {residual:.1e}, "
        f"levered {opt.sigma_lev_literal:.6f} and {opt.sigma_lev_fixedpoint:.6f}",
    )


def test_9_frontier():
    universe = three_asset_universe()
    samples = sample_portfolios(universe, 10_000, seed=9, threads=1)
    front = efficiency_frontier(samples, "edr")
    risk = np.array([s.report.edr for s in samples])
    ret = np.array([s.report.expected_return for s in samples])
    on = np.zeros(len(samples), dtype=bool)
    on[[p.portfolio_index for p in front]] = True
    sub = np.random.default_rng(9).choice(len(samples), 1000, replace=False)
    # a subsampled point is on the frontier iff nothing in the full cloud dominates it
    dominated = np.array(
        [np.any((risk >= risk[i]) & (ret >= ret[i]) & ((risk > risk[i]) | (ret > ret[i]))) for i in sub]
    )
    dominance_ok = bool(np.array_equal(on[sub], ~dominated))
    small = dominated_pairwise(risk[sub], ret[sub], True)
    dominance_ok &= bool(np.all(small[on[sub]] == False))  # noqa: E712
    idempotent = refrontier(front, "edr") == front
    edr_ok = bool(np.all(risk <= ret))
    reruns = [sample_portfolios(universe, 10_000, seed=9, threads=t) for t in (2, 8)]
    identical = all(
        np.array_equal(np.array([s.report.edr for s in r]), risk)
        and np.array_equal(np.array([s.report.expected_return for s in r]), ret)
        and [(p.portfolio_index, p.risk_coord) for p in efficiency_frontier(r, "edr")]
        == [(p.portfolio_index, p.risk_coord) for p in front]
        for r in reruns
    )
    ok = dominance_ok and idempotent and edr_ok and identical
    verdict(
        9,
        ok,
        f"frontier of 10000 portfolios ({len(front)} points): dominance {dominance_ok}, "
        f"idempotent {idempotent}, EDR<=E {edr_ok}, thread invariant {identical}",
    )


def test_10_empirics():
    rate = false_positive_rate(null_pvalues())
    rows = {r.label: r for r in event_study_volatility(regime_volatility_series(), "monthly")}
    fall = rows["Avg vol change after price fall monthly"]
    assets = cross_section_universe()
    cs = cross_section_regression(assets, market_from(assets), "edr")
    rng = np.random.default_rng(10)
    ols_err = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 500))
        x = rng.normal(0, 1, n)
        y = rng.normal(0, 1) + rng.normal(0, 1) * x + rng.normal(0, 1, n)
        res = ols_fit(x, y)
        slope, intercept = normal_equations(x, y)
        ols_err = max(ols_err, abs(res.coefficient - slope), abs(res.intercept - intercept))
    ok = rate < 0.05
    ok &= abs(fall.mean_vol_change - math.log(2)) < 0.1 and fall.p_value < 0.001
    ok &= abs(cs.coefficient - 0.56) <= 0.05 and ols_err < 1e-10
    verdict(
        10,
        ok,
        f"empirics: null false positives {rate:.3f}, post-fall log vol change {fall.mean_vol_change:.3f} "
        f"(p={fall.p_value:.1e}), cross-section slope {cs.coefficient:.4f}, OLS error {ols_err:.1e}",
    )


@pytest.mark.skipif("EDR_SP_DAILY" not in os.environ, reason="set EDR_SP_DAILY to a daily S&P return CSV")
def test_10_real_index_falls():
    daily = load_returns_csv(os.environ["EDR_SP_DAILY"])
    bad = []
    for g in ("weekly", "monthly"):
        rows = {r.label: r for r in event_study_volatility(daily, g, alternative="greater")}
        fall = rows[f"Avg vol change after price fall {g}"]
        if not (fall.mean_vol_change > 0 and fall.p_value < 0.05):
            bad.append(g)
    verdict("10.real", not bad, f"real index: post-fall volatility rise significant, failing windows {bad}")


def test_11_as_ad():
    spec = AsAdSpec(growth_rate=0.2, steps=11)
    q, p = spec.equilibrium()
    path = as_ad_price_path(spec)
    logp = np.log([row[2] for row in path])
    t = np.array([row[0] for row in path])
    slope_err = float(np.max(np.abs((logp[1:] - logp[0]) / t[1:] - 0.2)))
    quantity_fixed = all(row[1] == q for row in path)
    ok = (q, p) == (1.25, 2.5) and slope_err < 1e-14 and quantity_fixed
    verdict(11, ok, f"AS-AD equilibrium ({q}, {p}), log-price slope error {slope_err:.1e}")


def _cli_pass():
    outputs = {}
    for name in cli.COMMANDS:
        proc = subprocess.run(
            [sys.executable, "-m", "edrpricing.cli", name],
            capture_output=True,
            check=False,
            env={k: v for k, v in os.environ.items() if k != cli.DATA_DIR_ENV},
        )
        outputs[name] = (proc.returncode, proc.stdout)
    return outputs


def test_12_cli_end_to_end():
    t0 = time.perf_counter()
    first = _cli_pass()
    elapsed = time.perf_counter() - t0
    second = _cli_pass()
    failed = sorted(n for n, (code, _) in first.items() if code != 0)
    differ = sorted(n for n in first if first[n] != second[n])
    ok = not failed and not differ and elapsed < 10.0
    verdict(
        12,
        ok,
        f"CLI: {len(first)} subcommands in {elapsed:.2f} s, failures {failed}, non-identical reruns {differ}",
    )
