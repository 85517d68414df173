"""End-to-end acceptance criteria, each at its stated tolerance and runtime budget.

Every test appends one ``criterion N: PASS|FAIL`` line that pytest prints in
its terminal summary.
"""
import time
from contextlib import contextmanager

import numpy as np
import pytest

from hetcap.capacity import (capacity, capacity_case_C, capacity_L_closed_form,
                             energy_threshold)
from hetcap.measurement import NoiseCovariance, build_model, husimi_many
from hetcap.oracle import ba_refinement, gaussian_constellation, mc_rate, quadrature_rate
from hetcap.states import squeezed_coherent
from hetcap.verify import (_cover, _state_family, check_condition_ii, check_prop2,
                           check_smoothing_monotonicity, condition_i_sweep,
                           data_processing_sweep, get_profile, lemma1_sweep,
                           min_wehrl_scan, moment_sweep, position_grid, prop2_sweep)

NOISES = [NoiseCovariance(*b) for b in ((0.5, 0.5), (1.0, 1.0), (0.5, 8.0), (2.0, 0.5))]
SYM, ASYM = NoiseCovariance(0.5, 0.5), NoiseCovariance(0.5, 8.0)
C_SYM, C_ASYM = np.log(1.5), np.log(np.sqrt(6) - 1)

pytestmark = pytest.mark.slow


@contextmanager
def criterion(log, number, budget):
    """Times the block, records a PASS/FAIL line and fails the test on FAIL."""
    state = {"ok": False, "detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
    finally:
        dt = time.perf_counter() - t0
        ok = state["ok"] and dt < budget
        timing = f"{dt:.1f}s < {budget:g}s" if dt < budget else f"{dt:.1f}s OVER {budget:g}s"
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {state['detail']}  [{timing}]"
        log.append(line)
        print(line)
    assert ok, line


def test_criterion_1_min_wehrl(acceptance_log):
    with criterion(acceptance_log, 1, 120) as c:
        reports = [min_wehrl_scan(n, 50, seed=0) for n in NOISES]
        worst_below = min(r.slack for r in reports)
        worst_gap = max(r.extras["best_coherent_gap"] for r in reports)
        kinds = {r.extras["argmin_kind"] for r in reports}
        c["ok"] = (worst_below >= -1e-4 and worst_gap <= 1e-3 and kinds == {"coherent"}
                   and all(r.passed for r in reports))
        c["detail"] = (f"min h - bound = {worst_below:.2e}, coherent gap {worst_gap:.2e}, "
                       f"argmin {sorted(kinds)}")


def test_criterion_2_kl_identity(acceptance_log):
    with criterion(acceptance_log, 2, 300) as c:
        reports = lemma1_sweep(NOISES, (0.25, 1.0), 20, seed=0, profile="strict", mixtures=5)
        worst = max(abs(r.slack) for r in reports)
        c["ok"] = len(reports) == 200 and worst < 1e-5
        c["detail"] = f"{len(reports)} configurations, max |residual| = {worst:.2e}"


def test_criterion_3_kl_bound(acceptance_log):
    with criterion(acceptance_log, 3, 600) as c:
        points = [(n, f * n.minimizer_delta) for n in NOISES for f in (1.0, 2.0, 4.0)]
        reports = prop2_sweep(points, 1000, seed=0)
        worst = min(r.slack for r in reports)
        at_bound = [r for r in reports
                    if r.params["delta"] == NoiseCovariance(r.params["beta_q"],
                                                            r.params["beta_p"]).minimizer_delta]
        reduction = max(abs(r.slack - r.extras["wehrl_slack"]) for r in at_bound)
        equality = max(abs(check_prop2(squeezed_coherent(d, 0, 0, position_grid(d, 0)), n, d).slack)
                       for n, d in points)
        c["ok"] = (len(reports) == 12000 and worst >= -1e-5 and equality <= 1e-4
                   and reduction <= 1e-6)
        c["detail"] = (f"{len(reports)} checks, min slack {worst:.3e}, vacuum |slack| "
                       f"{equality:.1e}, reduction mismatch {reduction:.1e}")


def test_criterion_4_optimality_conditions(acceptance_log):
    with criterion(acceptance_log, 4, 300) as c:
        ii = [check_condition_ii("C", n, (x, y)) for n in NOISES
              for x in (-1.0, 0.0, 1.0) for y in (-1.0, 0.0, 1.0)]
        ii += [check_condition_ii("L", ASYM, (x, 0.0), delta=d)
               for d in (ASYM.minimizer_delta, 0.25, 0.5) for x in (-2.0, 0.0, 2.0)]
        res_ii = max(r.slack for r in ii)
        vectors = {r.params["n_test_vectors"] for r in ii}
        i_c = condition_i_sweep("C", ASYM, None, 500, seed=0)
        i_l = condition_i_sweep("L", ASYM, 0.25, 500, seed=1)
        slack_i = min(r.slack for r in i_c + i_l)
        c["ok"] = (res_ii < 1e-5 and vectors == {12} and slack_i >= -1e-5
                   and all(r.passed for r in ii + i_c + i_l))
        c["detail"] = (f"(ii) {len(ii)} letters, max residual {res_ii:.1e}; "
                       f"(i) {len(i_c)}+{len(i_l)} pairs, min slack {slack_i:.3e}")


def test_criterion_5_continuity(acceptance_log):
    with criterion(acceptance_log, 5, 1) as c:
        rng = np.random.default_rng(5)
        worst, n = 0.0, 0
        while n < 50:
            bq, ratio = rng.uniform(0.05, 3.0), rng.uniform(1.01, 40.0)
            if bq * bq * ratio < 0.25:
                continue
            noise = NoiseCovariance(bq, bq * ratio)
            thr = energy_threshold(noise.beta_p, noise.beta_q)
            worst = max(worst, abs(capacity_L_closed_form(noise, thr)
                                   - capacity_case_C(noise, thr).value))
            n += 1
        ref_l = capacity_L_closed_form(ASYM, 5.75)
        ref_c = capacity_case_C(ASYM, 5.75).value
        c["ok"] = (worst <= 1e-12 and abs(ref_l - np.log(4)) <= 1e-12
                   and abs(ref_c - np.log(4)) <= 1e-12 and abs(ref_c - 1.386294) < 1e-6)
        c["detail"] = f"{n} pairs, max |C_L - C_C| = {worst:.1e}, reference {ref_c:.6f}"


def test_criterion_6_quadrature(acceptance_log):
    with criterion(acceptance_log, 6, 120) as c:
        r_c = quadrature_rate(gaussian_constellation(capacity(SYM, 1.0).encoding, 31), SYM)
        r_l = quadrature_rate(gaussian_constellation(capacity(ASYM, 1.0).encoding, 63), ASYM)
        c["ok"] = abs(r_c - C_SYM) <= 2e-3 and abs(r_l - C_ASYM) <= 2e-3
        c["detail"] = (f"C: {r_c:.6f} vs {C_SYM:.6f}; L: {r_l:.6f} vs {C_ASYM:.6f} "
                       f"(|diff| {abs(r_c - C_SYM):.1e}, {abs(r_l - C_ASYM):.1e})")


def test_criterion_7_blahut_arimoto(acceptance_log):
    with criterion(acceptance_log, 7, 180) as c:
        parts, ok = [], True
        for noise, cap in ((SYM, C_SYM), (ASYM, C_ASYM)):
            rs = ba_refinement(noise, 1.0, (7, 15, 31))
            rates = [r.mutual_information for r in rs]
            ok &= cap - 0.02 <= rates[-1] <= cap + 1e-6
            ok &= bool(np.all(np.diff(rates) >= -1e-9))
            ok &= all(r.monotone and r.converged and r.mean_energy <= 1.0 + 1e-9 for r in rs)
            parts.append(f"beta=({noise.beta_q:g},{noise.beta_p:g}) gaps "
                         + "/".join(f"{cap - x:.2e}" for x in rates))
        c["ok"] = bool(ok)
        c["detail"] = "; ".join(parts)


def test_criterion_8_monte_carlo(acceptance_log):
    with criterion(acceptance_log, 8, 60) as c:
        parts, ok = [], True
        for noise, k in ((SYM, 31), (ASYM, 63)):
            con = gaussian_constellation(capacity(noise, 1.0).encoding, k)
            quad = quadrature_rate(con, noise)
            est, se = mc_rate(con, noise, 100_000, seed=8)
            _, se_half = mc_rate(con, noise, 50_000, seed=9)
            z = (est - quad) / se
            ratio = se / se_half
            ok &= abs(z) <= 3 and abs(ratio * np.sqrt(2) - 1) <= 0.2
            parts.append(f"z={z:+.2f}, se ratio {ratio:.3f}")
        c["ok"] = bool(ok)
        c["detail"] = "; ".join(parts) + " (target 0.707)"


def test_criterion_9_data_processing(acceptance_log):
    with criterion(acceptance_log, 9, 120) as c:
        prof = get_profile("fast")
        rng = np.random.default_rng(9)
        mono = []
        for k, noise in enumerate(NOISES):
            states = _state_family(90 + k, 12, 2 * noise.minimizer_delta, prof)
            grid = _cover(noise, [s.moments for s in states], prof.outcome_points)
            dens = husimi_many(build_model(noise), states, grid)
            for _ in range(25):
                a, b = rng.choice(len(dens), 2, replace=False)
                t = float(rng.uniform(0.05, 2.0))
                mono.append(check_smoothing_monotonicity(dens[a], dens[b], t))
        points = [(ASYM, 0.25), (ASYM, 0.5), (NoiseCovariance(1, 1), 0.75),
                  (NoiseCovariance(2, 0.5), 1.5)]
        reports = data_processing_sweep(points, 5, seed=0)
        ident = [r for r in reports if r.name == "smoothing_identity"]
        sup = max(r.slack for r in ident)
        c["ok"] = (len(mono) == 100 and all(r.passed for r in mono) and len(ident) == 20
                   and all(r.passed for r in reports))
        c["detail"] = (f"{len(mono)} KL triples, min margin {min(r.slack for r in mono):.2e}; "
                       f"{len(ident)} identities, max sup-norm {sup:.1e}")


def test_criterion_10_moments(acceptance_log):
    with criterion(acceptance_log, 10, 120) as c:
        reports = [r for n in NOISES for r in moment_sweep(n, 25, seed=10)]
        mass = max(abs(r.slack) for r in reports if r.name == "moment_mass")
        rel = max(r.slack for r in reports if r.name != "moment_mass")
        c["ok"] = len(reports) == 300 and all(r.passed for r in reports)
        c["detail"] = f"100 states, max |mass - 1| {mass:.1e}, max relative moment error {rel:.1e}"
