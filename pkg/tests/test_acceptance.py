"""Acceptance suite: one test per criterion, tolerances pinned below.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from pulsefront.envelopes import (check_containment, check_fife_mcleod, crossing_time_tilde, estimate_constants,
                                  fit_fife_mcleod, interface_dichotomy, q_eta, q_eta_limit, ramp_initial,
                                  run_offset, run_rescaled, solve_X)
from pulsefront.fronts import (STALL_SPEED, extract_pulsating_front, profile_error, run_front, speed_bound,
                               width_stats, zeta_residual)
from pulsefront.homowave import harmonic_mean_of, solve_frozen_wave, wave_family, wave_values
from pulsefront.medium import closed_form_speed_function, cubic_speed, make_a4_medium, make_cubic_medium
from pulsefront.pdesolver import Grid1D
from pulsefront.zeros import (SignWord, calibrate_band, checkpoint_run, is_subword, probe_initial_data,
                              solve_stationary, zero_monotonicity_report)

# pinned tolerances
SPEED_TOL = 1e-4
SOLVE_SECONDS = 1.0
PROFILE_TOL = 1e-3
HARMONIC_TOL = 1e-8
PDE_TOL_COARSE, PDE_TOL_FINE = 0.01, 0.0025
PDE_SECONDS = 60.0
LIMIT_REL_TOL = 0.05
SWEEP_SECONDS = 15 * 60.0
WIDTH_FACTOR = 2.0
N_CHECKPOINTS = 20
VIOLATION_TOL = 5e-3
PACING_TOL = 1e-6
CLOSED_FORM_REL_TOL = 1e-12
LIMIT_TOL = 1e-6
LIMIT_L = 1e6
CROSSING_FACTOR = 1.5
DICHOTOMY_HI, DICHOTOMY_LO, DICHOTOMY_MARGIN = 0.9, 0.1, 0.2

SWEEP_L = (12.0, 24.0, 48.0)
C_STAR_SIN = np.sqrt(2.0) * np.sqrt(0.0525)


@pytest.fixture(scope="module")
def sweep(sinusoidal):
    """Recorded front runs of the sinusoidal medium, shared by the speed and width criteria."""
    t0 = time.perf_counter()
    runs = {L: run_front(sinusoidal, L, h=0.05, record=True) for L in SWEEP_L}
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def a4_family(a4):
    return wave_family(a4, n_y=16)


def test_c01_frozen_speed_oracle(record_property):
    combos = [(0.5, 0.1), (1.0, 0.25), (2.0, 0.45), (0.5, 0.45), (2.0, 0.1)]
    errs, secs = [], []
    for a, b in combos:
        t0 = time.perf_counter()
        c = solve_frozen_wave(make_cubic_medium(a, b), 0.0).c
        secs.append(time.perf_counter() - t0)
        errs.append(abs(c - np.sqrt(2 * a) * (0.5 - b)))
    record_property("detail", f"max |c - exact| = {max(errs):.2e} (tol {SPEED_TOL:g}), slowest solve {max(secs):.2f}s")
    assert max(errs) <= SPEED_TOL and max(secs) < SOLVE_SECONDS


def test_c02_exact_profile_oracle(record_property, homogeneous):
    wave = solve_frozen_wave(homogeneous, 0.0)
    xi = np.linspace(-20.0, 20.0, 4001)
    err = float(np.max(np.abs(wave_values(wave, xi)[0] - 1.0 / (1.0 + np.exp(xi / np.sqrt(2.0))))))
    record_property("detail", f"sup error on [-20, 20] = {err:.2e} (tol {PROFILE_TOL:g})")
    assert err <= PROFILE_TOL


def test_c03_harmonic_mean(record_property, sinusoidal):
    c_star = harmonic_mean_of(closed_form_speed_function(sinusoidal), 64).c_star
    err = abs(c_star - C_STAR_SIN)
    record_property("detail", f"c* = {c_star:.10f}, error {err:.1e} (tol {HARMONIC_TOL:g}), "
                              f"c0 - c* = {np.sqrt(2) * 0.25 - c_star:.4f}")
    assert err <= HARMONIC_TOL and c_star < np.sqrt(2.0) * 0.25


def test_c04_pde_speed_accuracy(record_property, homogeneous):
    exact = cubic_speed(1.0, 0.25)
    out = []
    for h, tol in ((0.05, PDE_TOL_COARSE), (0.025, PDE_TOL_FINE)):
        t0 = time.perf_counter()
        est = run_front(homogeneous, 16.0, h=h).speed
        out.append((h, abs(est.c_L - exact) / exact, tol, time.perf_counter() - t0))
    record_property("detail", ", ".join(f"h={h}: rel err {e:.2e} (tol {t:g}) in {s:.0f}s" for h, e, t, s in out))
    assert all(e <= t and s <= PDE_SECONDS for _, e, t, s in out)


def test_c05_speed_limit(record_property, sweep):
    runs, secs = sweep
    errs = [abs(runs[L].speed.c_L - C_STAR_SIN) for L in SWEEP_L]
    rel48 = errs[-1] / C_STAR_SIN
    record_property("detail", "|c_L - c*| = " + ", ".join(f"{e:.4f}" for e in errs)
                    + f"; {100 * rel48:.2f}% at L=48; sweep {secs:.0f}s")
    assert errs[0] > errs[1] > errs[2] and rel48 <= LIMIT_REL_TOL and secs <= SWEEP_SECONDS


def test_c06_width_uniformity(record_property, sweep):
    runs, _ = sweep
    stats = [width_stats(runs[L].record, 0.1) for L in SWEEP_L]
    sd = [s.max_space_diam for s in stats]
    td = [s.max_time_diam for s in stats]
    dtu = min(s.min_dt_U for s in stats)
    record_property("detail", f"space {min(sd):.2f}..{max(sd):.2f}, time {min(td):.2f}..{max(td):.2f}, "
                              f"min dU/dt {dtu:.3e}")
    assert max(sd) <= WIDTH_FACTOR * min(sd) and max(td) <= WIDTH_FACTOR * min(td) and dtu > 0


def _zero_audit(medium, L, comparator, band, half_length, h, config):
    grid = Grid1D.from_spacing(0.0, half_length, h)
    cfg = replace(config, left_value=1.0, right_value=0.0)
    t_end = 0.5 * half_length / speed_bound(medium)
    times, values = checkpoint_run(medium, L, probe_initial_data(grid), grid, cfg, t_end, N_CHECKPOINTS)
    return zero_monotonicity_report(times, values, comparator, band)


def test_c07_zero_number_monotonicity(record_property, homogeneous, sinusoidal):
    n, h, delta, L = 80.0, 0.05, 0.05, 12.0
    cases = []
    for label, medium in (("homogeneous", homogeneous), ("sinusoidal", sinusoidal)):
        stat = solve_stationary(medium, L, delta, n, h)
        band = calibrate_band(medium, L, delta, n, h)
        rep = _zero_audit(medium, L, stat.w, band, n, h, stat.config)
        cases.append((label, rep, is_subword(rep.terminal, SignWord.parse("+-"))))
    stat = solve_stationary(homogeneous, L, delta, n, h)
    band = calibrate_band(homogeneous, L, delta, n, h)
    flat = np.full(stat.w.size, 0.25)
    rep = _zero_audit(homogeneous, L, flat, band, n, h, stat.config)
    cases.append(("constant b", rep, is_subword(rep.terminal, SignWord.parse("+-+"))))
    ok = all(r.z_nonincreasing and r.subword_chain and t for _, r, t in cases)
    record_property("detail", "; ".join(f"{lab}: {r.words[0]} -> {r.terminal}" for lab, r, _ in cases))
    assert ok and all(len(r.words) == N_CHECKPOINTS for _, r, _ in cases)


def test_c08_stationary_decay(record_property, sinusoidal, a4):
    sols = [solve_stationary(sinusoidal, 12.0, 0.05, 80.0), solve_stationary(a4, 12.0, 0.05, 80.0)]
    worst = max(s.decay_violation() for s in sols)
    record_property("detail", f"max(w - delta e^(-mu x)) = {worst:.2e}, mu = "
                              + ", ".join(f"{s.mu:.4f}" for s in sols))
    assert worst <= 0.0 and all(s.monotone_iterates for s in sols)


def _eta_closed_form(p, L, t):
    """Independent transcription of the closed forms of q and eta."""
    C2 = p.C1 * p.beta1 / (p.gamma1 * p.K1) + p.M1 * p.beta1 / (p.K2 + p.gamma1)
    C3 = (p.eps - p.C1 / (L * p.gamma1)) / (p.gamma1 + p.K1 / (L * p.beta1))
    q = p.C1 / (L * p.gamma1) + (p.eps - p.C1 / (L * p.gamma1)) * np.exp(-p.gamma1 * t)
    eta = -(p.gamma1 + p.K2) / p.beta1 * ((C2 + C3) * np.exp(p.K1 * t / (L * p.beta1))
                                          - C3 * np.exp(-p.gamma1 * t) - C2)
    return q, eta


def test_c09_envelope_containment(record_property, a4, a4_family):
    L, eps = 48.0, 0.05
    params = estimate_constants(a4, a4_family, eps)
    c_star = harmonic_mean_of(a4_family.c, 256).c_star
    T_L = L / c_star
    traj = solve_X(a4_family.c, 0.0, L, 2.0 * T_L + 1.0, c_star=c_star)
    pace = max(abs(float(traj(T_L)) - L), abs(float(traj(2.0 * T_L)) - 2.0 * L))
    run = run_offset(a4, 0.0, L, lambda x: a4_family.psi(x, 0.0), 2.0 * T_L)
    viol = check_containment(params, a4_family, traj, run)["max_violation"]

    t = np.linspace(0.0, 2.0 * T_L, 2001)
    q, eta = q_eta(params, L, t)
    q_ref, eta_ref = _eta_closed_form(params, L, t)
    closed = max(np.max(np.abs(q - q_ref)) / np.max(np.abs(q_ref)),
                 np.max(np.abs(eta - eta_ref)) / np.max(np.abs(eta_ref)))

    tl = np.linspace(0.0, 1.0, 1001)
    q_big, eta_big = q_eta(params, LIMIT_L, tl)
    q_lim, eta_lim = q_eta_limit(params, tl)
    lim_q = float(np.max(np.abs(q_big - q_lim)))
    lim_eta = float(np.max(np.abs(eta_big - eta_lim)))

    checks = {"containment": viol <= VIOLATION_TOL, "pacing": pace <= PACING_TOL,
              "closed form": closed <= CLOSED_FORM_REL_TOL, "q limit": lim_q <= LIMIT_TOL,
              "eta limit": lim_eta <= LIMIT_TOL}
    record_property("detail", f"violation {viol:.1e}, pacing {pace:.1e}, closed-form rel {closed:.1e}, "
                              f"limit q {lim_q:.1e} eta {lim_eta:.1e} at L=1e6; failed: "
                              + (", ".join(k for k, v in checks.items() if not v) or "none"))
    assert all(checks.values())


def test_c10_crossing_time_uniformity(record_property, a4, a4_family):
    c_star = harmonic_mean_of(a4_family.c, 256).c_star
    gaps = {}
    for L in (24.0, 48.0):
        T_L = L / c_star
        run = run_offset(a4, 0.0, L, lambda x: a4_family.psi(x, 0.0), 1.5 * T_L, travel=1.2 * L,
                         snapshot_every=0.05, dt=0.1 * 0.05)
        gaps[L] = crossing_time_tilde(run, L) - T_L
    record_property("detail", f"T~ - T_L = {gaps[24.0]:.4f} (L=24), {gaps[48.0]:.4f} (L=48)")
    assert abs(gaps[48.0]) <= CROSSING_FACTOR * abs(gaps[24.0])


def test_c11_profile_convergence(record_property, a4, a4_family):
    out = {}
    for L in (12.0, 48.0):
        run = run_front(a4, L, h=0.05, record=True)
        front = extract_pulsating_front(a4, L, run.record)
        out[L] = (profile_error(front, a4_family), zeta_residual(front, a4_family.c, A=4.0))
    record_property("detail", f"profile error {out[12.0][0]:.4f} -> {out[48.0][0]:.4f}, "
                              f"shift residual {out[12.0][1]:.4f} -> {out[48.0][1]:.4f}")
    assert out[48.0][0] < out[12.0][0] and out[48.0][1] < out[12.0][1]


def test_c12_sign_classification(record_property, sinusoidal):
    media = {"positive": sinusoidal, "negative": make_cubic_medium(1.0, 0.75),
             "stall": make_a4_medium(0.45, 0.05, 0.1)}
    est = {k: run_front(m, 48.0, h=0.05).speed for k, m in media.items()}
    record_property("detail", ", ".join(f"{k} c_L={e.c_L:+.4f}" for k, e in est.items()))
    assert est["positive"].c_L > STALL_SPEED and est["negative"].c_L < -STALL_SPEED
    assert abs(est["stall"].c_L) <= STALL_SPEED


def test_c13_fife_mcleod_and_dichotomy(record_property, sinusoidal):
    L = 32.0
    run = run_front(sinusoidal, L, h=0.05, record=True)
    front = extract_pulsating_front(sinusoidal, L, run.record)
    g = ramp_initial(sinusoidal)
    resc = run_rescaled(sinusoidal, L, g, 1.0 / front.c_L, -1.5, 2.5)
    params = fit_fife_mcleod(sinusoidal, front, g, resc.x, L)
    fm = check_fife_mcleod(front, params, resc)

    big = run_rescaled(sinusoidal, 128.0, g, 2.0, -0.5, 1.2)
    dich = interface_dichotomy(closed_form_speed_function(sinusoidal), big, DICHOTOMY_MARGIN, DICHOTOMY_HI,
                               DICHOTOMY_LO)
    record_property("detail", f"envelope violation {fm['max_violation']:.1e}; dichotomy min inside "
                              f"{dich['min_inside']:.3f}, max outside {dich['max_outside']:.3f}")
    assert fm["max_violation"] <= VIOLATION_TOL and dich["passed"]
    assert dich["n_inside"] > 0 and dich["n_outside"] > 0
