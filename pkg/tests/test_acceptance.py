"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; tolerances are pinned here and nowhere else.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from spincat.analytics import (
    f_corrected,
    f_corrected_with_delta,
    f_encoded,
    f_physical,
)
from spincat.channels import (
    dephase_matrix,
    error_operator_set,
    sample_error_unitaries,
    sigma_phi_from_chi,
)
from spincat.code import spin_cat_codewords
from spincat.correction import (
    CompositeState,
    CorrectionConfig,
    LEVEL_INDEX,
    N_LEVELS,
    apply_correction,
    correct_second_order,
    composite_dim,
)
from spincat.harness import default_config, run_experiment
from spincat.harness.output import write_record
from spincat.spinops import D52, SpinManifold, rotation_y
from spincat.tomography import (
    bootstrap_fidelity,
    default_settings,
    mle_reconstruct,
    simulate_measurements,
)

SEED = 20250810


def report(n, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {n:>2} {name}: {status}  {detail}")
    assert ok, f"criterion {n} ({name}) failed: {detail}"


def composite_ket(level, fock, cutoffs):
    v = np.zeros(composite_dim(cutoffs), dtype=complex)
    idx = LEVEL_INDEX[level]
    for f, c in zip(fock, cutoffs):
        idx = idx * c + f
    v[idx] = 1.0
    return v


def psi8_vec():
    v = np.zeros(N_LEVELS, dtype=complex)
    v[LEVEL_INDEX[("D", -2.5)]] = 1 / np.sqrt(2)
    v[LEVEL_INDEX[("D", 2.5)]] = -1j / np.sqrt(2)
    return v


def test_criterion_01_kl_exactness():
    start = time.monotonic()
    report_obj = None
    pair = spin_cat_codewords(D52)
    kl = __import__("spincat.code", fromlist=["kl_conditions"]).kl_conditions(
        pair, error_operator_set(D52, 2))
    table = {(p.j, p.k): p for p in kl.pairs}
    elapsed = time.monotonic() - start
    ok = (kl.exact
          and table[(0, 2)].zero_exact == Fraction(5, 4)
          and table[(0, 2)].one_exact == Fraction(5, 4)
          and table[(2, 2)].zero_exact == Fraction(65, 16)
          and table[(2, 2)].one_exact == Fraction(65, 16)
          and abs(table[(0, 2)].zero_expect - 1.25) < 1e-12
          and abs(table[(2, 2)].zero_expect - 65 / 16) < 1e-12
          and all(abs(p.cross) < 1e-12 for p in kl.pairs)
          and kl.satisfied
          and elapsed < 1.0)
    report(1, "KL exactness", ok,
           f"<Jz^2>={table[(0, 2)].zero_exact} <Jz^4>={table[(2, 2)].zero_exact} "
           f"elapsed={elapsed:.3f}s")


def test_criterion_02_channel_monte_carlo_equivalence():
    start = time.monotonic()
    n = 100_000
    tol = 5 / np.sqrt(n)
    worst = 0.0
    rng = np.random.default_rng(SEED)
    for j in (0.5, 2.5):
        manifold = SpinManifold(j=j)
        dim = manifold.dim
        base = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = base @ base.conj().T
        rho /= np.real(np.trace(rho))
        for sigma in (0.1, 0.3, 0.7):
            _, us = sample_error_unitaries(manifold, sigma, rng, n)
            mean = np.einsum("iab,bc,idc->ad", us, rho, us.conj()) / n
            expected = dephase_matrix(rho, sigma, manifold.m_values)
            worst = max(worst, float(np.max(np.abs(mean - expected))))
    elapsed = time.monotonic() - start
    ok = worst < tol and elapsed < 30.0
    report(2, "channel vs Monte Carlo", ok,
           f"worst entrywise dev={worst:.2e} (tol {tol:.2e}) elapsed={elapsed:.1f}s")


def test_criterion_03_closed_form_oracles():
    pair = spin_cat_codewords(D52)
    psi_l = (pair.zero - 1j * pair.one) / np.sqrt(2)
    m = D52.m_values
    u_enc = rotation_y(D52, -np.pi / 2).matrix
    psi = np.zeros(6, dtype=complex)
    psi[-1], psi[0] = 1 / np.sqrt(2), -1j / np.sqrt(2)
    e1 = np.zeros(6, dtype=complex)
    e1[-2], e1[1] = 1 / np.sqrt(2), -1j / np.sqrt(2)

    worst_enc = worst_cor = 0.0
    for chi in (0.001, 0.005, 0.02, 0.05, 0.1):
        rho = dephase_matrix(np.outer(psi_l, psi_l.conj()),
                             sigma_phi_from_chi(chi, D52.g_factor), m)
        rho_dec = u_enc.conj().T @ rho @ u_enc
        f_enc_pipe = float(np.real(psi_l.conj() @ rho @ psi_l))
        f_cor_pipe = float(np.real(psi.conj() @ rho_dec @ psi
                                   + e1.conj() @ rho_dec @ e1))
        worst_enc = max(worst_enc, abs(f_enc_pipe - f_encoded(chi)))
        worst_cor = max(worst_cor, abs(f_cor_pipe - f_corrected(chi)))

    h = 1e-7
    slope_phys = (1 - f_physical(h, 2.0)) / h
    slope_enc = (1 - f_encoded(h)) / h
    h2 = 5e-5
    coeff_cor = (1 - f_corrected(h2)) / h2**2
    ok = (worst_enc < 1e-10 and worst_cor < 1e-10
          and abs(slope_phys - 2.0) / 2.0 < 0.005
          and abs(slope_enc - 3.6) / 3.6 < 0.005
          and abs(coeff_cor - 15.552) / 15.552 < 0.005)
    report(3, "closed-form oracle equivalence", ok,
           f"pipeline dev enc={worst_enc:.1e} cor={worst_cor:.1e}; "
           f"coeffs {slope_phys:.4f}/{slope_enc:.4f}/{coeff_cor:.3f}")


def test_criterion_04_correction_unit_behavior():
    cfg = CorrectionConfig(phi_c=0.0, pulse_model="ideal", fock_cutoff=3)
    cutoffs = (3,)
    e1 = (composite_ket(("D", -1.5), (0,), cutoffs)
          - 1j * composite_ket(("D", 1.5), (0,), cutoffs)) / np.sqrt(2)
    psi = (composite_ket(("D", -2.5), (0,), cutoffs)
           - 1j * composite_ket(("D", 2.5), (0,), cutoffs)) / np.sqrt(2)

    out_e1, _ = apply_correction(
        CompositeState(rho=np.outer(e1, e1.conj()), cutoffs=cutoffs), cfg)
    infid = 1 - float(np.real(psi8_vec().conj() @ out_e1.internal_density()
                              @ psi8_vec()))

    state_psi = CompositeState(rho=np.outer(psi, psi.conj()), cutoffs=cutoffs)
    out_psi, _ = apply_correction(state_psi, cfg)
    unchanged = float(np.max(np.abs(out_psi.rho - state_psi.rho)))

    mixture = CompositeState(
        rho=0.88 * np.outer(psi, psi.conj()) + 0.12 * np.outer(e1, e1.conj()),
        cutoffs=cutoffs)
    out_mix, _ = apply_correction(mixture, cfg)
    product_dev = out_mix.product_deviation()

    ok = infid < 1e-10 and unchanged < 1e-12 and product_dev < 1e-9
    report(4, "correction unit behavior", ok,
           f"E1 infidelity={infid:.1e} error-free dev={unchanged:.1e} "
           f"product dev={product_dev:.1e}")


def test_criterion_05_fig3_reproduction():
    start = time.monotonic()
    config = default_config("fig3_sweep", seed=SEED, trials=10_000)
    record = run_experiment(config)
    delta = record.sidecar["delta"]
    worst_z_cor = worst_z_unc = 0.0
    for s, series, err, sig, ntr, ner in record.rows:
        chi = s**2 / 2
        if series == "corrected":
            z = abs(err - (1 - f_corrected_with_delta(chi, delta))) / sig
            worst_z_cor = max(worst_z_cor, z)
        elif series == "uncorrected":
            z = abs(err - (1 - f_encoded(chi))) / sig
            worst_z_unc = max(worst_z_unc, z)
    elapsed = time.monotonic() - start
    ok = worst_z_cor <= 3.0 and worst_z_unc <= 3.0 and elapsed < 300
    report(5, "fig3 sweep vs theory", ok,
           f"max |z| corrected={worst_z_cor:.2f} uncorrected={worst_z_unc:.2f} "
           f"elapsed={elapsed:.0f}s")


def test_criterion_06_phase_sweep():
    config = default_config("phase_sweep", seed=SEED, trials=20_000,
                            n_phases=12, phase_sigma_phi_over_g=0.5)
    record = run_experiment(config)
    fit = record.sidecar["fit"]
    period_ok = abs(fit["period"] - 2 * np.pi) <= 3 * fit["period_sigma"]
    f_opt = 1 - fit["optimum_error"]
    f_direct = 1 - fit["direct_error_at_optimum"]
    match_ok = abs(f_opt - f_direct) <= 0.02
    optimum_ok = fit["optimum_error"] <= min(r[1] for r in record.rows) + 3 * max(
        r[2] for r in record.rows)
    ok = period_ok and match_ok and optimum_ok and fit["amplitude_ok"]
    report(6, "sideband phase sweep", ok,
           f"period={fit['period']:.4f}+-{fit['period_sigma']:.4f} "
           f"F_opt fit={f_opt:.4f} direct={f_direct:.4f}")


def test_criterion_07_breakeven():
    start = time.monotonic()
    config = default_config("breakeven", seed=SEED, trials=10_000,
                            epsilon_grid=[0.02, 0.025, 0.03, 0.035, 0.04])
    record = run_experiment(config)
    lam_rows = {row[0]: row for row in record.extra_tables["lambda"][1]}
    lam_030 = lam_rows[0.03][1]
    ratio = record.sidecar["peak_corrected_vs_physical_ratio"]["ratio"]
    elapsed = time.monotonic() - start
    ok = 1.2 <= lam_030 <= 1.9 and ratio >= 2.0 and elapsed < 600
    report(7, "break-even lifetimes", ok,
           f"Lambda(0.030)={lam_030:.3f} peak error ratio={ratio:.2f} "
           f"elapsed={elapsed:.0f}s")


def test_criterion_08_erasure_statistics():
    # the memory-experiment scan (natural field noise) provides the baseline
    # and range checks; heated trials that carry a first-order error escape
    # the S-manifold detection with probability sin^2(pi sqrt(2)/2) ~ 0.64,
    # which sags its fitted slope below the heating rate, so the
    # slope-vs-configured-rate check runs as a clean heating calibration
    config = default_config("erasure_scan", seed=SEED, trials=10_000)
    record = run_experiment(config)
    t0_rows = [r for r in record.rows if r[0] == 0.0]
    frac0 = t0_rows[0][1]
    t0_ok = abs(frac0 - 0.02) <= 0.006
    max_frac = max(r[1] for r in record.rows)
    max_ok = max_frac <= 0.07
    natural_slope = record.sidecar["linear_fit"]["slope_per_s"]

    calib = default_config(
        "erasure_scan", seed=SEED, trials=10_000, sigma_b=0.0,
        delays=[round(5.5e-3 * k / 11, 9) for k in range(12)])
    calib_fit = run_experiment(calib).sidecar["linear_fit"]
    slope_ok = abs(calib_fit["slope_per_s"] - 8.8) / 8.8 <= 0.10

    ok = slope_ok and t0_ok and max_ok
    report(8, "erasure statistics", ok,
           f"calibration slope={calib_fit['slope_per_s']:.2f}/s "
           f"(natural-noise scan: {natural_slope:.2f}/s) t0={frac0:.4f} "
           f"max={max_frac:.4f}")


def test_criterion_09_tomography_calibration():
    start = time.monotonic()
    config = default_config("tomo_calibration", seed=SEED, n_tomo_seeds=100,
                            shots_per_setting=200, resamples=100)
    record = run_experiment(config)
    median_f = record.sidecar["summary"]["median_fidelity"]

    pair = spin_cat_codewords(D52)
    psi_l = (pair.zero - 1j * pair.one) / np.sqrt(2)
    rho_true = np.outer(psi_l, psi_l.conj())
    rng = np.random.default_rng(SEED + 1)
    records = simulate_measurements(rho_true, D52, default_settings(), 200, rng)
    mle = mle_reconstruct(records, D52, keep_path=True)
    monotone = bool(np.all(np.diff(mle.log_likelihood_path) >= -1e-9))
    _, sig_pure = bootstrap_fidelity(mle.rho_est, rho_true, D52,
                                     default_settings(), 200, rng, resamples=100)
    decade_ok = 1e-3 < sig_pure < 1e-2

    # 1/sqrt(shots) scaling is a property of the regular (interior) regime;
    # at the pure-state boundary the PSD constraint compresses the spread
    # faster, so the scaling check uses a dephased (mixed) target
    rho_mixed = dephase_matrix(rho_true, 0.6, D52.m_values)
    scales = []
    for shots in (200, 800):
        recs = simulate_measurements(rho_mixed, D52, default_settings(), shots, rng)
        est = mle_reconstruct(recs, D52).rho_est
        _, sig = bootstrap_fidelity(est, rho_true, D52, default_settings(),
                                    shots, rng, resamples=100)
        scales.append(sig)
    scale = scales[0] / scales[1]  # expect ~sqrt(4) = 2
    elapsed = time.monotonic() - start
    ok = (median_f >= 0.99 and monotone and decade_ok
          and 1.4 <= scale <= 2.8 and elapsed < 300)
    report(9, "tomography calibration", ok,
           f"median F={median_f:.4f} monotone={monotone} "
           f"sigma_F(200)={sig_pure:.1e} "
           f"sigma_F(200)/sigma_F(800)={scale:.2f} (interior state) "
           f"elapsed={elapsed:.0f}s")


def test_criterion_10_second_order_extension():
    cfg = CorrectionConfig(phi_c=0.0, pulse_model="ideal", fock_cutoff=3)
    cutoffs = (3, 2)
    e2 = (composite_ket(("D", -0.5), (0, 0), cutoffs)
          - 1j * composite_ket(("D", 0.5), (0, 0), cutoffs)) / np.sqrt(2)
    out, rep = correct_second_order(
        CompositeState(rho=np.outer(e2, e2.conj()), cutoffs=cutoffs), cfg)
    infid = 1 - float(np.real(psi8_vec().conj() @ out.internal_density()
                              @ psi8_vec()))

    from spincat.harness import pipelines
    from spincat.harness.rng import substream
    setup = pipelines.build_logical_setup(D52)
    chis = np.array([0.01, 0.02, 0.03, 0.045, 0.06])
    eps, sig = [], []
    for i, chi in enumerate(chis):
        st = pipelines.second_order_trials(
            setup, sigma_phi_from_chi(chi, D52.g_factor), 100_000,
            substream(SEED, i, 6), cutoffs=cutoffs)
        eps.append(st.error)
        sig.append(max(st.error_sigma, 1e-12))
    eps, sig = np.array(eps), np.array(sig)

    def aic(power):
        x = chis**power
        w = 1 / sig**2
        coeff = np.sum(w * x * eps) / np.sum(w * x * x)
        rss = np.sum(w * (eps - coeff * x) ** 2)
        return len(chis) * np.log(rss / len(chis)) + 2 * 1, coeff

    aic2, c2 = aic(2)
    aic3, c3 = aic(3)
    ok = infid < 1e-10 and aic3 < aic2
    report(10, "second-order extension", ok,
           f"E2 infidelity={infid:.1e} AIC chi^2={aic2:.1f} chi^3={aic3:.1f} "
           f"(cubic coeff ~{c3:.0f})")


def test_criterion_11_determinism(tmp_path):
    def run_to(dirname, config):
        out = tmp_path / dirname
        write_record(run_experiment(config), out, fmt="csv")
        write_record(run_experiment(config), out / "json", fmt="json")
        return {p.name: p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}

    fig3 = default_config("fig3_sweep", seed=77, trials=500,
                          sigma_phi_over_g=[0.0, 0.3])
    a = run_to("a", fig3)
    b = run_to("b", fig3)
    same_repeat = a == b

    brk = default_config("breakeven", seed=78, trials=500,
                         delays=[1e-3, 2e-3, 3e-3], epsilon_grid=[0.03],
                         resamples=10)
    r1 = run_experiment(brk.replace(workers=1))
    r2 = run_experiment(brk.replace(workers=2))
    same_workers = (r1.rows == r2.rows
                    and r1.extra_tables["lambda"][1] == r2.extra_tables["lambda"][1])
    ok = same_repeat and same_workers
    report(11, "determinism", ok,
           f"repeat identical={same_repeat} worker-count invariant={same_workers}")
