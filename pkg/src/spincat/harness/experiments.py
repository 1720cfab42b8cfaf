"""The six experiment drivers, each turning a config into a RunRecord.

Grid points fan out across workers; every point derives its own random
substream from the master seed, so outputs are byte-identical for any worker
count.  Rows always carry an uncertainty column.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .. import analytics
from ..channels import dephasing_params, error_operator_set
from ..code import hamming_saturation, kl_conditions, spin_cat_codewords
from ..correction import HeatingRegimeError
from ..spinops import SpinManifold
from ..tomography import (
    bootstrap_fidelity,
    default_settings,
    mle_reconstruct,
    simulate_measurements,
)
from . import pipelines, rng as rngmod
from .config import ConfigError, ExperimentConfig

FORMAT_VERSION = "spincat-0.1.0"

FIG3_COLUMNS = ("sigma_phi_over_gJ", "series", "error", "error_sigma",
                "n_trials", "n_erasures")
BREAKEVEN_COLUMNS = ("t_seconds", "chi", "series", "error", "error_sigma")
LAMBDA_COLUMNS = ("epsilon", "lambda", "lambda_lo", "lambda_hi")
PHASE_COLUMNS = ("phi_c", "error", "error_sigma", "n_trials", "n_erasures")
ERASURE_COLUMNS = ("t_seconds", "erasure_fraction", "fraction_sigma",
                   "n_trials", "n_erasures")
KL_COLUMNS = ("max_order", "j", "k", "zero_re", "zero_im", "one_re", "one_im",
              "cross_re", "cross_im", "satisfied")
TOMO_COLUMNS = ("seed_index", "fidelity", "iterations", "converged")


@dataclass
class RunRecord:
    experiment: str
    columns: tuple[str, ...]
    rows: list[tuple]
    sidecar: dict
    extra_tables: dict[str, tuple[tuple[str, ...], list[tuple]]] = field(default_factory=dict)


def _provenance(config: ExperimentConfig) -> dict:
    return {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "version": FORMAT_VERSION,
    }


def _map_points(worker, args_list, workers: int):
    if workers <= 1 or len(args_list) <= 1:
        return [worker(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, args_list))


def _se_floor(se: float, n: int) -> float:
    return max(se, 0.5 / max(n, 1))


def _manifolds(config: ExperimentConfig) -> tuple[SpinManifold, SpinManifold]:
    logical = SpinManifold(j=config.j, g_factor=config.g_logical)
    physical = SpinManifold(j=0.5, g_factor=config.g_physical)
    return logical, physical


def _heating_prob(config: ExperimentConfig, t: float) -> float:
    if config.heating_rate * t > 0.5:
        raise HeatingRegimeError(
            f"heating_rate * t = {config.heating_rate * t:.3g} exceeds the "
            "single-jump regime (0.5)")
    return 1 - np.exp(-config.heating_rate * t)


def _tomography_error(rho: np.ndarray, ideal: np.ndarray, manifold: SpinManifold,
                      config: ExperimentConfig,
                      rng: np.random.Generator) -> tuple[float, float]:
    settings = default_settings()
    records = simulate_measurements(rho, manifold, settings,
                                    config.shots_per_setting, rng,
                                    config.readout_error_rate)
    result = mle_reconstruct(records, manifold)
    f, sigma_f = bootstrap_fidelity(result.rho_est, ideal, manifold, settings,
                                    config.shots_per_setting, rng,
                                    resamples=max(10, config.resamples // 4))
    return 1.0 - f, sigma_f


# ---------------------------------------------------------------------------
# fig3_sweep: error vs applied noise strength for the three series
# ---------------------------------------------------------------------------

def _fig3_point(args) -> list[tuple]:
    config_dict, point_idx = args
    config = ExperimentConfig(**config_dict)
    s = config.sigma_phi_over_g[point_idx]
    logical, physical = _manifolds(config)
    setup = pipelines.build_logical_setup(logical)
    delta = pipelines.corrected_delta(config)

    rows = []
    tomo = config.use_tomography

    st = pipelines.physical_trials(
        s * config.g_physical, config.trials,
        rngmod.substream(config.seed, point_idx, rngmod.PHYSICAL),
        offset=config.offset_physical, manifold=physical)
    rows.append((s, "physical", st.error, _se_floor(st.error_sigma, st.n_trials),
                 st.n_trials, st.n_erasures))

    st = pipelines.uncorrected_trials(
        setup, s * config.g_logical, config.trials,
        rngmod.substream(config.seed, point_idx, rngmod.UNCORRECTED),
        offset=config.offset_uncorrected, collect_rho=tomo)
    if tomo:
        err, sig = _tomography_error(
            st.rho_internal, np.outer(setup.psi_dec, setup.psi_dec.conj()),
            logical, config, rngmod.substream(config.seed, point_idx,
                                              rngmod.TOMOGRAPHY, 0))
        rows.append((s, "uncorrected", err, sig, st.n_trials, st.n_erasures))
    else:
        rows.append((s, "uncorrected", st.error,
                     _se_floor(st.error_sigma, st.n_trials),
                     st.n_trials, st.n_erasures))

    if config.correction_enabled:
        csetup = pipelines.build_correction_setup(
            setup, pipelines.correction_config(config), config.fock_cutoff)
        st = pipelines.corrected_trials(
            setup, csetup, s * config.g_logical, delta, config.trials,
            rngmod.substream(config.seed, point_idx, rngmod.CORRECTED),
            heating_prob=0.0,
            residual_excitation=config.residual_excitation,
            collect_rho=tomo)
        if tomo and st.rho_internal is not None:
            err, sig = _tomography_error(
                st.rho_internal, np.outer(setup.psi_dec, setup.psi_dec.conj()),
                logical, config, rngmod.substream(config.seed, point_idx,
                                                  rngmod.TOMOGRAPHY, 1))
            rows.append((s, "corrected", err, sig, st.n_trials, st.n_erasures))
        else:
            rows.append((s, "corrected", st.error,
                         _se_floor(st.error_sigma, st.n_trials),
                         st.n_trials, st.n_erasures))
    return rows


def run_fig3_sweep(config: ExperimentConfig) -> RunRecord:
    if config.experiment != "fig3_sweep":
        raise ConfigError("config is not a fig3_sweep config")
    args = [(config.to_dict(), i) for i in range(len(config.sigma_phi_over_g))]
    rows = [r for point in _map_points(_fig3_point, args, config.workers)
            for r in point]

    delta = pipelines.corrected_delta(config)
    theory_rows = []
    for s in config.sigma_phi_over_g:
        chi = s**2 / 2
        theory_rows.append((s, "physical",
                            1 - analytics.f_physical(chi, config.g_physical)))
        theory_rows.append((s, "uncorrected",
                            1 - analytics.f_encoded(chi, config.g_logical)))
        theory_rows.append((s, "corrected",
                            1 - analytics.f_corrected(chi, config.g_logical)))
        theory_rows.append((s, "corrected_with_control_error",
                            1 - analytics.f_corrected_with_delta(chi, delta,
                                                                 config.g_logical)))
    sidecar = _provenance(config)
    sidecar["delta"] = delta
    return RunRecord(
        experiment="fig3_sweep", columns=FIG3_COLUMNS, rows=rows,
        sidecar=sidecar,
        extra_tables={"theory": (("sigma_phi_over_gJ", "series", "error"),
                                 theory_rows)},
    )


# ---------------------------------------------------------------------------
# phase_sweep: error vs sideband phase at fixed noise strength
# ---------------------------------------------------------------------------

def _phase_point(args) -> tuple:
    config_dict, point_idx, phi_c = args
    config = ExperimentConfig(**config_dict)
    logical, _ = _manifolds(config)
    setup = pipelines.build_logical_setup(logical)
    cfg = pipelines.correction_config(config.replace(phi_c=phi_c))
    csetup = pipelines.build_correction_setup(setup, cfg, config.fock_cutoff)
    st = pipelines.corrected_trials(
        setup, csetup, config.phase_sigma_phi_over_g * config.g_logical,
        pipelines.corrected_delta(config), config.trials,
        rngmod.substream(config.seed, point_idx, rngmod.CORRECTED),
        residual_excitation=config.residual_excitation)
    return (phi_c, st.error, _se_floor(st.error_sigma, st.n_trials),
            st.n_trials, st.n_erasures, st.p1)


def run_phase_sweep(config: ExperimentConfig) -> RunRecord:
    if config.experiment != "phase_sweep":
        raise ConfigError("config is not a phase_sweep config")
    if not config.correction_enabled:
        raise ConfigError("phase_sweep requires the correction stage")
    phases = [2 * np.pi * k / config.n_phases for k in range(config.n_phases)]
    args = [(config.to_dict(), i, p) for i, p in enumerate(phases)]
    results = _map_points(_phase_point, args, config.workers)
    rows = [r[:5] for r in results]

    phi = np.array([r[0] for r in results])
    err = np.array([r[1] for r in results])
    sig = np.array([r[2] for r in results])
    p1_mean = float(np.mean([r[5] for r in results]))

    # linearized sinusoid fit err = C + a cos(phi) + b sin(phi)
    x = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    w = 1.0 / sig**2
    cov_lin = np.linalg.inv(x.T @ (w[:, None] * x))
    beta = cov_lin @ (x.T @ (w * err))
    c0, a, b = beta
    amp = float(np.hypot(a, b))
    phi0 = float(np.arctan2(b, a))
    # amplitude SE by linear error propagation
    grad = np.array([0.0, a / max(amp, 1e-300), b / max(amp, 1e-300)])
    amp_sigma = float(np.sqrt(grad @ cov_lin @ grad))

    # free-frequency fit to confirm the period is 2 pi; meaningless (and often
    # degenerate) when there is no resolvable modulation
    def model(ph, c, amplitude, k, ph0):
        return c + amplitude * np.cos(k * ph - ph0)

    try:
        popt, pcov = curve_fit(model, phi, err, sigma=sig, absolute_sigma=True,
                               p0=[c0, amp, 1.0, phi0], maxfev=20_000)
        k_fit = float(popt[2])
        k_sigma = float(np.sqrt(pcov[2, 2]))
    except RuntimeError:
        k_fit, k_sigma = float("nan"), float("nan")

    phi_opt = float((phi0 + np.pi) % (2 * np.pi))
    optimum_error = float(c0 - amp)
    fit_ok = amp >= 3 * amp_sigma

    # direct simulation at the fitted optimum for cross-checking
    direct = _phase_point((config.to_dict(), config.n_phases, phi_opt))

    sidecar = _provenance(config)
    sidecar["fit"] = {
        "offset": float(c0), "amplitude": amp, "amplitude_sigma": amp_sigma,
        "phi0": phi0, "phi_opt": phi_opt,
        "optimum_error": optimum_error,
        "optimum_fidelity": 1 - optimum_error,
        "frequency": k_fit, "frequency_sigma": k_sigma,
        "period": 2 * np.pi / k_fit,
        "period_sigma": 2 * np.pi * k_sigma / k_fit**2,
        "amplitude_ok": bool(fit_ok),
        "p1_interference_weight": p1_mean,
        "direct_error_at_optimum": direct[1],
        "direct_sigma_at_optimum": direct[2],
    }
    return RunRecord(experiment="phase_sweep", columns=PHASE_COLUMNS,
                     rows=rows, sidecar=sidecar)


# ---------------------------------------------------------------------------
# breakeven: error vs natural delay, fits, lifetimes, Lambda band
# ---------------------------------------------------------------------------

def _breakeven_point(args) -> list[tuple]:
    config_dict, point_idx = args
    config = ExperimentConfig(**config_dict)
    t = config.delays[point_idx]
    params = dephasing_params(config.sigma_b, t, config.g_logical)
    chi = params.chi
    logical, physical = _manifolds(config)
    setup = pipelines.build_logical_setup(logical)

    rows = []
    st = pipelines.physical_trials(
        pipelines.sigma_phi_for(config, chi, "physical"), config.trials,
        rngmod.substream(config.seed, point_idx, rngmod.PHYSICAL),
        offset=config.offset_physical, manifold=physical)
    rows.append((t, chi, "physical", st.error,
                 _se_floor(st.error_sigma, st.n_trials)))

    st = pipelines.uncorrected_trials(
        setup, params.sigma_phi, config.trials,
        rngmod.substream(config.seed, point_idx, rngmod.UNCORRECTED),
        offset=config.offset_uncorrected)
    rows.append((t, chi, "uncorrected", st.error,
                 _se_floor(st.error_sigma, st.n_trials)))

    if config.correction_enabled:
        csetup = pipelines.build_correction_setup(
            setup, pipelines.correction_config(config), config.fock_cutoff)
        heating_prob = _heating_prob(config, t)
        st = pipelines.corrected_trials(
            setup, csetup, params.sigma_phi, pipelines.corrected_delta(config),
            config.trials,
            rngmod.substream(config.seed, point_idx, rngmod.CORRECTED),
            heating_prob=heating_prob,
            residual_excitation=config.residual_excitation)
        rows.append((t, chi, "corrected", st.error,
                     _se_floor(st.error_sigma, st.n_trials)))
    return rows


def run_breakeven(config: ExperimentConfig) -> RunRecord:
    if config.experiment != "breakeven":
        raise ConfigError("config is not a breakeven config")
    args = [(config.to_dict(), i) for i in range(len(config.delays))]
    rows = [r for point in _map_points(_breakeven_point, args, config.workers)
            for r in point]

    by_series: dict[str, list] = {}
    for t, chi, series, error, sigma in rows:
        by_series.setdefault(series, []).append((t, chi, error, sigma))

    fits = {}
    fits["physical"] = analytics.fit_error_curve(by_series["physical"], "linear")
    fits["uncorrected"] = analytics.fit_error_curve(by_series["uncorrected"], "linear")
    if "corrected" in by_series:
        fits["corrected"] = analytics.fit_error_curve(by_series["corrected"], "quadratic")

    sidecar = _provenance(config)
    sidecar["fits"] = {name: fit.to_dict() for name, fit in fits.items()}

    extra = {}
    if "corrected" in fits:
        results = analytics.lambda_ratio(
            fits["corrected"], fits["physical"], config.epsilon_grid,
            config.sigma_b, resamples=config.resamples,
            rng=rngmod.substream(config.seed, 10_000, rngmod.RESAMPLING))
        lam_rows = []
        for r in results:
            lo, hi = r.band_interval()
            lam_rows.append((r.epsilon, r.lam, lo, hi))
        extra["lambda"] = (LAMBDA_COLUMNS, lam_rows)
        sidecar["lifetimes"] = [r.to_dict() for r in results]

        # peak per-point error ratio between the physical and corrected series
        ratio, at = 0.0, None
        corrected = {row[0]: row for row in by_series["corrected"]}
        for t, chi, err_p, _ in by_series["physical"]:
            if t in corrected and corrected[t][2] > 0:
                r = err_p / corrected[t][2]
                if r > ratio:
                    ratio, at = r, t
        sidecar["peak_corrected_vs_physical_ratio"] = {"ratio": ratio, "t_seconds": at}
    return RunRecord(experiment="breakeven", columns=BREAKEVEN_COLUMNS,
                     rows=rows, sidecar=sidecar, extra_tables=extra)


# ---------------------------------------------------------------------------
# erasure_scan: flagged-trial fraction vs delay
# ---------------------------------------------------------------------------

def _erasure_point(args) -> tuple:
    config_dict, point_idx = args
    config = ExperimentConfig(**config_dict)
    t = config.delays[point_idx]
    params = dephasing_params(config.sigma_b, t, config.g_logical)
    logical, _ = _manifolds(config)
    setup = pipelines.build_logical_setup(logical)
    csetup = pipelines.build_correction_setup(
        setup, pipelines.correction_config(config), config.fock_cutoff)
    heating_prob = _heating_prob(config, t)
    st = pipelines.corrected_trials(
        setup, csetup, params.sigma_phi, pipelines.corrected_delta(config),
        config.trials, rngmod.substream(config.seed, point_idx, rngmod.CORRECTED),
        heating_prob=heating_prob,
        residual_excitation=config.residual_excitation)
    frac = st.n_erasures / st.n_trials
    se = np.sqrt(max(frac * (1 - frac), 0.25 / st.n_trials) / st.n_trials)
    return (t, frac, se, st.n_trials, st.n_erasures)


def run_erasure_scan(config: ExperimentConfig) -> RunRecord:
    if config.experiment != "erasure_scan":
        raise ConfigError("config is not an erasure_scan config")
    if config.heating_rate <= 0:
        raise ConfigError("erasure_scan needs a positive heating rate")
    args = [(config.to_dict(), i) for i in range(len(config.delays))]
    rows = _map_points(_erasure_point, args, config.workers)

    t = np.array([r[0] for r in rows])
    frac = np.array([r[1] for r in rows])
    sig = np.array([r[2] for r in rows])
    x = np.column_stack([t, np.ones_like(t)])
    w = 1.0 / sig**2
    cov = np.linalg.inv(x.T @ (w[:, None] * x))
    beta = cov @ (x.T @ (w * frac))

    sidecar = _provenance(config)
    sidecar["linear_fit"] = {
        "slope_per_s": float(beta[0]),
        "slope_sigma": float(np.sqrt(cov[0, 0])),
        "intercept": float(beta[1]),
        "intercept_sigma": float(np.sqrt(cov[1, 1])),
    }
    return RunRecord(experiment="erasure_scan", columns=ERASURE_COLUMNS,
                     rows=rows, sidecar=sidecar)


# ---------------------------------------------------------------------------
# kl_report and tomo_calibration
# ---------------------------------------------------------------------------

def run_kl_report(config: ExperimentConfig) -> RunRecord:
    if config.experiment != "kl_report":
        raise ConfigError("config is not a kl_report config")
    logical, _ = _manifolds(config)
    pair = spin_cat_codewords(logical)
    rows = []
    reports = {}
    for max_order in (2, 3):
        report = kl_conditions(pair, error_operator_set(logical, max_order))
        reports[max_order] = report
        for p in report.pairs:
            rows.append((max_order, p.j, p.k,
                         float(np.real(p.zero_expect)), float(np.imag(p.zero_expect)),
                         float(np.real(p.one_expect)), float(np.imag(p.one_expect)),
                         float(np.real(p.cross)), float(np.imag(p.cross)),
                         int(p.satisfied)))
    sidecar = _provenance(config)
    sidecar["kl"] = {str(k): {"satisfied": rep.satisfied, "exact": rep.exact}
                     for k, rep in reports.items()}
    ham = hamming_saturation(config.j, 2)
    sidecar["hamming"] = {
        "occupied": ham.occupied, "dim": ham.dim, "saturated": ham.saturated,
    }
    return RunRecord(experiment="kl_report", columns=KL_COLUMNS, rows=rows,
                     sidecar=sidecar)


def _tomo_seed(args) -> tuple:
    config_dict, seed_idx = args
    config = ExperimentConfig(**config_dict)
    logical, _ = _manifolds(config)
    setup = pipelines.build_logical_setup(logical)
    rho_true = np.outer(setup.psi_enc, setup.psi_enc.conj())
    stream = rngmod.substream(config.seed, seed_idx, rngmod.TOMOGRAPHY)
    records = simulate_measurements(rho_true, logical, default_settings(),
                                    config.shots_per_setting, stream,
                                    config.readout_error_rate)
    result = mle_reconstruct(records, logical)
    fid = analytics.uhlmann_fidelity(result.rho_est, rho_true)
    return (seed_idx, fid, result.iterations, int(result.converged))


def run_tomo_calibration(config: ExperimentConfig) -> RunRecord:
    if config.experiment != "tomo_calibration":
        raise ConfigError("config is not a tomo_calibration config")
    args = [(config.to_dict(), i) for i in range(config.n_tomo_seeds)]
    rows = _map_points(_tomo_seed, args, config.workers)
    fids = np.array([r[1] for r in rows])

    logical, _ = _manifolds(config)
    setup = pipelines.build_logical_setup(logical)
    rho_true = np.outer(setup.psi_enc, setup.psi_enc.conj())
    stream = rngmod.substream(config.seed, 0, rngmod.BOOTSTRAP)
    records = simulate_measurements(rho_true, logical, default_settings(),
                                    config.shots_per_setting, stream)
    est = mle_reconstruct(records, logical)
    f, sigma_f = bootstrap_fidelity(est.rho_est, rho_true, logical,
                                    default_settings(), config.shots_per_setting,
                                    stream, resamples=config.resamples)

    sidecar = _provenance(config)
    sidecar["summary"] = {
        "median_fidelity": float(np.median(fids)),
        "min_fidelity": float(np.min(fids)),
        "n_seeds": len(rows),
        "bootstrap_fidelity": f,
        "bootstrap_sigma": sigma_f,
        "shots_per_setting": config.shots_per_setting,
    }
    return RunRecord(experiment="tomo_calibration", columns=TOMO_COLUMNS,
                     rows=rows, sidecar=sidecar)


RUNNERS = {
    "fig3_sweep": run_fig3_sweep,
    "phase_sweep": run_phase_sweep,
    "breakeven": run_breakeven,
    "erasure_scan": run_erasure_scan,
    "kl_report": run_kl_report,
    "tomo_calibration": run_tomo_calibration,
}


def run_experiment(config: ExperimentConfig) -> RunRecord:
    return RUNNERS[config.experiment](config)
