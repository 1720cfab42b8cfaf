"""Projective tomography of the D5/2 manifold and maximum-likelihood reconstruction.

Measurement settings are pairs of rotation angles (theta_x, theta_y); each
setting contributes the six rotated basis projectors read out in one shot of
the qudit-style sequence.  The default 3x3 angle grid gives 54 projectors,
comfortably above the d^2 - 1 = 35 needed for full reconstruction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .analytics import uhlmann_fidelity
from .spinops import SpinError, SpinManifold, rotation_x, rotation_y

DEFAULT_ANGLES = (0.0, np.pi / 4, np.pi / 2)

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class MeasurementSetting:
    theta_x: float
    theta_y: float


def default_settings() -> list[MeasurementSetting]:
    return [MeasurementSetting(tx, ty) for tx in DEFAULT_ANGLES for ty in DEFAULT_ANGLES]


@dataclass(frozen=True)
class MeasurementRecord:
    """Counts per m outcome for one setting.

    Counts are integers when sampled; float counts are allowed so that
    infinite-shot (exact-probability) records can be fed to the estimator.
    """

    setting: MeasurementSetting
    counts: tuple
    shots: int

    def __post_init__(self):
        if abs(sum(self.counts) - self.shots) > 1e-9:
            raise SpinError("counts must sum to shots")
        if any(c < 0 for c in self.counts):
            raise SpinError("counts must be non-negative")


@dataclass(frozen=True)
class ProjectorGroup:
    setting: MeasurementSetting
    projectors: np.ndarray  # (dim, dim, dim): one projector per outcome


def projector_set(manifold: SpinManifold,
                  settings: list[MeasurementSetting]) -> list[ProjectorGroup]:
    """Rotated Jz-basis projectors U |m><m| U+ with U = R_y(theta_y) R_x(theta_x).

    The x rotation is always applied first.  Each group resolves the identity.
    """
    if not settings:
        raise SpinError("need at least one measurement setting")
    d = manifold.dim
    groups = []
    for s in settings:
        u = (rotation_y(manifold, s.theta_y) @ rotation_x(manifold, s.theta_x)).matrix
        projs = np.einsum("ik,jk->kij", u, u.conj())
        groups.append(ProjectorGroup(setting=s, projectors=projs))
    return groups


def born_probabilities(rho: np.ndarray, group: ProjectorGroup) -> np.ndarray:
    p = np.real(np.einsum("kij,ji->k", group.projectors, rho))
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise SpinError(f"projector group probabilities sum to {total}, not 1")
    return np.clip(p, 0.0, None) / max(total, PROB_FLOOR)


def measurement_map_rank(groups: list[ProjectorGroup], tol: float = 1e-9) -> int:
    """Numerical rank of the real-linear map rho -> outcome probabilities.

    Hermitian matrices form a real vector space, so each projector is embedded
    as a real row (diagonal, upper real parts, upper imaginary parts) before
    taking the SVD; rank d^2 means full informational completeness.
    """
    rows = []
    for g in groups:
        for p in g.projectors:
            d = p.shape[0]
            iu = np.triu_indices(d, k=1)
            rows.append(np.concatenate([np.real(np.diag(p)),
                                        np.sqrt(2) * np.real(p[iu]),
                                        np.sqrt(2) * np.imag(p[iu])]))
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    return int(np.sum(s > tol * s[0]))


def simulate_measurements(rho: np.ndarray, manifold: SpinManifold,
                          settings: list[MeasurementSetting],
                          shots_per_setting: int, rng: np.random.Generator,
                          readout_error_rate: float = 0.0) -> list[MeasurementRecord]:
    """Multinomial sampling of Born probabilities, with optional uniform confusion.

    A readout error rate r replaces each outcome with a uniformly random one
    with probability r, i.e. p -> (1-r) p + r/d.
    """
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    d = manifold.dim
    records = []
    for group in projector_set(manifold, settings):
        p = born_probabilities(rho, group)
        if readout_error_rate:
            p = (1 - readout_error_rate) * p + readout_error_rate / d
        counts = rng.multinomial(shots_per_setting, p)
        records.append(MeasurementRecord(setting=group.setting,
                                         counts=tuple(int(c) for c in counts),
                                         shots=shots_per_setting))
    return records


@dataclass(frozen=True)
class MLEResult:
    rho_est: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    floored: bool = False
    rank_deficient: bool = False
    log_likelihood_path: np.ndarray | None = None


def mle_reconstruct(records: list[MeasurementRecord], manifold: SpinManifold,
                    max_iterations: int = 10_000,
                    tol: float = 1e-10, keep_path: bool = False) -> MLEResult:
    """Diluted R-rho-R fixed-point iteration for the maximum-likelihood state.

    Iterates rho <- N[R rho R] with R = sum_i (n_i / p_i) P_i, falling back to
    rho <- (1 - lam) N[R rho R] + lam rho whenever the plain step would lower
    the log-likelihood; accepted iterations are therefore monotone.  Stops when
    the log-likelihood gain drops below `tol`.
    """
    if not records:
        raise SpinError("no measurement records")
    d = manifold.dim
    groups = projector_set(manifold, [r.setting for r in records])
    proj_flat = np.concatenate([g.projectors.reshape(d, -1) for g in groups])
    counts = np.concatenate([np.asarray(r.counts, dtype=float) for r in records])
    rank_deficient = measurement_map_rank(groups) < d * d - 1

    rho = np.eye(d, dtype=complex) / d
    floored = False

    def probabilities(r):
        return np.real(proj_flat.conj() @ r.reshape(-1))

    def loglike(p):
        return float(counts @ np.log(p))

    p = probabilities(rho)
    if np.any((p <= PROB_FLOOR) & (counts > 0)):
        floored = True
    p = np.maximum(p, PROB_FLOOR)
    ll = loglike(p)
    path = [ll] if keep_path else None

    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        w = counts / p
        r_op = (w @ proj_flat).reshape(d, d)
        r_op = (r_op + r_op.conj().T) / 2
        step = r_op @ rho @ r_op
        step = (step + step.conj().T) / 2
        step /= np.real(np.trace(step))
        cand = step
        p_cand = probabilities(cand)
        if np.any((p_cand <= PROB_FLOOR) & (counts > 0)):
            floored = True
        ll_cand = loglike(np.maximum(p_cand, PROB_FLOOR))

        lam = 0.0
        while ll_cand < ll and lam < 0.97:
            # dilute the full step toward the current state until it is uphill
            lam = 0.5 if lam == 0.0 else (1 + lam) / 2
            cand = (1 - lam) * step + lam * rho
            cand /= np.real(np.trace(cand))
            p_cand = probabilities(cand)
            ll_cand = loglike(np.maximum(p_cand, PROB_FLOOR))
        if ll_cand < ll:
            converged = True  # no uphill direction left at this scale
            break
        gain = ll_cand - ll
        rho = cand
        p = np.maximum(p_cand, PROB_FLOOR)
        ll = ll_cand
        if path is not None:
            path.append(ll)
        if gain < tol:
            converged = True
            break

    return MLEResult(rho_est=rho, log_likelihood=ll, iterations=iterations,
                     converged=converged, floored=floored,
                     rank_deficient=rank_deficient,
                     log_likelihood_path=np.array(path) if path is not None else None)


def exact_records(rho: np.ndarray, manifold: SpinManifold,
                  settings: list[MeasurementSetting],
                  shots_per_setting: int) -> list[MeasurementRecord]:
    """Infinite-shot records: counts equal shots times the Born probabilities."""
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    records = []
    for group in projector_set(manifold, settings):
        p = born_probabilities(rho, group)
        records.append(MeasurementRecord(setting=group.setting,
                                         counts=tuple(shots_per_setting * p),
                                         shots=shots_per_setting))
    return records


def bootstrap_fidelity(rho_est: np.ndarray, rho_ideal: np.ndarray,
                       manifold: SpinManifold, settings: list[MeasurementSetting],
                       shots_per_setting: int, rng: np.random.Generator,
                       resamples: int = 100, exact: bool = False) -> tuple[float, float]:
    """Parametric bootstrap of the fidelity uncertainty.

    Resamples measurement sets from rho_est, refits each with MLE, and returns
    (fidelity(rho_est, rho_ideal), std of the refitted fidelities).  With
    exact=True every resample uses the exact expected counts, so the spread
    collapses to numerical noise; this isolates the sampling contribution.
    """
    if resamples < 2:
        raise SpinError("need at least two resamples")
    f_central = uhlmann_fidelity(rho_est, rho_ideal)
    fids = np.empty(resamples)
    for i in range(resamples):
        if exact:
            records = exact_records(rho_est, manifold, settings, shots_per_setting)
        else:
            records = simulate_measurements(rho_est, manifold, settings,
                                            shots_per_setting, rng)
        refit = mle_reconstruct(records, manifold)
        fids[i] = uhlmann_fidelity(refit.rho_est, rho_ideal)
    return f_central, float(np.std(fids, ddof=1))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def records_to_jsonl(records: list[MeasurementRecord]) -> str:
    lines = []
    for r in records:
        lines.append(json.dumps({
            "theta_x": r.setting.theta_x,
            "theta_y": r.setting.theta_y,
            "counts": list(r.counts),
            "shots": r.shots,
        }, sort_keys=True))
    return "\n".join(lines) + "\n"


def records_from_jsonl(text: str) -> list[MeasurementRecord]:
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        records.append(MeasurementRecord(
            setting=MeasurementSetting(obj["theta_x"], obj["theta_y"]),
            counts=tuple(int(c) for c in obj["counts"]),
            shots=int(obj["shots"]),
        ))
    return records


def mle_result_to_json(result: MLEResult) -> str:
    rho = result.rho_est
    return json.dumps({
        "rho_est": [[[float(np.real(z)), float(np.imag(z))] for z in row]
                    for row in rho],
        "log_likelihood": result.log_likelihood,
        "iterations": result.iterations,
        "converged": result.converged,
        "floored": result.floored,
        "rank_deficient": result.rank_deficient,
    }, sort_keys=True)
