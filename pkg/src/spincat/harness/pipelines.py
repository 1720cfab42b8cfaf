"""Vectorized Monte Carlo kernels for the three qubit series.

Each trial is a pure state driven through the sampled-noise pipeline; fidelity
against a pure ideal state is linear in the density matrix, so averaging
per-trial fidelities is exactly the averaged-density-matrix ("oracle") figure.

Constant experimental offsets are injected as channels, not extra sampling:
the physical / uncorrected series mix toward the maximally mixed state with a
weight chosen so the chi = 0 error equals the configured offset, and the
corrected series draws a random differential phase of width delta between the
two outer (+-J) levels, whose chi = 0 error is (1 - e^{-2 delta^2}) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..analytics import delta_for_offset
from ..channels import sigma_phi_from_chi
from ..code import spin_cat_codewords
from ..correction import (
    CorrectionConfig,
    N_LEVELS,
    S_INDICES,
    TruncationError,
    correction_unitary,
    d_flat_indices,
    second_order_unitary,
)
from ..spinops import GROUND, SpinManifold, rotation_y
from .config import ExperimentConfig


@dataclass(frozen=True)
class TrialStats:
    """Aggregates of one Monte Carlo point."""

    error: float
    error_sigma: float
    n_trials: int
    n_erasures: int
    fidelities: np.ndarray          # kept-trial fidelities
    rho_internal: np.ndarray | None = None  # kept-trial averaged internal state
    p1: float = 0.0                 # mean population routed to |1>_M


def _stats(fidelities: np.ndarray, n_erasures: int, total: int,
           rho: np.ndarray | None = None, p1: float = 0.0) -> TrialStats:
    eps = 1.0 - fidelities
    n = eps.size
    if n == 0:
        return TrialStats(error=float("nan"), error_sigma=float("nan"),
                          n_trials=total, n_erasures=n_erasures,
                          fidelities=fidelities, rho_internal=rho, p1=p1)
    se = float(np.std(eps, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return TrialStats(error=float(np.mean(eps)), error_sigma=se, n_trials=total,
                      n_erasures=n_erasures, fidelities=fidelities,
                      rho_internal=rho, p1=p1)


def mix_offset(fidelities: np.ndarray, offset: float, dim: int) -> np.ndarray:
    """Mix each trial toward I/dim with weight set so the chi=0 error is `offset`."""
    if offset == 0:
        return fidelities
    c = offset / (1 - 1 / dim)
    return (1 - c) * fidelities + c / dim


# ---------------------------------------------------------------------------
# Physical (bare ground-state qubit) series
# ---------------------------------------------------------------------------

def physical_trials(sigma_phi: float, n: int, rng: np.random.Generator,
                    offset: float = 0.0,
                    manifold: SpinManifold = GROUND) -> TrialStats:
    """Ground-qubit trials: (|-1/2> - i|+1/2>)/sqrt(2) under e^{-i phi Jz}."""
    m = manifold.m_values
    weights = np.full(manifold.dim, 1 / manifold.dim)  # equal superposition
    phis = rng.normal(0.0, sigma_phi, size=n)
    overlap = np.exp(-1j * np.outer(phis, m)) @ weights.astype(complex)
    fid = np.abs(overlap) ** 2
    fid = mix_offset(fid, offset, manifold.dim)
    return _stats(fid, 0, n)


# ---------------------------------------------------------------------------
# Logical series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogicalSetup:
    manifold: SpinManifold
    psi_enc: np.ndarray          # encoded ideal state (zero - i*one)/sqrt(2)
    psi_dec: np.ndarray          # decoded ideal state on the manifold
    decode: np.ndarray           # decoding unitary matrix
    m_values: np.ndarray
    plus_idx: int                # basis position of m = +J
    minus_idx: int               # basis position of m = -J


def build_logical_setup(manifold: SpinManifold) -> LogicalSetup:
    pair = spin_cat_codewords(manifold)
    psi_enc = (pair.zero - 1j * pair.one) / np.sqrt(2)
    u_enc = rotation_y(manifold, -np.pi / 2).matrix
    decode = u_enc.conj().T
    psi_dec = decode @ psi_enc
    return LogicalSetup(
        manifold=manifold,
        psi_enc=psi_enc,
        psi_dec=psi_dec,
        decode=decode,
        m_values=manifold.m_values,
        plus_idx=0,
        minus_idx=manifold.dim - 1,
    )


def uncorrected_trials(setup: LogicalSetup, sigma_phi: float, n: int,
                       rng: np.random.Generator, offset: float = 0.0,
                       collect_rho: bool = False) -> TrialStats:
    """Encode, apply a sampled Jz rotation, decode, compare to the ideal."""
    m = setup.m_values
    phis = rng.normal(0.0, sigma_phi, size=n)
    phased = np.exp(-1j * np.outer(phis, m)) * setup.psi_enc[None, :]
    # fidelity only needs <psi_enc| phased>, the decode cancels
    overlap = phased @ setup.psi_enc.conj()
    fid = mix_offset(np.abs(overlap) ** 2, offset, setup.manifold.dim)
    rho = None
    if collect_rho:
        decoded = phased @ setup.decode.T
        rho = np.einsum("ni,nj->ij", decoded, decoded.conj()) / n
        d = setup.manifold.dim
        c = offset / (1 - 1 / d) if offset else 0.0
        rho = (1 - c) * rho + c * np.eye(d) / d
    return _stats(fid, 0, n, rho=rho)


# ---------------------------------------------------------------------------
# Corrected series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectionSetup:
    cutoff: int
    u_c: np.ndarray              # full recovery unitary on the composite space
    d_base: np.ndarray           # flat index of each D(m) level at Fock 0
    s_flat: np.ndarray           # flat indices of the S block
    psi8: np.ndarray             # ideal internal state on the 8 levels


def build_correction_setup(setup: LogicalSetup, cfg: CorrectionConfig,
                           cutoff: int) -> CorrectionSetup:
    u_c = correction_unitary(cfg, (cutoff,)).matrix
    d_base = d_flat_indices(setup.m_values, (cutoff,), fock=0)
    s_flat = np.concatenate([np.arange(i * cutoff, (i + 1) * cutoff)
                             for i in S_INDICES])
    psi8 = np.zeros(N_LEVELS, dtype=complex)
    psi8[d_base // cutoff] = setup.psi_dec
    return CorrectionSetup(cutoff=cutoff, u_c=u_c, d_base=d_base,
                           s_flat=s_flat, psi8=psi8)


def corrected_trials(setup: LogicalSetup, csetup: CorrectionSetup,
                     sigma_phi: float, delta: float, n: int,
                     rng: np.random.Generator,
                     heating_prob: float = 0.0,
                     residual_excitation: float = 0.0,
                     collect_rho: bool = False) -> TrialStats:
    """Full corrected pipeline: encode, error, decode, control error, recovery,
    erasure detection, post-selected fidelity.

    Draw order per point is fixed (phases, control phases, initial excitation,
    heating jump, erasure outcome) so results are reproducible no matter how
    points are distributed over workers.
    """
    m = setup.m_values
    cutoff = csetup.cutoff
    phis = rng.normal(0.0, sigma_phi, size=n)
    thetas = rng.normal(0.0, delta, size=n) if delta > 0 else np.zeros(n)
    u_exc = rng.random(n)
    u_heat = rng.random(n)
    u_erase = rng.random(n)

    phased = np.exp(-1j * np.outer(phis, m)) * setup.psi_enc[None, :]
    decoded = phased @ setup.decode.T
    # control error: random differential phase on the two outer levels
    decoded[:, setup.plus_idx] *= np.exp(-1j * thetas)
    decoded[:, setup.minus_idx] *= np.exp(1j * thetas)

    fock = (u_exc < residual_excitation).astype(np.int64)
    fock += (u_heat < heating_prob).astype(np.int64)
    if fock.max(initial=0) >= cutoff:
        raise TruncationError(
            f"excitation plus heating reaches Fock level {int(fock.max())}, "
            f"cutoff {cutoff} is too small")

    dim = N_LEVELS * cutoff
    states = np.zeros((n, dim), dtype=complex)
    cols = csetup.d_base[None, :] + fock[:, None]
    np.put_along_axis(states, cols, decoded, axis=1)

    out = states @ csetup.u_c.T

    p_erase = np.sum(np.abs(out[:, csetup.s_flat]) ** 2, axis=1)
    erased = u_erase < p_erase
    kept = ~erased
    n_erased = int(np.count_nonzero(erased))

    out_kept = out[kept].reshape(-1, N_LEVELS, cutoff)
    keep_norm = np.maximum(1.0 - p_erase[kept], 1e-300)
    # the ideal state has no S support, so the D-projection is implicit here
    amps = np.einsum("l,iln->in", csetup.psi8.conj(), out_kept)
    fid = np.sum(np.abs(amps) ** 2, axis=1) / keep_norm
    d_levels = csetup.d_base // cutoff
    p1 = float(np.mean(np.sum(np.abs(out_kept[:, d_levels, 1]) ** 2, axis=1)
                       / keep_norm)) if out_kept.shape[0] else 0.0

    rho = None
    if collect_rho and out_kept.shape[0]:
        d_block = out_kept[:, d_levels, :] / np.sqrt(keep_norm)[:, None, None]
        rho = np.einsum("iln,ikn->lk", d_block, d_block.conj()) / out_kept.shape[0]
        rho /= np.real(np.trace(rho))
    return _stats(fid, n_erased, n, rho=rho, p1=p1)


# ---------------------------------------------------------------------------
# Second-order (two-mode) series
# ---------------------------------------------------------------------------

def second_order_trials(setup: LogicalSetup, sigma_phi: float, n: int,
                        rng: np.random.Generator,
                        cutoffs: tuple[int, int] = (3, 2),
                        phi_c: float = 0.0) -> TrialStats:
    """Two-mode recovery of both first- and second-order branches (ideal pulses)."""
    cfg = CorrectionConfig(phi_c=phi_c, pulse_model="ideal",
                           fock_cutoff=cutoffs[0])
    u2 = second_order_unitary(cfg, cutoffs).matrix
    m = setup.m_values
    phis = rng.normal(0.0, sigma_phi, size=n)
    phased = np.exp(-1j * np.outer(phis, m)) * setup.psi_enc[None, :]
    decoded = phased @ setup.decode.T

    nf = int(np.prod(cutoffs))
    dim = N_LEVELS * nf
    d_base = d_flat_indices(m, cutoffs, fock=(0, 0))
    states = np.zeros((n, dim), dtype=complex)
    states[:, d_base] = decoded
    out = (states @ u2.T).reshape(n, N_LEVELS, nf)

    psi8 = np.zeros(N_LEVELS, dtype=complex)
    psi8[d_base // nf] = setup.psi_dec
    amps = np.einsum("l,iln->in", psi8.conj(), out)
    fid = np.sum(np.abs(amps) ** 2, axis=1)
    return _stats(fid, 0, n)


# ---------------------------------------------------------------------------
# Config plumbing shared by the experiment drivers
# ---------------------------------------------------------------------------

def corrected_delta(config: ExperimentConfig) -> float:
    if config.delta is not None:
        return config.delta
    if config.offset_corrected > 0:
        return delta_for_offset(config.offset_corrected)
    return 0.0


def correction_config(config: ExperimentConfig) -> CorrectionConfig:
    return CorrectionConfig(phi_c=config.phi_c, pulse_model=config.pulse_model,
                            heating_rate=config.heating_rate,
                            fock_cutoff=config.fock_cutoff)


def sigma_phi_for(config: ExperimentConfig, chi: float, series: str) -> float:
    g = config.g_physical if series == "physical" else config.g_logical
    return sigma_phi_from_chi(chi, g)
