"""Dephasing noise models: the Gaussian phase channel, sampled unitary error
realizations, the discrete Jz^k error-operator set, and the quadrupole Jz^2 shift.

The quasi-static model: the stray field is constant over one trial and varies
shot to shot with a Gaussian distribution, so each trial sees a single rotation
exp(-i * phi * Jz) with phi ~ N(0, sigma_phi^2).  Averaging over trials scales
the coherence rho_{m,n} by exp(-sigma_phi^2 (m-n)^2 / 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spinops import (
    DensityMatrix,
    Operator,
    SpinError,
    SpinManifold,
    angular_momentum_ops,
    rotation_x,
    rotation_y,
)

# Bohr magneton over hbar, rad s^-1 T^-1 (CODATA: mu_B/h = 13.996 245 GHz/T).
MU_B_OVER_HBAR = 2 * np.pi * 1.399624604e10


@dataclass(frozen=True)
class DephasingParams:
    """Quasi-static dephasing strength in its three equivalent parameterizations.

    sigma_phi = g * (mu_B/hbar) * sigma_b * t  is the per-trial phase width and
    chi = sigma_phi^2 / (2 g^2) = (mu_B sigma_b t / hbar)^2 / 2  is the
    g-independent dephasing parameter.
    """

    sigma_b: float
    t: float
    g_factor: float
    sigma_phi: float
    chi: float

    def __post_init__(self):
        expect_phi = self.g_factor * MU_B_OVER_HBAR * self.sigma_b * self.t
        expect_chi = (MU_B_OVER_HBAR * self.sigma_b * self.t) ** 2 / 2
        for got, want, name in ((self.sigma_phi, expect_phi, "sigma_phi"),
                                (self.chi, expect_chi, "chi")):
            if abs(got - want) > 1e-12 * max(1.0, abs(want)):
                raise SpinError(f"inconsistent {name}: {got} vs {want}")


def dephasing_params(sigma_b: float, t: float, g_factor: float) -> DephasingParams:
    if sigma_b < 0 or t < 0:
        raise SpinError("sigma_b and t must be non-negative")
    sigma_phi = g_factor * MU_B_OVER_HBAR * sigma_b * t
    chi = (MU_B_OVER_HBAR * sigma_b * t) ** 2 / 2
    return DephasingParams(sigma_b=sigma_b, t=t, g_factor=g_factor,
                           sigma_phi=sigma_phi, chi=chi)


def chi_from_sigma_phi(sigma_phi: float, g_factor: float) -> float:
    return sigma_phi**2 / (2 * g_factor**2)


def sigma_phi_from_chi(chi: float, g_factor: float) -> float:
    return g_factor * np.sqrt(2 * chi)


def dephase(rho: DensityMatrix, sigma_phi: float) -> DensityMatrix:
    """Apply the Gaussian dephasing channel of width sigma_phi.

    Entry (m, n) is scaled by exp(-sigma_phi^2 (m-n)^2 / 2); diagonals are
    untouched, so the channel is trace preserving, and it is a mixture of
    unitaries, so positivity is preserved as well.
    """
    if sigma_phi < 0:
        raise SpinError("sigma_phi must be non-negative")
    m = np.asarray(rho.labels, dtype=float)
    dm = m[:, None] - m[None, :]
    return DensityMatrix(rho.matrix * np.exp(-(sigma_phi**2) * dm**2 / 2), rho.labels)


def dephase_matrix(rho: np.ndarray, sigma_phi: float, m_values: np.ndarray) -> np.ndarray:
    """Plain-array version of :func:`dephase` for pipeline internals."""
    dm = m_values[:, None] - m_values[None, :]
    return rho * np.exp(-(sigma_phi**2) * dm**2 / 2)


def sample_error_phases(sigma_phi: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """Per-trial rotation angles phi ~ N(0, sigma_phi^2)."""
    return rng.normal(0.0, sigma_phi, size=n)


def sample_error_unitary(manifold: SpinManifold, sigma_phi: float,
                         rng: np.random.Generator) -> tuple[float, Operator]:
    """Draw phi ~ N(0, sigma_phi^2) and build the error unitary for one trial.

    The unitary is composed the way the pulse sequence realizes it,
    R_y(-pi/2) R_x(phi) R_y(pi/2), which equals exp(-i phi Jz).
    """
    phi = float(rng.normal(0.0, sigma_phi))
    u = (rotation_y(manifold, -np.pi / 2)
         @ rotation_x(manifold, phi)
         @ rotation_y(manifold, np.pi / 2))
    return phi, u


def sample_error_unitaries(manifold: SpinManifold, sigma_phi: float,
                           rng: np.random.Generator,
                           n: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched version of :func:`sample_error_unitary` for Monte Carlo runs.

    Uses the same three-rotation composition, with R_x(phi) expanded through
    the Jx eigenbasis so all n unitaries come out of one einsum.
    """
    phis = rng.normal(0.0, sigma_phi, size=n)
    ops = angular_momentum_ops(manifold)
    w, v = np.linalg.eigh(ops.jx.matrix)
    left = rotation_y(manifold, -np.pi / 2).matrix @ v
    right = v.conj().T @ rotation_y(manifold, np.pi / 2).matrix
    phases = np.exp(-1j * np.multiply.outer(phis, w))
    us = np.einsum("ab,ib,bc->iac", left, phases, right)
    return phis, us


@dataclass(frozen=True)
class ErrorOperatorSet:
    """The discrete dephasing error span {I, Jz, Jz^2, ..., Jz^k_max}.

    Returned unnormalized (an operator span, not a CPTP Kraus set); operators[k]
    is diagonal with entries m^k.
    """

    manifold: SpinManifold
    max_order: int
    operators: tuple[Operator, ...]


def error_operator_set(manifold: SpinManifold, max_order: int) -> ErrorOperatorSet:
    if max_order < 0:
        raise SpinError("max_order must be >= 0")
    m = manifold.m_values
    labels = tuple(m.tolist())
    ops = tuple(Operator(np.diag((m**k).astype(complex)), labels)
                for k in range(max_order + 1))
    return ErrorOperatorSet(manifold=manifold, max_order=max_order, operators=ops)


def quadrupole_unitary(manifold: SpinManifold, delta_q_hz: float, t: float) -> Operator:
    """Coherent quadrupole evolution exp(-i 2 pi delta_q t Jz^2).

    Positive delta_q raises the outer (large |m|) states relative to the inner
    ones; the compensation pulse is the same operation with -delta_q.
    """
    if t < 0:
        raise SpinError("t must be non-negative")
    m = manifold.m_values
    phases = np.exp(-1j * 2 * np.pi * delta_q_hz * t * m**2)
    return Operator(np.diag(phases), tuple(m.tolist()))


def monte_carlo_dephase(rho: np.ndarray, m_values: np.ndarray,
                        phis: np.ndarray) -> np.ndarray:
    """Average of exp(-i phi Jz) rho exp(i phi Jz) over the sampled phases.

    The conjugation only multiplies entry (m, n) by exp(-i phi (m-n)), so the
    sample mean reduces to averaged phase factors.  Used as the fast exact
    aggregate of per-trial unitary conjugations.
    """
    dm = m_values[:, None] - m_values[None, :]
    factors = np.exp(-1j * np.multiply.outer(phis, dm)).mean(axis=0)
    return rho * factors
