"""Angular-momentum operator algebra and SU(2) rotations on a (2J+1)-level manifold.

Basis convention everywhere: m descending, +J first, so Jz = diag(J, J-1, ..., -J)
and matrix indices read like the usual rho_{m,n} tables.  Rotations follow
R(n, theta) = exp(-i * theta * n.J).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

HERMITICITY_TOL = 1e-12
UNITARITY_TOL = 1e-12


class SpinError(ValueError):
    """Invalid manifold, operator, or state."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpinManifold:
    """A spin-J manifold: J, its dimension 2J+1, a Lande g-factor, and m labels."""

    j: float
    g_factor: float = 1.0

    def __post_init__(self):
        twice = 2 * Fraction(self.j).limit_denominator(2)
        if twice.denominator != 1 or twice < 0 or float(twice) != 2 * self.j:
            raise SpinError(f"J must be a non-negative half-integer, got {self.j!r}")

    @property
    def dim(self) -> int:
        return int(round(2 * self.j + 1))

    @property
    def m_values(self) -> np.ndarray:
        """m labels in basis order, +J down to -J in steps of 1."""
        return _freeze(self.j - np.arange(self.dim, dtype=float))

    @property
    def m_exact(self) -> tuple[Fraction, ...]:
        twice_j = int(round(2 * self.j))
        return tuple(Fraction(twice_j - 2 * k, 2) for k in range(self.dim))

    @property
    def is_half_integer(self) -> bool:
        return int(round(2 * self.j)) % 2 == 1


# The two manifolds used throughout: the metastable D5/2 hextet that hosts the
# logical qubit, and the S1/2 ground doublet used as the physical reference.
D52 = SpinManifold(j=2.5, g_factor=6 / 5)
GROUND = SpinManifold(j=0.5, g_factor=2.0)


@dataclass(frozen=True)
class Operator:
    """Dense complex square matrix with an ordered basis-label list."""

    matrix: np.ndarray
    labels: tuple

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SpinError(f"operator matrix must be square, got shape {m.shape}")
        if len(self.labels) != m.shape[0]:
            raise SpinError("label count does not match matrix dimension")
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.labels)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if other.labels != self.labels:
                raise SpinError("operator basis labels differ")
            return Operator(self.matrix @ other.matrix, self.labels)
        return self.matrix @ np.asarray(other)

    def is_unitary(self, tol: float = UNITARITY_TOL) -> bool:
        d = self.matrix.conj().T @ self.matrix - np.eye(self.dim)
        return float(np.max(np.abs(d))) <= tol

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol


@dataclass(frozen=True)
class DensityMatrix(Operator):
    """Hermitian, positive-semidefinite, unit-trace operator."""

    def __post_init__(self):
        super().__post_init__()
        self.validate()

    def validate(self, trace_tol: float = 1e-10, psd_tol: float = 1e-10) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > 1e-9:
            raise SpinError("density matrix is not Hermitian")
        tr = np.real(np.trace(m))
        if abs(tr - 1.0) > trace_tol:
            raise SpinError(f"density matrix trace {tr} != 1")
        w = np.linalg.eigvalsh(m)
        if w.min() < -psd_tol:
            raise SpinError(f"density matrix has negative eigenvalue {w.min()}")

    @classmethod
    def from_state(cls, psi: np.ndarray, labels: tuple) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        n = np.linalg.norm(psi)
        if abs(n - 1.0) > 1e-10:
            raise SpinError(f"state vector norm {n} != 1")
        return cls(np.outer(psi, psi.conj()), labels)


@dataclass(frozen=True)
class AngularMomentumOps:
    jx: Operator
    jy: Operator
    jz: Operator
    jplus: Operator
    jminus: Operator


def angular_momentum_ops(manifold: SpinManifold) -> AngularMomentumOps:
    """Build Jx, Jy, Jz and the ladder operators on the manifold basis.

    Jz is diagonal with entries m in basis order; the raising operator has
    matrix elements <m+1|J+|m> = sqrt(J(J+1) - m(m+1)).
    """
    j = manifold.j
    m = manifold.m_values
    d = manifold.dim
    labels = tuple(m.tolist())

    jz = np.diag(m.astype(complex))
    jplus = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        # column k holds |m_k>; raising sends it to |m_k + 1> = row k-1
        jplus[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jminus = jplus.conj().T
    jx = (jplus + jminus) / 2
    jy = (jplus - jminus) / 2j
    return AngularMomentumOps(
        jx=Operator(jx, labels),
        jy=Operator(jy, labels),
        jz=Operator(jz, labels),
        jplus=Operator(jplus, labels),
        jminus=Operator(jminus, labels),
    )


def expm_antihermitian(h: Operator, scale: float = 1.0) -> Operator:
    """exp(-i * scale * H) for Hermitian H, via spectral decomposition.

    All generators here are Hermitian and the dimensions are tiny, so the
    eigendecomposition route is exact to machine precision.
    """
    if not h.is_hermitian():
        raise SpinError("expm_antihermitian requires a Hermitian generator")
    w, v = np.linalg.eigh(h.matrix)
    u = (v * np.exp(-1j * scale * w)) @ v.conj().T
    return Operator(u, h.labels)


def su2_rotation(manifold: SpinManifold, axis, angle: float) -> Operator:
    """SU(2) rotation exp(-i * angle * n.J) about unit 3-vector n."""
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,):
        raise SpinError("rotation axis must be a 3-vector")
    norm = np.linalg.norm(axis)
    if abs(norm - 1.0) > 1e-9:
        raise SpinError(f"rotation axis must be a unit vector, |n| = {norm}")
    ops = angular_momentum_ops(manifold)
    gen = axis[0] * ops.jx.matrix + axis[1] * ops.jy.matrix + axis[2] * ops.jz.matrix
    return expm_antihermitian(Operator(gen, ops.jz.labels), angle)


def rotation_x(manifold: SpinManifold, angle: float) -> Operator:
    return su2_rotation(manifold, (1.0, 0.0, 0.0), angle)


def rotation_y(manifold: SpinManifold, angle: float) -> Operator:
    return su2_rotation(manifold, (0.0, 1.0, 0.0), angle)


def rotation_z(manifold: SpinManifold, angle: float) -> Operator:
    return su2_rotation(manifold, (0.0, 0.0, 1.0), angle)
