"""Spin-cat codewords, logical encode/decode, Knill-Laflamme checks, and
quantum-Hamming-bound accounting.

The codewords are superpositions of the two extremal Jx eigenstates.  In the
Jz basis they occupy disjoint m ladders (every other rung), which is what lets
a one-way pulse sequence undo low-order Jz errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channels import ErrorOperatorSet
from .spinops import Operator, SpinError, SpinManifold, rotation_y


def canonical_phase(psi: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Rotate a global phase so the first non-negligible amplitude is real positive."""
    psi = np.asarray(psi, dtype=complex)
    idx = np.flatnonzero(np.abs(psi) > tol * np.linalg.norm(psi))
    if idx.size == 0:
        return psi
    return psi * np.exp(-1j * np.angle(psi[idx[0]]))


@dataclass(frozen=True)
class LogicalQubit:
    """Complex amplitudes (alpha, beta) of a logical superposition."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > 1e-12:
            raise SpinError(f"logical amplitudes not normalized: |a|^2+|b|^2 = {n}")


@dataclass(frozen=True)
class CodewordPair:
    """Normalized, orthogonal codewords with disjoint m-basis supports."""

    manifold: SpinManifold
    zero: np.ndarray
    one: np.ndarray

    def __post_init__(self):
        for name, v in (("zero", self.zero), ("one", self.one)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise SpinError(f"codeword {name} is not normalized")
        if abs(np.vdot(self.zero, self.one)) > 1e-12:
            raise SpinError("codewords are not orthogonal")
        if np.max(np.abs(self.zero) * np.abs(self.one)) > 1e-12:
            raise SpinError("codeword supports overlap in the m basis")


def encode_unitary(manifold: SpinManifold) -> Operator:
    """The logical encoding rotation exp(+i Jy pi/2), i.e. R_y(-pi/2)."""
    return rotation_y(manifold, -np.pi / 2)


def decode_unitary(manifold: SpinManifold) -> Operator:
    return encode_unitary(manifold).dag


def spin_cat_codewords(manifold: SpinManifold = None) -> CodewordPair:
    """Codewords built by rotating (|-J> -+ |+J>)/sqrt(2) with the encoding pulse.

    Half-integer J only: for integer J the two rotated cat states would share
    the m = 0 amplitude and the supports would no longer be disjoint.
    """
    if manifold is None:
        from .spinops import D52
        manifold = D52
    if not manifold.is_half_integer:
        raise SpinError("spin-cat codewords need half-integer J (disjoint supports)")
    d = manifold.dim
    minus = np.zeros(d, dtype=complex)
    minus[-1] = 1.0
    plus = np.zeros(d, dtype=complex)
    plus[0] = 1.0
    u = encode_unitary(manifold).matrix
    zero = canonical_phase(u @ ((minus - plus) / np.sqrt(2)))
    one = canonical_phase(u @ ((minus + plus) / np.sqrt(2)))
    # scrub rotation round-off on the rungs that must be empty
    zero[np.abs(zero) < 1e-14] = 0.0
    one[np.abs(one) < 1e-14] = 0.0
    return CodewordPair(manifold=manifold, zero=zero, one=one)


def prepare_logical(qubit: LogicalQubit, manifold: SpinManifold = None) -> np.ndarray:
    """alpha |zero_L> + beta |one_L> as a state vector on the manifold."""
    pair = spin_cat_codewords(manifold)
    psi = qubit.alpha * pair.zero + qubit.beta * pair.one
    return psi / np.linalg.norm(psi)


# ---------------------------------------------------------------------------
# Knill-Laflamme conditions
# ---------------------------------------------------------------------------

_EXACT_DENOMINATOR_LIMIT = 1 << 20


def _exact_weights(psi: np.ndarray) -> list[Fraction] | None:
    """|amplitude|^2 as exact small rationals, or None if they don't round trip."""
    weights = []
    for a in psi:
        w = abs(a) ** 2
        f = Fraction(w).limit_denominator(_EXACT_DENOMINATOR_LIMIT)
        if abs(float(f) - w) > 1e-12:
            return None
        weights.append(f)
    if sum(weights) != 1:
        return None
    return weights


@dataclass(frozen=True)
class KLPairCheck:
    """Inner products for one ordered error pair (E_j, E_k)."""

    j: int
    k: int
    zero_expect: complex
    one_expect: complex
    cross: complex
    satisfied: bool
    zero_exact: Fraction | None = None
    one_exact: Fraction | None = None


@dataclass(frozen=True)
class KLReport:
    max_order: int
    pairs: tuple[KLPairCheck, ...]
    satisfied: bool
    exact: bool

    def to_json(self) -> str:
        def enc(z: complex):
            return [float(np.real(z)), float(np.imag(z))]

        payload = {
            "max_order": self.max_order,
            "satisfied": self.satisfied,
            "exact": self.exact,
            "pairs": [
                {
                    "j": p.j,
                    "k": p.k,
                    "zero_expect": enc(p.zero_expect),
                    "one_expect": enc(p.one_expect),
                    "cross": enc(p.cross),
                    "satisfied": p.satisfied,
                    "zero_exact": str(p.zero_exact) if p.zero_exact is not None else None,
                    "one_exact": str(p.one_exact) if p.one_exact is not None else None,
                }
                for p in self.pairs
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def kl_conditions(pair: CodewordPair, errs: ErrorOperatorSet,
                  tol: float = 1e-12) -> KLReport:
    """Check <0|Ej+ Ek|0> = <1|Ej+ Ek|1> and <0|Ej+ Ek|1> = 0 for all pairs.

    The error set is diagonal (Jz powers), so Ej+ Ek = Jz^(j+k) and the
    expectations reduce to support-weighted sums of m^(j+k).  Where the
    codeword weights are exact rationals on the half-integer m grid the check
    is done in exact arithmetic; otherwise it falls back to floats.
    """
    if errs.manifold.dim != pair.manifold.dim:
        raise SpinError("codewords and error set live on different manifolds")

    m_float = pair.manifold.m_values
    m_exact = pair.manifold.m_exact
    w0_exact = _exact_weights(pair.zero)
    w1_exact = _exact_weights(pair.one)
    use_exact = w0_exact is not None and w1_exact is not None

    checks = []
    all_ok = True
    orders = range(errs.max_order + 1)
    for j in orders:
        for k in orders:
            power = j + k
            if use_exact:
                v0 = sum(w * m**power for w, m in zip(w0_exact, m_exact))
                v1 = sum(w * m**power for w, m in zip(w1_exact, m_exact))
                zero_expect = complex(float(v0))
                one_expect = complex(float(v1))
                diag_ok = v0 == v1
            else:
                v0 = v1 = None
                zero_expect = complex(np.sum(np.abs(pair.zero) ** 2 * m_float**power))
                one_expect = complex(np.sum(np.abs(pair.one) ** 2 * m_float**power))
                diag_ok = abs(zero_expect - one_expect) <= tol
            cross = complex(np.sum(np.conj(pair.zero) * pair.one * m_float**power))
            ok = diag_ok and abs(cross) <= tol
            all_ok = all_ok and ok
            checks.append(KLPairCheck(
                j=j, k=k,
                zero_expect=zero_expect, one_expect=one_expect, cross=cross,
                satisfied=ok, zero_exact=v0, one_exact=v1,
            ))
    return KLReport(max_order=errs.max_order, pairs=tuple(checks),
                    satisfied=all_ok, exact=use_exact)


@dataclass(frozen=True)
class HammingReport:
    """Dimension count for the quantum Hamming bound at a given order."""

    j: float
    correctable_orders: int
    codewords: int
    syndrome_classes: int
    occupied: int
    dim: int
    saturated: bool


def hamming_saturation(j: float, correctable_orders: int) -> HammingReport:
    """2 codewords x (orders+1) syndrome classes against the 2J+1 levels."""
    manifold = SpinManifold(j=j)
    syndromes = correctable_orders + 1
    occupied = 2 * syndromes
    return HammingReport(
        j=j,
        correctable_orders=correctable_orders,
        codewords=2,
        syndrome_classes=syndromes,
        occupied=occupied,
        dim=manifold.dim,
        saturated=occupied == manifold.dim,
    )
