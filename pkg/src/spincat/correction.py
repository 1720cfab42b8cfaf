"""Measurement-free error recovery on the composite internal (x) motional space.

The internal space is the 8-level ion: the two S1/2 ground states plus the six
D5/2 states.  One (or, for the second-order variant, two) harmonic modes are
kept as truncated Fock ladders.  The recovery sequence is two carrier pi-pulses
moving the +-3/2 error populations to the ground states, followed by two blue
sideband pi-pulses returning them to +-5/2 while adding one motional quantum.
Pulses are instantaneous unitaries on their addressed subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spinops import Operator, SpinError

# Internal level order is fixed: ground doublet first, then the D manifold
# bottom-up.  Note the D levels here run ascending in m while spin-manifold
# bases run descending; embeddings map through the m labels, never positions.
S_MINUS = ("S", -0.5)
S_PLUS = ("S", 0.5)
LEVELS: tuple = (
    S_MINUS, S_PLUS,
    ("D", -2.5), ("D", -1.5), ("D", -0.5), ("D", 0.5), ("D", 1.5), ("D", 2.5),
)
LEVEL_INDEX = {lvl: i for i, lvl in enumerate(LEVELS)}
N_LEVELS = len(LEVELS)
S_INDICES = (LEVEL_INDEX[S_MINUS], LEVEL_INDEX[S_PLUS])


class GuardViolation(SpinError):
    """A numerical-regime guard tripped (truncation or heating model limits)."""


class TruncationError(GuardViolation):
    pass


class HeatingRegimeError(GuardViolation):
    pass


def composite_dim(cutoffs: tuple[int, ...]) -> int:
    return N_LEVELS * int(np.prod(cutoffs))


def composite_labels(cutoffs: tuple[int, ...]) -> tuple:
    shape = (N_LEVELS, *cutoffs)
    return tuple(
        (LEVELS[idx[0]], *idx[1:])
        for idx in np.ndindex(shape)
    )


def d_flat_indices(m_values: np.ndarray, cutoffs: tuple[int, ...],
                   fock: tuple[int, ...] | int = 0) -> np.ndarray:
    """Flat composite indices of the D(m) levels at a fixed Fock index.

    m_values may be in any order (typically descending, matching the spin
    manifold basis); the result is aligned with it.
    """
    if isinstance(fock, int):
        fock = (fock,) * len(cutoffs)
    strides = np.cumprod((1,) + cutoffs[::-1])[::-1]  # level stride first
    base = sum(f * s for f, s in zip(fock, strides[1:]))
    return np.array([LEVEL_INDEX[("D", float(m))] * strides[0] + base
                     for m in m_values])


@dataclass(frozen=True)
class CorrectionConfig:
    """Knobs of the recovery sequence."""

    phi_c: float = 0.0
    pulse_model: str = "calibrated"
    heating_rate: float = 8.8
    fock_cutoff: int = 3

    def __post_init__(self):
        if self.pulse_model not in ("ideal", "calibrated"):
            raise SpinError(f"unknown pulse model {self.pulse_model!r}")
        if self.heating_rate < 0:
            raise SpinError("heating rate must be non-negative")
        if self.fock_cutoff < 2:
            raise SpinError("need at least two Fock levels")


@dataclass(frozen=True)
class CorrectionReport:
    p0: float
    p1: float
    p_erase: float
    rho_internal: np.ndarray
    p2: float | None = None


@dataclass(frozen=True)
class CompositeState:
    """Density matrix on LEVELS (x) Fock(cutoffs)."""

    rho: np.ndarray
    cutoffs: tuple[int, ...]

    def __post_init__(self):
        cut = tuple(int(c) for c in self.cutoffs)
        object.__setattr__(self, "cutoffs", cut)
        rho = np.asarray(self.rho, dtype=complex)
        d = composite_dim(cut)
        if rho.shape != (d, d):
            raise SpinError(f"composite state has shape {rho.shape}, expected {(d, d)}")
        object.__setattr__(self, "rho", rho)

    @property
    def n_modes(self) -> int:
        return len(self.cutoffs)

    def tensor_view(self) -> np.ndarray:
        shape = (N_LEVELS, *self.cutoffs)
        return self.rho.reshape(*shape, *shape)

    def validate(self, trace_tol: float = 1e-10, psd_tol: float = 1e-10,
                 top_tol: float = 1e-6) -> None:
        tr = float(np.real(np.trace(self.rho)))
        if abs(tr - 1.0) > trace_tol:
            raise SpinError(f"composite trace {tr} != 1")
        if np.linalg.eigvalsh(self.rho).min() < -psd_tol:
            raise SpinError("composite state is not PSD within tolerance")
        for mode in range(self.n_modes):
            top = self.motional_populations(mode)[-1]
            if top > top_tol:
                raise TruncationError(
                    f"population {top:.3g} in top Fock level of mode {mode}")

    def internal_density(self) -> np.ndarray:
        t = self.tensor_view()
        k = self.n_modes
        # trace out all motional axes pairwise
        for _ in range(k):
            t = np.trace(t, axis1=1, axis2=1 + (t.ndim // 2))
        return t

    def _diagonal(self) -> np.ndarray:
        t = self.tensor_view()
        half = t.ndim // 2
        idx = list(range(half))
        return np.real(np.einsum(t, idx + idx, idx))

    def motional_populations(self, mode: int = 0) -> np.ndarray:
        probs = self._diagonal()
        axes = tuple(ax for ax in range(probs.ndim) if ax != 1 + mode)
        return probs.sum(axis=axes)

    def s_population(self) -> float:
        diag = self._diagonal()
        return float(sum(diag[i].sum() for i in S_INDICES))

    def motional_density(self, mode: int = 0) -> np.ndarray:
        t = self.tensor_view()
        half = t.ndim // 2
        for ax in range(half - 1, -1, -1):
            if ax == 1 + mode:
                continue
            t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
        return t

    def product_deviation(self) -> float:
        """Max-abs distance to (internal reduced) x (motional reduced); 1 mode only."""
        if self.n_modes != 1:
            raise SpinError("product check implemented for a single mode")
        prod = np.einsum("ij,nm->injm", self.internal_density(),
                         self.motional_density(0))
        d = composite_dim(self.cutoffs)
        return float(np.max(np.abs(self.rho - prod.reshape(d, d))))


def thermal_populations(nbar: float, cutoff: int) -> np.ndarray:
    """Truncated, renormalized geometric distribution with mean occupation nbar."""
    if nbar <= 0:
        p = np.zeros(cutoff)
        p[0] = 1.0
        return p
    r = nbar / (1 + nbar)
    p = (1 - r) * r ** np.arange(cutoff)
    return p / p.sum()


def lift(internal: np.ndarray, m_values: np.ndarray | None = None,
         motional=0, cutoffs: tuple[int, ...] | int = 3) -> CompositeState:
    """Embed an internal density matrix and tensor on the motional mode(s).

    internal may be 6x6 (D manifold, basis ordered by m_values) or 8x8 (full
    level set).  motional is an int Fock index, a float thermal occupation, an
    explicit population vector, or a per-mode sequence of these.
    """
    if isinstance(cutoffs, int):
        cutoffs = (cutoffs,)
    internal = np.asarray(internal, dtype=complex)
    if internal.shape == (N_LEVELS, N_LEVELS):
        rho_int = internal
    elif internal.shape[0] == internal.shape[1] and m_values is not None \
            and internal.shape[0] == len(m_values):
        rho_int = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
        idx = np.array([LEVEL_INDEX[("D", float(m))] for m in m_values])
        rho_int[np.ix_(idx, idx)] = internal
    else:
        raise SpinError("internal state must be 8x8 or accompanied by m labels")

    per_mode = motional if isinstance(motional, (list, tuple)) else [motional] * len(cutoffs)
    if len(per_mode) != len(cutoffs):
        raise SpinError("one motional spec per mode required")
    rho = rho_int
    for spec, cut in zip(per_mode, cutoffs):
        if isinstance(spec, (int, np.integer)):
            if not 0 <= spec < cut:
                raise TruncationError(f"Fock index {spec} outside cutoff {cut}")
            mot = np.zeros((cut, cut), dtype=complex)
            mot[spec, spec] = 1.0
        elif isinstance(spec, float):
            mot = np.diag(thermal_populations(spec, cut)).astype(complex)
        else:
            p = np.asarray(spec, dtype=float)
            if p.shape != (cut,) or abs(p.sum() - 1) > 1e-9 or p.min() < 0:
                raise SpinError("motional population vector must be a length-cutoff pmf")
            mot = np.diag(p).astype(complex)
        rho = np.kron(rho, mot)
    return CompositeState(rho=rho, cutoffs=cutoffs)


def lift_vector(psi: np.ndarray, m_values: np.ndarray, fock: int,
                cutoffs: tuple[int, ...] | int = 3) -> np.ndarray:
    """Pure-state embedding used by the Monte Carlo pipelines."""
    if isinstance(cutoffs, int):
        cutoffs = (cutoffs,)
    out = np.zeros(composite_dim(cutoffs), dtype=complex)
    out[d_flat_indices(m_values, cutoffs, fock)] = psi
    return out


# ---------------------------------------------------------------------------
# Pulses
# ---------------------------------------------------------------------------

def _identity(cutoffs) -> np.ndarray:
    d = composite_dim(cutoffs)
    return np.eye(d, dtype=complex)


def _pair_rotation(u: np.ndarray, a: int, b: int, theta: float, phase: float) -> None:
    """Write a two-level rotation of angle theta into rows/cols (a, b) in place."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    u[a, a] = c
    u[b, b] = c
    u[a, b] = -1j * np.exp(-1j * phase) * s
    u[b, a] = -1j * np.exp(1j * phase) * s


def carrier_pi(levels: tuple, phase: float = 0.0,
               cutoffs: tuple[int, ...] | int = 3) -> Operator:
    """Carrier pi-pulse between two internal levels; identity on all motion."""
    if isinstance(cutoffs, int):
        cutoffs = (cutoffs,)
    a, b = levels
    if a == b:
        raise SpinError("carrier pulse needs two distinct levels")
    ia, ib = LEVEL_INDEX[a], LEVEL_INDEX[b]
    u8 = np.eye(N_LEVELS, dtype=complex)
    _pair_rotation(u8, ia, ib, np.pi, phase)
    nf = int(np.prod(cutoffs))
    return Operator(np.kron(u8, np.eye(nf)), composite_labels(cutoffs))


def blue_sideband_pi(levels: tuple, phase: float = 0.0,
                     cutoffs: tuple[int, ...] | int = 3,
                     model: str = "ideal", mode: int = 0) -> Operator:
    """Blue-sideband pi-pulse coupling |S>|n> <-> |D>|n+1> on one mode.

    ideal: an exact pi swap on every ladder pair.  calibrated: the pulse area
    is set for the n=0 -> 1 pair, so the pair coupling |n> <-> |n+1> rotates by
    pi * sqrt(n+1) (Rabi rate scales with sqrt(n+1)).  |D>|0> has no partner
    below it and is left untouched by construction.
    """
    if isinstance(cutoffs, int):
        cutoffs = (cutoffs,)
    if model not in ("ideal", "calibrated"):
        raise SpinError(f"unknown pulse model {model!r}")
    s_level, d_level = levels
    if s_level[0] != "S" or d_level[0] != "D":
        raise SpinError("sideband couples one S level to one D level")
    i_s, i_d = LEVEL_INDEX[s_level], LEVEL_INDEX[d_level]

    u = _identity(cutoffs)
    shape = (N_LEVELS, *cutoffs)
    spectators = tuple(c for k, c in enumerate(cutoffs) if k != mode)
    for n in range(cutoffs[mode] - 1):
        theta = np.pi if model == "ideal" else np.pi * np.sqrt(n + 1)
        for rest in np.ndindex(*spectators):
            idx_s = list(rest[:mode]) + [n] + list(rest[mode:])
            idx_d = list(rest[:mode]) + [n + 1] + list(rest[mode:])
            a = int(np.ravel_multi_index((i_s, *idx_s), shape))
            b = int(np.ravel_multi_index((i_d, *idx_d), shape))
            _pair_rotation(u, a, b, theta, phase)
    return Operator(u, composite_labels(cutoffs))


def correction_unitary(cfg: CorrectionConfig,
                       cutoffs: tuple[int, ...] | int | None = None) -> Operator:
    """The full first-order recovery: two carriers then two blue sidebands.

    The sideband phase phi_c is split symmetrically (+-phi_c/2) so only the
    physical relative phase enters and phi_c = 0 is the nominal optimum.
    """
    if cutoffs is None:
        cutoffs = (cfg.fock_cutoff,)
    if isinstance(cutoffs, int):
        cutoffs = (cutoffs,)
    c1 = carrier_pi((("D", -1.5), S_MINUS), 0.0, cutoffs)
    c2 = carrier_pi((("D", 1.5), S_PLUS), 0.0, cutoffs)
    b1 = blue_sideband_pi((S_MINUS, ("D", -2.5)), cfg.phi_c / 2, cutoffs,
                          cfg.pulse_model, mode=0)
    b2 = blue_sideband_pi((S_PLUS, ("D", 2.5)), -cfg.phi_c / 2, cutoffs,
                          cfg.pulse_model, mode=0)
    return b2 @ b1 @ c2 @ c1


def second_order_unitary(cfg: CorrectionConfig,
                         cutoffs: tuple[int, int]) -> Operator:
    """First-order recovery via mode 0, then the +-1/2 branch via mode 1."""
    stage1 = correction_unitary(cfg, cutoffs)
    c1 = carrier_pi((("D", -0.5), S_MINUS), 0.0, cutoffs)
    c2 = carrier_pi((("D", 0.5), S_PLUS), 0.0, cutoffs)
    b1 = blue_sideband_pi((S_MINUS, ("D", -2.5)), cfg.phi_c / 2, cutoffs,
                          cfg.pulse_model, mode=1)
    b2 = blue_sideband_pi((S_PLUS, ("D", 2.5)), -cfg.phi_c / 2, cutoffs,
                          cfg.pulse_model, mode=1)
    return b2 @ b1 @ c2 @ c1 @ stage1


def apply_correction(state: CompositeState,
                     cfg: CorrectionConfig) -> tuple[CompositeState, CorrectionReport]:
    """Run the first-order recovery and report branch routing.

    Requires the input to respect the truncation guard; motion should be
    predominantly in |0> for the one-way guarantees to hold.
    """
    state.validate()
    u = correction_unitary(cfg, state.cutoffs).matrix
    out = CompositeState(rho=u @ state.rho @ u.conj().T, cutoffs=state.cutoffs)
    pops = out.motional_populations(0)
    report = CorrectionReport(
        p0=float(pops[0]), p1=float(pops[1]),
        p_erase=out.s_population(),
        rho_internal=out.internal_density(),
    )
    return out, report


def correct_second_order(state: CompositeState,
                         cfg: CorrectionConfig) -> tuple[CompositeState, CorrectionReport]:
    """Recovery of both first- and second-order branches using two modes."""
    if state.n_modes != 2:
        raise SpinError("second-order correction needs a two-mode composite state")
    state.validate()
    u = second_order_unitary(cfg, state.cutoffs).matrix
    out = CompositeState(rho=u @ state.rho @ u.conj().T, cutoffs=state.cutoffs)
    diag = out._diagonal()
    report = CorrectionReport(
        p0=float(diag[:, 0, 0].sum()),
        p1=float(diag[:, 1, 0].sum()),
        p_erase=out.s_population(),
        rho_internal=out.internal_density(),
        p2=float(diag[:, 0, 1].sum()),
    )
    return out, report


def heat(state: CompositeState, rate: float, t: float,
         mode: int = 0) -> CompositeState:
    """Single-jump heating: with p = 1 - exp(-rate*t) the Fock index rises by one.

    Valid for rate*t <= 0.5 (beyond that, multi-quantum events matter and the
    single-jump picture misrepresents the ladder).  Trace is preserved exactly;
    coherences that would cross the truncation boundary are dropped.
    """
    if rate < 0 or t < 0:
        raise SpinError("rate and t must be non-negative")
    if rate * t > 0.5:
        raise HeatingRegimeError(f"rate*t = {rate * t:.3g} outside single-jump regime")
    p = 1 - np.exp(-rate * t)
    if p == 0:
        return state
    half = 1 + state.n_modes
    t_view = state.tensor_view()
    shifted = np.zeros_like(t_view)
    ax = 1 + mode
    src = [slice(None)] * (2 * half)
    dst = [slice(None)] * (2 * half)
    src[ax] = slice(0, -1)
    src[half + ax] = slice(0, -1)
    dst[ax] = slice(1, None)
    dst[half + ax] = slice(1, None)
    shifted[tuple(dst)] = t_view[tuple(src)]
    top = [slice(None)] * (2 * half)
    top[ax] = slice(-1, None)
    top[half + ax] = slice(-1, None)
    shifted[tuple(top)] += t_view[tuple(top)]
    d = composite_dim(state.cutoffs)
    rho = (1 - p) * state.rho + p * shifted.reshape(d, d)
    return CompositeState(rho=rho, cutoffs=state.cutoffs)


@dataclass(frozen=True)
class ErasureResult:
    p_erase: float
    post_selected: CompositeState | None


def detect_erasure(state: CompositeState) -> ErasureResult:
    """Fluorescence check: any population left in the S levels flags the trial.

    Returns the erasure probability and the D-manifold post-selected state
    (None if everything was flagged).
    """
    p = state.s_population()
    if p >= 1 - 1e-12:
        return ErasureResult(p_erase=min(p, 1.0), post_selected=None)
    keep = np.ones(N_LEVELS, dtype=bool)
    for i in S_INDICES:
        keep[i] = False
    nf = int(np.prod(state.cutoffs))
    mask = np.repeat(keep, nf)
    rho = state.rho.copy()
    rho[~mask, :] = 0
    rho[:, ~mask] = 0
    rho /= np.real(np.trace(rho))
    return ErasureResult(p_erase=p, post_selected=CompositeState(rho=rho, cutoffs=state.cutoffs))
