"""Closed-form fidelity curves, Uhlmann fidelity, weighted curve fits, and the
useful-lifetime / improvement-ratio analysis.

All curves are functions of the dephasing parameter chi = (mu_B sigma_B t / hbar)^2 / 2
and the manifold g-factor.  Their small-chi error expansions are
g^2 chi / 2 for the bare qubit, 5 g^2 chi / 2 for the encoded qubit, and
15 g^4 chi^2 / 2 once first-order errors are corrected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import MU_B_OVER_HBAR
from .spinops import SpinError

PSD_CLAMP = 1e-10


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    if w.min() < -PSD_CLAMP:
        raise SpinError(f"matrix is not PSD within tolerance (min eig {w.min()})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(rho, sigma) -> float:
    """F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Accepts plain arrays or anything exposing a .matrix attribute.  Eigenvalues
    in [-1e-10, 0) are clamped to zero: MLE and Monte Carlo outputs routinely
    sit on the PSD boundary.
    """
    a = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    b = np.asarray(getattr(sigma, "matrix", sigma), dtype=complex)
    if a.shape != b.shape:
        raise SpinError(f"fidelity dimension mismatch: {a.shape} vs {b.shape}")
    sa = _psd_sqrt(a)
    w = np.linalg.eigvalsh(sa @ b @ sa)
    # spurious near-zero eigenvalues of low-rank products would contribute
    # sqrt(eps)-sized noise to the trace of the square root
    w[w < w.max() * 1e-13] = 0.0
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(f, 1.0) if f < 1 + 1e-9 else f


# ---------------------------------------------------------------------------
# Closed-form fidelity curves
# ---------------------------------------------------------------------------

def f_physical(chi, g_factor: float = 2.0):
    """Bare-qubit fidelity (1 + e^{-g^2 chi}) / 2 under quasi-static dephasing."""
    chi = np.asarray(chi, dtype=float)
    return ((1 + np.exp(-(g_factor**2) * chi)) / 2).item() if chi.ndim == 0 else \
        (1 + np.exp(-(g_factor**2) * chi)) / 2


def f_encoded(chi, g_factor: float = 6 / 5):
    """Encoded (uncorrected) logical-qubit fidelity under dephasing."""
    u = (g_factor**2) * np.asarray(chi, dtype=float)
    val = (np.exp(-25 * u) / 512) * (
        1 + np.exp(9 * u) * (10 + 3 * np.exp(7 * u) * (
            15 + 40 * np.exp(5 * u) + 70 * np.exp(8 * u) + 42 * np.exp(9 * u))))
    return val.item() if val.ndim == 0 else val


def f_corrected(chi, g_factor: float = 6 / 5):
    """Logical-qubit fidelity after ideal first-order correction."""
    u = (g_factor**2) * np.asarray(chi, dtype=float)
    val = (np.exp(-25 * u) / 128) * (
        -1 + np.exp(9 * u) * (-5 + np.exp(7 * u) * (
            -5 + 20 * np.exp(5 * u) + 70 * np.exp(8 * u) + 49 * np.exp(9 * u))))
    return val.item() if val.ndim == 0 else val


def f_corrected_with_delta(chi, delta: float, g_factor: float = 6 / 5):
    """Corrected fidelity including a control-dephasing error of width delta.

    delta parameterizes a random differential phase between the two outer
    (+-J) levels accumulated during the correction pulses; it multiplies the
    qubit-subspace coherence by e^{-2 delta^2} while leaving the error-branch
    recombination untouched.  delta = 0 reduces exactly to f_corrected.
    """
    u = (g_factor**2) * np.asarray(chi, dtype=float)
    # delta-independent part: populations plus the error-branch coherence
    base = 1 - (np.exp(-25 * u) / 512) * (
        5 + 20 * np.exp(9 * u) + 65 * np.exp(16 * u)
        - 80 * np.exp(21 * u) - 70 * np.exp(24 * u) + 316 * np.exp(25 * u))
    # qubit-subspace coherence, suppressed by the control error
    coherence = (np.exp(-25 * u) + 45 * np.exp(-9 * u) + 210 * np.exp(-u)) / 512
    val = base + np.exp(-2 * delta**2) * coherence
    return val.item() if val.ndim == 0 else val


CURVE_KINDS = ("physical", "encoded", "corrected", "corrected_with_delta")


@dataclass(frozen=True)
class FidelityCurveParams:
    """Selects one closed-form fidelity curve with its g-factor and control width."""

    kind: str
    g_factor: float
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise SpinError(f"unknown curve kind {self.kind!r}")
        if self.delta < 0:
            raise SpinError("delta must be non-negative")

    def __call__(self, chi):
        if self.kind == "physical":
            return f_physical(chi, self.g_factor)
        if self.kind == "encoded":
            return f_encoded(chi, self.g_factor)
        if self.kind == "corrected":
            return f_corrected(chi, self.g_factor)
        return f_corrected_with_delta(chi, self.delta, self.g_factor)


def delta_for_offset(offset: float) -> float:
    """Control width delta whose chi-independent error is the given offset."""
    if not 0 <= offset < 0.5:
        raise SpinError("offset must lie in [0, 0.5)")
    return float(np.sqrt(-np.log(1 - 2 * offset) / 2))


def offset_for_delta(delta: float) -> float:
    return float((1 - np.exp(-2 * delta**2)) / 2)


# ---------------------------------------------------------------------------
# Weighted fits of error-vs-chi data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorFit:
    """Weighted least-squares fit of error = coeff * chi^p + offset, p in {1, 2}."""

    kind: str                       # "linear" or "quadratic"
    coefficient: float
    offset: float
    covariance: np.ndarray          # 2x2, order (coefficient, offset)
    points: tuple                   # the (t, chi, error, sigma) rows used

    @property
    def power(self) -> int:
        return 1 if self.kind == "linear" else 2

    def predict(self, chi):
        return self.coefficient * np.asarray(chi, dtype=float) ** self.power + self.offset

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "coefficient": self.coefficient,
            "offset": self.offset,
            "covariance": [[float(x) for x in row] for row in self.covariance],
            "n_points": len(self.points),
        }


def fit_error_curve(points, kind: str) -> ErrorFit:
    """Fit error = a*chi + c ("linear") or error = b*chi^2 + c ("quadratic").

    points: iterable of (t, chi, error, sigma) with sigma > 0.  Returns the
    coefficients with their 2x2 covariance from the weighted normal equations.
    """
    if kind not in ("linear", "quadratic"):
        raise SpinError(f"unknown fit kind {kind!r}")
    rows = [tuple(map(float, p)) for p in points]
    if len(rows) < 3:
        raise SpinError("need at least 3 points to fit coefficient + offset")
    chi = np.array([r[1] for r in rows])
    err = np.array([r[2] for r in rows])
    sig = np.array([r[3] for r in rows])
    if np.any(sig <= 0):
        raise SpinError("all point uncertainties must be positive")
    power = 1 if kind == "linear" else 2
    x = np.column_stack([chi**power, np.ones_like(chi)])
    w = 1.0 / sig**2
    xtwx = x.T @ (w[:, None] * x)
    if np.linalg.cond(xtwx) > 1e12:
        raise SpinError("degenerate design matrix (chi grid has no spread)")
    cov = np.linalg.inv(xtwx)
    beta = cov @ (x.T @ (w * err))
    return ErrorFit(kind=kind, coefficient=float(beta[0]), offset=float(beta[1]),
                    covariance=cov, points=tuple(rows))


# ---------------------------------------------------------------------------
# Useful lifetime and improvement ratio
# ---------------------------------------------------------------------------

def chi_to_time(chi, sigma_b: float):
    """Invert chi = (mu_B sigma_B t / hbar)^2 / 2 for the delay time."""
    return np.sqrt(2 * np.asarray(chi, dtype=float)) / (MU_B_OVER_HBAR * sigma_b)


def useful_lifetime(fit: ErrorFit, epsilon: float, sigma_b: float) -> float:
    """Delay time at which the fitted error curve crosses epsilon.

    Returns NaN (flagged unreachable, not an exception) when epsilon is below
    the fitted chi-independent offset.
    """
    if epsilon < fit.offset:
        return float("nan")
    excess = epsilon - fit.offset
    chi = excess / fit.coefficient if fit.kind == "linear" \
        else np.sqrt(excess / fit.coefficient)
    if chi < 0 or not np.isfinite(chi):
        return float("nan")
    return float(chi_to_time(chi, sigma_b))


@dataclass(frozen=True)
class LifetimeResult:
    epsilon: float
    tau_physical: float
    tau_logical: float
    lam: float
    band: np.ndarray = field(default_factory=lambda: np.array([]))
    n_unreachable: int = 0

    @property
    def reachable(self) -> bool:
        return np.isfinite(self.lam)

    def band_interval(self) -> tuple[float, float]:
        if self.band.size == 0:
            return (self.lam, self.lam)
        return (float(np.min(self.band)), float(np.max(self.band)))

    def to_dict(self) -> dict:
        lo, hi = self.band_interval()
        return {
            "epsilon": self.epsilon,
            "tau_physical": self.tau_physical,
            "tau_logical": self.tau_logical,
            "lambda": self.lam,
            "lambda_lo": lo,
            "lambda_hi": hi,
            "n_unreachable": self.n_unreachable,
        }


def _resample_fit(fit: ErrorFit, rng: np.random.Generator) -> ErrorFit:
    coeff, offset = rng.multivariate_normal(
        [fit.coefficient, fit.offset], fit.covariance)
    return ErrorFit(kind=fit.kind, coefficient=float(coeff), offset=float(offset),
                    covariance=fit.covariance, points=fit.points)


def lambda_ratio(fit_logical: ErrorFit, fit_physical: ErrorFit, epsilon_grid,
                 sigma_b: float, resamples: int = 100,
                 rng: np.random.Generator | None = None) -> list[LifetimeResult]:
    """Lifetime improvement Lambda(eps) = tau_L(eps) / tau_P(eps) over a cutoff grid.

    The uncertainty band draws `resamples` realizations of each fit's
    parameters from its covariance and recomputes Lambda; draws for which a
    cutoff is unreachable are counted, not included.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    draws = [( _resample_fit(fit_logical, rng), _resample_fit(fit_physical, rng))
             for _ in range(resamples)]
    results = []
    for eps in epsilon_grid:
        eps = float(eps)
        tau_p = useful_lifetime(fit_physical, eps, sigma_b)
        tau_l = useful_lifetime(fit_logical, eps, sigma_b)
        lam = tau_l / tau_p if tau_p and np.isfinite(tau_p) and np.isfinite(tau_l) \
            else float("nan")
        band = []
        bad = 0
        for fl, fp in draws:
            tp = useful_lifetime(fp, eps, sigma_b)
            tl = useful_lifetime(fl, eps, sigma_b)
            if np.isfinite(tp) and np.isfinite(tl) and tp > 0:
                band.append(tl / tp)
            else:
                bad += 1
        results.append(LifetimeResult(
            epsilon=eps, tau_physical=tau_p, tau_logical=tau_l, lam=lam,
            band=np.array(band), n_unreachable=bad))
    return results
