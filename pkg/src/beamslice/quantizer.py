"""Gain control, uniform midrise quantization, and Bussgang constants.

The quantizer maps x to Delta*floor(x/Delta) + Delta/2 inside the range
|x| < Delta*2^(q-1) and clips to +-(Delta/2)*(2^q - 1) outside, applied
separately per real dimension after per-beam gain scaling.  Step sizes are
MSE-optimal for a zero-mean unit-variance Gaussian input; the Bussgang
decomposition Q(x) = gamma*x + d (d uncorrelated with x) supplies the gain
gamma and distortion variance D used by the detectors.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.stats import norm

logger = logging.getLogger(__name__)

MAX_BITS = 12
# Substituted for 1/0 when a training row has exactly zero energy (only
# reachable in noiseless unit tests; thermal noise is always present in
# simulation).
G_MAX_DEFAULT = 1e6


@dataclass(frozen=True)
class QuantizerSpec:
    """Resolution q, step size, Bussgang gain, and distortion variance.

    ``q=None`` marks infinite resolution: the quantizer becomes the
    identity map with gamma=1 and D=0 (delta is unused and set to inf).
    """

    q: int | None
    delta: float
    gamma: float
    d: float

    def __post_init__(self):
        if self.q is None:
            if self.gamma != 1.0 or self.d != 0.0:
                raise ValueError("infinite resolution requires gamma=1, d=0")
        else:
            if self.q < 1:
                raise ValueError("q must be >= 1")
            if not self.delta > 0:
                raise ValueError("delta must be positive")
            if not 0 < self.gamma <= 1:
                raise ValueError("gamma must lie in (0, 1]")
            if self.d < 0:
                raise ValueError("distortion variance must be nonnegative")

    @property
    def is_infinite(self) -> bool:
        return self.q is None

    @classmethod
    def infinite(cls) -> "QuantizerSpec":
        return cls(q=None, delta=math.inf, gamma=1.0, d=0.0)

    @classmethod
    def create(cls, q: int | None) -> "QuantizerSpec":
        """Spec for q bits with the MSE-optimal step size (None = infinite)."""
        if q is None:
            return cls.infinite()
        delta = optimal_step_size(q)
        gamma, d = bussgang_constants(q, delta)
        return cls(q=q, delta=delta, gamma=gamma, d=d)


@dataclass(frozen=True)
class GainMatrix:
    """Diagonal per-beam gains g (length B, positive finite reals)."""

    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 1:
            raise ValueError("gains must be a 1-D vector")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise ValueError("gains must be positive and finite")
        object.__setattr__(self, "g", g)


class ZeroRowError(ValueError):
    """A gain-training row had exactly zero energy (dead beam)."""


def _positive_cells(q: int, delta: float):
    """Edges and levels of the positive-half quantization cells.

    Cell k (k = 0..2^(q-1)-1) spans [k*delta, (k+1)*delta) with output
    (k + 1/2)*delta; the last cell absorbs the clipping tail out to +inf
    since the clipped output equals its level.
    """
    k = np.arange(2 ** (q - 1))
    lo = k * delta
    hi = np.append((k[:-1] + 1) * delta, np.inf)
    levels = (k + 0.5) * delta
    return lo, hi, levels


def _gauss_cell_moments(lo: np.ndarray, hi: np.ndarray):
    # For each [lo, hi): P = integral of pdf, M1 = integral of x*pdf.
    cdf_lo, cdf_hi = norm.cdf(lo), norm.cdf(hi)
    pdf_lo, pdf_hi = norm.pdf(lo), norm.pdf(hi)
    return cdf_hi - cdf_lo, pdf_lo - pdf_hi


def quantizer_mse(q: int, delta: float) -> float:
    """E[(Q(x)-x)^2] for x ~ N(0,1), in closed Gaussian-cell form."""
    lo, hi, levels = _positive_cells(q, delta)
    p, m1 = _gauss_cell_moments(lo, hi)
    e_q2 = 2.0 * np.sum(levels**2 * p)
    e_qx = 2.0 * np.sum(levels * m1)
    return float(e_q2 - 2.0 * e_qx + 1.0)


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@functools.lru_cache(maxsize=None)
def optimal_step_size(q: int) -> float:
    """MSE-optimal midrise step size for x ~ N(0,1), q bits per dimension.

    Golden-section search (tolerance 1e-6) on the unimodal MSE objective.
    Cached per process; q=1 recovers the closed form 2*sqrt(2/pi).
    """
    if not 1 <= q <= MAX_BITS:
        raise ValueError(f"q must lie in 1..{MAX_BITS}, got {q}")
    return _golden_section(lambda d: quantizer_mse(q, d), 1e-4, 4.0, 1e-6)


def quantize(x: np.ndarray, q: int, delta: float) -> np.ndarray:
    """Uniform midrise quantizer, elementwise on real input."""
    x = np.asarray(x, dtype=float)
    top = 0.5 * delta * (2**q - 1)
    return np.clip(delta * np.floor(x / delta) + 0.5 * delta, -top, top)


def quantize_scalar(x: float, spec: QuantizerSpec) -> float:
    """Quantize one real value (finite-resolution specs only)."""
    if spec.is_infinite:
        raise ValueError("scalar quantization undefined at infinite resolution")
    if not np.isfinite(x):
        raise ValueError("input must be finite")
    return float(quantize(np.asarray([x]), spec.q, spec.delta)[0])


def learn_gains(y: np.ndarray, g_max: float | None = None) -> GainMatrix:
    """Per-beam gains g_b = sqrt(2T / ||row_b||^2) from B x T training signals.

    Rows with exactly zero energy raise ZeroRowError unless ``g_max`` is
    given, in which case the dead beam's gain is capped there (logged).
    """
    y = np.asarray(y)
    if y.ndim != 2 or y.shape[1] < 1:
        raise ValueError("training signals must be a B x T matrix with T >= 1")
    energy = np.sum(np.abs(y) ** 2, axis=1)
    dead = energy == 0
    if np.any(dead):
        if g_max is None:
            raise ZeroRowError(f"zero-energy training rows: {np.flatnonzero(dead).tolist()}")
        logger.warning(
            "capping gains of %d dead beam(s) at g_max=%g", int(dead.sum()), g_max
        )
        energy = np.where(dead, np.inf, energy)
    g = np.sqrt(2.0 * y.shape[1] / energy)
    if g_max is not None:
        g = np.where(dead, g_max, g)
    return GainMatrix(g=g)


def compquant(yhat: np.ndarray, gains: GainMatrix, spec: QuantizerSpec) -> np.ndarray:
    """Gain-controlled complex quantization r = G^-1 (Q(Re{G y}) + i Q(Im{G y})).

    ``yhat`` is a length-B vector or B x T matrix; infinite resolution
    returns it unchanged.
    """
    if spec.is_infinite:
        return yhat
    yhat = np.asarray(yhat)
    if yhat.shape[0] != gains.g.shape[0]:
        raise ValueError("gain vector length does not match signal rows")
    g = gains.g if yhat.ndim == 1 else gains.g[:, None]
    scaled = g * yhat
    qre = quantize(scaled.real, spec.q, spec.delta)
    qim = quantize(scaled.imag, spec.q, spec.delta)
    return (qre + 1j * qim) / g


@functools.lru_cache(maxsize=None)
def bussgang_constants(q: int, delta: float) -> tuple[float, float]:
    """Bussgang gain gamma = E[Q(x)x] and distortion variance D = E[Q^2] - gamma^2.

    Expectations over x ~ N(0,1) by adaptive quadrature (absolute tolerance
    1e-10), with the quantizer's cell edges supplied as breakpoints and the
    smooth clipped tail integrated separately.
    """
    if q < 1 or delta <= 0:
        raise ValueError("need q >= 1 and delta > 0")
    top_edge = delta * 2 ** (q - 1)
    edges = (np.arange(1, 2 ** (q - 1)) * delta).tolist() or None
    limit = 200 if edges is None else max(200, 4 * len(edges) + 50)

    def qx(x):
        return quantize(x, q, delta) * x * norm.pdf(x)

    def q2(x):
        return quantize(x, q, delta) ** 2 * norm.pdf(x)

    # Q is odd, so both integrands are even: integrate the positive half.
    e_qx = integrate.quad(qx, 0.0, top_edge, points=edges, limit=limit, epsabs=1e-10)[0]
    e_qx += integrate.quad(qx, top_edge, np.inf, epsabs=1e-10)[0]
    e_q2 = integrate.quad(q2, 0.0, top_edge, points=edges, limit=limit, epsabs=1e-10)[0]
    e_q2 += integrate.quad(q2, top_edge, np.inf, epsabs=1e-10)[0]
    gamma = 2.0 * e_qx
    d = 2.0 * e_q2 - gamma**2
    return gamma, max(d, 0.0)
