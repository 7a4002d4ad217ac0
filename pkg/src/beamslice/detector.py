"""Linear data detection: SNIPS, CHOPS, plain LMMSE, and genie baselines.

SNIPS treats the (estimated) jammer covariance as spatially colored noise
inside an LMMSE-style equalizer; CHOPS instead projects the receive signal
and channel estimate onto the orthogonal complement of the estimated jammer
subspace and equalizes there.  Both carry the Bussgang correction term
2*D*gamma^-2*G^-2 that models quantization distortion.  Genie variants swap
in the true jammer channel (projection) or true interference covariance.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .estimator import ProjectionMatrix
from .quantizer import GainMatrix, QuantizerSpec

logger = logging.getLogger(__name__)


class MethodKind(enum.Enum):
    SNIPS = "snips"
    CHOPS = "chops"
    LMMSE = "lmmse"
    GENIE_POS = "genie-pos"
    GENIE_IAN = "genie-ian"

    @property
    def uses_projection(self) -> bool:
        return self in (MethodKind.CHOPS, MethodKind.GENIE_POS)

    @property
    def is_genie(self) -> bool:
        return self in (MethodKind.GENIE_POS, MethodKind.GENIE_IAN)


@dataclass(frozen=True)
class DetectorMethod:
    """Detection method plus the domain it operates in (``ant`` or ``slice``)."""

    kind: MethodKind
    domain: str = "slice"

    def __post_init__(self):
        if self.domain not in ("ant", "slice"):
            raise ValueError(f"domain must be 'ant' or 'slice', got {self.domain!r}")

    def as_string(self) -> str:
        return f"{self.kind.value} domain={self.domain}"


def parse_method_string(text: str) -> tuple[DetectorMethod, int | None | str]:
    """Parse ``snips|chops|lmmse|genie-pos|genie-ian`` with optional modifiers.

    Modifiers: ``domain=ant|slice`` and ``adc=inf|<q>``.  Returns the method
    and the adc override (int, None for inf, or "unset" when absent).
    """
    parts = text.split()
    if not parts:
        raise ValueError("empty detector method string")
    kind = MethodKind(parts[0])
    domain = "slice"
    adc: int | None | str = "unset"
    for mod in parts[1:]:
        key, _, val = mod.partition("=")
        if key == "domain":
            domain = val
        elif key == "adc":
            adc = None if val == "inf" else int(val)
        else:
            raise ValueError(f"unknown detector modifier {key!r}")
    return DetectorMethod(kind=kind, domain=domain), adc


@dataclass
class EqualizerMatrix:
    """U x B equalizer W with the method that produced it."""

    w: np.ndarray
    method: MethodKind


@dataclass(frozen=True)
class Constellation:
    """Square QAM constellation with per-axis reflected Gray labeling.

    ``points`` is ordered by (I level, Q level) with amplitudes ascending;
    ties in slicing resolve to the lowest point index.  ``labels`` holds the
    bit pattern of each point, I bits before Q bits, MSB first.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray  # (M, bits_per_symbol) of {0,1}
    es: float

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    @property
    def point_of_label(self) -> np.ndarray:
        # Map integer bit label -> constellation point.
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        out = np.empty(len(self.points), dtype=complex)
        out[self.labels @ weights] = self.points
        return out


def qam_constellation(order: int = 16, es: float = 1.0) -> Constellation:
    """Gray-labeled square QAM with mean symbol energy ``es``."""
    m = int(order)
    side = int(np.sqrt(m))
    if side * side != m or m < 4 or (m & (m - 1)) != 0:
        raise ValueError(f"square QAM order must be 4^k, got {order}")
    amps = 2.0 * np.arange(side) - (side - 1)  # [-3,-1,1,3] for side 4
    scale = np.sqrt(es * 3.0 / (2.0 * (side**2 - 1)))
    bits_axis = int(np.log2(side))
    gray = np.arange(side) ^ (np.arange(side) >> 1)
    axis_bits = ((gray[:, None] >> np.arange(bits_axis - 1, -1, -1)) & 1).astype(np.uint8)
    points, labels = [], []
    for i in range(side):
        for qd in range(side):
            points.append(scale * (amps[i] + 1j * amps[qd]))
            labels.append(np.concatenate([axis_bits[i], axis_bits[qd]]))
    return Constellation(
        name=f"{m}qam", points=np.array(points), labels=np.array(labels), es=es
    )


def constellation_from_name(name: str, es: float = 1.0) -> Constellation:
    name = name.lower().replace("-", "")
    if not name.endswith("qam"):
        raise ValueError(f"unsupported constellation {name!r}")
    return qam_constellation(int(name[:-3]), es=es)


def _solve_hermitian(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a X = rhs for Hermitian positive definite a via Cholesky.

    On factorization failure, regularize once with delta*I
    (delta = 1e-10 * trace/B) and warn before retrying.
    """
    try:
        cho = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError:
        delta = 1e-10 * float(np.trace(a).real) / a.shape[0]
        logger.warning("Cholesky failed; regularizing with delta=%g", delta)
        cho = scipy.linalg.cho_factor(a + delta * np.eye(a.shape[0]), lower=True)
    return scipy.linalg.cho_solve(cho, rhs)


def normal_matrix(
    h: np.ndarray,
    extra_cov: np.ndarray | None,
    spec: QuantizerSpec,
    gains: GainMatrix,
    n0: float,
    es: float,
) -> np.ndarray:
    """Matrix handed to the factorization: H H^H + (C + N0 I + 2D/(gamma G)^2)/es."""
    b = h.shape[0]
    diag = np.full(b, n0, dtype=float)
    if not spec.is_infinite:
        diag = diag + 2.0 * spec.d / (spec.gamma**2 * gains.g**2)
    a = h @ h.conj().T + np.diag(diag / es)
    if extra_cov is not None:
        a = a + extra_cov / es
    return a


def _equalizer(
    h: np.ndarray,
    extra_cov: np.ndarray | None,
    spec: QuantizerSpec,
    gains: GainMatrix,
    n0: float,
    es: float,
) -> np.ndarray:
    a = normal_matrix(h, extra_cov, spec, gains, n0, es)
    x = _solve_hermitian(a, h)
    return x.conj().T / spec.gamma


def snips_matrix(
    h_hat: np.ndarray,
    c_hat: np.ndarray,
    spec: QuantizerSpec,
    gains: GainMatrix,
    n0: float,
    es: float,
) -> EqualizerMatrix:
    """Soft-nulling equalizer treating the jammer covariance as noise.

    W = (1/gamma) H^H (H H^H + (C_hat + N0 I + 2 D gamma^-2 G^-2)/es)^-1,
    computed by a Hermitian-definite solve rather than an explicit inverse.
    """
    return EqualizerMatrix(
        w=_equalizer(h_hat, c_hat, spec, gains, n0, es), method=MethodKind.SNIPS
    )


def chops_matrix(
    h_tilde: np.ndarray,
    spec: QuantizerSpec,
    gains: GainMatrix,
    n0: float,
    es: float,
) -> EqualizerMatrix:
    """Projection-space equalizer (jammer term removed by the projection)."""
    return EqualizerMatrix(
        w=_equalizer(h_tilde, None, spec, gains, n0, es), method=MethodKind.CHOPS
    )


def lmmse_matrix(
    h_hat: np.ndarray,
    spec: QuantizerSpec,
    gains: GainMatrix,
    n0: float,
    es: float,
) -> EqualizerMatrix:
    """Quantization-aware LMMSE without any jammer mitigation."""
    return EqualizerMatrix(
        w=_equalizer(h_hat, None, spec, gains, n0, es), method=MethodKind.LMMSE
    )


def genie_projection(j: np.ndarray) -> ProjectionMatrix:
    """Exact projector onto the orthogonal complement of the jammer channel."""
    j = np.asarray(j)
    norm2 = float(np.sum(np.abs(j) ** 2))
    if norm2 == 0:
        raise ValueError("genie projection needs a nonzero jammer channel")
    return ProjectionMatrix(p=np.eye(j.shape[0]) - np.outer(j, j.conj()) / norm2)


def genie_covariance(j: np.ndarray, ej: float) -> np.ndarray:
    """Exact interference covariance Ej * j j^H."""
    j = np.asarray(j)
    return ej * np.outer(j, j.conj())


def genie_baselines(
    kind: MethodKind,
    h_est: np.ndarray,
    j_true: np.ndarray,
    ej: float,
    spec: QuantizerSpec,
    gains: GainMatrix,
    n0: float,
    es: float,
) -> EqualizerMatrix:
    """Equalizer for the genie-aided baselines.

    GENIE_IAN runs the soft-nulling formula with the exact covariance
    Ej*j j^H; GENIE_POS runs the projection-space formula, where ``h_est``
    must already be the estimate obtained through the exact projector.
    """
    if j_true is None:
        raise ValueError("genie baselines require the true jammer channel")
    if kind is MethodKind.GENIE_IAN:
        eq = snips_matrix(h_est, genie_covariance(j_true, ej), spec, gains, n0, es)
    elif kind is MethodKind.GENIE_POS:
        eq = chops_matrix(h_est, spec, gains, n0, es)
    else:
        raise ValueError(f"{kind} is not a genie baseline")
    return EqualizerMatrix(w=eq.w, method=kind)


def detect(w: EqualizerMatrix, r: np.ndarray) -> np.ndarray:
    """Soft symbol estimates s = W r (CHOPS callers project r first)."""
    r = np.asarray(r)
    if r.shape[0] != w.w.shape[1]:
        raise ValueError("receive vector length does not match the equalizer")
    return w.w @ r


def slice_symbols(
    s_soft: np.ndarray, constellation: Constellation
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-point hard decisions and their Gray-labeled bits.

    Returns (hard symbols, bits) where bits has one trailing axis of length
    bits_per_symbol.  Distance ties take the lowest point index.
    """
    s_soft = np.asarray(s_soft)
    d2 = np.abs(s_soft[..., None] - constellation.points) ** 2
    idx = np.argmin(d2, axis=-1)  # first occurrence wins ties
    return constellation.points[idx], constellation.labels[idx]


def map_bits_to_symbols(bits: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Gray-labeled modulation: bits (..., bits_per_symbol) -> symbols (...)."""
    k = constellation.bits_per_symbol
    bits = np.asarray(bits)
    if bits.shape[-1] != k:
        raise ValueError(f"expected trailing bit axis of length {k}")
    weights = 1 << np.arange(k - 1, -1, -1)
    return constellation.point_of_label[bits @ weights]


def draw_data_symbols(
    rng: np.random.Generator, constellation: Constellation, shape: tuple[int, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform random symbols of the given shape; returns (symbols, bits)."""
    bits = rng.integers(0, 2, size=shape + (constellation.bits_per_symbol,))
    return map_bits_to_symbols(bits, constellation), bits
