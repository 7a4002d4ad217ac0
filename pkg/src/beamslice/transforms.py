"""Beam-slicing transforms: per-cluster unitary matrices with phase rotations.

The array is partitioned into C clusters of S adjacent antennas (B = C*S).
Cluster c applies V_c = T * diag(1, e^{-i*phi_c}, ..., e^{-i*phi_c*(S-1)})
where T is an S x S unitary base transform (DFT by default) and phi_c is the
cluster's rotation angle.  Stacking the blocks gives the block-diagonal
unitary V; with uniformly-strided default rotations phi_c = (2*pi/B)*(c-1)
the DFT variant covers all B beamspace frequencies exactly once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg


class TransformKind(enum.Enum):
    DFT = "dft"
    HAAR = "haar"
    HADAMARD = "hadamard"
    HARTLEY = "hartley"
    DCT = "dct"
    NOISELET = "noiselet"
    IDENTITY = "identity"

    @classmethod
    def from_string(cls, name: str) -> "TransformKind":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown transform {name!r}; expected one of {valid}")


_POW2_KINDS = {TransformKind.HAAR, TransformKind.HADAMARD, TransformKind.NOISELET}


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _haar_matrix(s: int) -> np.ndarray:
    # Orthonormal Haar: H_1 = [1]; H_{2n} stacks scaled averages/differences.
    h = np.array([[1.0]])
    while h.shape[0] < s:
        n = h.shape[0]
        top = np.kron(h, [1.0, 1.0])
        bot = np.kron(np.eye(n), [1.0, -1.0])
        h = np.vstack([top, bot]) / np.sqrt(2.0)
    return h


def _noiselet_matrix(s: int) -> np.ndarray:
    # Dyadic recursive construction from the unitary 2x2 base
    # (1/2)*[[1-i, 1+i], [1+i, 1-i]]; larger sizes via Kronecker products.
    base = 0.5 * np.array([[1 - 1j, 1 + 1j], [1 + 1j, 1 - 1j]])
    n = np.array([[1.0 + 0j]])
    while n.shape[0] < s:
        n = np.kron(base, n)
    return n


def build_base_transform(kind: TransformKind, s: int) -> np.ndarray:
    """S x S unitary base transform of the requested kind.

    Real transforms (Haar, Hadamard, Hartley, DCT) are returned as real
    orthogonal matrices embedded in complex dtype.  Haar, Hadamard, and
    Noiselet require S to be a power of two.
    """
    if s < 1:
        raise ValueError("transform size must be >= 1")
    if kind in _POW2_KINDS and not _is_pow2(s):
        raise ValueError(f"{kind.value} transform requires a power-of-two size, got {s}")
    if kind is TransformKind.DFT:
        k = np.arange(s)
        t = np.exp(-2j * np.pi * np.outer(k, k) / s) / np.sqrt(s)
    elif kind is TransformKind.HADAMARD:
        t = scipy.linalg.hadamard(s).astype(float) / np.sqrt(s)
    elif kind is TransformKind.HAAR:
        t = _haar_matrix(s)
    elif kind is TransformKind.HARTLEY:
        k = np.arange(s)
        arg = 2.0 * np.pi * np.outer(k, k) / s
        t = (np.cos(arg) + np.sin(arg)) / np.sqrt(s)
    elif kind is TransformKind.DCT:
        t = scipy.fft.dct(np.eye(s), axis=0, norm="ortho")
    elif kind is TransformKind.NOISELET:
        t = _noiselet_matrix(s)
    elif kind is TransformKind.IDENTITY:
        t = np.eye(s)
    else:  # pragma: no cover
        raise ValueError(f"unhandled transform kind {kind}")
    return np.ascontiguousarray(t.astype(complex))


def default_rotations(b: int, c: int) -> np.ndarray:
    """Uniformly-strided cluster rotations phi_c = (2*pi/B)*(c-1), c=1..C."""
    if c < 1 or b % c != 0:
        raise ValueError(f"cluster count {c} must divide antenna count {b}")
    return 2.0 * np.pi / b * np.arange(c)


@dataclass
class BeamSlicer:
    """Block-diagonal unitary beam-slicing transform.

    ``blocks`` holds the C per-cluster S x S matrices; ``apply`` multiplies
    cluster-wise, which is O(B*S) per vector instead of O(B^2).
    """

    b: int
    c: int
    s: int
    kind: TransformKind
    phis: np.ndarray
    blocks: np.ndarray  # (C, S, S) complex

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Transform a length-B vector or B x T matrix into the slice domain."""
        y = np.asarray(y)
        if y.shape[0] != self.b:
            raise ValueError(f"expected leading dimension {self.b}, got {y.shape[0]}")
        if y.ndim == 1:
            parts = y.reshape(self.c, self.s, 1)
            out = np.matmul(self.blocks, parts)
            return out.reshape(self.b)
        if y.ndim == 2:
            parts = y.reshape(self.c, self.s, y.shape[1])
            out = np.matmul(self.blocks, parts)
            return out.reshape(self.b, y.shape[1])
        raise ValueError("apply expects a vector or a matrix")

    def matrix(self) -> np.ndarray:
        """Dense B x B block-diagonal matrix V (for tests and small B)."""
        return scipy.linalg.block_diag(*self.blocks)


def build_beamslicer(
    kind: TransformKind,
    s: int,
    b: int,
    phis: np.ndarray | None = None,
) -> BeamSlicer:
    """Assemble the beam slicer for cluster size ``s`` on a ``b``-antenna array.

    ``phis`` defaults to the uniformly-strided rotations; pass zeros for
    unrotated clusters.  Block c is T * diag(e^{-i*phi_c*k}, k=0..S-1).
    """
    if b % s != 0:
        raise ValueError(f"antenna count {b} not divisible by cluster size {s}")
    c = b // s
    if phis is None:
        phis = default_rotations(b, c)
    phis = np.asarray(phis, dtype=float)
    if phis.shape != (c,):
        raise ValueError(f"expected {c} rotation angles, got shape {phis.shape}")
    t = build_base_transform(kind, s)
    ramps = np.exp(-1j * np.outer(phis, np.arange(s)))  # (C, S)
    blocks = t[None, :, :] * ramps[:, None, :]
    return BeamSlicer(b=b, c=c, s=s, kind=kind, phis=phis, blocks=blocks)


def effective_beam_frequencies(slicer: BeamSlicer) -> np.ndarray:
    """Angular frequency of each slice-domain output row (DFT kind only).

    Output (c, k) is a sampled sinusoid of frequency 2*pi*k/S + phi_c, taken
    modulo 2*pi.  With default rotations the B outputs cover the multiset
    {2*pi*m/B : m=0..B-1} exactly once.
    """
    if slicer.kind is not TransformKind.DFT:
        raise ValueError("beam frequencies are defined for the DFT kind only")
    base = 2.0 * np.pi * np.arange(slicer.s) / slicer.s
    freqs = (slicer.phis[:, None] + base[None, :]) % (2.0 * np.pi)
    return freqs.reshape(slicer.b)
