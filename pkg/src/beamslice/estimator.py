"""Jammer covariance, orthogonal-complement projection, and channel estimation.

The jammer's interference statistics come from a UE-silent training phase:
the quantized receive matrix R_J gives the covariance estimate
C_hat = (1/N) R_J R_J^H, whose normalized form I - C_hat/tr(C_hat)
approximates the projector onto the orthogonal complement of the jammer
channel (exact in the noiseless unquantized rank-1 case).  UE channels are
estimated with a pilot-based LS step from orthogonal pilots; CHOPS projects
the quantized pilot receive matrix before the LS step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantizer import GainMatrix


class NoJammerDetectedError(RuntimeError):
    """Covariance trace below threshold; caller should fall back to P = I."""


@dataclass
class JammerStats:
    """Covariance estimate C_hat (B x B), its gain matrix, and slot count."""

    c_hat: np.ndarray
    g_j: GainMatrix
    n_slots: int


@dataclass
class ChannelEstimate:
    """LS channel estimate (projected for CHOPS) plus the pilot gain matrix."""

    h_hat: np.ndarray
    g_p: GainMatrix
    projected: bool = False


@dataclass
class ProjectionMatrix:
    """Hermitian B x B estimate of the jammer-nulling projector."""

    p: np.ndarray


def pilot_matrix(u: int, es: float = 1.0) -> np.ndarray:
    """U x U orthogonal pilot block: sqrt(U*es) * F_U.

    Every entry has modulus sqrt(es) and S_P S_P^H = U*es*I, so the LS
    estimator reduces to a single scaled correlation.
    """
    if u < 1:
        raise ValueError("need at least one pilot sequence")
    k = np.arange(u)
    f = np.exp(-2j * np.pi * np.outer(k, k) / u) / np.sqrt(u)
    return np.sqrt(u * es) * f


def estimate_jammer_covariance(r_j: np.ndarray, n: int) -> np.ndarray:
    """Sample covariance C_hat = (1/N) R_J R_J^H from the UE-silent phase."""
    r_j = np.asarray(r_j)
    if n < 1:
        raise ValueError("need at least one jammer training slot")
    if r_j.ndim != 2 or r_j.shape[1] != n:
        raise ValueError(f"expected a B x {n} receive matrix, got {r_j.shape}")
    return r_j @ r_j.conj().T / n


def estimate_projection(
    c_hat: np.ndarray, trace_threshold: float | None = None
) -> ProjectionMatrix:
    """Projector estimate P_hat = I - C_hat / tr(C_hat).

    Raises NoJammerDetectedError when the trace falls below the threshold
    (default 1e-12 * B); the caller substitutes the identity.
    """
    c_hat = np.asarray(c_hat)
    b = c_hat.shape[0]
    if trace_threshold is None:
        trace_threshold = 1e-12 * b
    tr = float(np.trace(c_hat).real)
    if tr <= trace_threshold:
        raise NoJammerDetectedError(
            f"covariance trace {tr:g} below threshold {trace_threshold:g}"
        )
    return ProjectionMatrix(p=np.eye(b) - c_hat / tr)


def ls_channel_estimate(r_p: np.ndarray, s_p: np.ndarray, u: int, es: float) -> np.ndarray:
    """Pilot LS estimate H_hat = (1/(U*es)) R_P S_P^H (orthogonal pilots)."""
    r_p = np.asarray(r_p)
    if r_p.shape[1] != u or s_p.shape != (u, u):
        raise ValueError("pilot dimensions do not match the receive matrix")
    return r_p @ s_p.conj().T / (u * es)


def project_channel(p_hat: ProjectionMatrix, h_hat: np.ndarray) -> np.ndarray:
    """Apply the jammer-nulling projector to a channel estimate."""
    if p_hat.p.shape[1] != h_hat.shape[0]:
        raise ValueError("projection/channel dimension mismatch")
    return p_hat.p @ h_hat
