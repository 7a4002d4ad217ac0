"""Channel generation: placements, LoS / synthetic non-LoS channels, power levels.

The base station is a half-wavelength uniform linear array (ULA) with B
antennas.  UEs and the jammer are placed uniformly at random inside an
angular sector in front of the array, with a minimum pairwise angular
separation, at distances drawn uniformly from a configured range.

LoS channels are pure steering vectors scaled by free-space pathloss.
Non-LoS channels are a sum of L geometric cluster paths with complex
Gaussian gains, which spreads the column energy over more beamspace bins
than the LoS model.  Per-UE power control clamps the receive-power spread
to the configured window (+-3 dB by default, i.e. a max/min ratio of 4).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Total rejection-sampling draws before giving up on a placement.
MAX_PLACEMENT_ATTEMPTS = 10_000
# Consecutive failures on a single terminal before restarting from scratch.
_RESTART_AFTER = 1_000


class PlacementInfeasibleError(RuntimeError):
    """Rejection sampling exhausted its retry budget."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Static scenario geometry and transmit-side parameters.

    Angles are degrees, distances meters.  ``sector_halfwidth=60`` means a
    120-degree sector in front of the array.
    """

    B: int
    U: int
    sector_halfwidth: float = 60.0
    dist_min: float = 10.0
    dist_max: float = 100.0
    min_sep: float = 1.0
    power_control_db: float = 3.0
    pathloss_exponent: float = 2.0
    nlos_paths: int = 15
    nlos_angle_spread: float = 10.0
    es: float = 1.0
    constellation: str = "16qam"

    def __post_init__(self):
        if self.B < 1 or self.U < 1:
            raise ValueError("B and U must be positive")
        if self.U >= self.B:
            raise ValueError(f"need U < B, got U={self.U}, B={self.B}")
        if not self.dist_min < self.dist_max:
            raise ValueError("need dist_min < dist_max")
        if self.min_sep <= 0:
            raise ValueError("min_sep must be positive")
        if (self.U + 1) * self.min_sep >= 2 * self.sector_halfwidth:
            raise ValueError(
                f"placement infeasible: (U+1)*min_sep = {(self.U + 1) * self.min_sep} "
                f"does not fit in a {2 * self.sector_halfwidth} degree sector"
            )

    @property
    def power_ratio_max(self) -> float:
        """Max allowed ratio of per-UE receive powers (4 for +-3 dB)."""
        return 10.0 ** (2.0 * self.power_control_db / 10.0)


@dataclass(frozen=True)
class Placement:
    """UE and jammer positions (angles in degrees, distances in meters)."""

    ue_angles: np.ndarray
    ue_dists: np.ndarray
    jam_angle: float
    jam_dist: float


@dataclass
class ChannelRealization:
    """UE channel matrix H (B x U), jammer channel hj (B,), and placement."""

    H: np.ndarray
    hj: np.ndarray
    placement: Placement


@dataclass(frozen=True)
class NoiseJammerLevels:
    """Per-entry noise variance N0 and jammer symbol variance Ej."""

    n0: float
    ej: float

    def __post_init__(self):
        if not self.n0 > 0:
            raise ValueError("n0 must be positive")
        if self.ej < 0:
            raise ValueError("ej must be nonnegative")


def steering_vector(theta_deg: float, b: int) -> np.ndarray:
    """ULA steering vector for a wave incident at ``theta_deg`` degrees.

    Half-wavelength spacing: entry k is exp(-i*pi*k*sin(theta)), k=0..b-1,
    so every entry has unit modulus and ||a||^2 = b.
    """
    if b < 1:
        raise ValueError("antenna count must be >= 1")
    if abs(theta_deg) > 90.0:
        raise ValueError(f"angle {theta_deg} outside [-90, 90] degrees")
    phase = -np.pi * np.sin(np.deg2rad(theta_deg)) * np.arange(b)
    return np.exp(1j * phase)


def draw_placement(rng: np.random.Generator, cfg: ScenarioConfig) -> Placement:
    """Draw a random placement honoring the minimum angular separation.

    Angles are drawn one terminal at a time (jammer first), redrawing any
    candidate closer than ``cfg.min_sep`` to an already-accepted terminal.
    A whole-vector redraw would be hopeless at U=32 (acceptance ~3.6e-5),
    so redraws are per-terminal; every draw counts against a shared budget
    of MAX_PLACEMENT_ATTEMPTS, after which PlacementInfeasibleError is
    raised.  A stuck terminal triggers a full restart.
    """
    hw = cfg.sector_halfwidth
    n_total = cfg.U + 1
    attempts = 0
    while attempts < MAX_PLACEMENT_ATTEMPTS:
        accepted: list[float] = []
        fails = 0
        while len(accepted) < n_total and attempts < MAX_PLACEMENT_ATTEMPTS:
            cand = rng.uniform(-hw, hw)
            attempts += 1
            if all(abs(cand - a) >= cfg.min_sep for a in accepted):
                accepted.append(cand)
                fails = 0
            else:
                fails += 1
                if fails >= _RESTART_AFTER:
                    break  # dead-ended; restart placement from scratch
        if len(accepted) == n_total:
            dists = rng.uniform(cfg.dist_min, cfg.dist_max, size=n_total)
            return Placement(
                ue_angles=np.array(accepted[1:]),
                ue_dists=dists[1:],
                jam_angle=accepted[0],
                jam_dist=dists[0],
            )
    raise PlacementInfeasibleError(
        f"no valid placement after {MAX_PLACEMENT_ATTEMPTS} draws "
        f"(U={cfg.U}, min_sep={cfg.min_sep}, sector=+-{hw})"
    )


def _pathloss(dist: float | np.ndarray, cfg: ScenarioConfig) -> float | np.ndarray:
    # Free-space-style r^-alpha referenced to dist_min; absolute scale is
    # irrelevant downstream (SNR and rho renormalize), only spread matters.
    return (cfg.dist_min / np.asarray(dist, dtype=float)) ** cfg.pathloss_exponent


def _steering_matrix(angles_deg: np.ndarray, b: int) -> np.ndarray:
    # One column per angle; same functional form as steering_vector.
    phase = -np.pi * np.outer(np.arange(b), np.sin(np.deg2rad(angles_deg)))
    return np.exp(1j * phase)


def gen_los_channel(p: Placement, cfg: ScenarioConfig) -> ChannelRealization:
    """LoS channel: column u = sqrt(g_u) * steering(theta_u), power-controlled.

    The jammer column gets its pathloss but no power control (it does not
    cooperate with the BS).
    """
    gains = _pathloss(p.ue_dists, cfg)
    H = np.sqrt(gains)[None, :] * _steering_matrix(np.asarray(p.ue_angles), cfg.B)
    H = apply_power_control(H, cfg.power_ratio_max)
    hj = np.sqrt(_pathloss(p.jam_dist, cfg)) * steering_vector(p.jam_angle, cfg.B)
    return ChannelRealization(H=H, hj=hj, placement=p)


def _nlos_column(
    theta_deg: float, dist: float, cfg: ScenarioConfig, rng: np.random.Generator
) -> np.ndarray:
    L = cfg.nlos_paths
    # Gaussian angular offsets around the nominal direction, clipped to the
    # visible region of the array.
    offsets = rng.normal(0.0, cfg.nlos_angle_spread, size=L)
    angles = np.clip(theta_deg + offsets, -90.0, 90.0)
    path_gains = (rng.normal(size=L) + 1j * rng.normal(size=L)) / np.sqrt(2.0)
    col = _steering_matrix(angles, cfg.B) @ path_gains
    # E||col||^2 = pathloss * B, matching the LoS column norm in expectation.
    return np.sqrt(_pathloss(dist, cfg) / L) * col


def gen_nlos_channel(
    p: Placement, cfg: ScenarioConfig, rng: np.random.Generator
) -> ChannelRealization:
    """Synthetic non-LoS channel: L-path geometric cluster model per terminal.

    Each column sums ``cfg.nlos_paths`` steering vectors at angles spread
    around the nominal direction with i.i.d. CN(0,1) path gains, then gets
    the same pathloss scaling and power control as the LoS model.
    """
    H = np.stack(
        [_nlos_column(th, d, cfg, rng) for th, d in zip(p.ue_angles, p.ue_dists)],
        axis=1,
    )
    H = apply_power_control(H, cfg.power_ratio_max)
    hj = _nlos_column(p.jam_angle, p.jam_dist, cfg, rng)
    return ChannelRealization(H=H, hj=hj, placement=p)


def apply_power_control(H: np.ndarray, max_ratio: float = 4.0) -> np.ndarray:
    """Clamp per-column powers so max/min ||h_u||^2 <= max_ratio.

    Column powers are clipped into a window of ratio ``max_ratio`` centered
    (geometrically) on the existing spread, so columns are untouched when
    the spread already fits.  Directions are preserved.
    """
    powers = np.sum(np.abs(H) ** 2, axis=0)
    if np.any(powers == 0):
        raise ValueError("power control undefined for all-zero channel column")
    mid = np.sqrt(powers.max() * powers.min())
    r = np.sqrt(max_ratio)
    clamped = np.clip(powers, mid / r, mid * r)
    return H * np.sqrt(clamped / powers)


def solve_levels(
    H: np.ndarray,
    hj: np.ndarray,
    snr: float,
    rho: float,
    es: float,
) -> NoiseJammerLevels:
    """Noise and jammer variances implied by target SNR and relative power rho.

    SNR is defined as E||H s||^2 / E||n||^2 = es*||H||_F^2 / (B*n0), and the
    relative jammer power as rho = U*ej*||hj||^2 / (es*||H||_F^2); both are
    rearranged here for n0 and ej.  ``rho=0`` switches the jammer off.
    """
    h_frob2 = np.sum(np.abs(H) ** 2)
    hj_norm2 = np.sum(np.abs(hj) ** 2)
    if h_frob2 == 0 or hj_norm2 == 0:
        raise ValueError("solve_levels needs nonzero channel norms")
    if snr <= 0:
        raise ValueError("snr must be positive (linear scale)")
    B, U = H.shape
    n0 = es * h_frob2 / (B * snr)
    ej = rho * es * h_frob2 / (U * hj_norm2)
    return NoiseJammerLevels(n0=n0, ej=ej)
