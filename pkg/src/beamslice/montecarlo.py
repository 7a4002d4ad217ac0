"""Frame simulation, metric accumulation, parameter sweeps, rotation learning.

A trial simulates one channel realization through the three-phase frame:

1. jammer phase (UEs silent): learn G_J, quantize, estimate the jammer
   covariance;
2. pilot phase: learn G_P (frozen for the rest of the frame), quantize,
   LS-estimate the channel (CHOPS projects the quantized pilot receive
   matrix first);
3. data phase: quantize each receive vector with G_P, equalize, slice.

Randomness is drawn in the antenna domain in a fixed documented order
(jammer symbols, jammer-phase noise, pilot-phase jammer symbols, pilot
noise, data bits, data jammer symbols, data noise), so a pipeline with
cluster size S=1 consumes the identical stream as one with no transform.
Per-trial seeds come from a splittable counter-based scheme
(SeedSequence(base, spawn_key=(point, trial))), making sweeps reproducible
and independent of worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .chanmodel import (
    ChannelRealization,
    ScenarioConfig,
    draw_placement,
    gen_los_channel,
    gen_nlos_channel,
    solve_levels,
)
from .detector import (
    Constellation,
    DetectorMethod,
    MethodKind,
    chops_matrix,
    constellation_from_name,
    detect,
    genie_baselines,
    genie_projection,
    lmmse_matrix,
    slice_symbols,
    snips_matrix,
    map_bits_to_symbols,
)
from .estimator import (
    NoJammerDetectedError,
    ProjectionMatrix,
    estimate_jammer_covariance,
    estimate_projection,
    ls_channel_estimate,
    pilot_matrix,
)
from .quantizer import G_MAX_DEFAULT, QuantizerSpec, compquant, learn_gains, quantize
from .transforms import BeamSlicer, TransformKind, build_beamslicer, default_rotations

logger = logging.getLogger(__name__)

SERVED_RMSSE_THRESHOLD = 0.125  # 16-QAM EVM requirement

CSV_COLUMNS = (
    "scenario,method,domain,channel,transform,S,q,rho_db,snr_db,trials,"
    "ber,ber_ci_lo,ber_ci_hi,served_frac,mean_rmsse,seed,config_hash"
)


@dataclass(frozen=True)
class FrameConfig:
    """Everything one trial needs besides the channel realization and RNG."""

    scenario: ScenarioConfig
    method: DetectorMethod
    transform: TransformKind = TransformKind.DFT
    s: int = 8
    rotations: str | tuple[float, ...] = "default"  # "default" | "zero" | tuple
    q: int | None = 4
    snr_db: float = 10.0
    rho_db: float = 25.0  # -inf switches the jammer off
    channel: str = "los"
    n_jammer_slots: int = 32
    n_data_slots: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_jammer_slots < 1 or self.n_data_slots < 1:
            raise ValueError("slot counts must be >= 1")
        if self.channel not in ("los", "nlos"):
            raise ValueError(f"channel must be 'los' or 'nlos', got {self.channel!r}")
        if self.method.domain == "slice" and self.scenario.B % self.s != 0:
            raise ValueError("cluster size must divide the antenna count")

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def rho(self) -> float:
        return 0.0 if math.isinf(self.rho_db) and self.rho_db < 0 else 10.0 ** (self.rho_db / 10.0)

    @property
    def effective_s(self) -> int:
        return 1 if self.method.domain == "ant" else self.s

    def rotation_angles(self) -> np.ndarray:
        c = self.scenario.B // self.effective_s
        if isinstance(self.rotations, str):
            if self.rotations == "default":
                return default_rotations(self.scenario.B, c)
            if self.rotations == "zero":
                return np.zeros(c)
            raise ValueError(f"unknown rotation preset {self.rotations!r}")
        return np.asarray(self.rotations, dtype=float)

    def build_slicer(self) -> BeamSlicer | None:
        """None in the antenna domain (no transform applied at all)."""
        if self.method.domain == "ant":
            return None
        return build_beamslicer(
            self.transform, self.s, self.scenario.B, self.rotation_angles()
        )


@dataclass
class FrameProducts:
    """Intermediate estimation products, kept only when requested."""

    g_j: object | None
    g_p: object
    c_hat: np.ndarray | None
    h_est: np.ndarray
    proj: ProjectionMatrix | None
    equalizer: object


@dataclass
class FrameResult:
    """Raw per-trial outputs."""

    bit_errors: int
    n_bits: int
    rmsse: np.ndarray  # (U,)
    tx_symbols: np.ndarray  # (U, n)
    soft_symbols: np.ndarray  # (U, n)
    products: FrameProducts | None = None


def _cgauss(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian with per-entry variance ``var``.

    Draws are consumed even for var=0 so the stream stays aligned across
    jammer-on/off configurations.
    """
    z = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return np.sqrt(var / 2.0) * z


def compute_rmsse(tx_symbols: np.ndarray, soft_symbols: np.ndarray) -> np.ndarray:
    """Per-UE root mean-square symbol error over the data slots.

    rmsse_u = sqrt(sum_k |s*_uk - s_uk|^2 / sum_k |s_uk|^2).
    """
    tx = np.atleast_2d(tx_symbols)
    soft = np.atleast_2d(soft_symbols)
    if tx.shape != soft.shape:
        raise ValueError("symbol arrays must have matching shapes")
    denom = np.sum(np.abs(tx) ** 2, axis=1)
    if np.any(denom == 0):
        raise ValueError("RMSSE undefined for an all-zero transmit sequence")
    return np.sqrt(np.sum(np.abs(soft - tx) ** 2, axis=1) / denom)


def served_fraction(rmsse_samples: np.ndarray, threshold: float = SERVED_RMSSE_THRESHOLD) -> float:
    """Fraction of (UE, trial) samples with RMSSE strictly below threshold."""
    samples = np.asarray(rmsse_samples)
    if samples.size == 0:
        raise ValueError("no RMSSE samples")
    return float(np.mean(samples < threshold))


def generate_channel(
    cfg: FrameConfig, rng: np.random.Generator
) -> ChannelRealization:
    placement = draw_placement(rng, cfg.scenario)
    if cfg.channel == "los":
        return gen_los_channel(placement, cfg.scenario)
    return gen_nlos_channel(placement, cfg.scenario, rng)


def simulate_frame(
    cfg: FrameConfig,
    channel: ChannelRealization,
    rng: np.random.Generator,
    keep_products: bool = False,
) -> FrameResult:
    """Run the three-phase frame for one channel realization."""
    scen = cfg.scenario
    B, U = channel.H.shape
    es = scen.es
    cons = constellation_from_name(scen.constellation, es)
    levels = solve_levels(channel.H, channel.hj, cfg.snr, cfg.rho, es)
    n0, ej = levels.n0, levels.ej
    spec = QuantizerSpec.create(cfg.q)
    slicer = cfg.build_slicer()
    kind = cfg.method.kind

    def to_domain(x):
        return slicer.apply(x) if slicer is not None else x

    H, hj = channel.H, channel.hj
    n_j = cfg.n_jammer_slots

    # Jammer phase: UEs silent, jammer sends i.i.d. CN(0, Ej) symbols.
    sj_train = _cgauss(rng, n_j, ej)
    y_j = hj[:, None] * sj_train[None, :] + _cgauss(rng, (B, n_j), n0)
    yj_hat = to_domain(y_j)
    c_hat = None
    g_j = None
    if kind in (MethodKind.SNIPS, MethodKind.CHOPS):
        g_j = learn_gains(yj_hat, g_max=G_MAX_DEFAULT)
        r_j = compquant(yj_hat, g_j, spec)
        c_hat = estimate_jammer_covariance(r_j, n_j)

    # Pilot phase: orthogonal pilots with the jammer still transmitting.
    s_p = pilot_matrix(U, es)
    w = _cgauss(rng, U, ej)
    y_p = H @ s_p + hj[:, None] * w[None, :] + _cgauss(rng, (B, U), n0)
    yp_hat = to_domain(y_p)
    g_p = learn_gains(yp_hat, g_max=G_MAX_DEFAULT)
    r_p = compquant(yp_hat, g_p, spec)

    proj: ProjectionMatrix | None = None
    if kind is MethodKind.CHOPS:
        try:
            proj = estimate_projection(c_hat)
        except NoJammerDetectedError:
            proj = ProjectionMatrix(p=np.eye(B))
    elif kind is MethodKind.GENIE_POS:
        proj = genie_projection(to_domain(hj))

    if proj is not None:
        r_p = proj.p @ r_p
    h_est = ls_channel_estimate(r_p, s_p, U, es)

    if kind is MethodKind.SNIPS:
        eq = snips_matrix(h_est, c_hat, spec, g_p, n0, es)
    elif kind is MethodKind.CHOPS:
        eq = chops_matrix(h_est, spec, g_p, n0, es)
    elif kind is MethodKind.LMMSE:
        eq = lmmse_matrix(h_est, spec, g_p, n0, es)
    else:
        eq = genie_baselines(kind, h_est, to_domain(hj), ej, spec, g_p, n0, es)

    # Data phase: all slots batched; G_P stays frozen.
    n_d = cfg.n_data_slots
    tx_symbols, tx_bits = _draw_symbols(rng, cons, (U, n_d))
    sj_data = _cgauss(rng, n_d, ej)
    y_d = H @ tx_symbols + hj[:, None] * sj_data[None, :] + _cgauss(rng, (B, n_d), n0)
    r = compquant(to_domain(y_d), g_p, spec)
    if proj is not None:
        r = proj.p @ r
    soft = detect(eq, r)
    _, rx_bits = slice_symbols(soft, cons)

    products = None
    if keep_products:
        products = FrameProducts(
            g_j=g_j, g_p=g_p, c_hat=c_hat, h_est=h_est, proj=proj, equalizer=eq
        )
    return FrameResult(
        bit_errors=int(np.sum(rx_bits != tx_bits)),
        n_bits=int(tx_bits.size),
        rmsse=compute_rmsse(tx_symbols, soft),
        tx_symbols=tx_symbols,
        soft_symbols=soft,
        products=products,
    )


def _draw_symbols(rng, cons: Constellation, shape):
    bits = rng.integers(0, 2, size=shape + (cons.bits_per_symbol,))
    return map_bits_to_symbols(bits, cons), bits


def run_trial(
    cfg: FrameConfig, rng: np.random.Generator, keep_products: bool = False
) -> FrameResult:
    """Draw placement + channel, then simulate one frame."""
    return simulate_frame(cfg, generate_channel(cfg, rng), rng, keep_products)


def trial_seed(base_seed: int, point_index: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(point_index, trial_index))


# ---------------------------------------------------------------------------
# Metric accumulation


@dataclass(frozen=True)
class TrialOutcome:
    bit_errors: int
    n_bits: int
    rmsse: tuple[float, ...]

    @classmethod
    def from_result(cls, res: FrameResult) -> "TrialOutcome":
        return cls(res.bit_errors, res.n_bits, tuple(res.rmsse.tolist()))


@dataclass
class PartialMetrics:
    """Per-trial outcomes keyed by trial index; merge is a commutative monoid."""

    outcomes: dict[int, TrialOutcome] = field(default_factory=dict)

    def add(self, trial_index: int, outcome: TrialOutcome) -> None:
        if trial_index in self.outcomes:
            raise ValueError(f"duplicate trial index {trial_index}")
        self.outcomes[trial_index] = outcome

    def merge(self, other: "PartialMetrics") -> "PartialMetrics":
        overlap = self.outcomes.keys() & other.outcomes.keys()
        if overlap:
            raise ValueError(f"overlapping trial indices: {sorted(overlap)}")
        merged = dict(self.outcomes)
        merged.update(other.outcomes)
        return PartialMetrics(outcomes=merged)

    def totals(self) -> tuple[int, int, np.ndarray]:
        """(bit_errors, n_bits, rmsse samples) reduced in trial order."""
        errors = bits = 0
        samples = []
        for idx in sorted(self.outcomes):
            out = self.outcomes[idx]
            errors += out.bit_errors
            bits += out.n_bits
            samples.append(out.rmsse)
        rmsse = np.concatenate(samples) if samples else np.array([])
        return errors, bits, rmsse


def wilson_interval(successes: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        return (math.nan, math.nan)
    p = successes / total
    denom = 1.0 + z**2 / total
    center = (p + z**2 / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z**2 / (4 * total**2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class MetricRecord:
    """One sweep-point result with full experiment provenance."""

    scenario: str
    cfg: FrameConfig
    trials: int
    bit_errors: int
    n_bits: int
    rmsse_samples: np.ndarray
    seed: int
    config_hash: str
    error: str | None = None

    @property
    def ber(self) -> float:
        return self.bit_errors / self.n_bits if self.n_bits else math.nan

    @property
    def ber_ci(self) -> tuple[float, float]:
        return wilson_interval(self.bit_errors, self.n_bits)

    @property
    def served_frac(self) -> float:
        if self.rmsse_samples.size == 0:
            return math.nan
        return served_fraction(self.rmsse_samples)

    @property
    def mean_rmsse(self) -> float:
        return float(np.mean(self.rmsse_samples)) if self.rmsse_samples.size else math.nan

    def to_csv_row(self) -> str:
        cfg = self.cfg
        lo, hi = self.ber_ci
        fields = [
            self.scenario,
            cfg.method.kind.value,
            cfg.method.domain,
            cfg.channel,
            cfg.transform.value,
            str(cfg.effective_s),
            "inf" if cfg.q is None else str(cfg.q),
            _fmt(cfg.rho_db),
            _fmt(cfg.snr_db),
            str(self.trials),
            _fmt(self.ber),
            _fmt(lo),
            _fmt(hi),
            _fmt(self.served_frac),
            _fmt(self.mean_rmsse),
            str(self.seed),
            self.config_hash,
        ]
        return ",".join(fields)


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.10g}"


def config_hash(cfg: FrameConfig, trials: int, seed: int) -> str:
    payload = {
        "scenario": {
            "B": cfg.scenario.B,
            "U": cfg.scenario.U,
            "sector_halfwidth": cfg.scenario.sector_halfwidth,
            "dist_min": cfg.scenario.dist_min,
            "dist_max": cfg.scenario.dist_max,
            "min_sep": cfg.scenario.min_sep,
            "power_control_db": cfg.scenario.power_control_db,
            "pathloss_exponent": cfg.scenario.pathloss_exponent,
            "nlos_paths": cfg.scenario.nlos_paths,
            "nlos_angle_spread": cfg.scenario.nlos_angle_spread,
            "es": cfg.scenario.es,
            "constellation": cfg.scenario.constellation,
        },
        "method": cfg.method.as_string(),
        "transform": cfg.transform.value,
        "s": cfg.effective_s,
        "rotations": list(cfg.rotations) if not isinstance(cfg.rotations, str) else cfg.rotations,
        "q": cfg.q,
        "snr_db": cfg.snr_db,
        "rho_db": cfg.rho_db,
        "channel": cfg.channel,
        "n_jammer_slots": cfg.n_jammer_slots,
        "n_data_slots": cfg.n_data_slots,
        "trials": trials,
        "seed": seed,
    }
    text = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Sweep execution


def _trial_job(args) -> tuple[int, TrialOutcome]:
    cfg, base_seed, point_index, trial_index = args
    rng = np.random.default_rng(trial_seed(base_seed, point_index, trial_index))
    return trial_index, TrialOutcome.from_result(run_trial(cfg, rng))


def run_point(
    cfg: FrameConfig,
    trials: int,
    base_seed: int,
    point_index: int = 0,
    workers: int = 1,
    scenario_name: str = "",
) -> MetricRecord:
    """Simulate ``trials`` independent frames of one configuration.

    Results are keyed by trial index, so any worker count and scheduling
    order produce an identical record.  Any trial error aborts the point
    and yields a failure record with NaN metrics.
    """
    name = scenario_name or f"B{cfg.scenario.B}U{cfg.scenario.U}"
    chash = config_hash(cfg, trials, base_seed)
    jobs = [(cfg, base_seed, point_index, t) for t in range(trials)]
    partial = PartialMetrics()
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for idx, outcome in pool.map(_trial_job, jobs, chunksize=8):
                    partial.add(idx, outcome)
        else:
            for job in jobs:
                idx, outcome = _trial_job(job)
                partial.add(idx, outcome)
    except Exception as exc:  # noqa: BLE001 - failure row carries the reason
        logger.error("point %d failed: %s", point_index, exc)
        return MetricRecord(
            scenario=name,
            cfg=cfg,
            trials=0,
            bit_errors=0,
            n_bits=0,
            rmsse_samples=np.array([]),
            seed=base_seed,
            config_hash=chash,
            error=str(exc),
        )
    errors, bits, rmsse = partial.totals()
    return MetricRecord(
        scenario=name,
        cfg=cfg,
        trials=trials,
        bit_errors=errors,
        n_bits=bits,
        rmsse_samples=rmsse,
        seed=base_seed,
        config_hash=chash,
    )


@dataclass
class SweepSpec:
    """Base frame configuration plus grid axes (cartesian product)."""

    base: FrameConfig
    axes: dict[str, list]
    trials: int
    base_seed: int
    workers: int = 1
    scenario_name: str = ""

    def points(self) -> list[FrameConfig]:
        if any(len(v) == 0 for v in self.axes.values()):
            raise ValueError("sweep grid axis with no values")
        configs = [self.base]
        for key, values in self.axes.items():
            configs = [_override(cfg, key, v) for cfg in configs for v in values]
        return configs


def _override(cfg: FrameConfig, key: str, value) -> FrameConfig:
    if key == "method":
        method, adc = value if isinstance(value, tuple) else _parse_method(value)
        cfg = replace(cfg, method=method)
        if adc != "unset":
            cfg = replace(cfg, q=adc)
        return cfg
    if key == "transform":
        return replace(cfg, transform=TransformKind.from_string(value))
    if key == "q":
        return replace(cfg, q=None if value in (None, "inf") else int(value))
    if key in ("s", "snr_db", "rho_db", "rotations", "channel", "n_jammer_slots", "n_data_slots"):
        return replace(cfg, **{key: value})
    raise ValueError(f"unknown sweep axis {key!r}")


def _parse_method(value: str):
    from .detector import parse_method_string

    return parse_method_string(value)


def run_sweep(spec: SweepSpec) -> list[MetricRecord]:
    """One MetricRecord per grid point, in grid order."""
    records = []
    for point_index, cfg in enumerate(spec.points()):
        records.append(
            run_point(
                cfg,
                trials=spec.trials,
                base_seed=spec.base_seed,
                point_index=point_index,
                workers=spec.workers,
                scenario_name=spec.scenario_name,
            )
        )
    return records


def records_to_csv(records: list[MetricRecord]) -> str:
    lines = [CSV_COLUMNS]
    lines.extend(rec.to_csv_row() for rec in records)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Rotation learning (coordinate descent over per-cluster angles)


@dataclass(frozen=True)
class RotationLearnConfig:
    """Coordinate-descent setup for learning per-cluster rotation angles."""

    scenario: ScenarioConfig
    s: int = 8
    q: int | None = 4
    snr_db: float = 20.0
    rho_db: float = 25.0
    grid_points: int = 148
    sweeps: int = 50
    train_channels: int = 1000
    n_jammer_slots: int = 32
    channel: str = "los"
    transform: TransformKind = TransformKind.DFT
    seed: int = 0
    init: str = "default"  # "default" (uniform strides) | "zero"

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("need at least two grid points")
        if self.sweeps < 1:
            raise ValueError("need at least one sweep")
        if self.scenario.B % self.s != 0:
            raise ValueError("cluster size must divide the antenna count")

    @property
    def clusters(self) -> int:
        return self.scenario.B // self.s

    @property
    def angle_range(self) -> float:
        # Objective is periodic in each phi with period 2*pi/S = (2*pi/B)*C.
        return 2.0 * np.pi * self.clusters / self.scenario.B


@dataclass
class TrainingSet:
    """Frozen antenna-domain realizations shared by all objective evaluations.

    ``y_jam``/``y_pilot``/``y_data`` hold the unquantized receive matrices
    (one transmit symbol per UE per channel), so evaluating a candidate
    rotation vector only re-runs transform, quantization, estimation, and
    detection.
    """

    y_jam: np.ndarray  # (n, B, N)
    y_pilot: np.ndarray  # (n, B, U)
    y_data: np.ndarray  # (n, B)
    tx_bits: np.ndarray  # (n, U, k)
    n0: np.ndarray  # (n,)
    s_p: np.ndarray  # (U, U)
    cons: Constellation
    es: float


def build_training_set(cfg: RotationLearnConfig) -> TrainingSet:
    """Draw and freeze the training channels and all signal realizations.

    Per-channel draws follow the same order as ``simulate_frame`` with one
    data slot, using SeedSequence(seed, spawn_key=(index,)) streams.
    """
    scen = cfg.scenario
    B, U = scen.B, scen.U
    es = scen.es
    cons = constellation_from_name(scen.constellation, es)
    s_p = pilot_matrix(U, es)
    rho = 0.0 if math.isinf(cfg.rho_db) and cfg.rho_db < 0 else 10.0 ** (cfg.rho_db / 10.0)
    snr = 10.0 ** (cfg.snr_db / 10.0)
    n = cfg.train_channels
    n_j = cfg.n_jammer_slots

    y_jam = np.empty((n, B, n_j), dtype=complex)
    y_pilot = np.empty((n, B, U), dtype=complex)
    y_data = np.empty((n, B), dtype=complex)
    tx_bits = np.empty((n, U, cons.bits_per_symbol), dtype=np.int64)
    n0_all = np.empty(n)

    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(i,)))
        placement = draw_placement(rng, scen)
        if cfg.channel == "los":
            ch = gen_los_channel(placement, scen)
        else:
            ch = gen_nlos_channel(placement, scen, rng)
        levels = solve_levels(ch.H, ch.hj, snr, rho, es)
        n0_all[i] = levels.n0
        sj = _cgauss(rng, n_j, levels.ej)
        y_jam[i] = ch.hj[:, None] * sj[None, :] + _cgauss(rng, (B, n_j), levels.n0)
        w = _cgauss(rng, U, levels.ej)
        y_pilot[i] = (
            ch.H @ s_p + ch.hj[:, None] * w[None, :] + _cgauss(rng, (B, U), levels.n0)
        )
        sym, bits = _draw_symbols(rng, cons, (U, 1))
        tx_bits[i] = bits[:, 0, :]
        sj_d = _cgauss(rng, 1, levels.ej)
        y_data[i] = (
            ch.H @ sym[:, 0] + ch.hj * sj_d[0] + _cgauss(rng, B, levels.n0)
        )
    return TrainingSet(
        y_jam=y_jam,
        y_pilot=y_pilot,
        y_data=y_data,
        tx_bits=tx_bits,
        n0=n0_all,
        s_p=s_p,
        cons=cons,
        es=es,
    )


def _batched_compquant(y: np.ndarray, g: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    # y: (n, B, T), g: (n, B).  Same math as quantizer.compquant per channel.
    if spec.is_infinite:
        return y
    gs = g[:, :, None]
    scaled = gs * y
    return (quantize(scaled.real, spec.q, spec.delta) + 1j * quantize(scaled.imag, spec.q, spec.delta)) / gs


def _batched_gains(y: np.ndarray) -> np.ndarray:
    # (n, B, T) -> (n, B); thermal noise keeps training rows nonzero.
    energy = np.sum(np.abs(y) ** 2, axis=2)
    return np.sqrt(2.0 * y.shape[2] / energy)


def training_ber(
    tset: TrainingSet, blocks: np.ndarray, spec: QuantizerSpec
) -> float:
    """Uncoded SNIPS BER over the frozen training set for given V blocks.

    ``blocks`` is the (C, S, S) per-cluster transform stack.  This is the
    batched counterpart of running ``simulate_frame`` per channel; both
    paths are checked against each other in the test suite.
    """
    n, B, n_j = tset.y_jam.shape
    U = tset.y_pilot.shape[2]
    c, s, _ = blocks.shape

    def to_domain(y):
        parts = y.reshape(n, c, s, -1)
        return np.matmul(blocks[None], parts).reshape(n, B, -1)

    yj = to_domain(tset.y_jam)
    g_j = _batched_gains(yj)
    r_j = _batched_compquant(yj, g_j, spec)
    c_hat = np.matmul(r_j, r_j.conj().transpose(0, 2, 1)) / n_j

    yp = to_domain(tset.y_pilot)
    g_p = _batched_gains(yp)
    r_p = _batched_compquant(yp, g_p, spec)
    h_hat = np.matmul(r_p, tset.s_p.conj().T[None]) / (U * tset.es)

    yd = to_domain(tset.y_data[:, :, None])
    r_d = _batched_compquant(yd, g_p, spec)

    a = np.matmul(h_hat, h_hat.conj().transpose(0, 2, 1)) + c_hat / tset.es
    diag = tset.n0[:, None] * np.ones((1, B))
    if not spec.is_infinite:
        diag = diag + 2.0 * spec.d / (spec.gamma**2 * g_p**2)
    idx = np.arange(B)
    a[:, idx, idx] += diag / tset.es

    x = np.linalg.solve(a, r_d)
    soft = np.matmul(h_hat.conj().transpose(0, 2, 1), x)[:, :, 0] / spec.gamma
    _, rx_bits = slice_symbols(soft, tset.cons)
    return float(np.mean(rx_bits != tset.tx_bits))


@dataclass
class RotationLearnResult:
    phis: np.ndarray
    ber_trace: np.ndarray  # objective after init and after each coordinate update


def learn_rotations(
    cfg: RotationLearnConfig,
    tset: TrainingSet | None = None,
    objective=None,
) -> RotationLearnResult:
    """Coordinate descent over per-cluster rotation angles.

    Sweeps each phi_c over the angle grid plus the incumbent value (so each
    update is an argmin over a set containing the current angle, making the
    BER trace non-increasing), fixing phi_c to the best candidate with ties
    broken toward the smallest angle.  ``objective`` defaults to the frozen
    training-set SNIPS BER and is injectable for tests.
    """
    c = cfg.clusters
    grid = np.linspace(0.0, cfg.angle_range, cfg.grid_points, endpoint=False)
    if objective is None:
        if tset is None:
            tset = build_training_set(cfg)
        spec = QuantizerSpec.create(cfg.q)

        def objective(phis):
            slicer = build_beamslicer(cfg.transform, cfg.s, cfg.scenario.B, phis)
            return training_ber(tset, slicer.blocks, spec)

    if cfg.init == "default":
        phis = default_rotations(cfg.scenario.B, c).copy()
    elif cfg.init == "zero":
        phis = np.zeros(c)
    else:
        raise ValueError(f"unknown init {cfg.init!r}")

    trace = [float(objective(phis))]
    for _ in range(cfg.sweeps):
        for ci in range(c):
            candidates = np.append(grid, phis[ci])
            values = np.empty(len(candidates))
            for k, angle in enumerate(candidates):
                trial = phis.copy()
                trial[ci] = angle
                values[k] = objective(trial)
            best = values.min()
            phis[ci] = candidates[values == best].min()  # ties: smallest angle
            trace.append(float(best))
    return RotationLearnResult(phis=phis, ber_trace=np.array(trace))
