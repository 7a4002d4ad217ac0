"""Command-line entry point: run / sweep / learn-rotations / quantizer-table / selftest.

Configs are YAML (JSON works too) with CLI ``--set key=value`` overrides
using dotted paths (``--set scenario.B=64``).  Unknown keys are rejected.
Output files are written atomically (temp file + rename).  Exit codes:
0 ok, 2 config error, 3 runtime error, 4 selftest failure.
"""

from __future__ import annotations

import math
import os
import sys
import tempfile
from pathlib import Path

import click
import numpy as np
import yaml

from .chanmodel import ScenarioConfig
from .detector import DetectorMethod, MethodKind, parse_method_string
from .montecarlo import (
    FrameConfig,
    RotationLearnConfig,
    SweepSpec,
    learn_rotations,
    records_to_csv,
    run_point,
    run_sweep,
)
from .quantizer import bussgang_constants, optimal_step_size
from .transforms import TransformKind


class ConfigError(ValueError):
    pass


_SCENARIO_KEYS = {
    "B",
    "U",
    "sector_halfwidth",
    "dist_min",
    "dist_max",
    "min_sep",
    "power_control_db",
    "pathloss_exponent",
    "nlos_paths",
    "nlos_angle_spread",
    "es",
    "constellation",
}
_FRAME_KEYS = {
    "scenario",
    "method",
    "transform",
    "s",
    "rotations",
    "q",
    "snr_db",
    "rho_db",
    "channel",
    "n_jammer_slots",
    "n_data_slots",
}
_RUN_KEYS = _FRAME_KEYS | {"name", "trials", "seed", "workers", "grid"}
_LEARN_KEYS = {
    "scenario",
    "s",
    "q",
    "snr_db",
    "rho_db",
    "grid_points",
    "sweeps",
    "train_channels",
    "n_jammer_slots",
    "channel",
    "transform",
    "seed",
    "init",
}


def _load_config(path: str, overrides: tuple[str, ...]) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        value = _parse_scalar(raw)
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part} is not a mapping")
        node[parts[-1]] = value
    return cfg


def _parse_scalar(raw: str):
    if raw in ("inf", "+inf"):
        return math.inf
    if raw == "-inf":
        return -math.inf
    try:
        return yaml.safe_load(raw)
    except yaml.YAMLError:
        return raw


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s): {', '.join(sorted(unknown))}")


def _scenario_from(d: dict) -> ScenarioConfig:
    sc = d.get("scenario")
    if not isinstance(sc, dict):
        raise ConfigError("config: 'scenario' mapping is required")
    _check_keys(sc, _SCENARIO_KEYS, "scenario")
    if "B" not in sc or "U" not in sc:
        raise ConfigError("scenario: B and U are required")
    try:
        return ScenarioConfig(**sc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}")


def _frame_config_from(d: dict) -> FrameConfig:
    _check_keys(d, _RUN_KEYS, "config")
    scenario = _scenario_from(d)
    method_str = d.get("method", "snips")
    try:
        method, adc = parse_method_string(str(method_str))
    except ValueError as exc:
        raise ConfigError(f"method: {exc}")
    q = d.get("q", 4)
    if adc != "unset":
        q = adc
    if q in ("inf", math.inf):
        q = None
    rotations = d.get("rotations", "default")
    if isinstance(rotations, list):
        rotations = tuple(float(x) for x in rotations)
    try:
        return FrameConfig(
            scenario=scenario,
            method=method,
            transform=TransformKind.from_string(str(d.get("transform", "dft"))),
            s=int(d.get("s", 8)),
            rotations=rotations,
            q=None if q is None else int(q),
            snr_db=float(d.get("snr_db", 10.0)),
            rho_db=float(d.get("rho_db", 25.0)),
            channel=str(d.get("channel", "los")),
            n_jammer_slots=int(d.get("n_jammer_slots", 32)),
            n_data_slots=int(d.get("n_data_slots", 10)),
            seed=int(d.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}")


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@click.group()
def main():
    """Link-level simulator for beam-slicing jammer mitigation."""


_shared_opts = [
    click.option("--config", "config_path", required=True, help="YAML/JSON config file."),
    click.option("--set", "overrides", multiple=True, help="Override config key (dotted path)."),
    click.option("--out", "out_path", required=True, help="Output file path."),
    click.option("--workers", type=int, default=None, help="Parallel trial workers."),
    click.option("--seed", type=int, default=None, help="Base seed override."),
]


def _with_opts(func):
    for opt in reversed(_shared_opts):
        func = opt(func)
    return func


def _run_common(config_path, overrides, seed, workers, need_grid):
    cfg_dict = _load_config(config_path, overrides)
    if seed is not None:
        cfg_dict["seed"] = seed
    if workers is not None:
        cfg_dict["workers"] = workers
    grid = cfg_dict.get("grid")
    if need_grid:
        if not isinstance(grid, dict) or not grid or any(not v for v in grid.values()):
            raise ConfigError("sweep: non-empty 'grid' mapping is required")
    frame = _frame_config_from(cfg_dict)
    return cfg_dict, frame, grid


@main.command()
@_with_opts
def run(config_path, overrides, out_path, workers, seed):
    """Single-point simulation; writes a one-row CSV."""
    try:
        cfg_dict, frame, _ = _run_common(config_path, overrides, seed, workers, need_grid=False)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    try:
        record = run_point(
            frame,
            trials=int(cfg_dict.get("trials", 100)),
            base_seed=int(cfg_dict.get("seed", 0)),
            workers=int(cfg_dict.get("workers", 1)),
            scenario_name=str(cfg_dict.get("name", "")),
        )
        if record.error:
            click.echo(f"runtime error: {record.error}", err=True)
            sys.exit(3)
        _atomic_write(out_path, records_to_csv([record]))
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(3)
    click.echo(f"wrote {out_path}")


@main.command()
@_with_opts
def sweep(config_path, overrides, out_path, workers, seed):
    """Grid sweep; one CSV row per grid point."""
    try:
        cfg_dict, frame, grid = _run_common(config_path, overrides, seed, workers, need_grid=True)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    spec = SweepSpec(
        base=frame,
        axes={str(k): list(v) for k, v in grid.items()},
        trials=int(cfg_dict.get("trials", 100)),
        base_seed=int(cfg_dict.get("seed", 0)),
        workers=int(cfg_dict.get("workers", 1)),
        scenario_name=str(cfg_dict.get("name", "")),
    )
    try:
        records = run_sweep(spec)
        _atomic_write(out_path, records_to_csv(records))
    except Exception as exc:  # noqa: BLE001
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(3)
    failures = sum(1 for r in records if r.error)
    click.echo(f"wrote {out_path} ({len(records)} points, {failures} failed)")
    if failures:
        sys.exit(3)


@main.command("learn-rotations")
@_with_opts
def learn_rotations_cmd(config_path, overrides, out_path, workers, seed):
    """Coordinate-descent rotation learning; writes angles + BER trace."""
    del workers  # objective evaluation is already batched
    try:
        cfg_dict = _load_config(config_path, overrides)
        if seed is not None:
            cfg_dict["seed"] = seed
        _check_keys(cfg_dict, _LEARN_KEYS, "config")
        scenario = _scenario_from(cfg_dict)
        learn_cfg = RotationLearnConfig(
            scenario=scenario,
            s=int(cfg_dict.get("s", 8)),
            q=None if cfg_dict.get("q", 4) in ("inf", math.inf) else int(cfg_dict.get("q", 4)),
            snr_db=float(cfg_dict.get("snr_db", 20.0)),
            rho_db=float(cfg_dict.get("rho_db", 25.0)),
            grid_points=int(cfg_dict.get("grid_points", 148)),
            sweeps=int(cfg_dict.get("sweeps", 50)),
            train_channels=int(cfg_dict.get("train_channels", 1000)),
            n_jammer_slots=int(cfg_dict.get("n_jammer_slots", 32)),
            channel=str(cfg_dict.get("channel", "los")),
            transform=TransformKind.from_string(str(cfg_dict.get("transform", "dft"))),
            seed=int(cfg_dict.get("seed", 0)),
            init=str(cfg_dict.get("init", "default")),
        )
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except (TypeError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    try:
        result = learn_rotations(learn_cfg)
        angles_text = "\n".join(f"{phi:.12g}" for phi in result.phis) + "\n"
        _atomic_write(out_path, angles_text)
        trace_path = str(Path(out_path).with_suffix("")) + "_trace.csv"
        trace_lines = ["update,ber"] + [
            f"{i},{b:.10g}" for i, b in enumerate(result.ber_trace)
        ]
        _atomic_write(trace_path, "\n".join(trace_lines) + "\n")
    except Exception as exc:  # noqa: BLE001
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(3)
    click.echo(f"wrote {out_path} and {trace_path}")


@main.command("quantizer-table")
def quantizer_table():
    """Print (q, delta, gamma, D) rows as CSV for q = 1..12."""
    click.echo("q,delta,gamma,d")
    for q in range(1, 13):
        delta = optimal_step_size(q)
        gamma, d = bussgang_constants(q, delta)
        click.echo(f"{q},{delta:.6f},{gamma:.6f},{d:.6e}")


@main.command()
def selftest():
    """Run the built-in oracle/invariant suite; exit 4 on failure."""
    failures = []

    def check(name, ok):
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    rng = np.random.default_rng(7)

    # Projection lemma: noiseless rank-1 covariance gives the exact projector.
    from .estimator import estimate_jammer_covariance, estimate_projection

    ok = True
    for _ in range(20):
        j = rng.normal(size=8) + 1j * rng.normal(size=8)
        s = rng.normal(size=16) + 1j * rng.normal(size=16)
        c_hat = estimate_jammer_covariance(np.outer(j, s.conj()), 16)
        p = estimate_projection(c_hat).p
        expected = np.eye(8) - np.outer(j, j.conj()) / np.sum(np.abs(j) ** 2)
        ok &= np.allclose(p, expected, atol=1e-9)
        ok &= np.allclose(p @ p, p, atol=1e-10)
    check("projection lemma (noiseless rank-1)", ok)

    # Bussgang closed forms at q=1.
    delta1 = optimal_step_size(1)
    gamma1, d1 = bussgang_constants(1, delta1)
    check(
        "bussgang q=1 closed forms",
        abs(delta1 - 2 * math.sqrt(2 / math.pi)) < 1e-6
        and abs(gamma1 - 2 / math.pi) < 1e-6
        and abs(d1 - (2 / math.pi) * (1 - 2 / math.pi)) < 1e-6,
    )

    # S=1 slicer is exactly the identity pipeline.
    from .montecarlo import run_trial, trial_seed

    scen = ScenarioConfig(B=16, U=2)
    base = dict(transform=TransformKind.DFT, s=1, q=4, snr_db=10.0, rho_db=20.0, seed=0)
    cfg_slice = FrameConfig(
        scenario=scen, method=DetectorMethod(MethodKind.SNIPS, "slice"), **base
    )
    cfg_ant = FrameConfig(
        scenario=scen, method=DetectorMethod(MethodKind.SNIPS, "ant"), **base
    )
    res_a = run_trial(cfg_slice, np.random.default_rng(trial_seed(1, 0, 0)))
    res_b = run_trial(cfg_ant, np.random.default_rng(trial_seed(1, 0, 0)))
    check(
        "S=1 equivalence (slice vs antenna domain)",
        np.allclose(res_a.soft_symbols, res_b.soft_symbols, atol=1e-12)
        and res_a.bit_errors == res_b.bit_errors,
    )

    if failures:
        click.echo(f"{len(failures)} selftest check(s) failed", err=True)
        sys.exit(4)
    click.echo("selftest passed")


if __name__ == "__main__":
    main()
