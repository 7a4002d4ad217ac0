"""Calibration for the Fig-1-style acceptance bands (criterion 5)."""

import math
import time

import numpy as np

from beamslice.chanmodel import ScenarioConfig
from beamslice.detector import DetectorMethod, MethodKind
from beamslice.montecarlo import FrameConfig, run_point

scen = ScenarioConfig(B=256, U=32)
t0 = time.time()

print("=== (a) infinite resolution ===", flush=True)
for name, kind, rho in [
    ("nojam-lmmse", MethodKind.LMMSE, -math.inf),
    ("genie-pos", MethodKind.GENIE_POS, 25.0),
    ("genie-ian", MethodKind.GENIE_IAN, 25.0),
]:
    for snr in [-12, -10, -8, -6, -4, -2, 0]:
        cfg = FrameConfig(
            scenario=scen, method=DetectorMethod(kind, "ant"), s=1, q=None,
            snr_db=snr, rho_db=rho,
        )
        rec = run_point(cfg, trials=100, base_seed=42, workers=2)
        print(
            f"{name:12s} snr={snr:+3d}  ber={rec.ber:.5f}  served={rec.served_frac:.3f}"
            f"  [{time.time()-t0:.0f}s]",
            flush=True,
        )

print("=== (b) q=4 ===", flush=True)
for name, kind, rho in [
    ("genie-pos", MethodKind.GENIE_POS, 25.0),
    ("genie-ian", MethodKind.GENIE_IAN, 25.0),
]:
    for snr in [0, 5, 10, 15, 20, 25]:
        cfg = FrameConfig(
            scenario=scen, method=DetectorMethod(kind, "ant"), s=1, q=4,
            snr_db=snr, rho_db=rho,
        )
        rec = run_point(cfg, trials=100, base_seed=43, workers=2)
        print(
            f"{name:12s} snr={snr:+3d}  ber={rec.ber:.5f}  served={rec.served_frac:.3f}"
            f"  [{time.time()-t0:.0f}s]",
            flush=True,
        )
print(f"total {time.time()-t0:.0f}s")
