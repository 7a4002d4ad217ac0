"""Jammer mitigation via beam-slicing for quantized massive MU-MIMO uplink.

Library layout:

- ``chanmodel``: UE/jammer placement, LoS and synthetic non-LoS channels,
  power control, noise/jammer power levels.
- ``transforms``: per-cluster unitary transforms and the block-diagonal
  beam-slicing matrix V.
- ``quantizer``: gain control, uniform midrise quantizer, MSE-optimal step
  sizes, and Bussgang constants.
- ``estimator``: jammer covariance, orthogonal-complement projection, and
  LS channel estimation.
- ``detector``: SNIPS/CHOPS/LMMSE equalizers, genie baselines, QAM slicing.
- ``montecarlo``: frame simulation, metrics, sweeps, rotation learning.
- ``cli``: command-line entry point.
"""

__version__ = "0.1.0"
