"""Coordinated multicast beamforming for multicell networks.

Library + CLI for QoS power-minimization beamforming (centralized and
decentralized), max-min-SINR beamforming under per-base-station power
budgets, conventional baselines (M-BD, L-SLNR, open-loop STBC), and a
Monte Carlo experiment harness.
"""

__version__ = "0.1.0"
