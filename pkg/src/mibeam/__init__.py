"""Magnetic-induction multi-user downlink simulation and robust magnetic beamforming."""

__version__ = "0.1.0"
