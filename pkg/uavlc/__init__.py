"""Transmit-power minimization for RIS-assisted VLC-enabled UAV networks."""

__version__ = "0.1.0"
