"""Eight-port homodyne simulator - inefficient homodyne detection and phase space tomography."""

__version__ = "0.1.0"
