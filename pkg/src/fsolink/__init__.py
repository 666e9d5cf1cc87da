"""Free-space optical downlink simulator: turbulent propagation, receiver
coupling into fiber or large-area photodiodes, and homodyne detector noise."""

__version__ = "0.1.0"
