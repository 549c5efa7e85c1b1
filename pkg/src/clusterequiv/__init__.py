"""Testing whether two paired Gaussian-mixture samples share one clustering."""

__version__ = "0.1.0"
