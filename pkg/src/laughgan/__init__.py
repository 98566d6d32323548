"""Laughter synthesis with a multi-scale GAN on log-Mel spectrograms."""

__version__ = "0.1.0"
