"""Desk-scale workbench for training, embedding, projecting and exploring
time-series latent spaces."""

__version__ = "0.1.0"

from .core import TimeSeries, WindowSlice, WindowSpec  # noqa: F401
from .synth import GroundTruth, SynthConfig  # noqa: F401
