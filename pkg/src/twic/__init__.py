"""Bit-exact laboratory for two-way deterministic interference channels."""

from .channel import ChannelConfig, LevelVector

__all__ = ["ChannelConfig", "LevelVector"]
__version__ = "0.1.0"
