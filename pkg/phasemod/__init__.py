"""Parametric phase modulation of coupled flux-tunable transmons."""

from phasemod.constants import TOOL_VERSION as __version__

__all__ = ["__version__"]
