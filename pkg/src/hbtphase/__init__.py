"""Two-source intensity interferometry with a polarization geometric phase."""

__version__ = "0.1.0"
