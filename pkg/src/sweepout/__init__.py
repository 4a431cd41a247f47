"""Laboratory for mod-2 cycle families, skeleton squeezing and bisection pyramids."""

__version__ = "0.1.0"
