"""ellipseloss - box-aware differentiable trajectory rasterization and the ellipse loss."""

from .version import __version__


__all__ = ["__version__"]
