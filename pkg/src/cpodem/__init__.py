"""Common-POD + kriging flowfield emulator toolkit."""

__version__ = "0.1.0"

from .design import (  # noqa: F401
    DesignPoint,
    DesignSpace,
    NormalizedDesign,
    denormalize,
    normalize,
    normalized_distance,
    offset_design,
)
