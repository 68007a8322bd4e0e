"""Design points, design spaces and affine normalization.

Every other module works in the unit hypercube; this one owns the mapping
between physical parameter values and normalized coordinates, plus the
distance and offset helpers built on it. Units are documented conventions
(mm, degrees), not checked types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import OutOfBounds

__all__ = [
    "Parameter",
    "DesignSpace",
    "DesignPoint",
    "NormalizedDesign",
    "normalize",
    "denormalize",
    "normalized_distance",
    "offset_design",
]


@dataclass(frozen=True)
class Parameter:
    name: str
    lo: float
    hi: float
    unit: str = ""

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"parameter {self.name}: lo={self.lo} must be < hi={self.hi}")


class DesignSpace:
    """Ordered list of bounded parameters defining the design hypercube."""

    def __init__(self, params):
        params = tuple(params)
        if len(params) < 1:
            raise ValueError("a design space needs at least one parameter")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names: {names}")
        self.params = params

    @property
    def p(self) -> int:
        return len(self.params)

    @property
    def names(self):
        return tuple(p.name for p in self.params)

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lo for p in self.params])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.hi for p in self.params])

    def validate(self, values) -> None:
        """Raise OutOfBounds if any coordinate lies outside its range."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.p,):
            raise ValueError(f"expected {self.p} coordinates, got shape {values.shape}")
        for prm, v in zip(self.params, values):
            if not (prm.lo <= v <= prm.hi):
                raise OutOfBounds(prm.name, float(v), prm.lo, prm.hi)

    def point(self, *values) -> "DesignPoint":
        """Construct a validated DesignPoint from physical values."""
        if len(values) == 1 and not np.isscalar(values[0]):
            values = tuple(values[0])
        self.validate(values)
        return DesignPoint(tuple(float(v) for v in values))

    @classmethod
    def from_file(cls, path) -> "DesignSpace":
        """Parse a line-oriented config: `name lo hi unit`, `#` comments."""
        params = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) not in (3, 4):
                    raise ValueError(f"{path}:{lineno}: expected 'name lo hi [unit]', got {line!r}")
                name, lo, hi = parts[0], float(parts[1]), float(parts[2])
                unit = parts[3] if len(parts) == 4 else ""
                params.append(Parameter(name, lo, hi, unit))
        return cls(params)

    @classmethod
    def default(cls) -> "DesignSpace":
        """The shipped five-parameter injector space."""
        ref = resources.files("cpodem.data").joinpath("injector_space.cfg")
        with resources.as_file(ref) as path:
            return cls.from_file(path)

    def __repr__(self):
        inner = ", ".join(f"{p.name}[{p.lo},{p.hi}]" for p in self.params)
        return f"DesignSpace({inner})"

    def __eq__(self, other):
        return isinstance(other, DesignSpace) and self.params == other.params


@dataclass(frozen=True)
class DesignPoint:
    """Physical parameter values, ordered as in the owning DesignSpace.

    The named accessors follow the default injector layout
    (L, R_n, theta, delta, dL) and are only meaningful for p = 5 spaces.
    """

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def L(self):
        return self.values[0]

    @property
    def R_n(self):
        return self.values[1]

    @property
    def theta(self):
        return self.values[2]

    @property
    def delta(self):
        return self.values[3]

    @property
    def dL(self):
        return self.values[4]

    def asarray(self) -> np.ndarray:
        return np.array(self.values)


@dataclass(frozen=True)
class NormalizedDesign:
    """Coordinates in the unit hypercube."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        for c in coords:
            if not (0.0 <= c <= 1.0):
                raise ValueError(f"normalized coordinate {c} outside [0, 1]")
        object.__setattr__(self, "coords", coords)

    def asarray(self) -> np.ndarray:
        return np.array(self.coords)


def normalize(d: DesignPoint, s: DesignSpace) -> NormalizedDesign:
    """Map physical values to [0,1]^p as (v - lo) / (hi - lo)."""
    s.validate(d.values)
    lo, hi = s.lower, s.upper
    return NormalizedDesign(tuple((d.asarray() - lo) / (hi - lo)))


def denormalize(n: NormalizedDesign, s: DesignSpace) -> DesignPoint:
    """Inverse of normalize."""
    coords = n.asarray()
    if coords.shape != (s.p,):
        raise ValueError(f"expected {s.p} coordinates, got {coords.shape}")
    for prm, c in zip(s.params, coords):
        if not (0.0 <= c <= 1.0):
            raise OutOfBounds(prm.name, float(c), 0.0, 1.0)
    lo, hi = s.lower, s.upper
    return DesignPoint(tuple(lo + coords * (hi - lo)))


def normalized_distance(a: DesignPoint, b: DesignPoint, s: DesignSpace) -> float:
    """Euclidean distance between the normalized images of two points."""
    na = normalize(a, s).asarray()
    nb = normalize(b, s).asarray()
    return float(math.sqrt(np.sum((na - nb) ** 2)))


def offset_design(d: DesignPoint, fractions, s: DesignSpace) -> DesignPoint:
    """Scale each physical coordinate by (1 + fraction_k).

    Raises OutOfBounds if the offset point leaves the design space.
    """
    fractions = np.asarray(fractions, dtype=float)
    if fractions.shape != (s.p,):
        raise ValueError(f"expected {s.p} fractions, got {fractions.shape}")
    s.validate(d.values)
    shifted = d.asarray() * (1.0 + fractions)
    s.validate(shifted)
    return DesignPoint(tuple(shifted))
