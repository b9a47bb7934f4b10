"""Shared value types: unit system, tolerance policy, and seed derivation.

Everything here is an immutable value object, safe to copy into
concurrent workers.  Default units are natural (hbar = mass = omega = 1);
all regression numbers shipped with the test suite assume them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UnitSystem",
    "TolerancePolicy",
    "SeedSpec",
    "NATURAL_UNITS",
    "DEFAULT_TOLERANCE",
    "mix_seed",
    "substream_rng",
]

_MASK64 = (1 << 64) - 1

# splitmix64 finalizer constants (Steele, Lea & Flood's generator).  The
# increment is the 64-bit golden-ratio constant; the two multipliers are
# the standard avalanche constants.  For a fixed master seed the map
# index -> mix_seed(master, index) is a bijection on 64-bit integers.
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix_seed(master: int, index: int) -> int:
    """Derive the substream seed for `index` from a 64-bit master seed.

    splitmix64: jump the state by (index + 1) golden-ratio increments,
    then apply the avalanche finalizer.  Pure integer arithmetic, so the
    result is identical on every platform.
    """
    z = (master + (index + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class UnitSystem:
    """Scales for action, mass, and oscillator frequency (all > 0)."""

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"UnitSystem.{name} must be finite and > 0, got {value!r}")

    @property
    def characteristic_length(self) -> float:
        """Oscillator length sqrt(hbar / (mass * omega))."""
        return math.sqrt(self.hbar / (self.mass * self.omega))

    def oscillator_ratio(self, x):
        """Dimensionless combination mass*omega*x**2/hbar."""
        return self.mass * self.omega * x * x / self.hbar


@dataclass(frozen=True)
class TolerancePolicy:
    """Absolute/relative comparison tolerances plus the node guard radius.

    ``node_guard`` is the minimum allowed distance to a field singularity
    (a wavefunction node); evaluation inside it raises instead of
    returning garbage.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    node_guard: float = 1e-6

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol + self.rel_tol <= 0:
            raise ValueError("abs_tol + rel_tol must be positive")
        if not self.node_guard > 0:
            raise ValueError("node_guard must be positive")

    def close(self, a, b) -> bool:
        return bool(abs(a - b) <= self.abs_tol + self.rel_tol * max(abs(a), abs(b)))


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus the substream derivation rule.

    Rule 0 (the only one defined) derives trajectory ``i``'s stream as
    ``mix_seed(master_seed, i)``.  Identical specs therefore reproduce
    bit-identical sampled initial conditions on every platform.
    """

    master_seed: int
    rule: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.rule != 0:
            raise ValueError(f"unknown stream derivation rule {self.rule}")

    def stream_seed(self, index: int) -> int:
        return mix_seed(self.master_seed, index)


def substream_rng(spec: SeedSpec, index: int) -> np.random.Generator:
    """Independent, reproducible generator for one trajectory index."""
    return np.random.default_rng(spec.stream_seed(index))


NATURAL_UNITS = UnitSystem()
DEFAULT_TOLERANCE = TolerancePolicy()
