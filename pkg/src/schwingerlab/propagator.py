"""Two-point Schwinger functions on the lattice.

The free massive two-point function is evaluated as a momentum sum,

    S2_m(f, g) = L^-d sum_k f^(-k) g^(k) / (khat^2 + m^2),

with the lattice symbol khat^2 (continuum k^2 behind a switch).  A spectral
superposition replaces the single mass by a finite nonnegative atomic
measure on the mass-squared axis:

    S2_rho(f, g) = sum_atoms weight * S2_m(f, g).

The normalization is pinned so that S2_m(f, f) equals the square of the
mass-regularized Sobolev norm for real f.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, SchemaError
from .lattice import Grid, TestFunction, momentum_symbol

# Guards the massless infrared divergence; models set their own, larger
# floor implicitly through the smallest atom they carry.
DEFAULT_MASS_FLOOR_SQ = 1e-6

_MERGE_REL_TOL = 0.0  # atoms merge only on exact mass-squared equality


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite nonnegative atomic measure on the mass-squared axis.

    Atoms are (m2, weight) pairs, sorted by m2 with exact duplicates merged.
    Every atom must sit at or above the infrared floor.  Continuous mass
    densities are admitted only after external discretization into
    quadrature atoms (Gauss-Legendre on log m2 works well); given the
    atoms, every superposition here is then evaluated exactly.
    """

    atoms: tuple[tuple[float, float], ...]
    mass_floor_sq: float = DEFAULT_MASS_FLOOR_SQ

    def __post_init__(self) -> None:
        if not self.mass_floor_sq > 0:
            raise DomainError(f"mass floor must be > 0, got {self.mass_floor_sq}")
        merged: dict[float, float] = {}
        for pair in self.atoms:
            m2, w = float(pair[0]), float(pair[1])
            if m2 < self.mass_floor_sq:
                raise DomainError(
                    f"atom m2={m2} below the infrared floor {self.mass_floor_sq}"
                )
            if w < 0:
                raise DomainError(f"atom weight must be >= 0, got {w}")
            merged[m2] = merged.get(m2, 0.0) + w
        cleaned = tuple(sorted((m2, w) for m2, w in merged.items() if w > 0.0))
        if not cleaned:
            raise DomainError("spectral measure needs at least one atom of positive weight")
        object.__setattr__(self, "atoms", cleaned)

    @property
    def total_mass(self) -> float:
        return float(sum(w for _, w in self.atoms))

    @property
    def is_probability(self) -> bool:
        return abs(self.total_mass - 1.0) <= 1e-12

    @property
    def min_mass_sq(self) -> float:
        return self.atoms[0][0]

    def scaled(self, c: float) -> "SpectralMeasure":
        if c < 0:
            raise DomainError(f"scaling factor must be >= 0, got {c}")
        return SpectralMeasure(tuple((m2, c * w) for m2, w in self.atoms),
                               self.mass_floor_sq)

    def to_pairs(self) -> list[list[float]]:
        return [[m2, w] for m2, w in self.atoms]

    @staticmethod
    def from_pairs(pairs: Iterable[Sequence[float]],
                   mass_floor_sq: float = DEFAULT_MASS_FLOOR_SQ) -> "SpectralMeasure":
        atoms = []
        for i, pair in enumerate(pairs):
            if len(pair) != 2:
                raise SchemaError(f"atom {i} must be an (m2, weight) pair, got {pair!r}")
            atoms.append((float(pair[0]), float(pair[1])))
        return SpectralMeasure(tuple(atoms), mass_floor_sq)

    @staticmethod
    def delta(m2: float,
              mass_floor_sq: float = DEFAULT_MASS_FLOOR_SQ) -> "SpectralMeasure":
        """Unit point mass at m2."""
        return SpectralMeasure(((float(m2), 1.0),), mass_floor_sq)


def _check_pair(f: TestFunction, g: TestFunction) -> None:
    if f.grid != g.grid:
        raise DomainError("two-point function needs both arguments on one grid")


def _check_mass(m2: float, mass_floor_sq: float) -> None:
    if m2 < mass_floor_sq:
        raise DomainError(f"m2={m2} below the infrared floor {mass_floor_sq}")


def free_two_point(f: TestFunction, g: TestFunction, m2: float,
                   symbol: str = "lattice",
                   mass_floor_sq: float = DEFAULT_MASS_FLOOR_SQ) -> complex:
    """Free massive two-point function S2_m(f, g); bilinear, symmetric."""
    _check_pair(f, g)
    _check_mass(m2, mass_floor_sq)
    w = momentum_symbol(f.grid, symbol)
    s = np.sum(f.hat_neg * g.hat / (w + m2))
    return complex(s / f.grid.extent ** f.grid.d)


def spectral_two_point(f: TestFunction, g: TestFunction, rho: SpectralMeasure,
                       symbol: str = "lattice") -> complex:
    """Spectral superposition sum_atoms weight * S2_m(f, g); linear in rho."""
    _check_pair(f, g)
    w = momentum_symbol(f.grid, symbol)
    cross = f.hat_neg * g.hat
    total = 0j
    for m2, weight in rho.atoms:
        total += weight * np.sum(cross / (w + m2))
    return complex(total / f.grid.extent ** f.grid.d)


def covariance_kernel(grid: Grid, m2: float, symbol: str = "lattice",
                      mass_floor_sq: float = DEFAULT_MASS_FLOOR_SQ) -> np.ndarray:
    """Position-space covariance C(x) = L^-d sum_k exp(i k.x) / (khat^2 + m2).

    Indexed by lattice displacement in FFT layout; real, even, maximal at
    zero displacement.  Satisfies a^(2d) sum_{x,y} f(x) C(x-y) g(y) = S2(f,g).
    """
    _check_mass(m2, mass_floor_sq)
    w = momentum_symbol(grid, symbol)
    ker = np.fft.ifftn(1.0 / (w + m2)).real / grid.cell
    return ker
