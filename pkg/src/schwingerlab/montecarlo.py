"""Sampling realization of the field measures behind the functionals.

A quasi-free leaf is the law of a centered Gaussian field with covariance
sum_atoms w / (khat^2 + m^2); it is drawn spectrally: independent
momentum-mode Gaussians shaped by the symbol, inverse-transformed.  A
mixture is sampled by first drawing a leaf with its path weight, then
drawing that leaf's Gaussian, so empirical moments of phi(f) estimate the
model's analytic moments.

Randomness is counter based: every sample owns a Philox stream keyed by
(seed, sample index), and sites are consumed in a fixed row-major order,
so streams are bit-reproducible no matter how sample generation is
scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BoundsError, DomainError, ProvenanceError, SchemaError
from .fixtures import rng_from_seed
from .functional import QuasiFree, SchwingerFunctional, model_to_dict
from .lattice import Grid, TestFunction, lattice_symbol
from .propagator import DEFAULT_MASS_FLOOR_SQ, SpectralMeasure
from .serialize import canonical_digest

MAX_ESTIMATE_ORDER = 6


@dataclass(frozen=True)
class Provenance:
    model_digest: str
    seed: int
    index: int
    component: int


class FieldSample:
    """One real field configuration plus the data to reproduce it bit-exactly."""

    __slots__ = ("grid", "values", "provenance")

    def __init__(self, grid: Grid, values: np.ndarray, provenance: Provenance):
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != grid.shape:
            raise DomainError(f"sample shape {arr.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("field sample must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        self.provenance = provenance

    def pair(self, f: TestFunction) -> complex:
        """phi(f) = a^d sum_x phi(x) f(x)."""
        if f.grid != self.grid:
            raise DomainError("test function lives on a different grid")
        return complex(self.grid.cell * np.sum(self.values * f.values))


def model_digest(G: SchwingerFunctional, grid: Grid) -> str:
    return canonical_digest({"model": model_to_dict(G), "grid": grid.as_dict()})


def _draw_free_values(grid: Grid, m2: float, rng: np.random.Generator) -> np.ndarray:
    # Exact spectral draw: phi = IFFT( FFT(white) / sqrt(a^d (khat^2+m2)) ).
    # White noise is real, the symbol is even, so phi is real up to roundoff.
    white = rng.standard_normal(grid.shape)
    amp = 1.0 / np.sqrt(grid.cell * (lattice_symbol(grid) + m2))
    return np.fft.ifftn(np.fft.fftn(white) * amp).real


def _draw_leaf_values(grid: Grid, rho: SpectralMeasure,
                      rng: np.random.Generator) -> np.ndarray:
    # Generalized free field: independent per-atom fields added with sqrt
    # weights realizes the covariance sum_j w_j (khat^2 + m_j^2)^-1.
    out = np.zeros(grid.shape)
    for m2, w in rho.atoms:
        out += math.sqrt(w) * _draw_free_values(grid, m2, rng)
    return out


def sample_free_field(grid: Grid, m2: float, seed: int, index: int = 0,
                      mass_floor_sq: float = DEFAULT_MASS_FLOOR_SQ) -> FieldSample:
    """One draw of the free massive Gaussian field, covariance (khat^2+m2)^-1."""
    if m2 < mass_floor_sq:
        raise DomainError(f"m2={m2} below the infrared floor {mass_floor_sq}")
    rng = rng_from_seed(seed, index)
    values = _draw_free_values(grid, m2, rng)
    digest = model_digest(QuasiFree(SpectralMeasure.delta(m2, mass_floor_sq)), grid)
    return FieldSample(grid, values, Provenance(digest, seed, index, 0))


def sample_mixture_field(G: SchwingerFunctional, grid: Grid, seed: int,
                         index: int = 0, _digest: str | None = None) -> FieldSample:
    """One draw from the mixture measure: pick a leaf by path weight, then
    draw that leaf's Gaussian.  The chosen component index is recorded."""
    rng = rng_from_seed(seed, index)
    leaves = list(G.leaves())
    if len(leaves) == 1:
        component = 0
    else:
        u = rng.random() * sum(w for w, _ in leaves)
        acc = 0.0
        component = len(leaves) - 1
        for i, (w, _) in enumerate(leaves):
            acc += w
            if u < acc:
                component = i
                break
    values = _draw_leaf_values(grid, leaves[component][1].rho, rng)
    digest = model_digest(G, grid) if _digest is None else _digest
    return FieldSample(grid, values, Provenance(digest, seed, index, component))


def sample_stream(G: SchwingerFunctional, grid: Grid, seed: int,
                  count: int, start: int = 0) -> Iterator[FieldSample]:
    digest = model_digest(G, grid)
    for index in range(start, start + count):
        yield sample_mixture_field(G, grid, seed, index, _digest=digest)


@dataclass(frozen=True)
class MomentEstimate:
    estimate: complex
    stderr: float
    count: int


def _jackknife_mean(values: np.ndarray) -> tuple[complex, float]:
    n = values.shape[0]
    if n < 2:
        raise DomainError("need at least two samples for a jackknife error")
    total = values.sum()
    loo = (total - values) / (n - 1)  # delete-one means
    center = loo.mean()
    var = (n - 1) / n * np.sum(np.abs(loo - center) ** 2)
    return complex(values.mean()), float(math.sqrt(var.real))


def estimate_moment(samples: Iterable[FieldSample],
                    fs: Sequence[TestFunction]) -> MomentEstimate:
    """Sample mean of prod_i phi(f_i) with a delete-one jackknife error."""
    n = len(fs)
    if not 1 <= n <= MAX_ESTIMATE_ORDER:
        raise BoundsError(f"estimator order n={n} outside 1..{MAX_ESTIMATE_ORDER}")
    products = []
    tag = None
    for s in samples:
        key = (s.provenance.model_digest, s.grid)
        if tag is None:
            tag = key
        elif key != tag:
            raise ProvenanceError("samples come from different models or grids")
        prod = complex(1.0)
        for f in fs:
            prod *= s.pair(f)
        products.append(prod)
    if not products:
        raise DomainError("no samples supplied")
    est, err = _jackknife_mean(np.asarray(products, dtype=np.complex128))
    return MomentEstimate(est, err, len(products))


def estimate_fourth_cumulant(pairings: np.ndarray) -> tuple[float, float]:
    """kappa4 = E x^4 - 3 (E x^2)^2 for a centered scalar sample, with a
    delete-one jackknife error (vectorized through the moment sums)."""
    x = np.asarray(pairings, dtype=np.float64)
    n = x.shape[0]
    if n < 3:
        raise DomainError("need at least three samples")
    x2, x4 = x * x, x ** 4
    s2, s4 = x2.sum(), x4.sum()
    est = s4 / n - 3.0 * (s2 / n) ** 2
    m2_loo = (s2 - x2) / (n - 1)
    m4_loo = (s4 - x4) / (n - 1)
    k_loo = m4_loo - 3.0 * m2_loo ** 2
    center = k_loo.mean()
    var = (n - 1) / n * np.sum((k_loo - center) ** 2)
    return float(est), float(math.sqrt(var))


def pair_values(G: SchwingerFunctional, grid: Grid, f: TestFunction,
                seed: int, count: int) -> np.ndarray:
    """phi(f) along the sample stream (streamed; fields are not retained)."""
    out = np.empty(count, dtype=np.float64)
    for i, s in enumerate(sample_stream(G, grid, seed, count)):
        out[i] = s.pair(f).real
    return out


# ---------------------------------------------------------------------------
# Sample dumps (text, portable)
# ---------------------------------------------------------------------------

def write_samples(path, samples: Sequence[FieldSample]) -> None:
    if not samples:
        raise DomainError("nothing to write")
    g = samples[0].grid
    p0 = samples[0].provenance
    with open(path, "w", encoding="ascii") as fh:
        fh.write("fieldsamples v1\n")
        fh.write(f"model_digest={p0.model_digest} d={g.d} n_per_axis={g.n_per_axis} "
                 f"spacing={float(g.spacing)!r} seed={p0.seed} count={len(samples)}\n")
        for s in samples:
            fh.write(f"sample index={s.provenance.index} "
                     f"component={s.provenance.component}\n")
            fh.write(" ".join(repr(float(v)) for v in s.values.ravel(order="C")))
            fh.write("\n")


def read_samples(path) -> list[FieldSample]:
    with open(path, "r", encoding="ascii") as fh:
        if fh.readline().strip() != "fieldsamples v1":
            raise SchemaError(f"{path}: not a fieldsamples file")
        header = dict(tok.split("=", 1) for tok in fh.readline().split())
        grid = Grid(int(header["d"]), int(header["n_per_axis"]),
                    float(header["spacing"]))
        seed = int(header["seed"])
        count = int(header["count"])
        out = []
        for _ in range(count):
            meta = dict(tok.split("=", 1) for tok in fh.readline().split()[1:])
            row = np.array(fh.readline().split(), dtype=np.float64)
            if row.size != grid.volume:
                raise SchemaError(f"{path}: truncated sample record")
            out.append(FieldSample(
                grid, row.reshape(grid.shape),
                Provenance(header["model_digest"], seed,
                           int(meta["index"]), int(meta["component"]))))
    return out
