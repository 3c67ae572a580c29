"""Finite periodic lattices, test functions on them, and lattice isometries.

Conventions (used consistently by the whole package):

* Sites sit at x_i = n_i * a, n_i in {0..N-1}, with periodic wrap; signed
  bookkeeping (time support, displacements) folds coordinates to
  (-L/2, L/2] where L = N*a.
* Discrete Fourier transform  f^(k) = a^d sum_x exp(-i k.x) f(x)  on the
  momentum grid k = (2 pi / L) * integer mode vector.  Parseval then reads
  a^d sum_x |f|^2 = L^-d sum_k |f^|^2.
* The lattice momentum symbol is  khat^2 = sum_i (2/a)^2 sin^2(k_i a / 2);
  the continuum symbol k^2 is kept behind a switch for refinement studies.
* Time is axis 0.  Time reflection is the *link* reflection through the
  plane between the t=0 and t=-a slices, i.e. site index n_0 -> N-1-n_0.
  With that placement the free lattice covariance is exactly reflection
  positive for functions supported on the strictly positive time slices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .errors import DomainError, ResolutionError, SchemaError

TIME_AXIS = 0
REALITY_TOL = 1e-14

_AXIS_CAPS = {1: 64, 2: 64, 3: 16}


@dataclass(frozen=True)
class Grid:
    """Periodic cubic lattice: n_per_axis**d sites with spacing a > 0."""

    d: int
    n_per_axis: int
    spacing: float

    def __post_init__(self) -> None:
        if self.d not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.d}")
        n = self.n_per_axis
        if n < 8 or (n & (n - 1)) != 0:
            raise DomainError(f"n_per_axis must be a power of two >= 8, got {n}")
        if n > _AXIS_CAPS[self.d]:
            raise DomainError(
                f"n_per_axis={n} exceeds the desk-scale cap "
                f"{_AXIS_CAPS[self.d]} for d={self.d}"
            )
        if not (isinstance(self.spacing, (int, float)) and self.spacing > 0):
            raise DomainError(f"spacing must be > 0, got {self.spacing}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.d

    @property
    def volume(self) -> int:
        """Total number of sites."""
        return self.n_per_axis ** self.d

    @property
    def extent(self) -> float:
        """Physical box length L per axis."""
        return self.n_per_axis * self.spacing

    @property
    def cell(self) -> float:
        """Position-space measure weight a^d."""
        return self.spacing ** self.d

    def axis_coordinates(self) -> np.ndarray:
        """Canonical site coordinates 0, a, ..., (N-1)a along one axis."""
        return np.arange(self.n_per_axis) * self.spacing

    def signed_axis_coordinates(self) -> np.ndarray:
        """Site coordinates folded to [-L/2, L/2)."""
        x = self.axis_coordinates()
        half = self.extent / 2
        return np.where(x >= half, x - self.extent, x)

    def as_dict(self) -> dict:
        return {"d": self.d, "n_per_axis": self.n_per_axis, "spacing": self.spacing}

    @staticmethod
    def from_dict(doc: dict) -> "Grid":
        if not isinstance(doc, dict):
            raise SchemaError(f"grid must be an object, got {type(doc).__name__}")
        unknown = set(doc) - {"d", "n_per_axis", "spacing"}
        if unknown:
            raise SchemaError(f"unknown grid key(s): {sorted(unknown)}")
        try:
            return Grid(int(doc["d"]), int(doc["n_per_axis"]), float(doc["spacing"]))
        except KeyError as exc:
            raise SchemaError(f"grid is missing key {exc.args[0]!r}") from None


@lru_cache(maxsize=64)
def lattice_symbol(grid: Grid) -> np.ndarray:
    """khat^2 = sum_i (2/a)^2 sin^2(k_i a/2) on the FFT-ordered momentum grid."""
    n, a = grid.n_per_axis, grid.spacing
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=a)
    s1 = (2.0 / a) ** 2 * np.sin(k1 * a / 2.0) ** 2
    out = reduce(np.add.outer, [s1] * grid.d) if grid.d > 1 else s1.copy()
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def continuum_symbol(grid: Grid) -> np.ndarray:
    """k^2 on the FFT-ordered momentum grid, modes folded to (-pi/a, pi/a]."""
    n, a = grid.n_per_axis, grid.spacing
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=a)
    s1 = k1 ** 2
    out = reduce(np.add.outer, [s1] * grid.d) if grid.d > 1 else s1.copy()
    out.setflags(write=False)
    return out


def momentum_symbol(grid: Grid, symbol: str = "lattice") -> np.ndarray:
    if symbol == "lattice":
        return lattice_symbol(grid)
    if symbol == "continuum":
        return continuum_symbol(grid)
    raise DomainError(f"unknown momentum symbol {symbol!r}")


def reflect_momentum(arr: np.ndarray) -> np.ndarray:
    """Index map k -> -k (mod the Brillouin zone) on an FFT-ordered array."""
    out = arr
    for ax in range(arr.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


class TestFunction:
    """Complex-valued function sampled on a Grid; argument of every functional.

    Values are immutable after construction.  The momentum-space view is
    cached on first use because every two-point evaluation needs it.
    Values carry units field^-1 volume^-1 so that pairings phi(f) are
    dimensionless.
    """

    __test__ = False  # keep pytest from collecting this as a test class
    __slots__ = ("grid", "values", "is_real", "_hat", "_hat_neg")

    def __init__(self, grid: Grid, values, copy: bool = True):
        arr = np.array(values, dtype=np.complex128, copy=copy)
        if arr.shape != grid.shape:
            raise DomainError(
                f"values shape {arr.shape} does not match grid shape {grid.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("test function values must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        self.is_real = bool(np.max(np.abs(arr.imag), initial=0.0) <= REALITY_TOL)
        self._hat = None
        self._hat_neg = None

    @classmethod
    def zeros(cls, grid: Grid) -> "TestFunction":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), copy=False)

    @property
    def hat(self) -> np.ndarray:
        """f^(k) = a^d sum_x exp(-i k.x) f(x), FFT layout."""
        if self._hat is None:
            h = np.fft.fftn(self.values) * self.grid.cell
            h.setflags(write=False)
            self._hat = h
        return self._hat

    @property
    def hat_neg(self) -> np.ndarray:
        """f^(-k), FFT layout."""
        if self._hat_neg is None:
            h = reflect_momentum(self.hat)
            h.setflags(write=False)
            self._hat_neg = h
        return self._hat_neg

    def _same_grid(self, other: "TestFunction") -> None:
        if self.grid != other.grid:
            raise DomainError("test functions live on different grids")

    def __add__(self, other: "TestFunction") -> "TestFunction":
        self._same_grid(other)
        return TestFunction(self.grid, self.values + other.values, copy=False)

    def __sub__(self, other: "TestFunction") -> "TestFunction":
        self._same_grid(other)
        return TestFunction(self.grid, self.values - other.values, copy=False)

    def __neg__(self) -> "TestFunction":
        return TestFunction(self.grid, -self.values, copy=False)

    def __mul__(self, c) -> "TestFunction":
        return TestFunction(self.grid, self.values * complex(c), copy=False)

    __rmul__ = __mul__

    def conjugate(self) -> "TestFunction":
        return TestFunction(self.grid, np.conj(self.values), copy=False)

    def inner(self, other: "TestFunction") -> complex:
        """Discrete L2 inner product  a^d sum_x conj(f) g."""
        self._same_grid(other)
        return complex(self.grid.cell * np.sum(np.conj(self.values) * other.values))

    def l2_norm(self) -> float:
        return math.sqrt(self.inner(self).real)


def fourier(f: TestFunction) -> TestFunction:
    """Momentum-space samples of f as a TestFunction on the dual grid."""
    return TestFunction(f.grid, f.hat, copy=True)


def inverse_fourier(g: TestFunction) -> TestFunction:
    vals = np.fft.ifftn(g.values) / g.grid.cell
    return TestFunction(g.grid, vals, copy=False)


def gaussian_packet(grid: Grid, center, width: float, momentum=None) -> TestFunction:
    """Periodized Gaussian envelope times plane wave, unit discrete L2 norm.

        f(x) ~ sum_images exp(-(x - c + mL)^2 / (2 w^2) + i p.(x - c + mL))

    `center` and `width` are physical lengths; `momentum` is a wave vector
    (multiples of 2 pi / L keep the plane wave seam-free).  Requires
    2a <= width <= L/4 so the packet is both resolvable and wrap-safe.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (grid.d,):
        raise DomainError(f"center must have {grid.d} components, got {c.shape}")
    if momentum is None:
        p = np.zeros(grid.d)
    else:
        p = np.atleast_1d(np.asarray(momentum, dtype=float))
        if p.shape != (grid.d,):
            raise DomainError(f"momentum must have {grid.d} components, got {p.shape}")
    if width < 2 * grid.spacing * (1 - 1e-12):
        raise ResolutionError(
            f"width {width} is not resolvable: need >= 2*spacing = {2 * grid.spacing}"
        )
    if width > grid.extent / 4 * (1 + 1e-12):
        raise ResolutionError(
            f"width {width} exceeds L/4 = {grid.extent / 4}: wrap-around not negligible"
        )
    x = grid.axis_coordinates()
    axes = []
    for i in range(grid.d):
        acc = np.zeros(grid.n_per_axis, dtype=np.complex128)
        for m in range(-3, 4):  # images beyond +-3L are < exp(-50) here
            xi = x - c[i] + m * grid.extent
            acc += np.exp(-(xi ** 2) / (2.0 * width ** 2) + 1j * p[i] * xi)
        axes.append(acc)
    vals = reduce(np.multiply.outer, axes) if grid.d > 1 else axes[0]
    norm = math.sqrt(grid.cell * float(np.sum(np.abs(vals) ** 2)))
    return TestFunction(grid, vals / norm, copy=False)


def site_indicator(grid: Grid, site) -> TestFunction:
    """Unit-norm function supported on a single site (maximal localization)."""
    idx = tuple(int(s) % grid.n_per_axis for s in np.atleast_1d(site))
    if len(idx) != grid.d:
        raise DomainError(f"site must have {grid.d} components, got {len(idx)}")
    vals = np.zeros(grid.shape, dtype=np.complex128)
    vals[idx] = 1.0 / math.sqrt(grid.cell)
    return TestFunction(grid, vals, copy=False)


def sobolev_norm(f: TestFunction, m2: float, symbol: str = "lattice") -> float:
    """Mass-regularized Sobolev norm  sqrt( L^-d sum_k |f^|^2 / (khat^2+m2) ).

    Equals sqrt(S2(f,f)) of the free mass-m2 two-point function for real f.
    """
    if m2 <= 0:
        raise DomainError(
            f"sobolev_norm needs m2 > 0 (zero mode diverges at m2=0), got {m2}"
        )
    w = momentum_symbol(f.grid, symbol)
    val = float(np.sum(np.abs(f.hat) ** 2 / (w + m2))) / f.grid.extent ** f.grid.d
    return math.sqrt(val)


@dataclass(frozen=True)
class Isometry:
    """A lattice isometry, applied by exact site permutation.

    kinds:
      'translation'      params = integer site offsets, one per axis
      'rotation'         params = (i, j): 90-degree turn in the oriented
                         (i, j) coordinate plane
      'axis_reflection'  params = (axis,): x_axis -> -x_axis through 0
      'time_reflection'  link reflection t -> -a - t (site n0 -> N-1-n0)
    """

    kind: str
    params: tuple[int, ...] = ()

    @staticmethod
    def translation(offsets) -> "Isometry":
        return Isometry("translation", tuple(int(o) for o in np.atleast_1d(offsets)))

    @staticmethod
    def rotation(axis_i: int, axis_j: int) -> "Isometry":
        return Isometry("rotation", (int(axis_i), int(axis_j)))

    @staticmethod
    def axis_reflection(axis: int) -> "Isometry":
        return Isometry("axis_reflection", (int(axis),))

    @staticmethod
    def time_reflection() -> "Isometry":
        return Isometry("time_reflection")

    @staticmethod
    def identity(d: int) -> "Isometry":
        return Isometry("translation", (0,) * d)


def _negate_axis(v: np.ndarray, ax: int) -> np.ndarray:
    # index map n -> (-n) mod N along one axis
    return np.roll(np.flip(v, axis=ax), 1, axis=ax)


def apply_isometry(f: TestFunction, iso: Isometry) -> TestFunction:
    """Pull back f along the isometry: (g.f)(x) = f(g^-1 x).  Exact permutation."""
    g, v = f.grid, f.values
    if iso.kind == "translation":
        if len(iso.params) != g.d:
            raise DomainError(
                f"translation needs {g.d} offsets, got {len(iso.params)}"
            )
        out = np.roll(v, shift=iso.params, axis=tuple(range(g.d)))
    elif iso.kind == "time_reflection":
        out = np.flip(v, axis=TIME_AXIS)
    elif iso.kind == "axis_reflection":
        if len(iso.params) != 1 or not 0 <= iso.params[0] < g.d:
            raise DomainError(f"bad axis_reflection params {iso.params}")
        out = _negate_axis(v, iso.params[0])
    elif iso.kind == "rotation":
        if g.d < 2:
            raise DomainError("rotations need d >= 2")
        if len(iso.params) != 2:
            raise DomainError(f"rotation needs an axis pair, got {iso.params}")
        i, j = iso.params
        if i == j or not (0 <= i < g.d and 0 <= j < g.d):
            raise DomainError(f"bad rotation plane {iso.params}")
        out = np.swapaxes(_negate_axis(v, j), i, j)
    else:
        raise DomainError(f"unknown isometry kind {iso.kind!r}")
    return TestFunction(g, out, copy=True)


def positive_time_support(f: TestFunction, tol: float = REALITY_TOL) -> bool:
    """True iff f vanishes (|.| <= tol) on every slice with signed time < a/2.

    With the link-reflection placement this confines the support to the
    strictly positive time slices t in {a, ..., (N/2-1) a}.
    """
    t = f.grid.signed_axis_coordinates()
    mask = t < f.grid.spacing / 2
    if not mask.any():
        return True
    worst = float(np.max(np.abs(f.values[mask])))
    return worst <= tol


def positive_time_part(f: TestFunction, renormalize: bool = True) -> TestFunction:
    """Project f onto the positive-time slices (gate for reflection tests)."""
    t = f.grid.signed_axis_coordinates()
    keep = t >= f.grid.spacing / 2
    vals = f.values * keep.reshape((-1,) + (1,) * (f.grid.d - 1))
    out = TestFunction(f.grid, vals, copy=False)
    if renormalize:
        norm = out.l2_norm()
        if norm == 0.0:
            raise DomainError("function has no support at positive times")
        out = (1.0 / norm) * out
    return out


def save_test_function(f: TestFunction, path) -> None:
    """Flat text record: header (d, n_per_axis, spacing) + row-major re/im pairs."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("testfunction v1\n")
        fh.write(
            f"d={f.grid.d} n_per_axis={f.grid.n_per_axis} "
            f"spacing={float(f.grid.spacing)!r}\n"
        )
        for z in f.values.ravel(order="C"):
            fh.write(f"{float(z.real)!r} {float(z.imag)!r}\n")


def load_test_function(path) -> TestFunction:
    with open(path, "r", encoding="ascii") as fh:
        magic = fh.readline().strip()
        if magic != "testfunction v1":
            raise SchemaError(f"not a testfunction file: bad header {magic!r}")
        fields = dict(tok.split("=", 1) for tok in fh.readline().split())
        try:
            grid = Grid(int(fields["d"]), int(fields["n_per_axis"]),
                        float(fields["spacing"]))
        except KeyError as exc:
            raise SchemaError(f"testfunction header missing {exc.args[0]!r}") from None
        flat = np.empty(grid.volume, dtype=np.complex128)
        for i in range(grid.volume):
            line = fh.readline()
            if not line:
                raise SchemaError(f"testfunction file truncated at value {i}")
            re_s, im_s = line.split()
            flat[i] = complex(float(re_s), float(im_s))
    return TestFunction(grid, flat.reshape(grid.shape), copy=False)
