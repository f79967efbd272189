"""Periodic spectral grid, immutable complex fields and the quadrature norms on them.

The box is ``[-L/2, L/2)^N`` sampled with ``M`` points per axis; all weighted
quantities use the centred coordinate.  Quadratures are the rectangle rule,
which is spectrally accurate for smooth periodic integrands.

Spectral normalisation: ``û = h^N · fftn(u)`` (FFT ordering), so that
``h^N Σ|u|² = L^{-N} Σ|û|²``.
"""
from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft

SNAPSHOT_HEADER = struct.Struct("<iid")  # dim, M, L


class GridMismatchError(ValueError):
    pass


class ResamplingWarning(UserWarning):
    """Emitted when a resampled field loses more than the tolerated content."""


@dataclass(frozen=True)
class Grid:
    dim: int
    points: int
    extent: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        m = self.points
        if m < 2 or m & (m - 1):
            raise ValueError(f"points per axis must be a power of two, got {m}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Centred 1D coordinates ``-L/2 + j h``."""
        return -0.5 * self.extent + self.spacing * np.arange(self.points)

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        """``2π j / L`` in FFT order (j = 0..M/2-1, -M/2..-1)."""
        return 2.0 * np.pi * sfft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        if self.dim == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        k = self.axis_wavenumbers
        if self.dim == 1:
            return (k,)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    @cached_property
    def radius_sq(self) -> np.ndarray:
        return sum(c * c for c in self.coords)

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(k * k for k in self.wavenumbers)

    @property
    def kmax(self) -> float:
        return np.pi / self.spacing

    def scaled(self, factor: float) -> "Grid":
        """Same point count, extent multiplied by ``factor``."""
        return Grid(self.dim, self.points, self.extent * factor)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on a :class:`Grid`; read-only after construction."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != self.grid.shape:
            raise GridMismatchError(f"values have shape {v.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        return cls(grid, fn(*grid.coords))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values))

    def __mul__(self, c) -> "Field":
        if isinstance(c, Field):
            _check_same_grid(self, c)
            c = c.values
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def abs(self) -> np.ndarray:
        return np.abs(self.values)


def _check_same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"fields live on different grids: {a.grid} vs {b.grid}")


# -- norms ----------------------------------------------------------------

def lp_norm(f: Field, r: float) -> float:
    """Rectangle-rule ``L^r`` norm; ``r = inf`` gives the max modulus."""
    if not r >= 1:
        raise ValueError(f"L^r norm needs r >= 1, got {r!r}")
    a = np.abs(f.values)
    if math.isinf(r):
        return float(a.max())
    return float((f.grid.cell_volume * np.sum(a ** r)) ** (1.0 / r))


def fh_sobolev_norm(f: Field, s: float) -> float:
    """``‖|x|^s f‖₂`` for ``s ∈ [0, 1]``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s!r}")
    w = np.abs(f.values) ** 2
    if s != 0.0:
        w = w * f.grid.radius_sq ** s
    return float(math.sqrt(f.grid.cell_volume * np.sum(w)))


def weighted_norm(f: Field) -> float:
    """``‖x f‖₂`` with the centred coordinate."""
    return fh_sobolev_norm(f, 1.0)


# -- spectral side ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralField:
    """Frequency coefficients ``h^N fftn(u)`` in FFT order."""

    grid: Grid
    coeffs: np.ndarray


def spectral_transform(f: Field) -> SpectralField:
    return SpectralField(f.grid, f.grid.cell_volume * sfft.fftn(f.values))


def inverse_spectral_transform(s: SpectralField) -> Field:
    if s.coeffs.shape != s.grid.shape:
        raise GridMismatchError("coefficient array does not match the grid")
    return Field(s.grid, sfft.ifftn(s.coeffs) / s.grid.cell_volume)


def spectral_l2_norm(s: SpectralField) -> float:
    """Frequency-side Parseval sum ``(L^{-N} Σ|û|²)^{1/2}``."""
    return float(math.sqrt(np.sum(np.abs(s.coeffs) ** 2) / s.grid.extent ** s.grid.dim))


def gradient_values(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """Spectral derivative along each axis."""
    vh = sfft.fftn(values)
    return [sfft.ifftn(1j * k * vh) for k in grid.wavenumbers]


def gradient_norm(f: Field) -> float:
    """``‖∇f‖₂`` from the spectral multiplier ``|k|²``."""
    vh = sfft.fftn(f.values)
    g = f.grid
    return float(math.sqrt(g.cell_volume * np.sum(g.ksq * np.abs(vh) ** 2) / vh.size))


# -- diagnostics of resolution -----------------------------------------------

def outer_shell_fraction(values: np.ndarray, grid: Grid, shell: float = 0.1) -> float:
    """Share of ``Σ|u|²`` in the outer ``shell`` fraction of the box (per axis)."""
    w = np.abs(values) ** 2
    total = w.sum()
    if total == 0:
        return 0.0
    edge = (0.5 - shell) * grid.extent
    mask = np.zeros(grid.shape, dtype=bool)
    for c in grid.coords:
        mask |= np.abs(c) > edge
    return float(w[mask].sum() / total)


def spectral_tail_fraction(values: np.ndarray, grid: Grid, band: float = 0.2) -> float:
    """Share of spectral mass with some ``|k_j| > (1 - band) k_max``."""
    w = np.abs(sfft.fftn(values)) ** 2
    total = w.sum()
    if total == 0:
        return 0.0
    cut = (1.0 - band) * grid.kmax
    mask = np.zeros(grid.shape, dtype=bool)
    for k in grid.wavenumbers:
        mask |= np.abs(k) > cut
    return float(w[mask].sum() / total)


# -- resampling -------------------------------------------------------------------

def _upsample2(values: np.ndarray, axis: int) -> np.ndarray:
    """Band-limited interpolation onto a grid of twice the density along ``axis``."""
    m = values.shape[axis]
    c = sfft.fft(values, axis=axis)
    c = np.moveaxis(c, axis, 0)
    out = np.zeros((2 * m,) + c.shape[1:], dtype=complex)
    out[: m // 2] = c[: m // 2]
    out[-(m // 2) + 1:] = c[m // 2 + 1:]
    out[m // 2] = 0.5 * c[m // 2]
    out[-(m // 2)] = 0.5 * c[m // 2]
    res = 2.0 * sfft.ifft(out, axis=0)
    return np.moveaxis(res, 0, axis)


def _trig_eval_1d(values: np.ndarray, grid: Grid, pts: np.ndarray, axis: int) -> np.ndarray:
    """Evaluate the trigonometric interpolant along ``axis`` at coordinates ``pts``."""
    m = grid.points
    c = sfft.fft(values, axis=axis) / m
    c = np.moveaxis(c, axis, 0)
    k = grid.axis_wavenumbers.copy()
    c[m // 2] *= 0.5  # split the Nyquist mode symmetrically
    k_all = np.concatenate([k, [-k[m // 2]]])
    c_all = np.concatenate([c, c[m // 2: m // 2 + 1]], axis=0)
    phase = np.exp(1j * np.outer(pts - grid.axis[0], k_all))
    res = np.tensordot(phase, c_all, axes=(1, 0))
    return np.moveaxis(res, 0, axis)


def sample_stretched(f: Field, a: float) -> np.ndarray:
    """Values of ``x ↦ f(x / a)`` at the grid nodes, with ``f`` taken as zero outside the box.

    ``a = 2`` and ``a = 1/2`` use exact index maps (on the 2x band-limited
    upsampling for ``a = 2``); other factors evaluate the trigonometric
    interpolant directly.
    """
    g = f.grid
    m = g.points
    v = f.values
    if a == 1:
        return v.copy()
    if a == 0.5:
        j = 2 * np.arange(m) - m // 2
        inside = (j >= 0) & (j < m)
        for ax in range(g.dim):
            v = np.take(v, j % m, axis=ax)
            shape = [1] * g.dim
            shape[ax] = m
            v = v * inside.reshape(shape)
        return v
    if a == 2:
        idx = m // 2 + np.arange(m)
        for ax in range(g.dim):
            v = np.take(_upsample2(v, ax), idx, axis=ax)
        return v
    pts = g.axis / a
    inside = (pts >= g.axis[0]) & (pts < -g.axis[0])
    for ax in range(g.dim):
        v = _trig_eval_1d(v, g, pts, ax)
        shape = [1] * g.dim
        shape[ax] = m
        v = v * inside.reshape(shape)
    return v


def stretch_loss(f: Field, a: float) -> float:
    """Fraction of content that ``sample_stretched(f, a)`` cannot represent.

    Stretching (``a > 1``) drops whatever lies outside ``|x| < L/(2a)``;
    compressing (``a < 1``) widens the spectrum and drops ``|k| > a k_max``.
    """
    g = f.grid
    if a == 1:
        return 0.0
    if a > 1:
        w = np.abs(f.values) ** 2
        lim = 0.5 * g.extent / a
        coords = g.coords
    else:
        w = np.abs(sfft.fftn(f.values)) ** 2
        lim = a * g.kmax
        coords = g.wavenumbers
    total = w.sum()
    if total == 0:
        return 0.0
    mask = np.zeros(g.shape, dtype=bool)
    for c in coords:
        mask |= np.abs(c) >= lim
    return float(w[mask].sum() / total)


def rescale(f: Field, omega: float, amplitude_exponent: float, tol: float | None = 1e-10) -> Field:
    """``ω^α f(ω x)`` sampled on the same grid.

    A :class:`ResamplingWarning` is emitted when the estimated lost content
    exceeds ``tol``.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if omega == 1:
        return f
    if tol is not None:
        loss = stretch_loss(f, 1.0 / omega)
        if loss > tol:
            warnings.warn(f"rescaling by omega={omega} loses a fraction {loss:.2e} of the field",
                          ResamplingWarning, stacklevel=2)
    return Field(f.grid, omega ** amplitude_exponent * sample_stretched(f, 1.0 / omega))


# -- persistence --------------------------------------------------------------

def write_snapshot(path, f: Field) -> None:
    """Little-endian header ``(dim:int32, M:int32, L:float64)`` then interleaved re/im doubles."""
    g = f.grid
    inter = np.empty(f.values.size * 2, dtype="<f8")
    flat = f.values.ravel(order="C")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_HEADER.pack(g.dim, g.points, g.extent))
        fh.write(inter.tobytes())


def read_snapshot(path) -> Field:
    data = Path(path).read_bytes()
    dim, m, extent = SNAPSHOT_HEADER.unpack_from(data, 0)
    grid = Grid(dim, m, extent)
    inter = np.frombuffer(data, dtype="<f8", offset=SNAPSHOT_HEADER.size)
    if inter.size != 2 * m ** dim:
        raise GridMismatchError(f"snapshot holds {inter.size // 2} values, header says {m ** dim}")
    vals = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
    return Field(grid, vals)


def write_csv_1d(path, f: Field) -> None:
    if f.grid.dim != 1:
        raise ValueError("CSV export is defined for 1D fields only")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for x, v in zip(f.grid.axis, f.values):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
