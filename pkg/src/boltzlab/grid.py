"""Truncated uniform velocity grids and grid functions.

Velocities live in the box [-R, R]^d with N cell-centered nodes per axis,
v_i = -R + (i + 1/2) h, h = 2R/N. Everything outside the box is treated as
zero (compact-support convention), which is how the whole-space integrals
get truncated. N is required to be even so that v -> -v is an exact grid
symmetry (node i maps to node N-1-i on every axis).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "VelocityGrid",
    "GridFunction",
    "ClassYBounds",
    "make_maxwellian",
    "weight",
    "interpolate",
    "save_grid_function",
    "load_grid_function",
]


@dataclass(frozen=True)
class VelocityGrid:
    """Cell-centered uniform grid on [-R, R]^d, d in {2, 3}."""

    d: int
    R: float
    N: int

    def __post_init__(self) -> None:
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.R <= 0:
            raise ValueError(f"truncation radius must be positive, got {self.R}")
        if self.N <= 0 or self.N % 2 != 0:
            raise ValueError(f"N must be a positive even integer, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def n_nodes(self) -> int:
        return self.N**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axis(self) -> np.ndarray:
        """Node coordinates along one axis."""
        return -self.R + (np.arange(self.N) + 0.5) * self.h

    def coords(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of node coordinates, one shaped array per axis."""
        ax = self.axis()
        return tuple(np.meshgrid(*([ax] * self.d), indexing="ij"))

    def nodes(self) -> np.ndarray:
        """All node coordinates as an (N^d, d) array, lexicographic order."""
        return np.stack([c.ravel() for c in self.coords()], axis=-1)

    def squared_radius(self) -> np.ndarray:
        """|v|^2 at every node, shaped."""
        out = np.zeros(self.shape)
        for c in self.coords():
            out += c * c
        return out

    def meta(self) -> dict:
        """Plain-dict description for report provenance."""
        return {"d": self.d, "N": self.N, "R": self.R}


class GridFunction:
    """Values of a scalar function at the nodes of a VelocityGrid.

    Stored shaped (N, ..., N), row-major, so ``values.ravel()`` gives the
    lexicographic flat layout used by the serialization formats. ``nonneg``
    is a constructor-tracked flag for physical states; differences of
    states are perfectly legal GridFunctions with the flag off.
    """

    __slots__ = ("grid", "values", "nonneg")

    def __init__(self, grid: VelocityGrid, values: np.ndarray, nonneg: bool = False):
        values = np.asarray(values, dtype=np.float64)
        if values.size != grid.n_nodes:
            raise ValueError(
                f"expected {grid.n_nodes} values for N={grid.N}, d={grid.d}, got {values.size}"
            )
        values = values.reshape(grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        self.grid = grid
        self.values = values
        self.nonneg = bool(nonneg) and bool(np.all(values >= 0))

    def integrate(self) -> float:
        """Midpoint-rule integral over the box, h^d * sum of values."""
        return float(self.values.sum()) * self.grid.cell_volume

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy(), nonneg=self.nonneg)

    def __repr__(self) -> str:  # pragma: no cover
        g = self.grid
        return f"GridFunction(d={g.d}, R={g.R}, N={g.N}, nonneg={self.nonneg})"


@dataclass(frozen=True)
class ClassYBounds:
    """Mass/energy/entropy box defining the admissible class of states:
    mass at least rho, energy moment at most E, entropy at most H.
    """

    rho: float
    E: float
    H: float

    def __post_init__(self) -> None:
        if self.rho <= 0 or self.E <= 0:
            raise ValueError("rho and E must be positive")

    def contains(self, f: GridFunction) -> bool:
        m0, m2, ent = state_data(f)
        return f.nonneg and m0 >= self.rho and m2 <= self.E and ent <= self.H

    def report(self, f: GridFunction) -> dict:
        m0, m2, ent = state_data(f)
        return {
            "mass": m0,
            "energy_moment": m2,
            "entropy": ent,
            "nonneg": f.nonneg,
            "member": self.contains(f),
        }


def state_data(f: GridFunction) -> tuple[float, float, float]:
    """Discrete (m0, m2, entropy) of a state: integrals of f, f<v>^2, f log f.

    Cells with f = 0 contribute 0 to the entropy (the x log x convention).
    """
    g = f.grid
    vol = g.cell_volume
    vals = f.values
    w2 = 1.0 + g.squared_radius()
    m0 = float(vals.sum()) * vol
    m2 = float((vals * w2).sum()) * vol
    pos = vals[vals > 0]
    ent = float((pos * np.log(pos)).sum()) * vol
    return m0, m2, ent


def make_maxwellian(
    grid: VelocityGrid, mass: float, mean, temperature: float
) -> GridFunction:
    """Gaussian state mass*(2*pi*T)^(-d/2) exp(-|v-mean|^2 / 2T) sampled at nodes.

    mass = 0 is allowed and returns the zero function.
    """
    if mass < 0:
        raise ValueError(f"mass must be nonnegative, got {mass}")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), (grid.d,))
    if mass == 0.0:
        return GridFunction(grid, np.zeros(grid.shape), nonneg=True)
    q = np.zeros(grid.shape)
    for c, m in zip(grid.coords(), mean):
        q += (c - m) ** 2
    vals = mass * (2.0 * np.pi * temperature) ** (-grid.d / 2.0) * np.exp(
        -q / (2.0 * temperature)
    )
    return GridFunction(grid, vals, nonneg=True)


def weight(grid: VelocityGrid, k: float) -> GridFunction:
    """The polynomial weight <v>^k = (1 + |v|^2)^(k/2) at every node."""
    vals = (1.0 + grid.squared_radius()) ** (k / 2.0)
    return GridFunction(grid, vals, nonneg=True)


def interpolate(f: GridFunction, v) -> float | np.ndarray:
    """Multilinear interpolation of f at off-grid points.

    Points outside the node hull get the zero extension: each axis clamps
    missing neighbor cells to value 0, so the interpolant decays linearly
    to 0 across the outermost half-cell and is 0 beyond the box.

    Accepts a single point of shape (d,) or a batch of shape (n, d).
    """
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 1
    pts = v.reshape(1, -1) if single else v
    if pts.shape[1] != f.grid.d:
        raise ValueError(f"points must have {f.grid.d} components")
    out = _interp_batch(f.values, f.grid.R, f.grid.h, pts)
    return float(out[0]) if single else out


def _interp_batch(values: np.ndarray, R: float, h: float, pts: np.ndarray) -> np.ndarray:
    """Vectorized multilinear interpolation with zero outside the box."""
    d = pts.shape[1]
    N = values.shape[0]
    # fractional node index along each axis; node i sits at -R + (i + 1/2) h
    t = (pts + R) / h - 0.5
    i0 = np.floor(t).astype(np.int64)
    w = t - i0
    out = np.zeros(len(pts))
    flat = values.ravel()
    for corner in range(1 << d):
        idx = np.zeros(len(pts), dtype=np.int64)
        cw = np.ones(len(pts))
        ok = np.ones(len(pts), dtype=bool)
        for ax in range(d):
            bit = (corner >> ax) & 1
            ia = i0[:, ax] + bit
            cw = cw * (w[:, ax] if bit else 1.0 - w[:, ax])
            ok &= (ia >= 0) & (ia < N)
            idx = idx * N + np.clip(ia, 0, N - 1)
        out[ok] += cw[ok] * flat[idx[ok]]
    return out


# ---------------------------------------------------------------------------
# serialization: binary (magic + header + float64 payload) and CSV


_MAGIC = b"VGF1"


def save_grid_function(f: GridFunction, path: str | Path, fmt: str = "binary") -> None:
    """Write a grid function to disk.

    binary: magic 'VGF1', then little-endian (int32 d, int32 N, float64 R),
    then N^d float64 values in row-major (lexicographic) node order.
    csv: a '# d=.. R=.. N=..' header line followed by one value per line
    in the same order.
    """
    path = Path(path)
    g = f.grid
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<iid", g.d, g.N, g.R))
            fh.write(f.values.ravel().astype("<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            fh.write(f"# d={g.d} R={g.R!r} N={g.N}\n")
            for x in f.values.ravel():
                fh.write(repr(float(x)) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}, expected 'binary' or 'csv'")


def load_grid_function(path: str | Path) -> GridFunction:
    """Read a grid function written by save_grid_function (either format)."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic == _MAGIC:
            d, N, R = struct.unpack("<iid", fh.read(16))
            grid = VelocityGrid(d=d, R=R, N=N)
            vals = np.frombuffer(fh.read(8 * grid.n_nodes), dtype="<f8")
            return GridFunction(grid, vals.copy())
    # fall back to the CSV layout
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path} is neither binary nor CSV grid-function data")
        fields = dict(tok.split("=") for tok in header[1:].split())
        grid = VelocityGrid(d=int(fields["d"]), R=float(fields["R"]), N=int(fields["N"]))
        vals = np.array([float(line) for line in fh if line.strip()])
    return GridFunction(grid, vals)
