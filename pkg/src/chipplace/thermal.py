"""Steady-state thermal solver used as the ground-truth temperature oracle.

The interposer is discretized into a square grid of cells. Each cell is a
node of a resistive network: it conducts to its four neighbours through
``interposer_conductance`` and to ambient through ``sink_conductance``.
Power from the chiplets is injected per cell in proportion to overlap
area. The resulting system

    sum_nbr g (T_nbr - T) + g_sink (ambient - T) + P = 0

is symmetric positive definite; it is factorized once per configuration
and reused for every solve.

Grid convention: ``grid[row, col]`` covers ``y`` in ``[row*h, (row+1)*h)``
and ``x`` in ``[col*h, (col+1)*h)``, so row 0 is the bottom edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import Placement

RESIDUAL_TOL = 1e-8


class NonConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class ThermalConfig:
    grid_resolution: int = 64
    interposer_conductance: float = 2.0
    sink_conductance: float = 0.05
    ambient: float = 45.0

    def __post_init__(self):
        if self.grid_resolution < 8:
            raise ValueError("grid_resolution must be at least 8")
        if self.interposer_conductance <= 0 or self.sink_conductance <= 0:
            raise ValueError("conductances must be positive")


@dataclass(frozen=True)
class ThermalMap:
    grid: np.ndarray
    max_temp: float
    argmax_cell: tuple[int, int]


def power_map(p: Placement, resolution: int) -> np.ndarray:
    """Rasterize chiplet power onto a ``resolution`` x ``resolution`` grid by exact overlap area."""
    out = np.zeros((resolution, resolution))
    h = p.interposer_size / resolution
    edges = np.arange(resolution + 1) * h
    lo, hi = edges[:-1], edges[1:]
    for i, c in enumerate(p.chiplets):
        if c.power == 0:
            continue
        x0, y0, x1, y1 = p.rect(i)
        ox = np.clip(np.minimum(hi, x1) - np.maximum(lo, x0), 0.0, None)
        oy = np.clip(np.minimum(hi, y1) - np.maximum(lo, y0), 0.0, None)
        area = np.outer(oy, ox)
        total = area.sum()
        if total > 0:
            out += area * (c.power / total)
    return out


@lru_cache(maxsize=8)
def _system(n: int, g: float, g_sink: float):
    idx = np.arange(n * n).reshape(n, n)
    rows, cols = [], []
    for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        rows.append(a.ravel())
        cols.append(b.ravel())
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    off = sp.coo_matrix((np.full(r.size, -g), (r, c)), shape=(n * n, n * n))
    off = off + off.T
    degree = -np.asarray(off.sum(axis=1)).ravel()
    A = (off + sp.diags(degree + g_sink)).tocsc()
    return A, spla.splu(A)


def solve_steady_state(power: np.ndarray, cfg: ThermalConfig = ThermalConfig()) -> ThermalMap:
    power = np.asarray(power, dtype=float)
    n = cfg.grid_resolution
    if power.shape != (n, n):
        raise ValueError(f"power map must be {n}x{n}, got {power.shape}")
    if np.any(power < 0):
        raise ValueError("power entries must be nonnegative")
    A, lu = _system(n, cfg.interposer_conductance, cfg.sink_conductance)
    b = power.ravel()
    rise = lu.solve(b)
    norm_b = np.linalg.norm(b)
    if norm_b > 0:
        residual = np.linalg.norm(A @ rise - b) / norm_b
        if not residual <= RESIDUAL_TOL:
            raise NonConvergence(f"relative residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")
    # the exact solution is nonnegative (M-matrix); clip roundoff-level negatives
    grid = cfg.ambient + np.maximum(rise, 0.0).reshape(n, n)
    flat = int(np.argmax(grid))
    return ThermalMap(grid, float(grid.flat[flat]), divmod(flat, n))


def thermal_map(p: Placement, cfg: ThermalConfig = ThermalConfig()) -> ThermalMap:
    return solve_steady_state(power_map(p, cfg.grid_resolution), cfg)


def max_temperature(p: Placement, cfg: ThermalConfig = ThermalConfig()) -> float:
    return thermal_map(p, cfg).max_temp


def write_csv(tmap: ThermalMap, path: str | Path) -> None:
    lines = [",".join(f"{v:.9g}" for v in row) for row in tmap.grid]
    Path(path).write_text("\n".join(lines) + "\n")


def write_pgm(tmap: ThermalMap, path: str | Path, ambient: float) -> None:
    """8-bit binary PGM, black at ambient and white at the peak; top row is the top edge."""
    grid = tmap.grid
    span = tmap.max_temp - ambient
    if span > 0:
        scaled = np.clip((grid - ambient) / span, 0.0, 1.0) * 255.0
    else:
        scaled = np.zeros_like(grid)
    img = np.flipud(np.rint(scaled).astype(np.uint8))
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
