"""Uniform cell-centred mesh on [-L, L] and fields sampled on it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform 1D finite-volume mesh.

    Cells have width ``dx = 2L/N`` and centres ``x_j = -L + (j + 1/2) dx``.
    """

    L: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"grid half-width must be positive, got L={self.L}")
        if int(self.N) != self.N or self.N < 16:
            raise ValueError(f"grid needs at least 16 cells, got N={self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return -self.L + (np.arange(self.N) + 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return -self.L + np.arange(self.N + 1) * self.dx

    def same_as(self, other: "Grid") -> bool:
        return self.N == other.N and self.L == other.L


@dataclass(frozen=True)
class Field:
    """Cell values on a grid at a given time."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.N,):
            raise ValueError(f"field has shape {values.shape}, grid expects ({self.grid.N},)")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        if self.time < 0:
            raise ValueError(f"field time must be nonnegative, got {self.time}")
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def mass(self) -> float:
        return float(self.grid.dx * np.sum(self.values))

    def with_values(self, values, time: float | None = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)


def check_same_grid(*fields: Field) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if not grid.same_as(f.grid):
            raise ValueError("fields live on different grids")
    return grid
