"""Square-lattice geometry: site indexing, neighbour enumeration, distances.

Sites are numbered row by row, ``index = y * width + x``, so on a 3x3
lattice::

    6 7 8
    3 4 5        y grows upward, x to the right
    0 1 2

The default geometry is an odd-sized open square so that the impurity has
a unique centre site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

OPEN = "open"
PERIODIC = "periodic"


@dataclass(frozen=True)
class LatticeConfig:
    """Square lattice with open or periodic boundary conditions."""

    width: int = 15
    height: int = 15
    boundary: str = OPEN

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"lattice dimensions must be >= 1, got {self.width}x{self.height}")
        if self.n_sites < 1:
            raise ValueError("empty lattice")
        if self.boundary not in (OPEN, PERIODIC):
            raise ValueError(f"unknown boundary condition {self.boundary!r}")
        if self.boundary == PERIODIC and (self.width < 3 or self.height < 3):
            # wrapping a dimension of 1 or 2 would create self-links / double bonds
            raise ValueError("periodic boundaries need width and height >= 3")

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    @property
    def center_site(self) -> int:
        return ((self.height - 1) // 2) * self.width + (self.width - 1) // 2

    def site_index(self, x: int, y: int) -> int:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ValueError(f"coordinates ({x}, {y}) outside {self.width}x{self.height} lattice")
        return y * self.width + x

    def site_coords(self, site: int) -> tuple[int, int]:
        if not (0 <= site < self.n_sites):
            raise ValueError(f"site id {site} outside 0..{self.n_sites - 1}")
        return site % self.width, site // self.width

    def neighbors(self, site: int) -> list[int]:
        """Nearest neighbours of ``site``, sorted ascending."""
        x, y = self.site_coords(site)
        out = []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if self.boundary == PERIODIC:
                nx %= self.width
                ny %= self.height
            elif not (0 <= nx < self.width and 0 <= ny < self.height):
                continue
            out.append(self.site_index(nx, ny))
        return sorted(out)

    def bonds(self) -> list[tuple[int, int]]:
        """Each nearest-neighbour bond once, as (low site, high site)."""
        seen = set()
        for i in range(self.n_sites):
            for j in self.neighbors(i):
                seen.add((min(i, j), max(i, j)))
        return sorted(seen)

    def distance(self, i: int, j: int) -> float:
        """Euclidean distance in lattice constants (minimum image under PBC)."""
        xi, yi = self.site_coords(i)
        xj, yj = self.site_coords(j)
        dx, dy = abs(xi - xj), abs(yi - yj)
        if self.boundary == PERIODIC:
            dx = min(dx, self.width - dx)
            dy = min(dy, self.height - dy)
        return math.hypot(dx, dy)
