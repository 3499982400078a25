"""Site indexing and periodic neighbor arithmetic for anisotropic lattices.

Sites carry a flat row-major index with the time coordinate slowest, so a
fixed-time slice is one contiguous block (the Polyakov loop walks whole
slices).  Direction 0 is time, directions 1..d are spatial.  The spatial
dimension d is runtime data, not a constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TIME = 0


@dataclass(frozen=True)
class LatticeShape:
    """Extents of a (d+1)-dimensional periodic lattice."""

    n_t: int
    n_s: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "n_t", int(self.n_t))
        object.__setattr__(self, "n_s", tuple(int(n) for n in self.n_s))
        if len(self.n_s) < 1:
            raise ValueError("need at least one spatial dimension")
        if self.n_t < 2 or any(n < 2 for n in self.n_s):
            raise ValueError("all lattice extents must be >= 2")

    @property
    def d(self) -> int:
        return len(self.n_s)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.n_t, *self.n_s)

    @property
    def volume(self) -> int:
        v = self.n_t
        for n in self.n_s:
            v *= n
        return v

    @property
    def spatial_volume(self) -> int:
        return self.volume // self.n_t


class Lattice:
    """A lattice shape plus precomputed periodic neighbor tables.

    ``fwd[mu]`` / ``bwd[mu]`` are permutations of ``arange(volume)`` mapping
    each site to its neighbor one step along +mu / -mu.  They are used as
    gather indices on per-site field arrays, so bulk shifts never touch
    Python loops.
    """

    def __init__(self, shape: LatticeShape):
        self.shape = shape
        grid = np.arange(shape.volume).reshape(shape.dims)
        # rolled[c] = grid[c + e_mu], hence rolled.ravel() maps flat -> flat.
        self.fwd = [np.roll(grid, -1, axis=mu).ravel() for mu in range(shape.d + 1)]
        self.bwd = [np.roll(grid, +1, axis=mu).ravel() for mu in range(shape.d + 1)]

    @property
    def d(self) -> int:
        return self.shape.d

    @property
    def volume(self) -> int:
        return self.shape.volume

    def index(self, coords) -> int:
        """Flat index of ``(t, x_1, .., x_d)`` with periodic wrap."""
        dims = self.shape.dims
        if len(coords) != len(dims):
            raise ValueError(f"expected {len(dims)} coordinates, got {len(coords)}")
        flat = 0
        for c, n in zip(coords, dims):
            flat = flat * n + (int(c) % n)
        return flat

    def coords(self, site: int) -> tuple[int, ...]:
        """Coordinate tuple of a flat site index."""
        dims = self.shape.dims
        out = []
        for n in reversed(dims):
            out.append(site % n)
            site //= n
        return tuple(reversed(out))

    def neighbor(self, site: int, mu: int, sign: int) -> int:
        """Site one step along direction mu (0 = time) with periodic wrap."""
        if not 0 <= mu <= self.shape.d:
            raise ValueError(f"direction {mu} out of range for d={self.shape.d}")
        if sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")
        table = self.fwd if sign == +1 else self.bwd
        return int(table[mu][site])
