"""Superlevel-set cubical filtrations of 3D volumes.

A volume with dims (n1, n2, n3) is laid out on a doubled index grid of shape
(2*n1-1, 2*n2-1, 2*n3-1). Grid points whose coordinates are all even are
vertices (one per voxel); a point with k odd coordinates is a k-cell spanning
the adjacent vertices along its odd axes. A cell's integer id is its
row-major index in the doubled grid, which makes face and coface lookups
pure index arithmetic.

Every cell carries the minimum of the volume over its corner voxels, so the
complex at threshold t (all cells with value >= t) is exactly the full
subcomplex on the voxels with value >= t. Cells are ordered by value
descending, dimension ascending, anchor voxel (row-major), then spanned-axes
code; this order lists every face before its cofaces.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .volume import Volume


@dataclass(frozen=True)
class Cell:
    """One cell of a cubical filtration.

    ``anchor`` is the smallest corner voxel, ``extent`` the axes the cell
    spans (len(extent) == dim), ``value`` the minimum of the volume over the
    corners, attained at ``critical_vertex``.
    """

    dim: int
    anchor: tuple[int, int, int]
    extent: tuple[int, ...]
    value: float
    critical_vertex: tuple[int, int, int]


class Filtration:
    """Immutable cubical filtration of a volume, superlevel convention."""

    def __init__(self, dims, value_range, values, critical, cell_dims, order, rank, data_min):
        self.dims = dims
        self.value_range = value_range
        self.values = values          # float64, flat over the doubled grid
        self.critical = critical      # int64, flat: critical voxel per cell
        self.cell_dims = cell_dims    # uint8, flat: cell dimension
        self.order = order            # int64: cell ids in filtration order
        self.rank = rank              # int64: position of each cell id in `order`
        self.data_min = data_min

    @property
    def doubled_shape(self) -> tuple[int, int, int]:
        return tuple(2 * n - 1 for n in self.dims)

    @property
    def n_cells(self) -> int:
        return self.values.size

    def strides(self) -> tuple[int, int, int]:
        d1, d2, d3 = self.doubled_shape
        return (d2 * d3, d3, 1)

    def decode(self, cell_id: int) -> tuple[int, int, int]:
        d1, d2, d3 = self.doubled_shape
        x, rem = divmod(int(cell_id), d2 * d3)
        y, z = divmod(rem, d3)
        return x, y, z

    def cell_dim(self, cell_id: int) -> int:
        return int(self.cell_dims[cell_id])

    def voxel_index(self, flat_voxel: int) -> tuple[int, int, int]:
        _, n2, n3 = self.dims
        i, rem = divmod(int(flat_voxel), n2 * n3)
        j, k = divmod(rem, n3)
        return i, j, k

    def cell(self, cell_id: int) -> Cell:
        x, y, z = self.decode(cell_id)
        extent = tuple(a for a, c in enumerate((x, y, z)) if c % 2 == 1)
        anchor = (x // 2, y // 2, z // 2)
        return Cell(
            dim=len(extent),
            anchor=anchor,
            extent=extent,
            value=float(self.values[cell_id]),
            critical_vertex=self.voxel_index(self.critical[cell_id]),
        )

    def cells(self) -> Iterator[Cell]:
        """Cells in filtration order. Intended for small volumes."""
        for cid in self.order:
            yield self.cell(int(cid))

    def faces(self, cell_id: int) -> list[int]:
        """Ids of the codimension-1 faces of a cell."""
        coords = self.decode(cell_id)
        strides = self.strides()
        out = []
        for axis in range(3):
            if coords[axis] % 2 == 1:
                out.append(cell_id - strides[axis])
                out.append(cell_id + strides[axis])
        return out

    def cell_vertices(self, cell_id: int) -> list[int]:
        """Flat voxel indices of the cell's corner vertices."""
        coords = self.decode(cell_id)
        _, n2, n3 = self.dims
        options = []
        for c in coords:
            options.append((c - 1, c + 1) if c % 2 == 1 else (c,))
        out = []
        for x, y, z in itertools.product(*options):
            out.append((x // 2) * n2 * n3 + (y // 2) * n3 + z // 2)
        return out

    def cell_count(self, dim: int | None = None) -> int:
        if dim is None:
            return self.n_cells
        return int(np.count_nonzero(self.cell_dims == dim))

    def counts_at(self, tau: float) -> tuple[int, int, int, int]:
        """Number of cells with value >= tau, per dimension."""
        present = self.values >= tau
        return tuple(
            int(np.count_nonzero(present & (self.cell_dims == d))) for d in range(4)
        )


def build_superlevel_filtration(volume: Volume) -> Filtration:
    """Build the superlevel-set cubical filtration of a volume."""
    f = volume.data
    n1, n2, n3 = f.shape
    d1, d2, d3 = 2 * n1 - 1, 2 * n2 - 1, 2 * n3 - 1

    values = np.empty((d1, d2, d3), dtype=np.float64)
    critical = np.empty((d1, d2, d3), dtype=np.int64)
    values[::2, ::2, ::2] = f
    critical[::2, ::2, ::2] = np.arange(f.size, dtype=np.int64).reshape(f.shape)
    for axis in range(3):
        _fill_axis(values, critical, axis)

    px = (np.arange(d1) % 2).astype(np.int64)
    py = (np.arange(d2) % 2).astype(np.int64)
    pz = (np.arange(d3) % 2).astype(np.int64)
    cell_dims = (
        px[:, None, None] + py[None, :, None] + pz[None, None, :]
    ).astype(np.uint8)

    anchor = (
        (np.arange(d1, dtype=np.int64) // 2)[:, None, None] * (n2 * n3)
        + (np.arange(d2, dtype=np.int64) // 2)[None, :, None] * n3
        + (np.arange(d3, dtype=np.int64) // 2)[None, None, :]
    )
    code = (px[:, None, None] << 2) | (py[None, :, None] << 1) | pz[None, None, :]
    aux = (cell_dims.astype(np.int64) * f.size + anchor) * 8 + code

    flat_vals = values.reshape(-1)
    order = np.lexsort((aux.reshape(-1), -flat_vals))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size, dtype=np.int64)

    return Filtration(
        dims=(n1, n2, n3),
        value_range=volume.value_range,
        values=flat_vals,
        critical=critical.reshape(-1),
        cell_dims=cell_dims.reshape(-1),
        order=order,
        rank=rank,
        data_min=float(f.min()),
    )


def _fill_axis(values: np.ndarray, critical: np.ndarray, axis: int) -> None:
    # cells odd along `axis` take the min of their two faces along it;
    # ties resolve to the lexicographically smaller critical voxel
    ev = [slice(None)] * 3
    ev[axis] = slice(None, None, 2)
    od = [slice(None)] * 3
    od[axis] = slice(1, None, 2)
    lo = [slice(None)] * 3
    lo[axis] = slice(None, -1)
    hi = [slice(None)] * 3
    hi[axis] = slice(1, None)

    v_even = values[tuple(ev)]
    c_even = critical[tuple(ev)]
    a, b = v_even[tuple(lo)], v_even[tuple(hi)]
    ca, cb = c_even[tuple(lo)], c_even[tuple(hi)]
    pick_b = (b < a) | ((b == a) & (cb < ca))
    values[tuple(od)] = np.where(pick_b, b, a)
    critical[tuple(od)] = np.where(pick_b, cb, ca)


def betti_numbers(volume: Volume, tau: float) -> tuple[int, int, int]:
    """Betti numbers (b0, b1, b2) of the complex at threshold tau.

    Counted from the persistence diagrams: finite pairs alive at tau
    (birth >= tau > death) plus essential classes with birth >= tau.
    """
    from .persistence import compute_persistence  # deferred: avoids module cycle

    filt = build_superlevel_filtration(volume)
    out = []
    for dg in compute_persistence(filt):
        finite = ~dg.essential
        alive = int(((dg.births >= tau) & (dg.deaths < tau) & finite).sum())
        alive += int(((dg.births >= tau) & dg.essential).sum())
        out.append(alive)
    return tuple(out)
