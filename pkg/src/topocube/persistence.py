"""Persistence diagrams of cubical filtrations.

``compute_persistence`` pairs cells with a union-find sweep for dimension 0
and top-down boundary reduction with clearing for dimensions 1 and 2, using
an implicit boundary representation (face ids are index arithmetic on the
doubled grid; no boundary matrix is materialised). ``naive_reduce`` is the
textbook single-pass left-to-right reduction of the full boundary matrix and
serves as a definitional oracle on small inputs.

Both return identical diagrams: the persistence pairing is a function of the
filtration order alone. Essential classes (only the one surviving component
for a full box grid) are finitized at a configurable death value so every
coordinate stays finite for transport. Non-essential pairs with zero
persistence are omitted; they are diagonal points and invisible to every
diagram summary and distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, TooLarge
from .filtration import Filtration, build_superlevel_filtration
from .volume import Volume

from . import _kernel_py

try:
    from . import _kernel
except ImportError:  # extension not built; fall back to pure Python
    _kernel = None

_ENGINES = {"python": _kernel_py}
if _kernel is not None:
    _ENGINES["compiled"] = _kernel

DEFAULT_ENGINE = "compiled" if _kernel is not None else "python"

_NAIVE_CELL_LIMIT = 20**6


def available_engines() -> tuple[str, ...]:
    return tuple(sorted(_ENGINES))


@dataclass(frozen=True)
class PersistencePair:
    """One feature: born at ``birth``, destroyed at ``death`` (birth >= death)."""

    dim: int
    birth: float
    death: float
    essential: bool
    birth_cell: int
    death_cell: int | None
    birth_vertex: tuple[int, int, int]
    death_vertex: tuple[int, int, int]

    @property
    def persistence(self) -> float:
        return abs(self.death - self.birth)


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Multiset of persistence pairs of one homology dimension.

    Array-of-columns layout; ``birth_vertices``/``death_vertices`` hold flat
    voxel indices of the critical vertices whose volume values realise the
    birth/death coordinates (the anchors for gradient routing). For an
    essential pair the death coordinate is the constant
    ``essential_death_value`` and ``death_vertices`` mirrors the birth vertex.
    """

    dim: int
    births: np.ndarray
    deaths: np.ndarray
    essential: np.ndarray
    birth_vertices: np.ndarray
    death_vertices: np.ndarray
    birth_cells: np.ndarray
    death_cells: np.ndarray
    grid_dims: tuple[int, int, int]
    essential_death_value: float

    def __len__(self) -> int:
        return int(self.births.size)

    @property
    def persistences(self) -> np.ndarray:
        return np.abs(self.births - self.deaths)

    def _vertex_triple(self, flat: int) -> tuple[int, int, int]:
        _, n2, n3 = self.grid_dims
        i, rem = divmod(int(flat), n2 * n3)
        j, k = divmod(rem, n3)
        return i, j, k

    @property
    def pairs(self) -> list[PersistencePair]:
        out = []
        for i in range(len(self)):
            ess = bool(self.essential[i])
            out.append(
                PersistencePair(
                    dim=self.dim,
                    birth=float(self.births[i]),
                    death=float(self.deaths[i]),
                    essential=ess,
                    birth_cell=int(self.birth_cells[i]),
                    death_cell=None if ess else int(self.death_cells[i]),
                    birth_vertex=self._vertex_triple(self.birth_vertices[i]),
                    death_vertex=self._vertex_triple(self.death_vertices[i]),
                )
            )
        return out

    def as_multiset(self) -> list[tuple[float, float]]:
        return sorted(zip(self.births.tolist(), self.deaths.tolist()))


def diagram_from_pairs(dim, pairs, essential=None, grid_dims=(1, 1, 1), essential_death=0.0):
    """Build a diagram from (birth, death) tuples; vertices default to voxel 0.

    Convenience constructor for synthetic diagrams in distance computations.
    """
    pairs = list(pairs)
    n = len(pairs)
    births = np.asarray([p[0] for p in pairs], dtype=np.float64)
    deaths = np.asarray([p[1] for p in pairs], dtype=np.float64)
    ess = np.zeros(n, dtype=bool) if essential is None else np.asarray(essential, dtype=bool)
    zi = np.zeros(n, dtype=np.int64)
    return PersistenceDiagram(
        dim=dim,
        births=births,
        deaths=deaths,
        essential=ess,
        birth_vertices=zi,
        death_vertices=zi.copy(),
        birth_cells=zi.copy(),
        death_cells=np.where(ess, -1, 0).astype(np.int64),
        grid_dims=grid_dims,
        essential_death_value=essential_death,
    )


def _resolve_essential_death(filt: Filtration, essential_death) -> float:
    if essential_death is None:
        if filt.value_range is not None:
            return float(filt.value_range[0])
        return filt.data_min
    if essential_death == "min":
        return filt.data_min
    return float(essential_death)


def _assemble(dim, creators, destroyers, essentials, filt, essential_death):
    creators = np.asarray(creators, dtype=np.int64)
    destroyers = np.asarray(destroyers, dtype=np.int64)
    essentials = np.asarray(essentials, dtype=np.int64)

    b = filt.values[creators] if creators.size else np.zeros(0)
    d = filt.values[destroyers] if destroyers.size else np.zeros(0)
    keep = b > d  # zero-persistence pairs are diagonal points; drop them

    births = np.concatenate([b[keep], filt.values[essentials]])
    deaths = np.concatenate([d[keep], np.full(essentials.size, essential_death)])
    ess_flags = np.concatenate(
        [np.zeros(int(keep.sum()), dtype=bool), np.ones(essentials.size, dtype=bool)]
    )
    birth_cells = np.concatenate([creators[keep], essentials])
    death_cells = np.concatenate(
        [destroyers[keep], np.full(essentials.size, -1, dtype=np.int64)]
    )
    birth_vertices = filt.critical[birth_cells] if birth_cells.size else np.zeros(0, np.int64)
    death_vertices = np.where(
        ess_flags, birth_vertices, filt.critical[np.maximum(death_cells, 0)]
    ).astype(np.int64) if birth_cells.size else np.zeros(0, np.int64)

    # canonical pair order: birth desc, death desc, then critical vertices
    idx = np.lexsort((death_vertices, birth_vertices, -deaths, -births))
    return PersistenceDiagram(
        dim=dim,
        births=np.ascontiguousarray(births[idx]),
        deaths=np.ascontiguousarray(deaths[idx]),
        essential=np.ascontiguousarray(ess_flags[idx]),
        birth_vertices=np.ascontiguousarray(birth_vertices[idx]),
        death_vertices=np.ascontiguousarray(death_vertices[idx]),
        birth_cells=np.ascontiguousarray(birth_cells[idx]),
        death_cells=np.ascontiguousarray(death_cells[idx]),
        grid_dims=filt.dims,
        essential_death_value=essential_death,
    )


def _decode_axes(ids, doubled_shape):
    d1, d2, d3 = doubled_shape
    x, rem = np.divmod(ids, d2 * d3)
    y, z = np.divmod(rem, d3)
    return x, y, z


def _vertex_voxels(ids, filt):
    x, y, z = _decode_axes(ids, filt.doubled_shape)
    _, n2, n3 = filt.dims
    return (x // 2) * (n2 * n3) + (y // 2) * n3 + z // 2


def compute_persistence(filt: Filtration, essential_death=None, engine: str | None = None):
    """Persistence diagrams (dims 0..2) of a filtration.

    ``essential_death`` finitizes surviving classes: ``None`` uses the lower
    edge of the declared value range (the global minimum if undeclared),
    ``"min"`` forces the global minimum, a float is used verbatim.
    ``engine`` selects the kernel ("compiled"/"python"; default: compiled
    when built).
    """
    if engine is None:
        engine = DEFAULT_ENGINE
    if engine not in _ENGINES:
        raise InvalidParameter(
            f"unknown engine {engine!r}; available: {available_engines()}"
        )
    impl = _ENGINES[engine]
    ed = _resolve_essential_death(filt, essential_death)

    order, rank = filt.order, filt.rank
    cdim = filt.cell_dims[order]
    ids = [order[cdim == k] for k in range(4)]
    s1, s2, s3 = filt.strides()
    n1, n2, n3 = filt.dims
    d1, d2, d3 = filt.doubled_shape

    # dimension 0: union-find over edges in filtration order
    e = ids[1]
    ex, ey, ez = _decode_axes(e, filt.doubled_shape)
    stride = np.where(ex % 2 == 1, s1, np.where(ey % 2 == 1, s2, s3))
    u_vox = np.ascontiguousarray(_vertex_voxels(e - stride, filt))
    v_vox = np.ascontiguousarray(_vertex_voxels(e + stride, filt))
    vx = np.arange(n1, dtype=np.int64) * 2
    vy = np.arange(n2, dtype=np.int64) * 2
    vz = np.arange(n3, dtype=np.int64) * 2
    vertex_ids = (
        (vx[:, None, None] * d2 + vy[None, :, None]) * d3 + vz[None, None, :]
    ).reshape(-1)
    vertex_rank = np.ascontiguousarray(rank[vertex_ids])
    dead0, killer0, ess0 = impl.component_pairs(u_vox, v_vox, vertex_rank, n1 * n2 * n3)

    # dimension 2: reduce the cube-square boundary (all cubes are destroyers)
    c = ids[3]
    if c.size:
        faces3 = np.stack([c - s1, c + s1, c - s2, c + s2, c - s3, c + s3], axis=1)
        faces3 = np.ascontiguousarray(np.sort(rank[faces3], axis=1))
    else:
        faces3 = np.zeros((0, 6), dtype=np.int64)
    piv3 = impl.reduce_columns(faces3, np.zeros(c.size, dtype=np.uint8), filt.n_cells)
    if c.size and (piv3 < 0).any():
        raise RuntimeError("internal invariant violated: zero column in cube reduction")

    # dimension 1: reduce the square-edge boundary, clearing squares that are
    # known creators (pivots of the cube reduction)
    q = ids[2]
    if q.size:
        qx, qy, qz = _decode_axes(q, filt.doubled_shape)
        sa = np.where(qx % 2 == 1, s1, s2)
        sb = np.where(qz % 2 == 1, s3, s2)
        faces2 = np.stack([q - sa, q + sa, q - sb, q + sb], axis=1)
        faces2 = np.ascontiguousarray(np.sort(rank[faces2], axis=1))
        skip2 = np.isin(rank[q], piv3).astype(np.uint8)
    else:
        faces2 = np.zeros((0, 4), dtype=np.int64)
        skip2 = np.zeros(0, dtype=np.uint8)
    piv2 = impl.reduce_columns(faces2, skip2, filt.n_cells)
    if q.size and ((piv2 < 0) & (skip2 == 0)).any():
        raise RuntimeError("internal invariant violated: essential square found")

    pairs0 = (vertex_ids[dead0], e[killer0], vertex_ids[ess0])
    mask2 = piv2 >= 0
    pairs1 = (order[piv2[mask2]], q[mask2], np.zeros(0, dtype=np.int64))
    pairs2 = (order[piv3], c, np.zeros(0, dtype=np.int64))

    return [
        _assemble(k, cr, de, es, filt, ed)
        for k, (cr, de, es) in enumerate([pairs0, pairs1, pairs2])
    ]


def naive_reduce(filt: Filtration, essential_death=None):
    """Textbook left-to-right reduction of the full boundary matrix.

    No clearing, no union-find, no per-dimension splitting; serves as the
    definitional oracle for :func:`compute_persistence`. Refuses inputs with
    more than 20**6 cells.
    """
    if filt.n_cells > _NAIVE_CELL_LIMIT:
        raise TooLarge(f"{filt.n_cells} cells exceed the naive reduction limit")
    ed = _resolve_essential_death(filt, essential_death)
    order, rank = filt.order, filt.rank

    owner: dict[int, int] = {}
    stored: dict[int, list[int]] = {}
    creators: list[int] = []
    pairs: list[tuple[int, int]] = []  # (creator rank, destroyer rank)
    for r in range(filt.n_cells):
        did = int(order[r])
        col = sorted(int(rank[f]) for f in filt.faces(did))
        while col:
            piv = col[-1]
            o = owner.get(piv)
            if o is None:
                owner[piv] = r
                stored[r] = col
                pairs.append((piv, r))
                break
            col = _kernel_py._sym_diff(col, stored[o])
        else:
            creators.append(r)

    destroyed = {piv for piv, _ in pairs}
    essential_ranks = [r for r in creators if r not in destroyed]

    by_dim = {0: ([], [], []), 1: ([], [], []), 2: ([], [], [])}
    for piv, r in pairs:
        c_did, d_did = int(order[piv]), int(order[r])
        k = filt.cell_dim(c_did)
        by_dim[k][0].append(c_did)
        by_dim[k][1].append(d_did)
    for r in essential_ranks:
        did = int(order[r])
        k = filt.cell_dim(did)
        if k in by_dim:
            by_dim[k][2].append(did)

    return [
        _assemble(k, *by_dim[k], filt=filt, essential_death=ed) for k in range(3)
    ]


def diagrams_of(volume: Volume, essential_death=None, engine=None):
    """Filtration build plus persistence in one call."""
    return compute_persistence(
        build_superlevel_filtration(volume), essential_death=essential_death, engine=engine
    )


def diagram_to_dict(dg: PersistenceDiagram) -> dict:
    """JSON-ready mapping for one diagram."""
    pairs = []
    for p in dg.pairs:
        pairs.append(
            {
                "birth": p.birth,
                "death": p.death,
                "essential": p.essential,
                "birth_vertex": list(p.birth_vertex),
                "death_vertex": list(p.death_vertex),
            }
        )
    return {
        "dim": dg.dim,
        "pairs": pairs,
        "construction": "V",
        "filtration": "superlevel",
        "essential_death": dg.essential_death_value,
    }


def diagram_from_dict(obj: dict) -> PersistenceDiagram:
    """Inverse of :func:`diagram_to_dict` (vertices resolved as voxel 0)."""
    pairs = [(p["birth"], p["death"]) for p in obj["pairs"]]
    essential = [bool(p.get("essential", False)) for p in obj["pairs"]]
    return diagram_from_pairs(
        int(obj["dim"]),
        pairs,
        essential=essential,
        essential_death=float(obj.get("essential_death", 0.0)),
    )
