"""Pure-Python fallback for the compiled kernels.

Same algorithms and identical output as ``topocube._kernel``; used when the
extension module is not built. Slower by roughly two orders of magnitude.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def component_pairs(edge_u, edge_v, vertex_rank, n_vertices):
    """Pair merging edges with the younger component's creator vertex.

    Edges must arrive in filtration order. Returns (dead_creator_voxel,
    killer_edge_position, essential_creator_voxels).
    """
    parent = list(range(n_vertices))
    creator = list(range(n_vertices))
    vr = vertex_rank.tolist()
    eu = edge_u.tolist()
    ev = edge_v.tolist()
    dead: list[int] = []
    killer: list[int] = []

    def find(x: int) -> int:
        r = x
        while parent[r] != r:
            r = parent[r]
        while parent[x] != r:
            parent[x], x = r, parent[x]
        return r

    for e in range(len(eu)):
        ru, rv = find(eu[e]), find(ev[e])
        if ru == rv:
            continue
        cu, cv = creator[ru], creator[rv]
        if vr[cu] > vr[cv]:
            dead.append(cu)
            parent[ru] = rv
        else:
            dead.append(cv)
            parent[rv] = ru
        killer.append(e)

    essential = [creator[r] for r in range(n_vertices) if parent[r] == r]
    return (
        np.asarray(dead, dtype=np.int64),
        np.asarray(killer, dtype=np.int64),
        np.asarray(essential, dtype=np.int64),
    )


def _sym_diff(a: list[int], b: list[int]) -> list[int]:
    out: list[int] = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            out.append(y)
            j += 1
        else:
            i += 1
            j += 1
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return out


def reduce_columns(faces, skip, n_cells_total):
    """Mod-2 left-to-right column reduction over one boundary dimension.

    ``faces[c]`` holds the ascending face ranks of column c; columns are in
    ascending filtration rank. Returns the pivot rank per column (-1 for
    skipped or zero columns).
    """
    ncols = faces.shape[0]
    pivot_of = np.full(ncols, -1, dtype=np.int64)
    owner: dict[int, int] = {}
    stored: dict[int, list[int]] = {}
    faces_l = faces.tolist()
    skip_l = skip.tolist()
    for c in range(ncols):
        if skip_l[c]:
            continue
        col = faces_l[c]
        while col:
            piv = col[-1]
            o = owner.get(piv)
            if o is None:
                owner[piv] = c
                stored[c] = col
                pivot_of[c] = piv
                break
            col = _sym_diff(col, stored[o])
    return pivot_of
