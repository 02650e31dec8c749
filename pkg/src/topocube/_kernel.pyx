# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
# distutils: language = c++
"""Compiled kernels: disjoint-set pairing and mod-2 column reduction."""

import numpy as np

from libcpp.vector cimport vector

ctypedef long long i64

NAME = "compiled"


cdef inline i64 _find(i64[::1] parent, i64 x) noexcept nogil:
    cdef i64 r = x
    cdef i64 nxt
    while parent[r] != r:
        r = parent[r]
    while parent[x] != r:
        nxt = parent[x]
        parent[x] = r
        x = nxt
    return r


def component_pairs(i64[::1] edge_u, i64[::1] edge_v, i64[::1] vertex_rank, Py_ssize_t n_vertices):
    """Pair merging edges with the younger component's creator vertex.

    Edges must arrive in filtration order. Returns (dead_creator_voxel,
    killer_edge_position, essential_creator_voxels).
    """
    cdef Py_ssize_t ne = edge_u.shape[0]
    parent_arr = np.arange(n_vertices, dtype=np.int64)
    creator_arr = np.arange(n_vertices, dtype=np.int64)
    dead_arr = np.empty(ne, dtype=np.int64)
    killer_arr = np.empty(ne, dtype=np.int64)
    cdef i64[::1] parent = parent_arr
    cdef i64[::1] creator = creator_arr
    cdef i64[::1] dead = dead_arr
    cdef i64[::1] killer = killer_arr
    cdef Py_ssize_t e, k = 0
    cdef i64 ru, rv, cu, cv
    for e in range(ne):
        ru = _find(parent, edge_u[e])
        rv = _find(parent, edge_v[e])
        if ru == rv:
            continue
        cu = creator[ru]
        cv = creator[rv]
        if vertex_rank[cu] > vertex_rank[cv]:
            dead[k] = cu
            parent[ru] = rv
        else:
            dead[k] = cv
            parent[rv] = ru
        killer[k] = e
        k += 1
    essential = []
    cdef Py_ssize_t x
    for x in range(n_vertices):
        if parent[x] == x:
            essential.append(creator[x])
    return dead_arr[:k], killer_arr[:k], np.asarray(essential, dtype=np.int64)


def reduce_columns(i64[:, ::1] faces, unsigned char[::1] skip, Py_ssize_t n_cells_total):
    """Mod-2 left-to-right column reduction over one boundary dimension.

    ``faces[c]`` holds the ascending face ranks of column c; columns are in
    ascending filtration rank. Returns the pivot rank per column (-1 for
    skipped or zero columns).
    """
    cdef Py_ssize_t ncols = faces.shape[0]
    cdef Py_ssize_t nf = faces.shape[1]
    owner_arr = np.full(n_cells_total, -1, dtype=np.int64)
    pivot_arr = np.full(ncols, -1, dtype=np.int64)
    cdef i64[::1] owner = owner_arr
    cdef i64[::1] pivot_of = pivot_arr
    cdef vector[vector[i64]] stored
    stored.resize(ncols)
    cdef vector[i64] work
    cdef vector[i64] merged
    cdef Py_ssize_t c, i
    cdef size_t a, b, so
    cdef i64 piv, o, wa, ob
    for c in range(ncols):
        if skip[c]:
            continue
        work.clear()
        for i in range(nf):
            work.push_back(faces[c, i])
        while work.size() > 0:
            piv = work[work.size() - 1]
            o = owner[piv]
            if o < 0:
                owner[piv] = c
                pivot_of[c] = piv
                stored[c] = work
                break
            merged.clear()
            a = 0
            b = 0
            so = stored[o].size()
            while a < work.size() and b < so:
                wa = work[a]
                ob = stored[o][b]
                if wa < ob:
                    merged.push_back(wa)
                    a += 1
                elif ob < wa:
                    merged.push_back(ob)
                    b += 1
                else:
                    a += 1
                    b += 1
            while a < work.size():
                merged.push_back(work[a])
                a += 1
            while b < so:
                merged.push_back(stored[o][b])
                b += 1
            work.swap(merged)
    return pivot_arr
