# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled refinement kernel; mirrors ``_refine_py.refine`` decision for decision."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, calloc, free

cnp.import_array()

cdef double TIE_TOL = 1e-12


cdef struct Best:
    int found
    long dv
    double dc
    long k0, k1, k2
    long a, B, b


cdef inline bint _beats(long dv, double dc, long k0, long k1, long k2, Best* best) nogil:
    if not best.found:
        return True
    if dv > best.dv:
        return False
    if dv == best.dv:
        if dc > best.dc + TIE_TOL:
            return False
        if dc >= best.dc - TIE_TOL:
            if k0 != best.k0:
                return k0 < best.k0
            if k1 != best.k1:
                return k1 < best.k1
            return k2 < best.k2
    return True



cdef void _relocate(long x, long src, long dst, long C, long S, cnp.int64_t[::1] core,
                    cnp.int64_t[::1] w_ptr, cnp.int64_t[::1] w_idx, double[::1] w_val,
                    cnp.int64_t[::1] m_ptr, cnp.int64_t[::1] m_idx,
                    double* ext, long* mlc, long* members, long* count, long* pos) noexcept:
    cdef long k, j, last
    for k in range(w_ptr[x], w_ptr[x + 1]):
        j = w_idx[k]
        ext[j * C + src] -= w_val[k]
        ext[j * C + dst] += w_val[k]
    for k in range(m_ptr[x], m_ptr[x + 1]):
        j = m_idx[k]
        mlc[j * C + src] -= 1
        mlc[j * C + dst] += 1
    last = members[src * S + count[src] - 1]
    members[src * S + pos[x]] = last
    pos[last] = pos[x]
    count[src] -= 1
    pos[x] = count[dst]
    members[dst * S + count[dst]] = x
    count[dst] += 1
    core[x] = dst


def refine(core_in, long n_cores, long capacity, w_ptr_in, w_idx_in, w_val_in,
           m_ptr_in, m_idx_in, double gain_tol=1e-9, double move_cost=0.0,
           long max_iter=-1):
    cdef cnp.int64_t[::1] core = np.array(core_in, dtype=np.int64, copy=True)
    cdef cnp.int64_t[::1] w_ptr = np.ascontiguousarray(w_ptr_in, dtype=np.int64)
    cdef cnp.int64_t[::1] w_idx = np.ascontiguousarray(w_idx_in, dtype=np.int64)
    cdef double[::1] w_val = np.ascontiguousarray(w_val_in, dtype=np.float64)
    cdef cnp.int64_t[::1] m_ptr = np.ascontiguousarray(m_ptr_in, dtype=np.int64)
    cdef cnp.int64_t[::1] m_idx = np.ascontiguousarray(m_idx_in, dtype=np.int64)
    cdef long n = core.shape[0]
    cdef long C = n_cores
    cdef long Q = capacity
    if max_iter < 0:
        max_iter = 50 * n + 1000

    cdef double* ext = <double*> calloc(n * C + 1, sizeof(double))
    cdef long* mlc = <long*> calloc(n * C + 1, sizeof(long))
    # one spare entry per core: a swap appends before the partner leaves
    cdef long S = Q + 1
    cdef long* members = <long*> malloc((C * S + 1) * sizeof(long))
    cdef long* count = <long*> calloc(C + 1, sizeof(long))
    cdef long* pos = <long*> malloc((n + 1) * sizeof(long))
    cdef long* mldeg = <long*> malloc((n + 1) * sizeof(long))
    cdef double* wa = <double*> calloc(n + 1, sizeof(double))
    cdef long* ma = <long*> calloc(n + 1, sizeof(long))
    if (ext == NULL or mlc == NULL or members == NULL or count == NULL or pos == NULL
            or mldeg == NULL or wa == NULL or ma == NULL):
        free(ext); free(mlc); free(members); free(count); free(pos); free(mldeg); free(wa); free(ma)
        raise MemoryError()

    cdef long q, k, a, b, A, B, c, i
    cdef long moves = 0, it = 0, viol = 0, dv
    cdef double dc
    cdef long k0, k1, k2
    cdef bint loaded
    cdef Best best

    try:
        for q in range(n):
            c = core[q]
            if c < 0 or c >= C:
                raise ValueError(f"qubit {q} on invalid core {c}")
            if count[c] >= Q:
                raise ValueError(f"core {c} over capacity in seed map")
            for k in range(w_ptr[q], w_ptr[q + 1]):
                ext[q * C + core[w_idx[k]]] += w_val[k]
            for k in range(m_ptr[q], m_ptr[q + 1]):
                mlc[q * C + core[m_idx[k]]] += 1
            pos[q] = count[c]
            members[c * S + count[c]] = q
            count[c] += 1
            mldeg[q] = m_ptr[q + 1] - m_ptr[q]
        for q in range(n):
            viol += mldeg[q] - mlc[q * C + core[q]]
        viol //= 2

        while it < max_iter:
            it += 1
            best.found = 0
            if viol > 0:
                for a in range(n):
                    A = core[a]
                    if mldeg[a] - mlc[a * C + A] == 0:
                        continue
                    for k in range(w_ptr[a], w_ptr[a + 1]):
                        wa[w_idx[k]] = w_val[k]
                    for k in range(m_ptr[a], m_ptr[a + 1]):
                        ma[m_idx[k]] = 1
                    for B in range(C):
                        if B == A or mlc[a * C + B] == 0:
                            continue
                        if count[B] < Q:
                            dv = mlc[a * C + A] - mlc[a * C + B]
                            dc = ext[a * C + A] - ext[a * C + B] + move_cost
                            if _beats(dv, dc, a, B, -1, &best):
                                best.found = 1; best.dv = dv; best.dc = dc
                                best.k0 = a; best.k1 = B; best.k2 = -1
                                best.a = a; best.B = B; best.b = -1
                        for i in range(count[B]):
                            b = members[B * S + i]
                            dv = mlc[a * C + A] - mlc[a * C + B]
                            dc = ext[a * C + A] - ext[a * C + B]
                            dv = dv + (mlc[b * C + B] - mlc[b * C + A]) + 2 * ma[b]
                            dc = dc + (ext[b * C + B] - ext[b * C + A]) + 2.0 * wa[b] + 2.0 * move_cost
                            if a < b:
                                k0 = a; k1 = B; k2 = b
                            else:
                                k0 = b; k1 = A; k2 = a
                            if _beats(dv, dc, k0, k1, k2, &best):
                                best.found = 1; best.dv = dv; best.dc = dc
                                best.k0 = k0; best.k1 = k1; best.k2 = k2
                                best.a = a; best.B = B; best.b = b
                    for k in range(w_ptr[a], w_ptr[a + 1]):
                        wa[w_idx[k]] = 0.0
                    for k in range(m_ptr[a], m_ptr[a + 1]):
                        ma[m_idx[k]] = 0
            if not best.found or best.dv >= 0:
                best.found = 0
                for a in range(n):
                    if w_ptr[a] == w_ptr[a + 1]:
                        continue
                    A = core[a]
                    loaded = False
                    for B in range(C):
                        if B == A or ext[a * C + B] - ext[a * C + A] <= move_cost:
                            continue
                        if not loaded:
                            for k in range(w_ptr[a], w_ptr[a + 1]):
                                wa[w_idx[k]] = w_val[k]
                            for k in range(m_ptr[a], m_ptr[a + 1]):
                                ma[m_idx[k]] = 1
                            loaded = True
                        if count[B] < Q:
                            dv = mlc[a * C + A] - mlc[a * C + B]
                            dc = ext[a * C + A] - ext[a * C + B] + move_cost
                            if dv == 0 and _beats(dv, dc, a, B, -1, &best):
                                best.found = 1; best.dv = dv; best.dc = dc
                                best.k0 = a; best.k1 = B; best.k2 = -1
                                best.a = a; best.B = B; best.b = -1
                        for i in range(count[B]):
                            b = members[B * S + i]
                            dv = mlc[a * C + A] - mlc[a * C + B]
                            dc = ext[a * C + A] - ext[a * C + B]
                            dv = dv + (mlc[b * C + B] - mlc[b * C + A]) + 2 * ma[b]
                            dc = dc + (ext[b * C + B] - ext[b * C + A]) + 2.0 * wa[b] + 2.0 * move_cost
                            if dv != 0:
                                continue
                            if a < b:
                                k0 = a; k1 = B; k2 = b
                            else:
                                k0 = b; k1 = A; k2 = a
                            if _beats(dv, dc, k0, k1, k2, &best):
                                best.found = 1; best.dv = dv; best.dc = dc
                                best.k0 = k0; best.k1 = k1; best.k2 = k2
                                best.a = a; best.B = B; best.b = b
                    if loaded:
                        for k in range(w_ptr[a], w_ptr[a + 1]):
                            wa[w_idx[k]] = 0.0
                        for k in range(m_ptr[a], m_ptr[a + 1]):
                            ma[m_idx[k]] = 0
                if not best.found or best.dc >= -gain_tol:
                    break

            A = core[best.a]
            _relocate(best.a, A, best.B, C, S, core, w_ptr, w_idx, w_val, m_ptr, m_idx,
                      ext, mlc, members, count, pos)
            moves += 1
            if best.b >= 0:
                _relocate(best.b, best.B, A, C, S, core, w_ptr, w_idx, w_val, m_ptr, m_idx,
                          ext, mlc, members, count, pos)
                moves += 1
            viol += best.dv
    finally:
        free(ext); free(mlc); free(members); free(count); free(pos); free(mldeg); free(wa); free(ma)
    return np.asarray(core), moves, viol
