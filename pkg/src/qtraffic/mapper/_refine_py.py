"""Pure-Python refinement kernel (fallback for the compiled ``_refine`` extension).

Both implementations must make identical decisions: candidate evaluation
uses the same arithmetic order and the same lexicographic comparison.
"""

from __future__ import annotations

import numpy as np

TIE_TOL = 1e-12


def refine(core, n_cores, capacity, w_ptr, w_idx, w_val, m_ptr, m_idx,
           gain_tol=1e-9, move_cost=0.0, max_iter=-1):
    """Relaxed pairwise-exchange local search on a qubit->core map.

    Moves are single relocations into a free slot or exchanges of two qubits
    in different cores.  The best move by (must-link violation delta, cut
    weight delta + ``move_cost`` per relocated qubit, (low qubit, its target
    core, other qubit or -1)) is applied until neither term can be reduced.

    Returns ``(core, n_moves, violations)`` where ``core`` is a new int64 array.
    """
    n = len(core)
    C = int(n_cores)
    Q = int(capacity)
    if max_iter < 0:
        max_iter = 50 * n + 1000
    core = [int(c) for c in core]
    w_ptr = [int(v) for v in w_ptr]
    m_ptr = [int(v) for v in m_ptr]
    w_idx = [int(v) for v in w_idx]
    m_idx = [int(v) for v in m_idx]
    w_val = [float(v) for v in w_val]

    ext = [[0.0] * C for _ in range(n)]
    mlc = [[0] * C for _ in range(n)]
    members: list[list[int]] = [[] for _ in range(C)]
    pos = [0] * n
    for q in range(n):
        row = ext[q]
        for k in range(w_ptr[q], w_ptr[q + 1]):
            row[core[w_idx[k]]] += w_val[k]
        mrow = mlc[q]
        for k in range(m_ptr[q], m_ptr[q + 1]):
            mrow[core[m_idx[k]]] += 1
        pos[q] = len(members[core[q]])
        members[core[q]].append(q)
    mldeg = [m_ptr[q + 1] - m_ptr[q] for q in range(n)]
    viol = sum(mldeg[q] - mlc[q][core[q]] for q in range(n)) // 2

    wa = [0.0] * n
    ma = [0] * n

    def load(a):
        for k in range(w_ptr[a], w_ptr[a + 1]):
            wa[w_idx[k]] = w_val[k]
        for k in range(m_ptr[a], m_ptr[a + 1]):
            ma[m_idx[k]] = 1

    def unload(a):
        for k in range(w_ptr[a], w_ptr[a + 1]):
            wa[w_idx[k]] = 0.0
        for k in range(m_ptr[a], m_ptr[a + 1]):
            ma[m_idx[k]] = 0

    def relocate(x, src, dst):
        for k in range(w_ptr[x], w_ptr[x + 1]):
            j = w_idx[k]
            ext[j][src] -= w_val[k]
            ext[j][dst] += w_val[k]
        for k in range(m_ptr[x], m_ptr[x + 1]):
            j = m_idx[k]
            mlc[j][src] -= 1
            mlc[j][dst] += 1
        lst = members[src]
        last = lst[-1]
        lst[pos[x]] = last
        pos[last] = pos[x]
        lst.pop()
        pos[x] = len(members[dst])
        members[dst].append(x)
        core[x] = dst

    best = None

    def consider(a, B, b, require_neutral):
        nonlocal best
        A = core[a]
        dv = mlc[a][A] - mlc[a][B]
        dc = ext[a][A] - ext[a][B]
        if b >= 0:
            dv = dv + (mlc[b][B] - mlc[b][A]) + 2 * ma[b]
            dc = dc + (ext[b][B] - ext[b][A]) + 2.0 * wa[b] + 2.0 * move_cost
            if a < b:
                key = (a, B, b)
            else:
                key = (b, A, a)
        else:
            dc = dc + move_cost
            key = (a, B, -1)
        if require_neutral and dv != 0:
            return
        if best is not None:
            bdv, bdc, bkey = best[0], best[1], best[2]
            if dv > bdv:
                return
            if dv == bdv:
                if dc > bdc + TIE_TOL:
                    return
                if dc >= bdc - TIE_TOL and key >= bkey:
                    return
        best = (dv, dc, key, a, B, b)

    moves = 0
    it = 0
    while it < max_iter:
        it += 1
        best = None
        if viol > 0:
            for a in range(n):
                A = core[a]
                if mldeg[a] - mlc[a][A] == 0:
                    continue
                load(a)
                for B in range(C):
                    if B == A or mlc[a][B] == 0:
                        continue
                    if len(members[B]) < Q:
                        consider(a, B, -1, False)
                    for b in members[B]:
                        consider(a, B, b, False)
                unload(a)
        if best is None or best[0] >= 0:
            best = None
            for a in range(n):
                if w_ptr[a] == w_ptr[a + 1]:
                    continue
                A = core[a]
                row = ext[a]
                loaded = False
                for B in range(C):
                    if B == A or row[B] - row[A] <= move_cost:
                        continue
                    if not loaded:
                        load(a)
                        loaded = True
                    if len(members[B]) < Q:
                        consider(a, B, -1, True)
                    for b in members[B]:
                        consider(a, B, b, True)
                if loaded:
                    unload(a)
            if best is None or best[1] >= -gain_tol:
                break
        dv, _, _, a, B, b = best
        A = core[a]
        relocate(a, A, B)
        moves += 1
        if b >= 0:
            relocate(b, B, A)
            moves += 1
        viol += dv
    return np.asarray(core, dtype=np.int64), moves, viol
