# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_pykernels``."""

from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t, int16_t

from ._pykernels import alt_bfs as _py_alt_bfs

# beyond this many heap slots the flat arrays get too large; defer to Python
cdef int64_t MAX_SLOTS = 1 << 27


cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil
    int clz64 "__builtin_clzll"(unsigned long long) nogil


cdef struct Geo:
    int64_t k, m, d, block
    int64_t base_value[5]
    int base_link[5]


cdef inline int bit_length(int64_t x) nogil:
    return 0 if x == 0 else 64 - clz64(<unsigned long long>x)


cdef inline int64_t value_of(Geo* g, int64_t i) nogil:
    cdef int64_t h, lvl, b, bits
    if i == 0:
        return g.k
    b = (i - 1) // g.block
    h = (i - 1) - b * g.block
    lvl = bit_length(h + 1) - 1
    bits = h - ((1 << lvl) - 1)
    return g.base_value[b + 1] + g.m * (2 * popcount64(<unsigned long long>bits) - lvl)


cdef inline int kids(Geo* g, int64_t i, int64_t lvl, int64_t* out) nogil:
    cdef int64_t h, root
    if lvl >= g.d:
        return 0
    h = (i - 1) % g.block
    root = i - h
    if value_of(g, i) - g.m >= 0:
        out[0] = root + 2 * h + 1
        out[1] = root + 2 * h + 2
        return 2
    out[0] = root + 2 * h + 2
    return 1


cdef inline int component(Geo* g, int a, int64_t i, int64_t* out) nogil:
    cdef int64_t b, h, lvl, p
    if i == 0:
        out[0] = 0
        out[1] = 1 + 2 * a * g.block
        out[2] = 1 + (2 * a + 1) * g.block
        return 3
    b = (i - 1) // g.block
    h = (i - 1) - b * g.block
    lvl = bit_length(h + 1) - 1
    if a == (g.base_link[b + 1] ^ (lvl & 1)):
        if lvl == 0:
            return component(g, a, 0, out)
        p = i - h + (h - 1) // 2
        out[0] = p
        return 1 + kids(g, p, lvl - 1, out + 1)
    out[0] = i
    return 1 + kids(g, i, lvl, out + 1)


def alt_bfs(long long k, long long m, int d, long long start, int first, targets, int max_steps):
    cdef Geo g
    g.k = k
    g.m = m
    g.d = d
    g.block = (1 << (d + 1)) - 1
    g.base_value[0] = k
    g.base_value[1] = k - m
    g.base_value[2] = k + m
    g.base_value[3] = k - m
    g.base_value[4] = k + m
    g.base_link[0] = 0
    g.base_link[1] = 0
    g.base_link[2] = 0
    g.base_link[3] = 1
    g.base_link[4] = 1
    cdef int64_t n = 1 + 4 * g.block
    if n > MAX_SLOTS or max_steps > 30000:
        return _py_alt_bfs(k, m, d, start, first, targets, max_steps)

    want = sorted(set(int(t) for t in targets))
    cdef int n_want = len(want)
    # target slot lookup by height
    cdef int64_t hmax = k + (d + 2) * m + 1
    cdef int* slot = <int*> malloc(sizeof(int) * (hmax + 1))
    cdef int16_t* step_of = <int16_t*> malloc(sizeof(int16_t) * n)
    cdef int64_t* parent = <int64_t*> malloc(sizeof(int64_t) * n)
    cdef int64_t* reached = <int64_t*> malloc(sizeof(int64_t) * n)
    cdef int64_t* hit_state = <int64_t*> malloc(sizeof(int64_t) * (n_want + 1))
    cdef int* hit_step = <int*> malloc(sizeof(int) * (n_want + 1))
    cdef int64_t comp[4]
    cdef int64_t i, j, y, x, end, n_reached, vy
    cdef int64_t ptr[2]
    cdef int t, a, c, nc, s, n_found = 0
    if not (slot and step_of and parent and reached and hit_state and hit_step):
        free(slot); free(step_of); free(parent); free(reached); free(hit_state); free(hit_step)
        raise MemoryError()
    try:
        for i in range(hmax + 1):
            slot[i] = -1
        for s in range(n_want):
            hit_step[s] = -1
            if 0 <= want[s] <= hmax:
                slot[want[s]] = s
        for i in range(n):
            step_of[i] = -1
        step_of[start] = 0
        parent[start] = -1
        reached[0] = start
        n_reached = 1
        vy = value_of(&g, start)
        if 0 <= vy <= hmax and slot[vy] >= 0:
            hit_step[slot[vy]] = 0
            hit_state[slot[vy]] = start
            n_found += 1
        ptr[0] = 0
        ptr[1] = 0
        with nogil:
            for t in range(1, max_steps + 1):
                if n_found == n_want:
                    break
                a = (first + t - 1) & 1
                end = n_reached
                for j in range(ptr[a], end):
                    x = reached[j]
                    nc = component(&g, a, x, comp)
                    for c in range(nc):
                        y = comp[c]
                        if step_of[y] < 0:
                            step_of[y] = t
                            parent[y] = x
                            reached[n_reached] = y
                            n_reached += 1
                            vy = value_of(&g, y)
                            if vy <= hmax and slot[vy] >= 0 and hit_step[slot[vy]] < 0:
                                hit_step[slot[vy]] = t
                                hit_state[slot[vy]] = y
                                n_found += 1
                ptr[a] = end
        out = {}
        for s in range(n_want):
            if hit_step[s] < 0:
                continue
            t = hit_step[s]
            chain = [0] * (t + 1)
            hi = t
            x = hit_state[s]
            while x != -1:
                lo = step_of[x]
                for c in range(lo, hi + 1):
                    chain[c] = x
                hi = lo - 1
                x = parent[x]
            out[want[s]] = (t, chain)
        return out
    finally:
        free(slot)
        free(step_of)
        free(parent)
        free(reached)
        free(hit_state)
        free(hit_step)


def ck_fixpoint(labels, mask):
    cdef Py_ssize_t n = len(mask)
    cdef Py_ssize_t n_lab = len(labels)
    cdef int* x = <int*> malloc(sizeof(int) * (n + 1))
    cdef int* ok = <int*> malloc(sizeof(int) * (n + 1))
    cdef int* lab = <int*> malloc(sizeof(int) * (n * n_lab + 1))
    cdef Py_ssize_t i, a
    cdef bint changed = True
    if not (x and ok and lab):
        free(x); free(ok); free(lab)
        raise MemoryError()
    try:
        for i in range(n):
            x[i] = 1 if mask[i] else 0
        for a in range(n_lab):
            row = labels[a]
            for i in range(n):
                lab[a * n + i] = row[i]
        while changed:
            changed = False
            for a in range(n_lab):
                for i in range(n):
                    ok[i] = 1
                for i in range(n):
                    if not x[i]:
                        ok[lab[a * n + i]] = 0
                for i in range(n):
                    if x[i] and not ok[lab[a * n + i]]:
                        x[i] = 0
                        changed = True
        return [x[i] for i in range(n)]
    finally:
        free(x)
        free(ok)
        free(lab)
