# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled edit-distance kernel (restricted Damerau-Levenshtein).

Same contract as snlu._editdist_py.
"""

from libc.stdlib cimport malloc, free


def edit_distance(str a, str b, int cap=-1):
    """Edit distance with adjacent transpositions; cap < 0 disables abandon."""
    cdef int la = len(a)
    cdef int lb = len(b)
    if a == b:
        return 0
    if la == 0:
        return lb if cap < 0 or lb <= cap else cap + 1
    if lb == 0:
        return la if cap < 0 or la <= cap else cap + 1
    if cap >= 0 and abs(la - lb) > cap:
        return cap + 1
    if la < lb:
        a, b = b, a
        la, lb = lb, la

    cdef int *prev2 = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((lb + 1) * sizeof(int))
    if prev2 is NULL or prev is NULL or cur is NULL:
        if prev2 is not NULL:
            free(prev2)
        if prev is not NULL:
            free(prev)
        if cur is not NULL:
            free(cur)
        raise MemoryError()

    cdef int i, j, d, best, prev_best, cost
    cdef Py_UCS4 ca
    cdef int *tmp
    try:
        for j in range(lb + 1):
            prev[j] = j
        prev_best = 0
        for i in range(1, la + 1):
            ca = a[i - 1]
            cur[0] = i
            best = i
            for j in range(1, lb + 1):
                cost = 0 if ca == <Py_UCS4> b[j - 1] else 1
                d = prev[j] + 1
                if cur[j - 1] + 1 < d:
                    d = cur[j - 1] + 1
                if prev[j - 1] + cost < d:
                    d = prev[j - 1] + cost
                if (i > 1 and j > 1 and ca == <Py_UCS4> b[j - 2]
                        and <Py_UCS4> a[i - 2] == <Py_UCS4> b[j - 1]
                        and prev2[j - 2] + 1 < d):
                    d = prev2[j - 2] + 1
                cur[j] = d
                if d < best:
                    best = d
            if cap >= 0 and best > cap and prev_best > cap:
                return cap + 1
            tmp = prev2
            prev2 = prev
            prev = cur
            cur = tmp
            prev_best = best
        d = prev[lb]
    finally:
        free(prev2)
        free(prev)
        free(cur)
    if cap >= 0 and d > cap:
        return cap + 1
    return d
