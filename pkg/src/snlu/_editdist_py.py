"""Pure-Python edit-distance kernel.

Restricted Damerau-Levenshtein (optimal string alignment): unit-cost
insert/delete/substitute plus adjacent transposition. Fallback for the
Cython extension `snlu._editdist_c`; both implement the same contract and
the test suite checks they agree. `cap` allows early abandon: once the
distance provably exceeds `cap`, `cap + 1` is returned.
"""


def edit_distance(a, b, cap=-1):
    """Edit distance with adjacent transpositions; cap < 0 disables abandon."""
    la, lb = len(a), len(b)
    if a == b:
        return 0
    if la == 0:
        return lb if cap < 0 or lb <= cap else cap + 1
    if lb == 0:
        return la if cap < 0 or la <= cap else cap + 1
    if cap >= 0 and abs(la - lb) > cap:
        return cap + 1
    if la < lb:  # keep the inner loop over the shorter string
        a, b = b, a
        la, lb = lb, la

    prev2 = None
    prev = list(range(lb + 1))
    prev_best = 0
    for i in range(1, la + 1):
        ca = a[i - 1]
        cur = [i] + [0] * lb
        best = i
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            d = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if (i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == b[j - 1]
                    and prev2[j - 2] + 1 < d):
                d = prev2[j - 2] + 1
            cur[j] = d
            if d < best:
                best = d
        if cap >= 0 and best > cap and prev_best > cap:
            return cap + 1
        prev2, prev, prev_best = prev, cur, best
    d = prev[lb]
    if cap >= 0 and d > cap:
        return cap + 1
    return d
