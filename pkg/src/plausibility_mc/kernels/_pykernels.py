"""Pure-Python kernels; reference implementation for the compiled ones."""

from __future__ import annotations


def _geometry(k: int, m: int, d: int):
    block = (1 << (d + 1)) - 1
    base_value = (k, k - m, k + m, k - m, k + m)
    base_link = (0, 0, 0, 1, 1)
    return block, base_value, base_link


def alt_bfs(k: int, m: int, d: int, start: int, first: int, targets, max_steps: int) -> dict:
    """Alternating-agent reachability inside one implicit butterfly.

    Step ``t`` (1-based) moves within the component of agent
    ``(first + t - 1) % 2``, staying put allowed.  Returns
    ``{height: (steps, chain)}`` for each target height reached within
    ``max_steps``, where ``chain`` lists ``steps + 1`` heap indices.
    """
    block, base_value, base_link = _geometry(k, m, d)

    def decode(i):
        if i == 0:
            return 0, -1, 0
        b, h = divmod(i - 1, block)
        lvl = (h + 1).bit_length() - 1
        return b + 1, lvl, h - ((1 << lvl) - 1)

    def value(i):
        b, lvl, bits = decode(i)
        if b == 0:
            return k
        return base_value[b] + m * (2 * bin(bits).count("1") - lvl)

    def kids(i, v, lvl):
        if lvl >= d:
            return ()
        h = (i - 1) % block
        root = i - h
        if v - m >= 0:
            return (root + 2 * h + 1, root + 2 * h + 2)
        return (root + 2 * h + 2,)

    centers = ((0, 1, 1 + block), (0, 1 + 2 * block, 1 + 3 * block))

    def component(a, i):
        if i == 0:
            return centers[a]
        b, lvl, bits = decode(i)
        if a == base_link[b] ^ (lvl & 1):
            if lvl == 0:
                return centers[a]
            h = (i - 1) % block
            p = i - h + (h - 1) // 2
            return (p,) + kids(p, value(p), lvl - 1)
        return (i,) + kids(i, value(i), lvl)

    want = {}
    for t in targets:
        want.setdefault(t, None)
    found = {}
    step_of = {start: 0}
    parent = {start: -1}
    reached = [start]
    v0 = value(start)
    if v0 in want:
        found[v0] = (0, start)
    ptr = [0, 0]
    for t in range(1, max_steps + 1):
        if len(found) == len(want):
            break
        a = (first + t - 1) & 1
        end = len(reached)
        for j in range(ptr[a], end):
            x = reached[j]
            for y in component(a, x):
                if y not in step_of:
                    step_of[y] = t
                    parent[y] = x
                    reached.append(y)
                    if len(found) < len(want):
                        vy = value(y)
                        if vy in want and vy not in found:
                            found[vy] = (t, y)
        ptr[a] = end
    out = {}
    for h, (t, y) in found.items():
        out[h] = (t, unwind(y, t, parent, step_of))
    return out


def unwind(y: int, t: int, parent, step_of) -> list:
    chain = [0] * (t + 1)
    hi = t
    cur = y
    while cur != -1:
        lo = step_of[cur]
        for pos in range(lo, hi + 1):
            chain[pos] = cur
        hi = lo - 1
        cur = parent[cur]
    return chain


def ck_fixpoint(labels, mask) -> list:
    """Greatest ``X <= mask`` closed under every labelled partition.

    ``labels[a][i]`` names the block of state ``i`` for agent ``a``; a state
    stays in ``X`` only while its whole block for every agent does.
    """
    x = [1 if v else 0 for v in mask]
    n = len(x)
    changed = True
    while changed:
        changed = False
        for lab in labels:
            ok = [1] * n
            for i in range(n):
                if not x[i]:
                    ok[lab[i]] = 0
            for i in range(n):
                if x[i] and not ok[lab[i]]:
                    x[i] = 0
                    changed = True
    return x
