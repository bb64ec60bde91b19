"""Structural invariants of generated butterflies, checked on explicit models.

Returns a list of violation strings (empty when the model is well formed).
"""


def butterfly_violations(model, k, m, d):
    out = []
    agents = model.agents
    states = model.states
    center = f"b{k}:w0"
    # preorder axioms
    for a in agents:
        for x in states:
            up = model.above(a, x)
            if x not in up:
                out.append(f"{a}: not reflexive at {x}")
            for y in up:
                if not model.above(a, y) <= up:
                    out.append(f"{a}: not transitive at {x} <= {y}")
    # valuation partition
    for s in states:
        if len(model.heights_at(s)) != 1:
            out.append(f"{s} satisfies {sorted(model.heights_at(s))}")
    # star-shaped components
    for a in agents:
        for s in states:
            if len(model.component(a, s)) > 3:
                out.append(f"{a}-component of {s} has {len(model.component(a, s))} states")
        if len(model.component(a, center)) != 3:
            out.append(f"{a}-component of the center is not of size 3")

    def value(s):
        # a state with several atoms was reported above; use its smallest
        return min(model.heights_at(s), default=-1)

    parents = {}
    children = {s: [] for s in states}
    for s in states:
        ups = [(a, t) for a in agents for t in model.above(a, s) if model.less(a, s, t)]
        # immediate strict parents: nothing strictly in between
        direct = [(a, t) for a, t in ups if not any(model.less(a, s, u) and model.less(a, u, t) for u in model.above(a, s))]
        if s == center:
            if direct:
                out.append("center has a parent")
            continue
        if len(direct) != 1:
            out.append(f"{s} has {len(direct)} strict parents")
            continue
        parents[s] = direct[0]
        children[direct[0][1]].append((direct[0][0], s))

    def level(s):
        return len(s.split(":", 1)[1]) - 2

    for s in states:
        if s == center:
            continue
        kids = children[s]
        lvl = level(s)
        if lvl < d:
            want = {value(s) + m} | ({value(s) - m} if value(s) - m >= 0 else set())
            got = sorted(value(x) for _, x in kids)
            if got != sorted(want):
                out.append(f"children of {s} ({value(s)}) have values {got}, expected {sorted(want)}")
            link = parents[s][0]
            for a, _ in kids:
                if a == link:
                    out.append(f"children of {s} use the same agent as its parent link")
            if s in model.frontier:
                out.append(f"inner state {s} flagged frontier")
        else:
            if kids:
                out.append(f"leaf {s} has children")
            if s not in model.frontier:
                out.append(f"leaf {s} not flagged frontier")
    return out
