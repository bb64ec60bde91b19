import random
import subprocess
import sys

import pytest

from plausibility_mc import kernels
from plausibility_mc.butterfly import ImplicitButterfly

compiled = pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")


def _check_chain(bf, first, chain):
    for t in range(1, len(chain)):
        a = (first + t - 1) & 1
        assert chain[t] in bf.component(a, chain[t - 1])


@pytest.mark.parametrize("k,m,d,first", [(300, 50, 6, 0), (300, 50, 6, 1), (120, 50, 5, 0), (300, 10, 12, 0), (7, 3, 4, 1)])
def test_python_alt_bfs_chains_are_valid(k, m, d, first):
    bf = ImplicitButterfly(k, m, d)
    targets = range(0, k + (d + 2) * m + 1)
    out = kernels.python.alt_bfs(k, m, d, 0, first, targets, 3 * d + 6)
    for h, (steps, chain) in out.items():
        assert len(chain) == steps + 1 and chain[0] == 0
        assert bf.value(chain[-1]) == h
        _check_chain(bf, first, chain)


@compiled
@pytest.mark.parametrize("k,m,d,first", [(300, 50, 6, 0), (300, 50, 6, 1), (120, 50, 5, 0), (300, 10, 12, 0), (7, 3, 4, 1)])
def test_alt_bfs_backends_agree(k, m, d, first):
    bf = ImplicitButterfly(k, m, d)
    targets = list(range(0, k + (d + 2) * m + 1))
    starts = [0] + random.Random(k + d).sample(list(bf.states()), 5)
    for s in starts:
        py = kernels.python.alt_bfs(k, m, d, s, first, targets, 3 * d + 6)
        cy = kernels.compiled.alt_bfs(k, m, d, s, first, targets, 3 * d + 6)
        assert {h: st for h, (st, _) in py.items()} == {h: st for h, (st, _) in cy.items()}
        for h, (_, chain) in cy.items():
            assert chain[0] == s and bf.value(chain[-1]) == h
            _check_chain(bf, first, chain)


@compiled
def test_ck_fixpoint_backends_agree():
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randint(1, 30)
        labels = []
        for _ in range(rng.randint(1, 3)):
            reps = [rng.randrange(i + 1) for i in range(n)]
            lab = []
            for i in range(n):
                r = i
                while reps[r] != r:
                    r = reps[r]
                lab.append(r)
            labels.append(lab)
        mask = [rng.random() < 0.7 for _ in range(n)]
        assert list(map(int, kernels.python.ck_fixpoint(labels, mask))) == list(map(int, kernels.compiled.ck_fixpoint(labels, mask)))


def test_pure_python_switch():
    code = "from plausibility_mc import kernels; print(kernels.BACKEND)"
    env = {"PLAUSIBILITY_MC_PURE_PYTHON": "1", "PATH": ""}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
