import numpy as np
import pytest

from gmtepi.chains import PolyChain, Simplex
from gmtepi.groups import NormedCoefficient, integers


@pytest.fixture
def one():
    return NormedCoefficient(integers(), 1)


def make_flat_disk(N=64, n=3, coeff=1):
    from gmtepi.generators import flat_disk

    return flat_disk(N, n, coeff)[0]


def make_graph_disk(N, fn, n=3, R=1.0, coeff=1):
    """Fan triangulation of the graph of ``fn`` over the inscribed N-gon."""
    G = integers()
    g = NormedCoefficient(G, coeff)
    ang = 2 * np.pi * np.arange(N + 1) / N
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1) * R
    terms = []
    for i in range(N):
        base2 = np.array([[0.0, 0.0], pts[i], pts[i + 1]])
        v = np.zeros((3, n))
        v[:, :2] = base2
        v[:, 2] = [fn(p) for p in base2]
        terms.append((Simplex(v), g))
    return PolyChain(n, 2, G, terms)


def random_chain(rng, m=2, n=3, terms=6, scale=1.0):
    G = integers()
    out = []
    for _ in range(terms):
        v = rng.normal(size=(m + 1, n)) * scale
        out.append((Simplex(v), NormedCoefficient(G, int(rng.integers(1, 4)))))
    return PolyChain(n, m, G, out)
