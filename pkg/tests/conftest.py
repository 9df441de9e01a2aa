import numpy as np
import pytest

from gwlab import diagprod as D
from gwlab import groups as G_


def two_factor_spec():
    """Gamma_0 = Z2 x Z2, Gamma_1 = D_8, k_1 = 2."""
    return D.DiagGroupSpec([0, 2], ["Z2xZ2", {"dihedral": 4}])


def three_factor_spec():
    return D.DiagGroupSpec([0, 2, 6], ["Z2xZ2", {"dihedral": 4}, {"dihedral": 8}])


def dihedral_spec():
    return D.DiagGroupSpec.dihedral([0, 4, 16], [2, 4, 16])


def lamplighter_spec():
    """(Z2 x Z2) wr Z: a single factor."""
    return D.DiagGroupSpec([0], ["Z2xZ2"])


@pytest.fixture
def spec2():
    return two_factor_spec()


@pytest.fixture
def spec3():
    return three_factor_spec()


@pytest.fixture
def dspec():
    return dihedral_spec()


def bfs_lengths(G):
    """Independent Cayley-graph BFS over the raw multiplication, letters A u B."""
    from collections import deque
    letters = [u for u in G.gens_A + G.gens_B if u != G.identity]
    dist = {G.identity: 0}
    q = deque([G.identity])
    while q:
        x = q.popleft()
        for u in letters:
            y = G.mul(x, u)
            if y not in dist:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


def rng(seed=0):
    return np.random.default_rng(seed)
