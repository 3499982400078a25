import numpy as np
import pytest

from orbiym import matalg as ma
from orbiym.geometry import Lattice, LatticeShape
from orbiym.orbifold import OrbifoldConfig
from orbiym.params import PhysParams
from orbiym.wilson import WilsonConfig


@pytest.fixture
def small_lattice():
    return Lattice(LatticeShape(3, (3, 4)))


@pytest.fixture
def params_su2():
    return PhysParams(n=2, d=2, g2=1.0, a=0.3, a_t=0.3, m2=37.0, m2_u1=21.0)


@pytest.fixture
def params_su3():
    return PhysParams(n=3, d=2, g2=1.0, a=0.2, a_t=0.25, m2=120.0, m2_u1=120.0)


def random_wilson(lat, p, seed=0):
    rng = np.random.default_rng(seed)
    links = ma.random_special_unitary(rng, p.n, size=(lat.d + 1, lat.volume))
    return WilsonConfig(lat, links)


def random_orbifold(lat, p, seed=0, spread=0.6):
    """Generic configuration: frozen identity plus an O(spread) complex blob."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((lat.d, lat.volume, p.n, p.n)) + 1j * rng.standard_normal(
        (lat.d, lat.volume, p.n, p.n)
    )
    z = spread * z + np.sqrt(p.c) * np.eye(p.n)
    ut = ma.random_special_unitary(rng, p.n, size=(lat.volume,))
    return OrbifoldConfig(lat, z, ut)
