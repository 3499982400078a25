import numpy as np
import pytest

from orbiym import matalg as ma
from orbiym import orbifold as ob
from orbiym import wilson as wl
from orbiym.geometry import Lattice, LatticeShape
from orbiym.params import PhysParams

from conftest import random_orbifold, random_wilson


def test_identity_frozen_action_is_zero(small_lattice, params_su2):
    cfg = ob.cold_start(small_lattice, params_su2)
    terms = ob.orbifold_action_terms(cfg, params_su2)
    # t4/t5 keep a ~1e-29 residue because (sqrt(c))^2 != c in floats
    assert (terms.t1, terms.t2, terms.t3) == (0.0, 0.0, 0.0)
    assert terms.total <= 1e-25


@pytest.mark.parametrize("n", [2, 3])
def test_frozen_config_kills_constraint_terms(n, small_lattice):
    # Z = sqrt(c) U with unitary U: the Gauss square, the W constraint and
    # the determinant constraint all vanish identically
    p = PhysParams(n=n, d=2, g2=1.0, a=0.3, a_t=0.3, m2=55.0, m2_u1=66.0)
    w = random_wilson(small_lattice, p, seed=21)
    cfg = ob.frozen_reduce(w, p)
    terms = ob.orbifold_action_terms(cfg, p)
    scale = max(terms.total, 1.0)
    assert terms.t2 <= 1e-25 * scale
    assert terms.t4 <= 1e-25 * scale
    assert terms.t5 <= 1e-25 * scale


def test_terms_non_negative(small_lattice, params_su2):
    cfg = random_orbifold(small_lattice, params_su2, seed=22)
    terms = ob.orbifold_action_terms(cfg, params_su2)
    total = abs(terms.total)
    for t in (terms.t1, terms.t2, terms.t3, terms.t4, terms.t5):
        assert t >= -1e-12 * total


def test_gauge_invariance(small_lattice, params_su2):
    cfg = random_orbifold(small_lattice, params_su2, seed=23)
    rng = np.random.default_rng(24)
    omega = ma.random_special_unitary(rng, params_su2.n, size=(small_lattice.volume,))
    s0 = ob.orbifold_action(cfg, params_su2)
    s1 = ob.orbifold_action(ob.gauge_transform(cfg, omega), params_su2)
    assert abs(s1 - s0) <= 1e-10 * abs(s0)


@pytest.mark.parametrize("n", [2, 3])
def test_center_transform_invariance(n, small_lattice):
    p = PhysParams(n=n, d=2, g2=1.0, a=0.3, a_t=0.3, m2=40.0, m2_u1=40.0)
    cfg = random_orbifold(small_lattice, p, seed=25)
    s0 = ob.orbifold_action(cfg, p)
    slice_sites = [s for s in range(small_lattice.volume)
                   if small_lattice.coords(s)[0] == 0]
    cfg.ut[slice_sites] *= np.exp(2j * np.pi / n)
    s1 = ob.orbifold_action(cfg, p)
    assert abs(s1 - s0) <= 1e-12 * max(abs(s0), 1.0)


def test_translation_invariance_exact(small_lattice, params_su2):
    cfg = random_orbifold(small_lattice, params_su2, seed=26)
    s0 = ob.orbifold_action(cfg, params_su2)
    for mu in range(3):
        assert ob.orbifold_action(ob.translate(cfg, mu), params_su2) == s0


def test_include_t2_flag(small_lattice, params_su2):
    cfg = random_orbifold(small_lattice, params_su2, seed=27)
    with_t2 = ob.orbifold_action_terms(cfg, params_su2, include_t2=True)
    without = ob.orbifold_action_terms(cfg, params_su2, include_t2=False)
    assert without.t2 == 0.0
    assert with_t2.t2 > 0.0
    assert with_t2.total - without.total == pytest.approx(with_t2.t2, rel=1e-12)


class TestFrozenReduce:
    def test_identity(self, small_lattice, params_su2):
        w = wl.cold_start(small_lattice, params_su2.n)
        cfg = ob.frozen_reduce(w, params_su2)
        ref = ob.cold_start(small_lattice, params_su2)
        assert np.array_equal(cfg.z, ref.z)
        assert np.array_equal(cfg.ut, ref.ut)

    def test_polar_split_recovers_links(self, small_lattice, params_su2):
        w = random_wilson(small_lattice, params_su2, seed=28)
        cfg = ob.frozen_reduce(w, params_su2)
        wpart, upart = ma.polar_decompose(cfg.z, params_su2.c)
        assert np.abs(wpart - np.eye(params_su2.n)).max() <= 1e-10
        assert np.abs(upart - w.links[1:]).max() <= 1e-10

    @pytest.mark.parametrize("n", [2, 3])
    def test_action_difference_identity(self, n):
        # orbifold(frozen) - orbifold(frozen identity) equals
        # wilson - wilson(identity), configuration by configuration
        lat = Lattice(LatticeShape(3, (3, 3)))
        p = PhysParams(n=n, d=2, g2=1.0, a=0.3, a_t=0.3, m2=10.0, m2_u1=10.0)
        ident = wl.cold_start(lat, n)
        s_w0 = wl.wilson_action(ident, p)
        s_o0 = ob.orbifold_action(ob.frozen_reduce(ident, p), p)
        for seed in range(50):
            w = random_wilson(lat, p, seed=seed)
            ds_w = wl.wilson_action(w, p) - s_w0
            ds_o = ob.orbifold_action(ob.frozen_reduce(w, p), p) - s_o0
            assert abs(ds_o - ds_w) <= 1e-10 * abs(ds_w)


class TestForceZ:
    def test_zero_at_frozen_identity(self, small_lattice, params_su2):
        cfg = ob.cold_start(small_lattice, params_su2)
        assert np.abs(ob.orbifold_force_z(cfg, params_su2)).max() < 1e-12
        assert np.abs(ob.orbifold_force_ut(cfg, params_su2)).max() < 1e-12

    @pytest.mark.parametrize("n", [2, 3])
    def test_finite_difference(self, n, small_lattice):
        # entrywise central differences against the Wirtinger gradient:
        # dS/dx = 2 Re dS/dZbar, dS/dy = 2 Im dS/dZbar
        p = PhysParams(n=n, d=2, g2=1.0, a=0.3, a_t=0.25, m2=37.0, m2_u1=21.0)
        cfg = random_orbifold(small_lattice, p, seed=29)
        force = ob.orbifold_force_z(cfg, p)
        rng = np.random.default_rng(30)
        eps = 1e-5
        floor = 10 * 1e-16 * abs(ob.orbifold_action(cfg, p)) / eps
        for _ in range(20):
            j = rng.integers(0, small_lattice.d)
            site = rng.integers(0, small_lattice.volume)
            row, col = rng.integers(0, n, size=2)
            for comp in (1.0, 1j):

                def action_at(e):
                    probe = cfg.copy()
                    probe.z[j, site, row, col] += e * comp
                    return ob.orbifold_action(probe, p)

                fd = (action_at(eps) - action_at(-eps)) / (2 * eps)
                grad = force[j, site, row, col]
                exact = 2 * grad.real if comp == 1.0 else 2 * grad.imag
                assert fd == pytest.approx(exact, rel=1e-6, abs=floor)

    def test_massless_limit_drops_constraint_forces(self, small_lattice):
        p0 = PhysParams(n=2, d=2, g2=1.0, a=0.3, a_t=0.3, m2=0.0, m2_u1=0.0)
        p1 = PhysParams(n=2, d=2, g2=1.0, a=0.3, a_t=0.3, m2=50.0, m2_u1=60.0)
        cfg = random_orbifold(small_lattice, p0, seed=31)
        f_massless = ob.orbifold_force_z(cfg, p0)
        # rebuild T1+T2+T3 contribution by subtracting the analytic T4+T5
        f_full = ob.orbifold_force_z(cfg, p1)
        k1, k2, k3, k4, k5 = ob._coeffs(p1)
        diff = np.zeros_like(f_full)
        for j in range(small_lattice.d):
            h = cfg.z[j] @ ma.dagger(cfg.z[j]) - p1.c * np.eye(2)
            diff[j] += 2 * k4 * (h @ cfg.z[j])
            s = ma.determinant(cfg.z[j]) * p1.c ** (-1.0) - 1.0
            diff[j] += (k5 * p1.c ** (-1.0)) * s[:, None, None] * ma.dagger(
                ma.adjugate(cfg.z[j])
            )
        assert np.abs(f_full - diff - f_massless).max() <= 1e-12 * np.abs(f_full).max()


class TestForceUt:
    @pytest.mark.parametrize("n", [2, 3])
    def test_finite_difference(self, n, small_lattice):
        p = PhysParams(n=n, d=2, g2=1.0, a=0.3, a_t=0.25, m2=37.0, m2_u1=21.0)
        cfg = random_orbifold(small_lattice, p, seed=32)
        force = ob.orbifold_force_ut(cfg, p)
        rng = np.random.default_rng(33)
        eps = 1e-5
        # rounding floor of the central difference itself: ~1e-16 |S| / eps
        floor = 10 * 1e-16 * abs(ob.orbifold_action(cfg, p)) / eps
        for _ in range(20):
            site = rng.integers(0, small_lattice.volume)
            x = ma.random_algebra(rng, n)

            def action_at(e):
                probe = cfg.copy()
                probe.ut[site] = ma.exp_algebra(x, e) @ probe.ut[site]
                return ob.orbifold_action(probe, p)

            fd = (action_at(eps) - action_at(-eps)) / (2 * eps)
            exact = np.real(np.trace(force[site] @ x))
            assert fd == pytest.approx(exact, rel=1e-6, abs=floor)

    def test_zero_z_gives_zero_force(self, small_lattice, params_su2):
        cfg = random_orbifold(small_lattice, params_su2, seed=34)
        cfg.z[...] = 0.0
        assert np.abs(ob.orbifold_force_ut(cfg, params_su2)).max() == 0.0

    def test_algebra_valued(self, small_lattice, params_su2):
        cfg = random_orbifold(small_lattice, params_su2, seed=35)
        f = ob.orbifold_force_ut(cfg, params_su2)
        assert np.abs(f + ma.dagger(f)).max() <= 1e-13 * np.abs(f).max()
        assert np.abs(np.trace(f, axis1=-2, axis2=-1)).max() <= 1e-13 * np.abs(f).max()


def test_constraint_reweighting_monotone():
    # On a fixed ensemble, reweighting through the constraint terms alone
    # must not increase <Tr(W-1)^2> with growing m^2 (ensemble property).
    from orbiym import hmc as hmc_mod
    from orbiym import observables as obs

    lat = Lattice(LatticeShape(2, (2, 2)))
    m2_ref = 500.0
    p_ref = PhysParams(n=2, d=2, g2=1.0, a=0.3, a_t=0.3, m2=m2_ref, m2_u1=m2_ref)
    system = hmc_mod.OrbifoldSystem(p_ref)
    rng = np.random.default_rng(36)
    cfg = ob.cold_start(lat, p_ref)
    for i in range(100):
        cfg, _ = hmc_mod.hmc_trajectory(system, cfg, 0.015, 40, rng, index=i)
    devs, costs = [], []
    for i in range(300):
        cfg, _ = hmc_mod.hmc_trajectory(system, cfg, 0.015, 40, rng, index=i)
        dev, _ = obs.w_and_det(cfg, p_ref)
        terms = ob.orbifold_action_terms(cfg, p_ref)
        devs.append(dev)
        costs.append((terms.t4 + terms.t5) / m2_ref)  # T4+T5 at unit mass
    devs = np.array(devs)
    costs = np.array(costs)
    means = []
    for m2 in (250.0, 500.0, 1000.0):
        logw = -(m2 - m2_ref) * costs
        w = np.exp(logw - logw.max())
        means.append(float(np.sum(w * devs) / np.sum(w)))
    spread = devs.std() / np.sqrt(len(devs))
    assert means[0] + 3 * spread >= means[1] >= means[2] - 3 * spread
