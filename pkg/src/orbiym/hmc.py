"""Hybrid Monte Carlo over group-valued and flat-matrix phase space.

One driver serves both actions through a small "system" object that knows
how to evaluate the action, compute forces, drift, and refresh momenta:

* group links carry su(n) momenta pi with K = (1/2) Tr(pi pi^dag) each and
  drift U <- exp(dt pi) U;
* flat links carry unconstrained complex momenta P with K = Tr(Pbar P)
  each and drift Z <- Z + dt P (refreshed with variance 1/2 per real
  component, matching that kinetic form).

Kicks use the convention fixed by the force modules: group momenta get
pi <- pi + eps * force, flat momenta P <- P - eps * dS/dZbar.  With those
pairings H = K + S is conserved by the continuum flow, leapfrog is
reversible and area-preserving, and the Metropolis step makes the
algorithm exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import orbifold as ob
from . import wilson as wl
from .matalg import DriftError, exp_algebra, random_algebra, reunitarize
from .params import PhysParams


class IntegratorError(RuntimeError):
    """Molecular dynamics produced a non-finite force."""


@dataclass(frozen=True)
class HmcParams:
    """Molecular-dynamics and run-length parameters.

    The trajectory length tau = dt * n_md is recorded in run metadata.
    """

    dt: float
    n_md: int
    n_traj: int
    n_therm: int = 0
    meas_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_md < 1:
            raise ValueError("n_md must be >= 1")
        if self.n_traj < 0 or self.n_therm < 0:
            raise ValueError("trajectory counts must be non-negative")
        if self.meas_every < 1:
            raise ValueError("meas_every must be >= 1")

    @property
    def tau(self) -> float:
        return self.dt * self.n_md


@dataclass
class TrajectoryRecord:
    index: int
    dh: float
    accepted: bool


def _check_finite(force: np.ndarray, label: str):
    bad = ~np.isfinite(force)
    if bad.any():
        where = np.argwhere(bad)[0]
        raise IntegratorError(f"non-finite {label} force at index {tuple(where)}")


def _sum_sq(m: np.ndarray) -> float:
    return float(np.sum(np.real(m) ** 2 + np.imag(m) ** 2))


class WilsonSystem:
    """HMC bindings for the Wilson action: every link is group-valued."""

    def __init__(self, p: PhysParams):
        self.p = p

    def action(self, cfg: wl.WilsonConfig) -> float:
        return wl.wilson_action(cfg, self.p)

    def refresh_momenta(self, rng: np.random.Generator, cfg: wl.WilsonConfig):
        return random_algebra(rng, self.p.n, size=cfg.links.shape[:2])

    def kinetic(self, mom) -> float:
        return 0.5 * _sum_sq(mom)

    def kick(self, mom, cfg, eps: float):
        force = wl.wilson_force(cfg, self.p)
        _check_finite(force, "gauge")
        mom += eps * force

    def drift(self, cfg, mom, eps: float):
        cfg.links[...] = exp_algebra(mom, eps) @ cfg.links

    def flip(self, mom):
        return -mom

    def copy_momenta(self, mom):
        return mom.copy()

    def reproject(self, cfg):
        cfg.links[...] = reunitarize(cfg.links)


@dataclass
class OrbifoldMomenta:
    pz: np.ndarray
    pt: np.ndarray

    def copy(self) -> "OrbifoldMomenta":
        return OrbifoldMomenta(self.pz.copy(), self.pt.copy())


class OrbifoldSystem:
    """HMC bindings for the orbifold action: flat z links + SU(n) U_t."""

    def __init__(self, p: PhysParams, include_t2: bool = True):
        self.p = p
        self.include_t2 = include_t2

    def action(self, cfg: ob.OrbifoldConfig) -> float:
        return ob.orbifold_action(cfg, self.p, self.include_t2)

    def refresh_momenta(self, rng: np.random.Generator, cfg: ob.OrbifoldConfig):
        # Draw order is part of the reproducibility contract: flat momenta
        # (real then imaginary parts), then temporal group momenta.
        re = rng.standard_normal(cfg.z.shape)
        im = rng.standard_normal(cfg.z.shape)
        pz = (re + 1j * im) / np.sqrt(2.0)
        pt = random_algebra(rng, self.p.n, size=(cfg.ut.shape[0],))
        return OrbifoldMomenta(pz, pt)

    def kinetic(self, mom: OrbifoldMomenta) -> float:
        return _sum_sq(mom.pz) + 0.5 * _sum_sq(mom.pt)

    def kick(self, mom: OrbifoldMomenta, cfg, eps: float):
        fz = ob.orbifold_force_z(cfg, self.p, self.include_t2)
        ft = ob.orbifold_force_ut(cfg, self.p)
        _check_finite(fz, "flat-link")
        _check_finite(ft, "temporal-link")
        mom.pz -= eps * fz
        mom.pt += eps * ft

    def drift(self, cfg, mom: OrbifoldMomenta, eps: float):
        cfg.z += eps * mom.pz
        cfg.ut[...] = exp_algebra(mom.pt, eps) @ cfg.ut

    def flip(self, mom: OrbifoldMomenta):
        return OrbifoldMomenta(-mom.pz, -mom.pt)

    def copy_momenta(self, mom: OrbifoldMomenta):
        return mom.copy()

    def reproject(self, cfg):
        cfg.ut[...] = reunitarize(cfg.ut)


def make_system(action: str, p: PhysParams, include_t2: bool = True):
    if action == "wilson":
        return WilsonSystem(p)
    if action == "orbifold":
        return OrbifoldSystem(p, include_t2)
    raise ValueError(f"unknown action {action!r}")


def leapfrog(system, cfg, mom, dt: float, n_md: int):
    """Kick-drift-kick leapfrog; returns fresh (config, momenta).

    The inputs are not modified, so callers keep the exact pre-trajectory
    state for Metropolis rejection.
    """
    cfg = cfg.copy()
    mom = system.copy_momenta(mom)
    system.kick(mom, cfg, 0.5 * dt)
    for _ in range(n_md - 1):
        system.drift(cfg, mom, dt)
        system.kick(mom, cfg, dt)
    system.drift(cfg, mom, dt)
    system.kick(mom, cfg, 0.5 * dt)
    return cfg, mom


def hmc_trajectory(system, cfg, dt: float, n_md: int, rng: np.random.Generator,
                   index: int = 0):
    """One momentum refresh + trajectory + Metropolis test.

    Returns (config, TrajectoryRecord).  On rejection the returned config
    is the input object, bit-identical.  Accepted group links are
    reunitarized once per trajectory; a drift beyond the reunitarization
    precondition is re-raised with the trajectory index attached.
    """
    mom = system.refresh_momenta(rng, cfg)
    h0 = system.kinetic(mom) + system.action(cfg)
    new_cfg, new_mom = leapfrog(system, cfg, mom, dt, n_md)
    h1 = system.kinetic(new_mom) + system.action(new_cfg)
    dh = h1 - h0
    u = rng.uniform()
    accepted = bool(dh <= 0.0 or u < math.exp(-dh))
    if accepted:
        try:
            system.reproject(new_cfg)
        except DriftError as err:
            raise DriftError(f"trajectory {index}: {err}") from err
        cfg = new_cfg
    return cfg, TrajectoryRecord(index=index, dh=float(dh), accepted=accepted)


def reversibility_defect(system, cfg, dt: float, n_md: int,
                         rng: np.random.Generator) -> float:
    """Max-norm state error after integrating forward, flipping, and back."""
    mom = system.refresh_momenta(rng, cfg)
    fwd_cfg, fwd_mom = leapfrog(system, cfg, mom, dt, n_md)
    back_cfg, _ = leapfrog(system, fwd_cfg, system.flip(fwd_mom), dt, n_md)
    if isinstance(cfg, wl.WilsonConfig):
        return float(np.abs(back_cfg.links - cfg.links).max())
    return max(
        float(np.abs(back_cfg.z - cfg.z).max()),
        float(np.abs(back_cfg.ut - cfg.ut).max()),
    )
