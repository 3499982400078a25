"""Wilson action and HMC force for pure SU(N) gauge fields.

The action on the anisotropic lattice is

    S = - sum_n { (c/a_t) sum_j 2 Re Tr P_tj(n)
                  + (a_t a^(d-4) / 2 g2) sum_{j<k} 2 Re Tr P_jk(n) }

with P_munu(n) = U_mu(n) U_nu(n+mu) U_mu(n+nu)^dag U_nu(n)^dag and
c = a^(d-2)/(2 g2).  Both orientations of every loop enter, which is the
2 Re Tr of one orientation.  (The temporal sum runs over all d spatial
directions; it is the plaquette sum of the given plane, whatever d is.)

Site reductions use math.fsum over per-site contributions, so the total
is invariant under lattice translations exactly, not just to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Lattice
from .matalg import dagger, proj_algebra
from .params import PhysParams


@dataclass
class WilsonConfig:
    """One SU(n) matrix per (site, direction); axis order (mu, site, n, n).

    Direction 0 is time.  Treated as immutable during action/force
    evaluation; the HMC driver owns all mutation.
    """

    lat: Lattice
    links: np.ndarray

    def copy(self) -> "WilsonConfig":
        return WilsonConfig(self.lat, self.links.copy())


def cold_start(lat: Lattice, n: int) -> WilsonConfig:
    links = np.tile(np.eye(n, dtype=complex), (lat.d + 1, lat.volume, 1, 1))
    return WilsonConfig(lat, links)


def beta_temporal(p: PhysParams) -> float:
    return p.c / p.a_t


def beta_spatial(p: PhysParams) -> float:
    return p.a_t * p.a ** (p.d - 4) / (2.0 * p.g2)


def plaquette_field(links, lat: Lattice, mu: int, nu: int) -> np.ndarray:
    """Per-site loop U_mu(n) U_nu(n+mu) U_mu(n+nu)^dag U_nu(n)^dag."""
    return (
        links[mu]
        @ links[nu][lat.fwd[mu]]
        @ dagger(links[mu][lat.fwd[nu]])
        @ dagger(links[nu])
    )


def wilson_action_density(cfg: WilsonConfig, p: PhysParams) -> np.ndarray:
    """Per-site complex plaquette accumulation; S = -2 * fsum(Re density).

    Kept complex so callers can bound the imaginary residue of the trace
    accumulation (it is zero in exact arithmetic).
    """
    lat = cfg.lat
    bt, bs = beta_temporal(p), beta_spatial(p)
    density = np.zeros(lat.volume, dtype=complex)
    for j in range(1, lat.d + 1):
        density += bt * np.trace(
            plaquette_field(cfg.links, lat, 0, j), axis1=-2, axis2=-1
        )
    for j in range(1, lat.d + 1):
        for k in range(j + 1, lat.d + 1):
            density += bs * np.trace(
                plaquette_field(cfg.links, lat, j, k), axis1=-2, axis2=-1
            )
    return density


def wilson_action(cfg: WilsonConfig, p: PhysParams) -> float:
    return -2.0 * math.fsum(wilson_action_density(cfg, p).real)


def _staple_sum(links, lat: Lattice, mu: int, p: PhysParams) -> np.ndarray:
    """Weighted sum of the two staples of every plane through link mu.

    Accumulation order is fixed (temporal plane first, then spatial in
    ascending direction) so single-threaded evaluation is bit-stable.
    """
    bt, bs = beta_temporal(p), beta_spatial(p)
    others = [nu for nu in range(lat.d + 1) if nu != mu]
    acc = np.zeros_like(links[mu])
    for nu in others:
        beta = bt if (mu == 0 or nu == 0) else bs
        fwd = (
            links[nu][lat.fwd[mu]]
            @ dagger(links[mu][lat.fwd[nu]])
            @ dagger(links[nu])
        )
        up_mu_dn_nu = lat.bwd[nu][lat.fwd[mu]]
        bwd = (
            dagger(links[nu][up_mu_dn_nu])
            @ dagger(links[mu][lat.bwd[nu]])
            @ links[nu][lat.bwd[nu]]
        )
        acc += beta * (fwd + bwd)
    return acc


def wilson_force(cfg: WilsonConfig, p: PhysParams) -> np.ndarray:
    """Molecular-dynamics force, one su(n) element per link.

    F_mu(n) = -2 proj_su(n)[ U_mu(n) A_mu(n) ] with A the weighted staple
    sum.  Along a flow U <- exp(eps X) U the action changes as
    dS/deps = -Re Tr(F X^dag) = Re Tr(F X), so the energy-conserving
    momentum kick is pi <- pi + eps F.
    """
    lat = cfg.lat
    force = np.empty_like(cfg.links)
    for mu in range(lat.d + 1):
        staple = _staple_sum(cfg.links, lat, mu, p)
        force[mu] = -2.0 * proj_algebra(cfg.links[mu] @ staple)
    return force


def gauge_transform(cfg: WilsonConfig, omega: np.ndarray) -> WilsonConfig:
    """U_mu(n) -> Omega(n) U_mu(n) Omega(n+mu)^dag for Omega in SU(n)."""
    lat = cfg.lat
    out = np.empty_like(cfg.links)
    for mu in range(lat.d + 1):
        out[mu] = omega @ cfg.links[mu] @ dagger(omega[lat.fwd[mu]])
    return WilsonConfig(lat, out)


def translate(cfg: WilsonConfig, mu: int) -> WilsonConfig:
    """Pull the whole configuration back by one lattice unit along +mu."""
    idx = cfg.lat.fwd[mu]
    return WilsonConfig(cfg.lat, cfg.links[:, idx])
