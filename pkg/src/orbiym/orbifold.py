"""Orbifold lattice action, its HMC forces, and the frozen-field reduction.

Spatial links are unconstrained complex matrices Z_j(n) with flat measure;
temporal links U_t(n) stay in SU(n).  With c = a^(d-2)/(2 g2) and
|M|^2 = M Mbar inside a trace (Mbar = conjugate transpose), the action is
the sum of five non-negative pieces per site:

    T1 = (1/a_t)            sum_j  Tr|U_t(n) Z_j(n+t) - Z_j(n) U_t(n+j)|^2
    T2 = (g2 a_t / 2 a^d)          Tr|sum_j (Z_j Zbar_j - (Zbar_j Z_j)(n-j))|^2
    T3 = (2 g2 a_t / a^d)  sum_j<k Tr|Z_j(n) Z_k(n+j) - Z_k(n) Z_j(n+k)|^2
    T4 = (m2 g2 a_t a^(2-d) / 2) sum_j Tr|Z_j Zbar_j - c|^2
    T5 = (m2_u1 a_t a^(d-2) / 2 g2) sum_j |c^(-n/2) det Z_j - 1|^2

T4/T5 drive the links toward sqrt(c) * SU(n); freezing Z = sqrt(c) U
turns the remainder into the Wilson action up to an additive constant,
which is the equivalence the check-equivalence command exercises.

Forces with respect to Z are Wirtinger derivatives dS/dZbar (entrywise
d/d(conj Z_pq)); the momentum kick is P <- P - eps * force.  Each term's
derivative below was derived by expanding Tr(M Mbar) and collecting the
occurrences of Z and Zbar:

    term  occurrence pattern            contribution to dS/dZbar_j(n)
    T1    A Z  in D_j(n-t), -Z B in D_j(n)
                                        k1 [Ut(n-t)^dag D_j(n-t) - D_j(n) Ut(n+j)^dag]
    T2    Z Zbar in G(n), -Zbar Z in G(n+j)
                                        2 k2 [G(n) Z_j(n) - Z_j(n) G(n+j)]
    T3    four slots of C_jk            k3 sum_{k!=j} [C_jk(n) Zbar_k(n+j)
                                                       - Zbar_k(n-k) C_jk(n-k)]
    T4    Z Zbar and Zbar Z in H_j(n)   2 k4 H_j(n) Z_j(n)
    T5    det via adjugate              k5 s_j(n) c^(-n/2) adj(Z_j(n))^dag

with C_kj = -C_jk, and every line cross-checked against central finite
differences in the test suite (that check is a hard CI gate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Lattice
from .matalg import adjugate, dagger, determinant, proj_algebra
from .params import PhysParams
from .wilson import WilsonConfig


@dataclass
class OrbifoldConfig:
    """z: (d, volume, n, n) complex spatial links; ut: (volume, n, n) SU(n)."""

    lat: Lattice
    z: np.ndarray
    ut: np.ndarray

    def copy(self) -> "OrbifoldConfig":
        return OrbifoldConfig(self.lat, self.z.copy(), self.ut.copy())


@dataclass(frozen=True)
class OrbifoldTerms:
    """The five action contributions, each a non-negative total."""

    t1: float
    t2: float
    t3: float
    t4: float
    t5: float

    @property
    def total(self) -> float:
        return math.fsum((self.t1, self.t2, self.t3, self.t4, self.t5))


def cold_start(lat: Lattice, p: PhysParams) -> OrbifoldConfig:
    """Identity-frozen configuration Z = sqrt(c), U_t = 1 (zero action)."""
    eye = np.eye(p.n, dtype=complex)
    z = np.sqrt(p.c) * np.tile(eye, (lat.d, lat.volume, 1, 1))
    ut = np.tile(eye, (lat.volume, 1, 1))
    return OrbifoldConfig(lat, z, ut)


def frozen_reduce(w: WilsonConfig, p: PhysParams) -> OrbifoldConfig:
    """Freeze a Wilson configuration: Z_j = sqrt(c) U_j, U_t copied."""
    return OrbifoldConfig(w.lat, np.sqrt(p.c) * w.links[1:].copy(), w.links[0].copy())


def _coeffs(p: PhysParams):
    k1 = 1.0 / p.a_t
    k2 = p.g2 * p.a_t / (2.0 * p.a**p.d)
    k3 = 2.0 * p.g2 * p.a_t / p.a**p.d
    k4 = p.m2 * p.g2 * p.a_t * p.a ** (2 - p.d) / 2.0
    k5 = p.m2_u1 * p.a_t * p.a ** (p.d - 2) / (2.0 * p.g2)
    return k1, k2, k3, k4, k5


def _sq_norm(m: np.ndarray) -> np.ndarray:
    """Per-site Tr(M Mbar) = sum of |entries|^2 (exactly non-negative)."""
    return np.sum(np.real(m) ** 2 + np.imag(m) ** 2, axis=(-2, -1))


def _hop_defect(cfg: OrbifoldConfig, jdx: int) -> np.ndarray:
    """D_j(n) = U_t(n) Z_j(n+t) - Z_j(n) U_t(n+j) for array index jdx = j-1."""
    lat = cfg.lat
    return cfg.ut @ cfg.z[jdx][lat.fwd[0]] - cfg.z[jdx] @ cfg.ut[lat.fwd[jdx + 1]]


def _gauss_defect(cfg: OrbifoldConfig) -> np.ndarray:
    """G(n) = sum_j (Z_j Zbar_j)(n) - (Zbar_j Z_j)(n-j); Hermitian."""
    lat = cfg.lat
    g = np.zeros_like(cfg.ut)
    for jdx in range(lat.d):
        zj = cfg.z[jdx]
        g += zj @ dagger(zj)
        g -= (dagger(zj) @ zj)[lat.bwd[jdx + 1]]
    return g


def _plane_commutator(cfg: OrbifoldConfig, jdx: int, kdx: int) -> np.ndarray:
    """C_jk(n) = Z_j(n) Z_k(n+j) - Z_k(n) Z_j(n+k), for jdx < kdx."""
    lat = cfg.lat
    return (
        cfg.z[jdx] @ cfg.z[kdx][lat.fwd[jdx + 1]]
        - cfg.z[kdx] @ cfg.z[jdx][lat.fwd[kdx + 1]]
    )


def orbifold_action_terms(
    cfg: OrbifoldConfig, p: PhysParams, include_t2: bool = True
) -> OrbifoldTerms:
    """Evaluate the five contributions separately (all >= 0 by construction).

    The Gauss-law square T2 vanishes identically in the frozen limit and
    can be omitted via ``include_t2=False``; the simulated default keeps it.
    """
    lat = cfg.lat
    k1, k2, k3, k4, k5 = _coeffs(p)
    c = p.c
    n = p.n
    eye = np.eye(n)

    t1 = np.zeros(lat.volume)
    t3 = np.zeros(lat.volume)
    t4 = np.zeros(lat.volume)
    t5 = np.zeros(lat.volume)
    for jdx in range(lat.d):
        t1 += _sq_norm(_hop_defect(cfg, jdx))
        h = cfg.z[jdx] @ dagger(cfg.z[jdx]) - c * eye
        t4 += _sq_norm(h)
        s = determinant(cfg.z[jdx]) * c ** (-n / 2.0) - 1.0
        t5 += np.real(s) ** 2 + np.imag(s) ** 2
        for kdx in range(jdx + 1, lat.d):
            t3 += _sq_norm(_plane_commutator(cfg, jdx, kdx))
    t2 = _sq_norm(_gauss_defect(cfg)) if include_t2 else np.zeros(lat.volume)

    return OrbifoldTerms(
        t1=k1 * math.fsum(t1),
        t2=k2 * math.fsum(t2),
        t3=k3 * math.fsum(t3),
        t4=k4 * math.fsum(t4),
        t5=k5 * math.fsum(t5),
    )


def orbifold_action(cfg: OrbifoldConfig, p: PhysParams, include_t2: bool = True) -> float:
    return orbifold_action_terms(cfg, p, include_t2).total


def orbifold_force_z(
    cfg: OrbifoldConfig, p: PhysParams, include_t2: bool = True
) -> np.ndarray:
    """dS/dZbar per spatial link, shaped like ``cfg.z``.

    S is real, so this single matrix per link carries the whole gradient;
    the flat-momentum kick is P <- P - eps * force.
    """
    lat = cfg.lat
    k1, k2, k3, k4, k5 = _coeffs(p)
    c, n = p.c, p.n
    eye = np.eye(n)
    force = np.zeros_like(cfg.z)

    ut_dag = dagger(cfg.ut)
    for jdx in range(lat.d):
        d_j = _hop_defect(cfg, jdx)
        force[jdx] += k1 * (
            ut_dag[lat.bwd[0]] @ d_j[lat.bwd[0]]
            - d_j @ ut_dag[lat.fwd[jdx + 1]]
        )
        h = cfg.z[jdx] @ dagger(cfg.z[jdx]) - c * eye
        force[jdx] += 2.0 * k4 * (h @ cfg.z[jdx])
        if k5 != 0.0:
            s = determinant(cfg.z[jdx]) * c ** (-n / 2.0) - 1.0
            force[jdx] += (k5 * c ** (-n / 2.0)) * s[:, None, None] * dagger(
                adjugate(cfg.z[jdx])
            )

    if include_t2:
        g = _gauss_defect(cfg)
        for jdx in range(lat.d):
            force[jdx] += 2.0 * k2 * (
                g @ cfg.z[jdx] - cfg.z[jdx] @ g[lat.fwd[jdx + 1]]
            )

    for jdx in range(lat.d):
        for kdx in range(jdx + 1, lat.d):
            c_jk = _plane_commutator(cfg, jdx, kdx)
            zk_dag = dagger(cfg.z[kdx])
            zj_dag = dagger(cfg.z[jdx])
            force[jdx] += k3 * (
                c_jk @ zk_dag[lat.fwd[jdx + 1]]
                - (zk_dag @ c_jk)[lat.bwd[kdx + 1]]
            )
            # C_kj = -C_jk
            force[kdx] += k3 * (
                -c_jk @ zj_dag[lat.fwd[kdx + 1]]
                + (zj_dag @ c_jk)[lat.bwd[jdx + 1]]
            )
    return force


def orbifold_force_ut(cfg: OrbifoldConfig, p: PhysParams) -> np.ndarray:
    """su(n) force on the temporal links (only T1 depends on them).

    Along U_t <- exp(eps X) U_t the action changes as
    dS/deps = -Re Tr(F X^dag); the kick is pi <- pi + eps * force,
    matching wilson_force's convention.
    """
    lat = cfg.lat
    y = np.zeros_like(cfg.ut)
    for jdx in range(lat.d):
        d_dag = dagger(_hop_defect(cfg, jdx))
        y += cfg.z[jdx][lat.fwd[0]] @ d_dag
        y -= (d_dag @ cfg.z[jdx])[lat.bwd[jdx + 1]]
    return (2.0 / p.a_t) * proj_algebra(cfg.ut @ y)


def gauge_transform(cfg: OrbifoldConfig, omega: np.ndarray) -> OrbifoldConfig:
    """Z_j(n) -> Omega(n) Z_j(n) Omega(n+j)^dag, same pattern for U_t."""
    lat = cfg.lat
    z = np.empty_like(cfg.z)
    for jdx in range(lat.d):
        z[jdx] = omega @ cfg.z[jdx] @ dagger(omega[lat.fwd[jdx + 1]])
    ut = omega @ cfg.ut @ dagger(omega[lat.fwd[0]])
    return OrbifoldConfig(lat, z, ut)


def translate(cfg: OrbifoldConfig, mu: int) -> OrbifoldConfig:
    """Pull the configuration back by one lattice unit along +mu."""
    idx = cfg.lat.fwd[mu]
    return OrbifoldConfig(cfg.lat, cfg.z[:, idx], cfg.ut[idx])
