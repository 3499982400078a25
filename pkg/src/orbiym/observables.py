"""Measurement channels for Wilson and orbifold configurations.

All traces are reported unnormalized (Tr, not Tr/N) so values overlay
directly on plaquette plots: the identity configuration gives N for the
unitary plaquettes and c^2 N for the complex-link plaquette.  For Wilson
configurations the complex-link channel is reported as c^2 times the
spatial plaquette, preserving the factor relating the two conventions
(1/c^2 = 4 at g2 = 1, d = 2).

Site averages use math.fsum, making every site-averaged observable
exactly invariant under lattice translations of the configuration.
Unitary parts of orbifold links come from one polar decomposition per
measurement -- never during molecular dynamics, where they are not needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matalg import dagger, determinant, polar_decompose
from .orbifold import OrbifoldConfig
from .params import PhysParams
from .wilson import WilsonConfig


@dataclass(frozen=True)
class ObservableSnapshot:
    """One configuration's worth of measurements (CSV row payload)."""

    plaq_z: float
    plaq_u_spatial: float
    plaq_u_temporal: float
    tr_w_dev: float
    re_det_u: float
    im_det_u: float
    re_p: float
    im_p: float
    abs_p: float


def _mean(values: np.ndarray) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel()) / values.size


def _mean_complex(values: np.ndarray) -> complex:
    flat = np.asarray(values).ravel()
    return complex(math.fsum(flat.real) / flat.size, math.fsum(flat.imag) / flat.size)


def _loop_trace(a, b, c, d) -> np.ndarray:
    return np.trace(a @ b @ dagger(c) @ dagger(d), axis1=-2, axis2=-1)


def _spatial_plaquette(z, lat) -> float:
    """Mean Re Tr of Z_j(n) Z_k(n+j) Zbar_j(n+k) Zbar_k(n) over sites, j<k."""
    traces = []
    for j in range(lat.d):
        for k in range(j + 1, lat.d):
            traces.append(
                _loop_trace(z[j], z[k][lat.fwd[j + 1]], z[j][lat.fwd[k + 1]], z[k]).real
            )
    return _mean(np.concatenate(traces))


def _temporal_plaquette(ut, u_spatial, lat) -> float:
    """Mean Re Tr of U_t(n) U_j(n+t) U_t(n+j)^dag U_j(n)^dag over sites and j."""
    traces = [
        _loop_trace(ut, u_spatial[j][lat.fwd[0]], ut[lat.fwd[j + 1]], u_spatial[j]).real
        for j in range(lat.d)
    ]
    return _mean(np.concatenate(traces))


def polyakov(cfg) -> complex:
    """Spatially averaged normalized trace of the temporal link product."""
    if isinstance(cfg, WilsonConfig):
        ut = cfg.links[0]
    else:
        ut = cfg.ut
    lat = cfg.lat
    n_t = lat.shape.n_t
    vs = lat.shape.spatial_volume
    n = ut.shape[-1]
    slices = ut.reshape(n_t, vs, n, n)
    prod = slices[0]
    for t in range(1, n_t):
        prod = prod @ slices[t]
    return _mean_complex(np.trace(prod, axis1=-2, axis2=-1) / n)


def plaquettes(cfg, p: PhysParams):
    """(plaq_z, plaq_u_spatial, plaq_u_temporal) for either configuration."""
    lat = cfg.lat
    if isinstance(cfg, WilsonConfig):
        u_spatial = cfg.links[1:]
        plaq_u_sp = _spatial_plaquette(u_spatial, lat)
        plaq_u_t = _temporal_plaquette(cfg.links[0], u_spatial, lat)
        return p.c**2 * plaq_u_sp, plaq_u_sp, plaq_u_t
    _, u = polar_decompose(cfg.z, p.c)
    plaq_z = _spatial_plaquette(cfg.z, lat)
    plaq_u_sp = _spatial_plaquette(u, lat)
    plaq_u_t = _temporal_plaquette(cfg.ut, u, lat)
    return plaq_z, plaq_u_sp, plaq_u_t


def w_and_det(cfg: OrbifoldConfig, p: PhysParams):
    """Site- and direction-averaged (Tr(W-1)^2, det U) from the polar split."""
    w, u = polar_decompose(cfg.z, p.c)
    dev = w - np.eye(p.n)
    tr_w_dev = _mean(np.trace(dev @ dev, axis1=-2, axis2=-1).real)
    det_u = _mean_complex(determinant(u))
    return tr_w_dev, det_u


def measure(cfg, p: PhysParams) -> ObservableSnapshot:
    """Full snapshot; does the polar split once and reuses it.

    Raises matalg.DecompositionError when any orbifold link is too close
    to singular to split; the runner logs and skips such measurements.
    """
    lat = cfg.lat
    if isinstance(cfg, WilsonConfig):
        u_spatial = cfg.links[1:]
        plaq_u_sp = _spatial_plaquette(u_spatial, lat)
        plaq_u_t = _temporal_plaquette(cfg.links[0], u_spatial, lat)
        plaq_z = p.c**2 * plaq_u_sp
        # links are exactly SU(n): W = 1 by construction, det from the links
        tr_w_dev = 0.0
        det_u = _mean_complex(determinant(u_spatial))
    else:
        w, u = polar_decompose(cfg.z, p.c)
        plaq_z = _spatial_plaquette(cfg.z, lat)
        plaq_u_sp = _spatial_plaquette(u, lat)
        plaq_u_t = _temporal_plaquette(cfg.ut, u, lat)
        dev = w - np.eye(p.n)
        tr_w_dev = _mean(np.trace(dev @ dev, axis1=-2, axis2=-1).real)
        det_u = _mean_complex(determinant(u))
    pol = polyakov(cfg)
    return ObservableSnapshot(
        plaq_z=plaq_z,
        plaq_u_spatial=plaq_u_sp,
        plaq_u_temporal=plaq_u_t,
        tr_w_dev=tr_w_dev,
        re_det_u=det_u.real,
        im_det_u=det_u.imag,
        re_p=pol.real,
        im_p=pol.imag,
        abs_p=abs(pol),
    )
