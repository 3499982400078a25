"""Exact-size complex matrix algebra for SU(N) gauge fields.

Everything here acts on numpy arrays of shape (..., n, n) and is applied
elementwise over the leading axes, so whole link fields can be processed
in one call.  Supported sizes are n = 2 and 3 (nothing hard-codes n = 3;
larger n works through the same code paths, just without tuned kernels).

Conventions fixed here and used consistently by the HMC layer:

* the su(n) basis ``T_a`` is anti-Hermitian, traceless and orthonormal,
  Tr(T_a T_b^dag) = delta_ab, so a momentum X = sum_a p_a T_a carries
  kinetic energy (1/2) sum_a p_a^2 = (1/2) Tr(X X^dag);
* ``polar_decompose`` splits an invertible complex link as
  Z = sqrt(c) * W * U with W Hermitian positive-definite and U unitary
  (det U is a free phase, not fixed to one).
"""

from __future__ import annotations

import functools
from typing import NamedTuple

import numpy as np

# exp_algebra guarantees SU(n) output without reprojection up to this
# Frobenius norm of the scaled argument.
EXP_NORM_LIMIT = 10.0

# reunitarize refuses inputs farther than this from the unitary manifold.
DRIFT_LIMIT = 1.0e-6

# polar_decompose refuses matrices with s_min <= RCOND * s_max.
RCOND = 1.0e-10


class DecompositionError(ValueError):
    """Polar decomposition hit a (near-)singular matrix."""

    def __init__(self, message, singular_value=None):
        super().__init__(message)
        self.singular_value = singular_value


class DriftError(RuntimeError):
    """A group-valued link drifted too far off the unitary manifold."""


class NormOverflowError(ValueError):
    """Matrix exponential argument outside the validated norm range."""


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose on the last two axes."""
    return np.conjugate(np.swapaxes(m, -1, -2))


def frobenius_norm(m: np.ndarray) -> np.ndarray:
    """Frobenius norm per matrix in a stack."""
    return np.sqrt(np.sum(np.real(m) ** 2 + np.imag(m) ** 2, axis=(-2, -1)))


def proj_algebra(m: np.ndarray) -> np.ndarray:
    """Traceless anti-Hermitian part of a matrix stack.

    This is the orthogonal projection onto su(n) under the real inner
    product Re Tr(X Y^dag); it turns raw derivatives of the action into
    valid momentum kicks.
    """
    ah = 0.5 * (m - dagger(m))
    n = m.shape[-1]
    tr = np.trace(ah, axis1=-2, axis2=-1)[..., None, None] / n
    return ah - tr * np.eye(n)


@functools.lru_cache(maxsize=None)
def su_basis(n: int) -> np.ndarray:
    """Orthonormal anti-Hermitian traceless basis of su(n).

    Layout: for each column offset k = 1..n-1 the symmetric then the
    antisymmetric off-diagonal pair generators, followed by the n-1
    diagonal generators.  Normalized to Tr(T_a T_b^dag) = delta_ab.
    """
    if n < 2:
        raise ValueError("su(n) basis needs n >= 2")
    herm = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for k in range(1, n):
        for j in range(n - k):
            h = np.zeros((n, n), dtype=complex)
            h[j, j + k] = inv_sqrt2
            h[j + k, j] = inv_sqrt2
            herm.append(h)
        for j in range(n - k):
            h = np.zeros((n, n), dtype=complex)
            h[j, j + k] = 1j * inv_sqrt2
            h[j + k, j] = -1j * inv_sqrt2
            herm.append(h)
    for k in range(1, n):
        h = np.zeros((n, n), dtype=complex)
        norm = 1.0 / np.sqrt(k * k + k)
        for j in range(k):
            h[j, j] = norm
        h[k, k] = -k * norm
        herm.append(h)
    basis = 1j * np.stack(herm)
    basis.setflags(write=False)
    return basis


def random_algebra(rng: np.random.Generator, n: int, size=None) -> np.ndarray:
    """Gaussian su(n) element(s): X = sum_a p_a T_a with p_a ~ N(0, 1).

    ``size=None`` returns one (n, n) matrix; otherwise an array of shape
    ``size + (n, n)``.  The kinetic-energy convention is
    K = (1/2) sum_a p_a^2 per element.
    """
    if n < 2:
        raise ValueError("n >= 2 required")
    shape = (n * n - 1,) if size is None else tuple(size) + (n * n - 1,)
    coeffs = rng.standard_normal(shape)
    return np.einsum("...a,aij->...ij", coeffs, su_basis(n))


def algebra_coefficients(x: np.ndarray) -> np.ndarray:
    """Expansion coefficients p_a of X = sum_a p_a T_a (real for X in su(n))."""
    n = x.shape[-1]
    return np.real(np.einsum("...ij,aji->...a", x, dagger(su_basis(n))))


def exp_algebra(x: np.ndarray, s: float = 1.0) -> np.ndarray:
    """exp(s X) for anti-Hermitian traceless X, by scaling and squaring.

    The scaled argument is reduced below norm 1/4 and exponentiated with
    a Taylor core, then squared back up.  For Frobenius norms of s X up
    to EXP_NORM_LIMIT the result is special unitary to ~1e-13 without any
    reprojection; larger arguments raise instead of silently drifting.
    """
    y = np.asarray(x, dtype=complex) * s
    if not np.all(np.isfinite(y)):
        raise NormOverflowError("non-finite matrix exponential argument")
    norms = frobenius_norm(y)
    max_norm = float(norms.max()) if norms.size else 0.0
    if max_norm > EXP_NORM_LIMIT:
        raise NormOverflowError(
            f"matrix exponential argument norm {max_norm:.3g} exceeds "
            f"supported range {EXP_NORM_LIMIT}"
        )
    n = y.shape[-1]
    squarings = 0
    if max_norm > 0.25:
        squarings = int(np.ceil(np.log2(max_norm / 0.25)))
        y = y / (2.0**squarings)
    eye = np.broadcast_to(np.eye(n, dtype=complex), y.shape)
    result = eye.copy()
    term = eye.copy()
    for k in range(1, 30):
        term = term @ y / k
        result = result + term
        if float(np.abs(term).max()) < 1e-17:
            break
    for _ in range(squarings):
        result = result @ result
    return result


class PolarPair(NamedTuple):
    """Factors of Z = sqrt(c) * w * u: w Hermitian positive, u unitary."""

    w: np.ndarray
    u: np.ndarray


def _jacobi_eigh(h: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60):
    """Eigendecomposition of stacked Hermitian matrices by cyclic Jacobi.

    Returns (eigenvalues ascending, eigenvectors as columns).  One sweep
    rotates every (p, q) pair once; for 2x2 a single rotation is exact,
    for larger n convergence is quadratic.  The off-diagonal is driven
    below ``tol`` relative to the largest input entry.
    """
    a = np.array(h, dtype=complex)
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape(-1, n, n)
    m = a.shape[0]
    v = np.tile(np.eye(n, dtype=complex), (m, 1, 1))
    scale = float(np.abs(a).max()) if a.size else 0.0
    threshold = tol * max(scale, np.finfo(float).tiny)

    off_pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    for _ in range(max_sweeps):
        off = max(float(np.abs(a[:, p, q]).max()) for p, q in off_pairs)
        if off <= threshold:
            break
        for p, q in off_pairs:
            apq = a[:, p, q]
            absb = np.abs(apq)
            active = absb > threshold * 1e-3
            if not active.any():
                continue
            safe = np.where(absb > 0, absb, 1.0)
            phase = np.where(absb > 0, apq / safe, 1.0 + 0j)
            tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
            t = -np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(tau == 0, 1.0, t)  # sign(0) = 0; either unit root works
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = (t * c).astype(complex) * np.conj(phase)
            cc = c.astype(complex)
            # columns: new_p = c*col_p + s*col_q ; new_q = -conj(s)*col_p + c*col_q
            # with G[p,p]=c, G[q,p]=s, G[p,q]=-conj(s), G[q,q]=c (det G = 1)
            col_p = a[:, :, p].copy()
            col_q = a[:, :, q].copy()
            a[:, :, p] = cc[:, None] * col_p + s[:, None] * col_q
            a[:, :, q] = -np.conj(s)[:, None] * col_p + cc[:, None] * col_q
            row_p = a[:, p, :].copy()
            row_q = a[:, q, :].copy()
            a[:, p, :] = cc[:, None] * row_p + np.conj(s)[:, None] * row_q
            a[:, q, :] = -s[:, None] * row_p + cc[:, None] * row_q
            vol_p = v[:, :, p].copy()
            vol_q = v[:, :, q].copy()
            v[:, :, p] = cc[:, None] * vol_p + s[:, None] * vol_q
            v[:, :, q] = -np.conj(s)[:, None] * vol_p + cc[:, None] * vol_q
    else:
        raise RuntimeError("Jacobi eigensolver did not converge")

    vals = np.real(np.diagonal(a, axis1=-2, axis2=-1)).copy()
    order = np.argsort(vals, axis=-1)
    vals = np.take_along_axis(vals, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return vals.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))


def polar_decompose(z: np.ndarray, c: float) -> PolarPair:
    """Split Z = sqrt(c) * W * U with W = sqrt(Z Zbar / c) and U unitary.

    W comes from the Hermitian eigendecomposition of Z Zbar (Zbar being
    the conjugate transpose); U = W^{-1} Z / sqrt(c) is then unitary with
    a free determinant phase.  Near-singular input (smallest singular
    value below RCOND times the largest) raises DecompositionError.
    """
    if c <= 0:
        raise ValueError("scale c must be positive")
    z = np.asarray(z, dtype=complex)
    h = z @ dagger(z)
    vals, vecs = _jacobi_eigh(h)
    sv = np.sqrt(np.clip(vals, 0.0, None))
    sv_max = sv[..., -1]
    bad = sv[..., 0] <= RCOND * sv_max
    if np.any(bad):
        worst = float(np.min(sv[..., 0]))
        raise DecompositionError(
            f"near-singular link: smallest singular value {worst:.3e}",
            singular_value=worst,
        )
    vecs_h = dagger(vecs)
    w = (vecs * (sv / np.sqrt(c))[..., None, :]) @ vecs_h
    w = 0.5 * (w + dagger(w))
    u = ((vecs * (1.0 / sv)[..., None, :]) @ vecs_h) @ z
    return PolarPair(w=w, u=u)


def determinant(z: np.ndarray) -> np.ndarray:
    """Determinant of a matrix stack (closed form for n = 2, 3)."""
    z = np.asarray(z)
    n = z.shape[-1]
    if n == 1:
        return z[..., 0, 0]
    if n == 2:
        return z[..., 0, 0] * z[..., 1, 1] - z[..., 0, 1] * z[..., 1, 0]
    if n == 3:
        a, b, c = z[..., 0, 0], z[..., 0, 1], z[..., 0, 2]
        d, e, f = z[..., 1, 0], z[..., 1, 1], z[..., 1, 2]
        g, h, i = z[..., 2, 0], z[..., 2, 1], z[..., 2, 2]
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return np.linalg.det(z)


def adjugate(z: np.ndarray) -> np.ndarray:
    """Adjugate matrix: Z adj(Z) = det(Z) * 1, valid for singular Z too.

    Closed form for n = 2 (swap/negate) and n = 3 (cofactors); larger n
    falls back to explicit minors.
    """
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    if n == 1:
        return np.ones_like(z)
    if n == 2:
        out = np.empty_like(z)
        out[..., 0, 0] = z[..., 1, 1]
        out[..., 0, 1] = -z[..., 0, 1]
        out[..., 1, 0] = -z[..., 1, 0]
        out[..., 1, 1] = z[..., 0, 0]
        return out
    if n == 3:
        a, b, c = z[..., 0, 0], z[..., 0, 1], z[..., 0, 2]
        d, e, f = z[..., 1, 0], z[..., 1, 1], z[..., 1, 2]
        g, h, i = z[..., 2, 0], z[..., 2, 1], z[..., 2, 2]
        out = np.empty_like(z)
        out[..., 0, 0] = e * i - f * h
        out[..., 0, 1] = c * h - b * i
        out[..., 0, 2] = b * f - c * e
        out[..., 1, 0] = f * g - d * i
        out[..., 1, 1] = a * i - c * g
        out[..., 1, 2] = c * d - a * f
        out[..., 2, 0] = d * h - e * g
        out[..., 2, 1] = b * g - a * h
        out[..., 2, 2] = a * e - b * d
        return out
    out = np.empty_like(z)
    rows = np.arange(n)
    for i in range(n):
        for j in range(n):
            minor = z[..., rows[rows != j], :][..., :, rows[rows != i]]
            out[..., i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return out


def reunitarize(u: np.ndarray) -> np.ndarray:
    """Project a slightly drifted matrix stack back onto SU(n).

    Polar projection onto U(n) followed by division by the principal
    det^{1/n} phase.  Idempotent to ~1e-14.  Inputs farther than
    DRIFT_LIMIT from the unitary manifold raise DriftError -- that
    signals an integrator bug, not rounding drift.
    """
    u = np.asarray(u, dtype=complex)
    defect = np.abs(u @ dagger(u) - np.eye(u.shape[-1])).max()
    if not np.isfinite(defect) or defect > DRIFT_LIMIT:
        raise DriftError(
            f"link drifted {float(defect):.3e} from the unitary manifold "
            f"(limit {DRIFT_LIMIT})"
        )
    h = u @ dagger(u)
    vals, vecs = _jacobi_eigh(h)
    inv_sqrt = 1.0 / np.sqrt(np.clip(vals, np.finfo(float).tiny, None))
    unit = ((vecs * inv_sqrt[..., None, :]) @ dagger(vecs)) @ u
    det = determinant(unit)
    n = u.shape[-1]
    # drift is infinitesimal, so the principal branch is unambiguous
    root = np.abs(det) ** (1.0 / n) * np.exp(1j * np.angle(det) / n)
    return unit / root[..., None, None]


def random_special_unitary(rng: np.random.Generator, n: int, size=None) -> np.ndarray:
    """Haar-random SU(n) matrices (QR of a Ginibre matrix, phases fixed)."""
    shape = (n, n) if size is None else tuple(size) + (n, n)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    q = q * np.conj(phases)[..., None, :]
    det = determinant(q)
    root = np.exp(1j * np.angle(det) / n)
    return q / root[..., None, None]
