"""Pure-Python/NumPy smoother kernels (fallback for the compiled core).

`sweep` performs one in-place Gauss-Seidel pass of the pointwise 3x3 local
solves.  Lexicographic order (color=-1) is a plain triple loop: correct at
any size, but only meant for small grids and as a bit-level reference.
Red-black half-sweeps (color=0/1) vectorize exactly, because all neighbors of
a cell have the opposite color; this is the production path without the
compiled extension.

The arithmetic here mirrors `_core.pyx` expression by expression so both
backends produce identical floating-point results.
"""

from __future__ import annotations

import numpy as np

from .exceptions import SingularLocalSystemError

DET_TINY = 1e-300

_parity_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _parity_masks(m: int):
    masks = _parity_cache.get(m)
    if masks is None:
        ii, jj, kk = np.indices((m, m, m))
        par = (ii + jj + kk) % 2
        masks = (par == 0, par == 1)
        _parity_cache[m] = masks
    return masks


def solve_local(a, c, d, e, b1, b2, b3):
    """Cramer's rule for the local system [[1,a,0],[-c,1,d],[e,0,1]] u = b."""
    det = 1.0 + a * c + a * d * e
    if abs(det) < DET_TINY:
        raise SingularLocalSystemError(None, det)
    phi = (b1 - a * b2 + a * d * b3) / det
    mu = (b2 - d * b3 + c * b1 + d * e * b1) / det
    om = (b3 + a * c * b3 + a * e * b2 - e * b1) / det
    return phi, mu, om


def sweep(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
          tau, h2, lin, halfc, cubic_mode, color, threads=1):
    """One in-place smoother pass; color=-1 lexicographic, 0/1 red-black half."""
    if color < 0:
        _sweep_lex(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
                   tau, h2, lin, halfc, cubic_mode)
    else:
        _sweep_color(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
                     tau, h2, lin, halfc, cubic_mode, color)


def _sweep_lex(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
               tau, h2, lin, halfc, cubic_mode):
    m = phi.shape[0]
    tf = tau / h2
    hc2 = halfc / h2
    d = 6.0 / h2
    e = 6.0 * halfc / h2
    for i in range(m):
        ip = i + 1 if i + 1 < m else 0
        im = i - 1 if i > 0 else m - 1
        for j in range(m):
            jp = j + 1 if j + 1 < m else 0
            jm = j - 1 if j > 0 else m - 1
            for k in range(m):
                kp = k + 1 if k + 1 < m else 0
                km = k - 1 if k > 0 else m - 1
                mxe = mx[i, j, k]
                mxw = mx[im, j, k]
                myn = my[i, j, k]
                mys = my[i, jm, k]
                mzu = mz[i, j, k]
                mzd = mz[i, j, km]
                a = tf * (mxe + mxw + myn + mys + mzu + mzd)
                b1 = s1[i, j, k] + tf * (
                    mxe * mu[ip, j, k] + mxw * mu[im, j, k]
                    + myn * mu[i, jp, k] + mys * mu[i, jm, k]
                    + mzu * mu[i, j, kp] + mzd * mu[i, j, km]
                )
                pn = phi[i, j, k]
                omnb = (om[ip, j, k] + om[im, j, k] + om[i, jp, k]
                        + om[i, jm, k] + om[i, j, kp] + om[i, j, km])
                if cubic_mode == 0:
                    pk = phik[i, j, k]
                    cc = 0.25 * (pn * pn + pk * pk)
                    b2 = s2[i, j, k] + cc * pk + omnb / h2
                else:
                    cc = pn * pn
                    b2 = s2[i, j, k] + omnb / h2
                phnb = (phi[ip, j, k] + phi[im, j, k] + phi[i, jp, k]
                        + phi[i, jm, k] + phi[i, j, kp] + phi[i, j, km])
                b3 = s3[i, j, k] + hc2 * phnb
                c = cc + lin
                det = 1.0 + a * c + a * d * e
                if abs(det) < DET_TINY:
                    raise SingularLocalSystemError((i, j, k), det)
                phi[i, j, k] = (b1 - a * b2 + a * d * b3) / det
                mu[i, j, k] = (b2 - d * b3 + c * b1 + d * e * b1) / det
                om[i, j, k] = (b3 + a * c * b3 + a * e * b2 - e * b1) / det


def _sweep_color(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
                 tau, h2, lin, halfc, cubic_mode, color):
    m = phi.shape[0]
    if m % 2:
        raise ValueError("red-black sweeps require even m")
    tf = tau / h2
    hc2 = halfc / h2
    d = 6.0 / h2
    e = 6.0 * halfc / h2

    mxe = mx
    mxw = np.roll(mx, 1, 0)
    myn = my
    mys = np.roll(my, 1, 1)
    mzu = mz
    mzd = np.roll(mz, 1, 2)
    a = tf * (mxe + mxw + myn + mys + mzu + mzd)
    b1 = s1 + tf * (
        mxe * np.roll(mu, -1, 0) + mxw * np.roll(mu, 1, 0)
        + myn * np.roll(mu, -1, 1) + mys * np.roll(mu, 1, 1)
        + mzu * np.roll(mu, -1, 2) + mzd * np.roll(mu, 1, 2)
    )
    pn = phi
    omnb = (np.roll(om, -1, 0) + np.roll(om, 1, 0) + np.roll(om, -1, 1)
            + np.roll(om, 1, 1) + np.roll(om, -1, 2) + np.roll(om, 1, 2))
    if cubic_mode == 0:
        cc = 0.25 * (pn * pn + phik * phik)
        b2 = s2 + cc * phik + omnb / h2
    else:
        cc = pn * pn
        b2 = s2 + omnb / h2
    phnb = (np.roll(phi, -1, 0) + np.roll(phi, 1, 0) + np.roll(phi, -1, 1)
            + np.roll(phi, 1, 1) + np.roll(phi, -1, 2) + np.roll(phi, 1, 2))
    b3 = s3 + hc2 * phnb
    c = cc + lin
    det = 1.0 + a * c + a * d * e

    mask = _parity_masks(m)[color]
    bad = (np.abs(det) < DET_TINY) & mask
    if bad.any():
        ijk = tuple(int(c) for c in np.argwhere(bad)[0])
        raise SingularLocalSystemError(ijk, float(det[ijk]))
    phi_new = (b1 - a * b2 + a * d * b3) / det
    mu_new = (b2 - d * b3 + c * b1 + d * e * b1) / det
    om_new = (b3 + a * c * b3 + a * e * b2 - e * b1) / det
    phi[mask] = phi_new[mask]
    mu[mask] = mu_new[mask]
    om[mask] = om_new[mask]
