"""Independent reference computations used as oracles in the test suite.

Everything here deliberately avoids the library's own stencil/solver code
paths: stencils are explicit Python loops over indices, reductions are plain
sums, and the step systems are solved by Picard iteration with the linear
part inverted exactly in Fourier space (valid for constant mobility).
"""

import numpy as np


def wrap(i, m):
    return i % m


def brute_face_difference(v, axis, h):
    m = v.shape[0]
    out = np.empty_like(v)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if axis == 0:
                    out[i, j, k] = (v[wrap(i + 1, m), j, k] - v[i, j, k]) / h
                elif axis == 1:
                    out[i, j, k] = (v[i, wrap(j + 1, m), k] - v[i, j, k]) / h
                else:
                    out[i, j, k] = (v[i, j, wrap(k + 1, m)] - v[i, j, k]) / h
    return out


def brute_cell_difference(g, axis, h):
    m = g.shape[0]
    out = np.empty_like(g)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if axis == 0:
                    out[i, j, k] = (g[i, j, k] - g[wrap(i - 1, m), j, k]) / h
                elif axis == 1:
                    out[i, j, k] = (g[i, j, k] - g[i, wrap(j - 1, m), k]) / h
                else:
                    out[i, j, k] = (g[i, j, k] - g[i, j, wrap(k - 1, m)]) / h
    return out


def brute_laplacian(v, h):
    m = v.shape[0]
    out = np.empty_like(v)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                s = (
                    v[wrap(i + 1, m), j, k]
                    + v[wrap(i - 1, m), j, k]
                    + v[i, wrap(j + 1, m), k]
                    + v[i, wrap(j - 1, m), k]
                    + v[i, j, wrap(k + 1, m)]
                    + v[i, j, wrap(k - 1, m)]
                    - 6.0 * v[i, j, k]
                )
                out[i, j, k] = s / (h * h)
    return out


def brute_energy(v, eps, L):
    """Term-by-term naive summation of the discrete free energy."""
    m = v.shape[0]
    h = L / m
    h3 = h**3
    quartic = 0.25 * h3 * sum(x**4 for x in v.flat)
    quad = 0.5 * (1.0 - eps) * h3 * sum(x**2 for x in v.flat)
    grad = 0.0
    for ax in range(3):
        d = brute_face_difference(v, ax, h)
        grad += h3 * sum(x * x for x in d.flat)
    lap = brute_laplacian(v, h)
    biharm = 0.5 * h3 * sum(x * x for x in lap.flat)
    return quartic + quad - grad + biharm


def laplacian_symbol(m, h):
    """Eigenvalues of the periodic 7-point Laplacian under the DFT."""
    lam1 = -(4.0 / h**2) * np.sin(np.pi * np.arange(m) / m) ** 2
    return (
        lam1[:, None, None] + lam1[None, :, None] + lam1[None, None, :]
    )


def residual_norm(r1, r2, r3, h):
    h3 = h**3
    s = float(np.sum(r1 * r1) + np.sum(r2 * r2) + np.sum(r3 * r3))
    return np.sqrt(h3 * s)


def solve_cn_step_fft(phik, phikm1, tau, eps, h, tol=1e-12, max_iter=500):
    """Picard iteration for the two-level step, M == 1.

    The cubic term is frozen at the current iterate and the remaining linear
    system is inverted exactly mode-by-mode in Fourier space -- a solution
    path entirely independent of the multigrid solver.
    """
    from pfc3d.grid import laplacian_values
    from pfc3d.scheme import cn_operator_arrays, cn_source_arrays

    m = phik.shape[0]
    lam = laplacian_symbol(m, h)
    s1, s2, s3 = cn_source_arrays(phik, phikm1, eps, h)
    s1h = np.fft.fftn(s1)
    s3h = np.fft.fftn(s3)
    lin = 0.5 * (1.0 - eps)
    denom = 1.0 - tau * lam * lin - 0.5 * tau * lam**3

    ones = np.ones_like(phik)
    phi = phik.copy()
    for _ in range(max_iter):
        cub = 0.25 * (phi + phik) * (phi * phi + phik * phik)
        rhs2h = np.fft.fftn(s2 + cub)
        phih = (s1h + tau * lam * (rhs2h + lam * s3h)) / denom
        omh = s3h + 0.5 * lam * phih
        muh = rhs2h + lin * phih + lam * omh
        phi = np.fft.ifftn(phih).real
        mu = np.fft.ifftn(muh).real
        om = np.fft.ifftn(omh).real
        n1, n2, n3 = cn_operator_arrays(
            phi, mu, om, phik, ones, ones, ones, tau, eps, h
        )
        if residual_norm(s1 - n1, s2 - n2, s3 - n3, h) <= tol:
            return phi, mu, om
    raise RuntimeError("Picard oracle did not converge")


def solve_fo_step_fft(phi0, tau, eps, h, tol=1e-12, max_iter=500):
    """Picard/Fourier oracle for the first-order bootstrap step, M == 1."""
    from pfc3d.scheme import fo_operator_arrays, fo_source_arrays

    m = phi0.shape[0]
    lam = laplacian_symbol(m, h)
    s1, s2, s3 = fo_source_arrays(phi0, eps, h)
    s1h = np.fft.fftn(s1)
    s3h = np.fft.fftn(s3)
    lin = 1.0 - eps
    denom = 1.0 - tau * lam * lin - tau * lam**3

    ones = np.ones_like(phi0)
    phi = phi0.copy()
    for _ in range(max_iter):
        cub = phi * phi * phi
        rhs2h = np.fft.fftn(s2 + cub)
        phih = (s1h + tau * lam * (rhs2h + lam * s3h)) / denom
        omh = s3h + lam * phih
        muh = rhs2h + lin * phih + lam * omh
        phi = np.fft.ifftn(phih).real
        mu = np.fft.ifftn(muh).real
        om = np.fft.ifftn(omh).real
        n1, n2, n3 = fo_operator_arrays(phi, mu, om, ones, ones, ones, tau, eps, h)
        if residual_norm(s1 - n1, s2 - n2, s3 - n3, h) <= tol:
            return phi, mu, om
    raise RuntimeError("Picard oracle did not converge")
