"""Compiled smoother kernels: in-place Gauss-Seidel passes of the local
3x3 Cramer solves, lexicographic or red-black.

The arithmetic mirrors pfc3d.kernels.pure expression by expression (and the
extension is built with FP contraction off) so both backends produce
identical floating-point results.
"""

from libc.math cimport fabs

from cython.parallel cimport prange

from pfc3d.kernels.exceptions import SingularLocalSystemError

cdef double DET_TINY = 1e-300


cdef inline Py_ssize_t _wu(Py_ssize_t i, Py_ssize_t m) noexcept nogil:
    return i + 1 if i + 1 < m else 0


cdef inline Py_ssize_t _wd(Py_ssize_t i, Py_ssize_t m) noexcept nogil:
    return i - 1 if i > 0 else m - 1


cdef inline int _cell(double* phi, double* mu, double* om,
                      const double* s1, const double* s2, const double* s3,
                      const double* phik,
                      const double* mx, const double* my, const double* mz,
                      double tf, double h2, double hc2, double lin,
                      double d, double e, int cubic_mode,
                      Py_ssize_t m, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t ip = _wu(i, m), im = _wd(i, m)
    cdef Py_ssize_t jp = _wu(j, m), jm = _wd(j, m)
    cdef Py_ssize_t kp = _wu(k, m), km = _wd(k, m)
    cdef Py_ssize_t m2 = m * m
    cdef Py_ssize_t o = i * m2 + j * m + k
    cdef Py_ssize_t oE = ip * m2 + j * m + k
    cdef Py_ssize_t oW = im * m2 + j * m + k
    cdef Py_ssize_t oN = i * m2 + jp * m + k
    cdef Py_ssize_t oS = i * m2 + jm * m + k
    cdef Py_ssize_t oU = i * m2 + j * m + kp
    cdef Py_ssize_t oD = i * m2 + j * m + km

    cdef double mxe = mx[o]
    cdef double mxw = mx[oW]
    cdef double myn = my[o]
    cdef double mys = my[oS]
    cdef double mzu = mz[o]
    cdef double mzd = mz[oD]
    cdef double a = tf * (mxe + mxw + myn + mys + mzu + mzd)
    cdef double b1 = s1[o] + tf * (
        mxe * mu[oE] + mxw * mu[oW]
        + myn * mu[oN] + mys * mu[oS]
        + mzu * mu[oU] + mzd * mu[oD]
    )
    cdef double pn = phi[o]
    cdef double omnb = (om[oE] + om[oW] + om[oN] + om[oS] + om[oU] + om[oD])
    cdef double pk, cc, b2
    if cubic_mode == 0:
        pk = phik[o]
        cc = 0.25 * (pn * pn + pk * pk)
        b2 = s2[o] + cc * pk + omnb / h2
    else:
        cc = pn * pn
        b2 = s2[o] + omnb / h2
    cdef double phnb = (phi[oE] + phi[oW] + phi[oN] + phi[oS] + phi[oU] + phi[oD])
    cdef double b3 = s3[o] + hc2 * phnb
    cdef double c = cc + lin
    cdef double det = 1.0 + a * c + a * d * e
    if fabs(det) < DET_TINY:
        return 1
    phi[o] = (b1 - a * b2 + a * d * b3) / det
    mu[o] = (b2 - d * b3 + c * b1 + d * e * b1) / det
    om[o] = (b3 + a * c * b3 + a * e * b2 - e * b1) / det
    return 0


def sweep(double[:, :, ::1] phi, double[:, :, ::1] mu, double[:, :, ::1] om,
          const double[:, :, ::1] s1, const double[:, :, ::1] s2,
          const double[:, :, ::1] s3, const double[:, :, ::1] phik,
          const double[:, :, ::1] mx, const double[:, :, ::1] my,
          const double[:, :, ::1] mz,
          double tau, double h2, double lin, double halfc, int cubic_mode,
          int color, int threads=1):
    """One in-place smoother pass; color=-1 lexicographic, 0/1 red-black half."""
    cdef Py_ssize_t m = phi.shape[0]
    cdef double tf = tau / h2
    cdef double hc2 = halfc / h2
    cdef double d = 6.0 / h2
    cdef double e = 6.0 * halfc / h2
    cdef double* pphi = &phi[0, 0, 0]
    cdef double* pmu = &mu[0, 0, 0]
    cdef double* pom = &om[0, 0, 0]
    cdef const double* ps1 = &s1[0, 0, 0]
    cdef const double* ps2 = &s2[0, 0, 0]
    cdef const double* ps3 = &s3[0, 0, 0]
    cdef const double* ppk = &phik[0, 0, 0]
    cdef const double* pmx = &mx[0, 0, 0]
    cdef const double* pmy = &my[0, 0, 0]
    cdef const double* pmz = &mz[0, 0, 0]
    cdef Py_ssize_t i, j, k, kstart
    cdef int bad = 0
    cdef Py_ssize_t bi = -1, bj = -1, bk = -1

    if color < 0:
        with nogil:
            for i in range(m):
                for j in range(m):
                    for k in range(m):
                        if _cell(pphi, pmu, pom, ps1, ps2, ps3, ppk,
                                 pmx, pmy, pmz, tf, h2, hc2, lin, d, e,
                                 cubic_mode, m, i, j, k):
                            bad = 1
                            bi = i
                            bj = j
                            bk = k
                            break
                    if bad:
                        break
                if bad:
                    break
    else:
        if m % 2:
            raise ValueError("red-black sweeps require even m")
        # Cells of one color only read opposite-color neighbors, so rows can
        # update in parallel; the result is identical for any thread count.
        if threads > 1:
            for i in prange(m, nogil=True, schedule="static", num_threads=threads):
                for j in range(m):
                    kstart = (i + j + color) % 2
                    for k in range(kstart, m, 2):
                        bad += _cell(pphi, pmu, pom, ps1, ps2, ps3, ppk,
                                     pmx, pmy, pmz, tf, h2, hc2, lin, d, e,
                                     cubic_mode, m, i, j, k)
        else:
            with nogil:
                for i in range(m):
                    for j in range(m):
                        kstart = (i + j + color) % 2
                        for k in range(kstart, m, 2):
                            if _cell(pphi, pmu, pom, ps1, ps2, ps3, ppk,
                                     pmx, pmy, pmz, tf, h2, hc2, lin, d, e,
                                     cubic_mode, m, i, j, k):
                                bad = 1
                                bi = i
                                bj = j
                                bk = k
                                break
                        if bad:
                            break
                    if bad:
                        break
    if bad:
        ijk = (bi, bj, bk) if bi >= 0 else None
        raise SingularLocalSystemError(ijk, 0.0)
