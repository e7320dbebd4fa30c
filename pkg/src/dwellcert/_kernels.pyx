# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense kernels: expm (Padé 13), Jacobi eigensolver, Cholesky
test and real eigenvalue moduli via Hessenberg + Francis QR.

Same algorithms and stopping rules as ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, ceil, log2, copysign

cnp.import_array()

cdef double[14] B13 = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0]
cdef double THETA13 = 5.371920351148152
cdef int JACOBI_MAX_SWEEPS = 100
cdef int HQR_MAX_ITS = 60


class ConvergenceError(ArithmeticError):
    pass


cdef void _matmul(double[:, ::1] a, double[:, ::1] b, double[:, ::1] out, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += a[i, k] * b[k, j]
            out[i, j] = s


cdef int _lu_solve_inplace(double[:, ::1] a, double[:, ::1] x, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j, k, p
    cdef double f, tmp, best
    for k in range(n):
        p = k
        best = fabs(a[k, k])
        for i in range(k + 1, n):
            if fabs(a[i, k]) > best:
                best = fabs(a[i, k])
                p = i
        if best == 0.0:
            return -1
        if p != k:
            for j in range(n):
                tmp = a[k, j]; a[k, j] = a[p, j]; a[p, j] = tmp
                tmp = x[k, j]; x[k, j] = x[p, j]; x[p, j] = tmp
        for i in range(k + 1, n):
            f = a[i, k] / a[k, k]
            if f != 0.0:
                for j in range(k, n):
                    a[i, j] -= f * a[k, j]
                for j in range(n):
                    x[i, j] -= f * x[k, j]
    for k in range(n - 1, -1, -1):
        for j in range(n):
            tmp = x[k, j]
            for i in range(k + 1, n):
                tmp -= a[k, i] * x[i, j]
            x[k, j] = tmp / a[k, k]
    return 0


def expm(m, double t):
    cdef double[:, ::1] a = np.ascontiguousarray(m, dtype=np.float64) * t
    cdef Py_ssize_t n = a.shape[0], i, j
    cdef double nrm = 0.0, col, scale
    cdef int s = 0, it
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += fabs(a[i, j])
        if col > nrm:
            nrm = col
    if nrm > THETA13:
        s = <int>ceil(log2(nrm / THETA13))
        if s < 0:
            s = 0
        scale = 2.0 ** (-s)
        for i in range(n):
            for j in range(n):
                a[i, j] *= scale
    cdef double[:, ::1] a2 = np.empty((n, n))
    cdef double[:, ::1] a4 = np.empty((n, n))
    cdef double[:, ::1] a6 = np.empty((n, n))
    cdef double[:, ::1] w1 = np.empty((n, n))
    cdef double[:, ::1] w2 = np.empty((n, n))
    cdef double[:, ::1] u = np.empty((n, n))
    cdef double[:, ::1] v = np.empty((n, n))
    cdef double[:, ::1] p = np.empty((n, n))
    cdef double[:, ::1] q = np.empty((n, n))
    cdef double eye
    _matmul(a, a, a2, n)
    _matmul(a2, a2, a4, n)
    _matmul(a4, a2, a6, n)
    for i in range(n):
        for j in range(n):
            w1[i, j] = B13[13] * a6[i, j] + B13[11] * a4[i, j] + B13[9] * a2[i, j]
            w2[i, j] = B13[12] * a6[i, j] + B13[10] * a4[i, j] + B13[8] * a2[i, j]
    _matmul(a6, w1, u, n)
    _matmul(a6, w2, v, n)
    for i in range(n):
        for j in range(n):
            eye = 1.0 if i == j else 0.0
            u[i, j] += B13[7] * a6[i, j] + B13[5] * a4[i, j] + B13[3] * a2[i, j] + B13[1] * eye
            v[i, j] += B13[6] * a6[i, j] + B13[4] * a4[i, j] + B13[2] * a2[i, j] + B13[0] * eye
    _matmul(a, u, w1, n)
    for i in range(n):
        for j in range(n):
            p[i, j] = v[i, j] - w1[i, j]
            q[i, j] = v[i, j] + w1[i, j]
    if _lu_solve_inplace(p, q, n) != 0:
        raise np.linalg.LinAlgError("singular Padé denominator")
    for it in range(s):
        _matmul(q, q, w1, n)
        q[:, :] = w1
    return np.asarray(q)


def jacobi_eig(s, bint want_vectors=False):
    cdef double[:, ::1] a = np.array(s, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a.shape[0], p, q, k
    cdef double[:, ::1] v = np.eye(n)
    cdef double scale = 0.0, off, apq, theta, t, c, sn, x, y
    cdef int sweep
    cdef bint done = False
    for p in range(n):
        for q in range(n):
            if fabs(a[p, q]) > scale:
                scale = fabs(a[p, q])
    if scale < 1e-300:
        scale = 1e-300
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if sqrt(off) <= 1e-15 * scale:
            done = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                sn = t * c
                for k in range(n):
                    x = a[k, p]; y = a[k, q]
                    a[k, p] = c * x - sn * y
                    a[k, q] = sn * x + c * y
                for k in range(n):
                    x = a[p, k]; y = a[q, k]
                    a[p, k] = c * x - sn * y
                    a[q, k] = sn * x + c * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    x = v[k, p]; y = v[k, q]
                    v[k, p] = c * x - sn * y
                    v[k, q] = sn * x + c * y
    if not done:
        raise ConvergenceError("Jacobi sweeps did not converge")
    w = np.array([a[k, k] for k in range(n)])
    order = np.argsort(w, kind="stable")
    if want_vectors:
        return w[order], np.asarray(v)[:, order]
    return w[order]


def cholesky_ok(s, double shift):
    cdef double[:, ::1] a = np.array(s, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a.shape[0], i, j, k
    cdef double[:, ::1] low = np.zeros((n, n))
    cdef double d, acc
    for j in range(n):
        d = a[j, j] - shift
        for k in range(j):
            d -= low[j, k] * low[j, k]
        if not d > 0.0:
            return False
        low[j, j] = sqrt(d)
        for i in range(j + 1, n):
            acc = a[i, j]
            for k in range(j):
                acc -= low[i, k] * low[j, k]
            low[i, j] = acc / low[j, j]
    return True


cdef void _eig2(double a, double b, double c, double d, double* m1, double* m2) nogil:
    cdef double tr = a + d, det = a * d - b * c
    cdef double disc = 0.25 * tr * tr - det, r
    if disc >= 0.0:
        r = sqrt(disc)
        m1[0] = fabs(0.5 * tr + r)
        m2[0] = fabs(0.5 * tr - r)
    else:
        r = sqrt(det) if det > 0.0 else 0.0
        m1[0] = r
        m2[0] = r


cdef void _hessenberg(double[:, ::1] h, Py_ssize_t n):
    cdef Py_ssize_t k, i, j
    cdef double alpha, vn, dot
    cdef double[::1] x = np.empty(n)
    for k in range(n - 2):
        alpha = 0.0
        for i in range(k + 1, n):
            x[i] = h[i, k]
            alpha += x[i] * x[i]
        alpha = sqrt(alpha)
        if alpha == 0.0:
            continue
        if x[k + 1] > 0:
            alpha = -alpha
        x[k + 1] -= alpha
        vn = 0.0
        for i in range(k + 1, n):
            vn += x[i] * x[i]
        vn = sqrt(vn)
        if vn == 0.0:
            continue
        for i in range(k + 1, n):
            x[i] /= vn
        for j in range(n):
            dot = 0.0
            for i in range(k + 1, n):
                dot += x[i] * h[i, j]
            for i in range(k + 1, n):
                h[i, j] -= 2.0 * x[i] * dot
        for i in range(n):
            dot = 0.0
            for j in range(k + 1, n):
                dot += h[i, j] * x[j]
            for j in range(k + 1, n):
                h[i, j] -= 2.0 * dot * x[j]
        for i in range(k + 2, n):
            h[i, k] = 0.0


def eig_moduli(m):
    cdef double[:, ::1] a = np.array(m, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a.shape[0]
    cdef double m1, m2
    if n == 1:
        return [fabs(a[0, 0])]
    if n == 2:
        _eig2(a[0, 0], a[0, 1], a[1, 0], a[1, 1], &m1, &m2)
        return [m1, m2]
    _hessenberg(a, n)
    out = []
    cdef double anorm = 0.0, t = 0.0, s, x, y, w, z, r, p, q, u, v
    cdef Py_ssize_t i, j, k, l, mm, mmin, nn = n - 1
    cdef int its
    for i in range(n):
        for j in range(n):
            anorm += fabs(a[i, j])
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = fabs(a[l - 1, l - 1]) + fabs(a[l, l])
                if s == 0.0:
                    s = anorm
                if fabs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                out.append(fabs(x + t))
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                _eig2(a[nn - 1, nn - 1] + t, a[nn - 1, nn], a[nn, nn - 1], a[nn, nn] + t, &m1, &m2)
                out.append(m1)
                out.append(m2)
                nn -= 2
                break
            if its == HQR_MAX_ITS:
                raise ConvergenceError("shifted QR did not converge")
            if its == 10 or its == 20:
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = fabs(a[nn, nn - 1]) + fabs(a[nn - 1, nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            mm = nn - 2
            while mm >= l:
                z = a[mm, mm]
                r = x - z
                s = y - z
                p = (r * s - w) / a[mm + 1, mm] + a[mm, mm + 1]
                q = a[mm + 1, mm + 1] - z - r - s
                r = a[mm + 2, mm + 1]
                s = fabs(p) + fabs(q) + fabs(r)
                p /= s
                q /= s
                r /= s
                if mm == l:
                    break
                u = fabs(a[mm, mm - 1]) * (fabs(q) + fabs(r))
                v = fabs(p) * (fabs(a[mm - 1, mm - 1]) + fabs(z) + fabs(a[mm + 1, mm + 1]))
                if u + v == v:
                    break
                mm -= 1
            for i in range(mm + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != mm + 2:
                    a[i, i - 3] = 0.0
            k = mm
            while k <= nn - 1:
                if k != mm:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = fabs(p) + fabs(q) + fabs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = copysign(sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == mm:
                        if l != mm:
                            a[k, k - 1] = -a[k, k - 1]
                    else:
                        a[k, k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(k, nn + 1):
                        p = a[k, j] + q * a[k + 1, j]
                        if k != nn - 1:
                            p += r * a[k + 2, j]
                            a[k + 2, j] -= p * z
                        a[k + 1, j] -= p * y
                        a[k, j] -= p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * a[i, k] + y * a[i, k + 1]
                        if k != nn - 1:
                            p += z * a[i, k + 2]
                            a[i, k + 2] -= p * r
                        a[i, k + 1] -= p * q
                        a[i, k] -= p
                k += 1
    return out
