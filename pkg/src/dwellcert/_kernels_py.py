"""Pure-Python implementations of the dense kernels.

Mirrors ``_kernels.pyx`` routine for routine; used when the compiled
extension is not available.
"""
import math

import numpy as np

# Padé [13/13] numerator coefficients for exp, Higham (2005).
PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
THETA13 = 5.371920351148152

JACOBI_MAX_SWEEPS = 100
HQR_MAX_ITS = 60


class ConvergenceError(ArithmeticError):
    pass


def _norm1(a):
    return float(np.max(np.sum(np.abs(a), axis=0))) if a.size else 0.0


def lu_solve(a, b):
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=float)
    x = np.array(b, dtype=float)
    n = a.shape[0]
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0.0:
            raise np.linalg.LinAlgError("singular matrix")
        if p != k:
            a[[k, p]] = a[[p, k]]
            x[[k, p]] = x[[p, k]]
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
        x[k + 1:] -= np.outer(f, x[k]) if x.ndim == 2 else f * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def expm(m, t):
    a = np.asarray(m, dtype=float) * t
    n = a.shape[0]
    nrm = _norm1(a)
    s = 0
    if nrm > THETA13:
        s = max(0, int(math.ceil(math.log2(nrm / THETA13))))
        a = a / 2.0 ** s
    b = PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    r = lu_solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def jacobi_eig(s, want_vectors=False):
    """Cyclic Jacobi sweep for a symmetric matrix; eigenvalues ascending."""
    a = np.array(s, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.max(np.abs(a))) if n else 0.0
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-15 * max(scale, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        raise ConvergenceError("Jacobi sweeps did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    if want_vectors:
        return w[order], v[:, order]
    return w[order]


def cholesky_ok(s, shift):
    """True iff ``s - shift*I`` admits a Cholesky factorisation."""
    a = np.array(s, dtype=float)
    n = a.shape[0]
    a[np.diag_indices(n)] -= shift
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - low[j, :j] @ low[j, :j]
        if not d > 0.0:
            return False
        low[j, j] = math.sqrt(d)
        low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return True


def hessenberg(m):
    """Reduce to upper Hessenberg form by Householder reflections."""
    h = np.array(m, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        x[0] -= alpha
        vn = np.linalg.norm(x)
        if vn == 0.0:
            continue
        x /= vn
        h[k + 1:, :] -= 2.0 * np.outer(x, x @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ x, x)
        h[k + 2:, k] = 0.0
    return h


def _eig2(a, b, c, d):
    tr = a + d
    det = a * d - b * c
    disc = 0.25 * tr * tr - det
    if disc >= 0.0:
        r = math.sqrt(disc)
        return abs(0.5 * tr + r), abs(0.5 * tr - r)
    mod = math.sqrt(max(det, 0.0))
    return mod, mod


def eig_moduli(m):
    """Moduli of the eigenvalues of a real square matrix.

    Closed form for n <= 2, otherwise Hessenberg reduction followed by
    Francis double-shift QR with deflation.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return [abs(m[0, 0])]
    if n == 2:
        return list(_eig2(m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
    a = hessenberg(m)
    out = []
    anorm = float(np.sum(np.abs(a)))
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                out.append(abs(x + t))
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                out.extend(_eig2(a[nn - 1, nn - 1] + t, a[nn - 1, nn],
                                 a[nn, nn - 1], a[nn, nn] + t))
                nn -= 2
                break
            if its == HQR_MAX_ITS:
                raise ConvergenceError("shifted QR did not converge")
            if its == 10 or its == 20:
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
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
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if mm == l:
                    break
                u = abs(a[mm, mm - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[mm - 1, mm - 1]) + abs(z) + abs(a[mm + 1, mm + 1]))
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
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
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
