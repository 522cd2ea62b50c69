# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same signatures and semantics as ``_kernels_py``.

Must be built without -ffast-math: the double-double arithmetic relies on
exact IEEE rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, M_PI

cnp.import_array()

ctypedef struct dd:
    double hi
    double lo

ctypedef struct cdd:
    dd re
    dd im

cdef double _SPLIT = 134217729.0


cdef inline dd _two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double bb
    r.hi = a + b
    bb = r.hi - a
    r.lo = (a - (r.hi - bb)) + (b - bb)
    return r


cdef inline dd _quick_two_sum(double a, double b) noexcept nogil:
    cdef dd r
    r.hi = a + b
    r.lo = b - (r.hi - a)
    return r


cdef inline dd _two_prod(double a, double b) noexcept nogil:
    cdef dd r
    cdef double t, ah, al, bh, bl
    r.hi = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    r.lo = ((ah * bh - r.hi) + ah * bl + al * bh) + al * bl
    return r


cdef inline dd dd_add(dd a, dd b) noexcept nogil:
    cdef dd s = _two_sum(a.hi, b.hi)
    cdef dd t = _two_sum(a.lo, b.lo)
    s.lo += t.hi
    s = _quick_two_sum(s.hi, s.lo)
    s.lo += t.lo
    return _quick_two_sum(s.hi, s.lo)


cdef inline dd dd_neg(dd a) noexcept nogil:
    a.hi = -a.hi
    a.lo = -a.lo
    return a


cdef inline dd dd_mul(dd a, dd b) noexcept nogil:
    cdef dd p = _two_prod(a.hi, b.hi)
    p.lo += a.hi * b.lo + a.lo * b.hi
    return _quick_two_sum(p.hi, p.lo)


cdef inline dd dd_div(dd a, dd b) noexcept nogil:
    cdef double q1, q2, q3
    cdef dd p, r, q, tail
    q1 = a.hi / b.hi
    p = dd_mul(_make(q1), b)
    r = dd_add(a, dd_neg(p))
    q2 = r.hi / b.hi
    p = dd_mul(_make(q2), b)
    r = dd_add(r, dd_neg(p))
    q3 = r.hi / b.hi
    q = _quick_two_sum(q1, q2)
    return dd_add(q, _make(q3))


cdef inline dd _make(double x) noexcept nogil:
    cdef dd r
    r.hi = x
    r.lo = 0.0
    return r


cdef inline dd dd_sqrt(dd a) noexcept nogil:
    cdef double x
    cdef dd s, r
    if a.hi <= 0.0:
        return _make(0.0)
    x = sqrt(a.hi)
    s = _two_prod(x, x)
    r = dd_add(a, dd_neg(s))
    return _quick_two_sum(x, r.hi / (2.0 * x))


def mgs_reorth(A, double h):
    A_c = np.asarray(A, dtype=np.complex128)
    cdef const double[:, ::1] Ar = np.ascontiguousarray(A_c.real)
    cdef const double[:, ::1] Ai = np.ascontiguousarray(A_c.imag)
    cdef Py_ssize_t K = Ar.shape[0], M = Ar.shape[1]
    Qr_a = np.empty((K, M))
    Qi_a = np.empty((K, M))
    cdef double[:, ::1] Qr = Qr_a, Qi = Qi_a
    rdiag_a = np.empty(K)
    cdef double[::1] rdiag = rdiag_a
    vr_a = np.empty(M)
    vi_a = np.empty(M)
    cdef double[::1] vr = vr_a, vi = vi_a
    cdef Py_ssize_t k, j, m, p
    cdef double rr, ri, nrm
    with nogil:
        for k in range(K):
            for m in range(M):
                vr[m] = Ar[k, m]
                vi[m] = Ai[k, m]
            for p in range(2):
                for j in range(k):
                    rr = 0.0
                    ri = 0.0
                    for m in range(M):
                        # v * conj(q)
                        rr = rr + vr[m] * Qr[j, m] + vi[m] * Qi[j, m]
                        ri = ri + vi[m] * Qr[j, m] - vr[m] * Qi[j, m]
                    rr = rr * h
                    ri = ri * h
                    for m in range(M):
                        vr[m] = vr[m] - (rr * Qr[j, m] - ri * Qi[j, m])
                        vi[m] = vi[m] - (rr * Qi[j, m] + ri * Qr[j, m])
            nrm = 0.0
            for m in range(M):
                nrm += vr[m] * vr[m] + vi[m] * vi[m]
            nrm = sqrt(h * nrm)
            rdiag[k] = nrm
            for m in range(M):
                Qr[k, m] = vr[m] / nrm
                Qi[k, m] = vi[m] / nrm
    return Qr_a + 1j * Qi_a, rdiag_a


cdef inline cdd _cinner(double[:, ::1] qrh, double[:, ::1] qrl, double[:, ::1] qih,
                        double[:, ::1] qil, Py_ssize_t j, double[::1] vrh,
                        double[::1] vrl, double[::1] vih, double[::1] vil,
                        Py_ssize_t M, dd h) noexcept nogil:
    # h * sum v * conj(q_j)
    cdef cdd acc
    cdef dd vr, vi, qr, qi
    cdef Py_ssize_t m
    acc.re = _make(0.0)
    acc.im = _make(0.0)
    for m in range(M):
        vr.hi = vrh[m]; vr.lo = vrl[m]
        vi.hi = vih[m]; vi.lo = vil[m]
        qr.hi = qrh[j, m]; qr.lo = qrl[j, m]
        qi.hi = qih[j, m]; qi.lo = qil[j, m]
        acc.re = dd_add(acc.re, dd_add(dd_mul(vr, qr), dd_mul(vi, qi)))
        acc.im = dd_add(acc.im, dd_add(dd_mul(vi, qr), dd_neg(dd_mul(vr, qi))))
    acc.re = dd_mul(acc.re, h)
    acc.im = dd_mul(acc.im, h)
    return acc


def mgs_reorth_dd(re_hi, re_lo, im_hi, im_lo, double h_hi, double h_lo):
    cdef const double[:, ::1] arh = np.ascontiguousarray(re_hi, dtype=np.float64)
    cdef const double[:, ::1] arl = np.ascontiguousarray(re_lo, dtype=np.float64)
    cdef const double[:, ::1] aih = np.ascontiguousarray(im_hi, dtype=np.float64)
    cdef const double[:, ::1] ail = np.ascontiguousarray(im_lo, dtype=np.float64)
    cdef Py_ssize_t K = arh.shape[0], M = arh.shape[1]
    qrh_a = np.zeros((K, M)); qrl_a = np.zeros((K, M))
    qih_a = np.zeros((K, M)); qil_a = np.zeros((K, M))
    cdef double[:, ::1] qrh = qrh_a, qrl = qrl_a, qih = qih_a, qil = qil_a
    vrh_a = np.empty(M); vrl_a = np.empty(M); vih_a = np.empty(M); vil_a = np.empty(M)
    cdef double[::1] vrh = vrh_a, vrl = vrl_a, vih = vih_a, vil = vil_a
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rdiag = np.empty(K)
    cdef dd h, t, inv, nrm, qr, qi
    cdef cdd r, n2
    cdef Py_ssize_t k, j, m, p
    h.hi = h_hi
    h.lo = h_lo
    with nogil:
        for k in range(K):
            for m in range(M):
                vrh[m] = arh[k, m]; vrl[m] = arl[k, m]
                vih[m] = aih[k, m]; vil[m] = ail[k, m]
            for p in range(2):
                for j in range(k):
                    r = _cinner(qrh, qrl, qih, qil, j, vrh, vrl, vih, vil, M, h)
                    for m in range(M):
                        qr.hi = qrh[j, m]; qr.lo = qrl[j, m]
                        qi.hi = qih[j, m]; qi.lo = qil[j, m]
                        # v -= q * r
                        t.hi = vrh[m]; t.lo = vrl[m]
                        t = dd_add(t, dd_neg(dd_add(dd_mul(qr, r.re), dd_neg(dd_mul(qi, r.im)))))
                        vrh[m] = t.hi; vrl[m] = t.lo
                        t.hi = vih[m]; t.lo = vil[m]
                        t = dd_add(t, dd_neg(dd_add(dd_mul(qr, r.im), dd_mul(qi, r.re))))
                        vih[m] = t.hi; vil[m] = t.lo
            n2.re = _make(0.0)
            for m in range(M):
                qr.hi = vrh[m]; qr.lo = vrl[m]
                qi.hi = vih[m]; qi.lo = vil[m]
                n2.re = dd_add(n2.re, dd_add(dd_mul(qr, qr), dd_mul(qi, qi)))
            nrm = dd_sqrt(dd_mul(n2.re, h))
            rdiag[k] = nrm.hi + nrm.lo
            inv = dd_div(_make(1.0), nrm)
            for m in range(M):
                qr.hi = vrh[m]; qr.lo = vrl[m]
                qi.hi = vih[m]; qi.lo = vil[m]
                qr = dd_mul(qr, inv)
                qi = dd_mul(qi, inv)
                qrh[k, m] = qr.hi; qrl[k, m] = qr.lo
                qih[k, m] = qi.hi; qil[k, m] = qi.lo
    Q = (qrh_a + qrl_a) + 1j * (qih_a + qil_a)
    return Q, rdiag


def dpp_sample(Phi, coeffs, freqs, uniforms, nodes, double h):
    P_c = np.asarray(Phi, dtype=np.complex128)
    C_c = np.asarray(coeffs, dtype=np.complex128)
    # split storage keeps the inner loops in plain real arithmetic
    cdef const double[:, ::1] Pr = np.ascontiguousarray(P_c.real)
    cdef const double[:, ::1] Pi = np.ascontiguousarray(P_c.imag)
    cdef const double[:, ::1] Cr = np.ascontiguousarray(C_c.real)
    cdef const double[:, ::1] Ci = np.ascontiguousarray(C_c.imag)
    cdef const double[::1] fr = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef const double[::1] lam = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef Py_ssize_t M = Pr.shape[0], r = Pr.shape[1], B = fr.shape[0]
    dens_a = np.empty(M)
    cum_a = np.empty(M)
    Er_a = np.zeros((r, r))
    Ei_a = np.zeros((r, r))
    fxr_a = np.empty(r)
    fxi_a = np.empty(r)
    phr_a = np.empty(B)
    phi_a = np.empty(B)
    cfr_a = np.empty(r)
    cfi_a = np.empty(r)
    points_a = np.empty(r)
    cdef double[::1] dens = dens_a, cum = cum_a, points = points_a
    cdef double[:, ::1] Er = Er_a, Ei = Ei_a
    cdef double[::1] fxr = fxr_a, fxi = fxi_a, phr = phr_a, phi = phi_a
    cdef double[::1] cfr = cfr_a, cfi = cfi_a
    cdef Py_ssize_t i, j, k, l, b, p, lo_i, hi_i, mid
    cdef double min_dens = 1e308, total, target, prev, frac, x, nrm, mass_j
    cdef double ar, ai, er, ei, pr, pim
    cdef Py_ssize_t count = r
    with nogil:
        for j in range(M):
            total = 0.0
            for k in range(r):
                total += Pr[j, k] * Pr[j, k] + Pi[j, k] * Pi[j, k]
            dens[j] = total
        for i in range(r):
            for j in range(M):
                if dens[j] < min_dens:
                    min_dens = dens[j]
                if dens[j] < 0.0:
                    dens[j] = 0.0
            total = 0.0
            for j in range(M - 1):
                total += 0.5 * h * (dens[j] + dens[j + 1])
                cum[j] = total
            total += 0.5 * h * (dens[M - 1] + dens[0])
            cum[M - 1] = total
            if not total > 1e-12 * (r - i):
                count = i
                break
            target = u[i] * total
            # first index with cum > target
            lo_i = 0
            hi_i = M
            while lo_i < hi_i:
                mid = (lo_i + hi_i) // 2
                if cum[mid] <= target:
                    lo_i = mid + 1
                else:
                    hi_i = mid
            j = lo_i if lo_i < M else M - 1
            prev = cum[j - 1] if j > 0 else 0.0
            mass_j = 0.5 * h * (dens[j] + dens[(j + 1) % M])
            frac = (target - prev) / mass_j if mass_j > 0 else 0.5
            if frac < 0.0:
                frac = 0.0
            if frac > 1.0:
                frac = 1.0
            x = lam[j] + frac * h
            if x >= M_PI:
                x -= 2 * M_PI
            points[i] = x
            for b in range(B):
                phr[b] = cos(fr[b] * x)
                phi[b] = sin(fr[b] * x)
            for k in range(r):
                ar = 0.0
                ai = 0.0
                for b in range(B):
                    ar = ar + Cr[k, b] * phr[b] - Ci[k, b] * phi[b]
                    ai = ai + Cr[k, b] * phi[b] + Ci[k, b] * phr[b]
                fxr[k] = ar
                fxi[k] = ai
            for p in range(2):
                for l in range(i):
                    ar = 0.0
                    ai = 0.0
                    for k in range(r):
                        # fx * conj(E)
                        ar = ar + fxr[k] * Er[l, k] + fxi[k] * Ei[l, k]
                        ai = ai + fxi[k] * Er[l, k] - fxr[k] * Ei[l, k]
                    cfr[l] = ar
                    cfi[l] = ai
                for l in range(i):
                    for k in range(r):
                        fxr[k] = fxr[k] - (cfr[l] * Er[l, k] - cfi[l] * Ei[l, k])
                        fxi[k] = fxi[k] - (cfr[l] * Ei[l, k] + cfi[l] * Er[l, k])
            nrm = 0.0
            for k in range(r):
                nrm += fxr[k] * fxr[k] + fxi[k] * fxi[k]
            nrm = sqrt(nrm)
            for k in range(r):
                Er[i, k] = fxr[k] / nrm
                Ei[i, k] = fxi[k] / nrm
            for j in range(M):
                ar = 0.0
                ai = 0.0
                for k in range(r):
                    pr = Pr[j, k]
                    pim = Pi[j, k]
                    er = Er[i, k]
                    ei = Ei[i, k]
                    ar = ar + pr * er + pim * ei
                    ai = ai + pim * er - pr * ei
                dens[j] -= ar * ar + ai * ai
    return points_a[:count], min_dens, count
