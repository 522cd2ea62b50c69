"""Pure numpy implementations of the hot kernels.

These are the reference versions. ``_kernels.pyx`` mirrors every function
with the same signature; :mod:`ump._backend` picks one at import.

Double-double numbers are carried as ``(hi, lo)`` pairs of float64 arrays and
complex double-double as four arrays ``(re_hi, re_lo, im_hi, im_lo)``.
"""
import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    e = e + t
    s, e = _quick_two_sum(s, e)
    e = e + f
    return _quick_two_sum(s, e)


def dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return _quick_two_sum(p, e)


def dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = dd_mul(q1, 0.0, bh, bl)
    rh, rl = dd_add(ah, al, -ph, -pl)
    q2 = rh / bh
    ph, pl = dd_mul(q2, 0.0, bh, bl)
    rh, rl = dd_add(rh, rl, -ph, -pl)
    q3 = rh / bh
    q1, q2 = _quick_two_sum(q1, q2)
    return dd_add(q1, q2, q3, 0.0)


def dd_sqrt(ah, al):
    if ah <= 0.0:
        return 0.0, 0.0
    x = np.sqrt(ah)
    sh, sl = _two_prod(x, x)
    rh, rl = dd_add(ah, al, -sh, -sl)
    return _quick_two_sum(x, rh / (2.0 * x))


def dd_sum(hi, lo):
    """Pairwise double-double reduction of a 1-d ``(hi, lo)`` array pair."""
    hi = np.asarray(hi, dtype=float)
    lo = np.asarray(lo, dtype=float)
    while hi.size > 1:
        if hi.size % 2:
            hi = np.append(hi, 0.0)
            lo = np.append(lo, 0.0)
        hi, lo = dd_add(hi[0::2], lo[0::2], hi[1::2], lo[1::2])
    return float(hi[0]), float(lo[0])


def _cdd_mul(a, b):
    """Elementwise complex double-double product."""
    arh, arl, aih, ail = a
    brh, brl, bih, bil = b
    p1 = dd_mul(arh, arl, brh, brl)
    p2 = dd_mul(aih, ail, bih, bil)
    p3 = dd_mul(arh, arl, bih, bil)
    p4 = dd_mul(aih, ail, brh, brl)
    re = dd_add(p1[0], p1[1], -p2[0], -p2[1])
    im = dd_add(p3[0], p3[1], p4[0], p4[1])
    return re[0], re[1], im[0], im[1]


def _cdd_inner(v, q, h):
    """``h * sum v * conj(q)`` as a complex double-double scalar."""
    vrh, vrl, vih, vil = v
    qrh, qrl, qih, qil = q
    rr = dd_mul(vrh, vrl, qrh, qrl)
    ii = dd_mul(vih, vil, qih, qil)
    ir = dd_mul(vih, vil, qrh, qrl)
    ri = dd_mul(vrh, vrl, qih, qil)
    re = dd_sum(*dd_add(rr[0], rr[1], ii[0], ii[1]))
    im = dd_sum(*dd_add(ir[0], ir[1], -ri[0], -ri[1]))
    re = dd_mul(re[0], re[1], h[0], h[1])
    im = dd_mul(im[0], im[1], h[0], h[1])
    return re[0], re[1], im[0], im[1]


def mgs_reorth(A, h):
    """Modified Gram-Schmidt with one full re-orthogonalization pass.

    Rows of ``A`` (complex, shape ``(K, M)``) are orthonormalized in the inner
    product ``<u, v> = h sum u conj(v)``. Returns ``(Q, rdiag)`` where ``rdiag``
    holds the positive diagonal of the triangular factor.
    """
    A = np.asarray(A, dtype=complex)
    K = A.shape[0]
    Q = np.empty_like(A)
    rdiag = np.empty(K)
    for k in range(K):
        v = A[k].copy()
        for _ in range(2):
            for j in range(k):
                r = h * np.vdot(Q[j], v)
                v -= r * Q[j]
        nrm = np.sqrt(h * np.vdot(v, v).real)
        rdiag[k] = nrm
        Q[k] = v / nrm
    return Q, rdiag


def mgs_reorth_dd(re_hi, re_lo, im_hi, im_lo, h_hi, h_lo):
    """Double-double version of :func:`mgs_reorth`.

    Inputs are the four component arrays of the ``(K, M)`` family and the
    quadrature step as a double-double. Returns ``(Q, rdiag)`` rounded to
    complex128 / float64.
    """
    K, M = re_hi.shape
    h = (h_hi, h_lo)
    Qs = []
    Q = np.empty((K, M), dtype=complex)
    rdiag = np.empty(K)
    for k in range(K):
        v = [re_hi[k].copy(), re_lo[k].copy(), im_hi[k].copy(), im_lo[k].copy()]
        for _ in range(2):
            for j in range(k):
                q = Qs[j]
                r = _cdd_inner(v, q, h)
                rq = _cdd_mul(q, r)
                a = dd_add(v[0], v[1], -rq[0], -rq[1])
                b = dd_add(v[2], v[3], -rq[2], -rq[3])
                v = [a[0], a[1], b[0], b[1]]
        nr = _cdd_inner(v, v, h)
        nh, nl = dd_sqrt(nr[0], nr[1])
        ih, il = dd_div(1.0, 0.0, nh, nl)
        a = dd_mul(v[0], v[1], ih, il)
        b = dd_mul(v[2], v[3], ih, il)
        q = [a[0], a[1], b[0], b[1]]
        Qs.append(q)
        Q[k] = (q[0] + q[1]) + 1j * (q[2] + q[3])
        rdiag[k] = nh + nl
    return Q, rdiag


def dpp_sample(Phi, coeffs, freqs, uniforms, nodes, h):
    """Sequential exact sampler for the projection kernel ``Phi @ Phi^H``.

    ``Phi`` has shape ``(M, r)``: row ``j`` is the feature vector at node ``j``.
    Off-grid feature vectors are ``coeffs @ exp(1j * freqs * x)``. One uniform
    per point drives the inverse-CDF step. Returns ``(points, min_density)``
    where ``min_density`` is the smallest conditional density value seen
    before clamping.
    """
    M, r = Phi.shape
    dens = np.sum(np.abs(Phi) ** 2, axis=1)
    E = np.zeros((r, r), dtype=complex)
    points = np.empty(r)
    min_dens = np.inf
    for i in range(r):
        min_dens = min(min_dens, float(dens.min()))
        np.maximum(dens, 0.0, out=dens)
        mass = 0.5 * h * (dens + np.roll(dens, -1))
        cum = np.cumsum(mass)
        total = cum[-1]
        if not total > 1e-12 * (r - i):
            return points[:i], min_dens, i
        target = uniforms[i] * total
        j = int(np.searchsorted(cum, target, side="right"))
        j = min(j, M - 1)
        prev = cum[j - 1] if j > 0 else 0.0
        frac = (target - prev) / mass[j] if mass[j] > 0 else 0.5
        frac = min(max(frac, 0.0), 1.0)
        x = nodes[j] + frac * h
        if x >= np.pi:
            x -= 2 * np.pi
        points[i] = x
        fx = coeffs @ np.exp(1j * freqs * x)
        for _ in range(2):
            fx = fx - E[:i].T @ (E[:i].conj() @ fx)
        fx = fx / np.linalg.norm(fx)
        E[i] = fx
        proj = Phi @ fx.conj()
        dens -= np.abs(proj) ** 2
    return points, min_dens, r
