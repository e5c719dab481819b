"""Pure-Python ball kernel; the reference the compiled kernel must match bit for bit.

Balls are (mid, rad) pairs of doubles.  Every radius update is inflated by
``_up`` so that it bounds the float rounding of both the midpoint and the
radius expression itself.  The operation order is fixed and mirrored exactly
in ``_ckernel.pyx``.
"""

from math import fabs, inf, nextafter, sqrt

import numpy as np

_EPS = 2.0**-53
_UP = 1.0 + 2.0**-48
_TINY = 2.0**-1060

BACKEND = "python"


def _up(x):
    return x * _UP + _TINY


def _mul(am, ar, bm, br):
    m = am * bm
    return m, _up(((fabs(am) * br + fabs(bm) * ar) + ar * br) + fabs(m) * _EPS)


def _add(am, ar, bm, br):
    m = am + bm
    return m, _up((ar + br) + fabs(m) * _EPS)


def eval_polys_grid(exps, cm, cr, starts, xm, xr):
    """Evaluate packed polynomials at N ball points.

    exps: (T, k) int exponents; cm, cr: (T,) coefficient mid/rad;
    starts: (P+1,) term offsets per polynomial; xm, xr: (N, k).
    Returns two (N, P) arrays.
    """
    ex = np.asarray(exps).tolist()
    cml = np.asarray(cm, dtype=np.float64).tolist()
    crl = np.asarray(cr, dtype=np.float64).tolist()
    st = np.asarray(starts).tolist()
    xml = np.asarray(xm, dtype=np.float64).tolist()
    xrl = np.asarray(xr, dtype=np.float64).tolist()
    n = len(xml)
    k = len(ex[0]) if ex else 0
    npoly = len(st) - 1
    maxdeg = max((max(e) for e in ex), default=0)
    out_m = [[0.0] * npoly for _ in range(n)]
    out_r = [[0.0] * npoly for _ in range(n)]
    for q in range(n):
        # powers x_v^e for e = 1..maxdeg, by repeated multiplication
        pm = []
        pr = []
        for v in range(k):
            rowm = [1.0, xml[q][v]]
            rowr = [0.0, xrl[q][v]]
            for e in range(2, maxdeg + 1):
                mm, rr = _mul(rowm[e - 1], rowr[e - 1], xml[q][v], xrl[q][v])
                rowm.append(mm)
                rowr.append(rr)
            pm.append(rowm)
            pr.append(rowr)
        for p in range(npoly):
            accm = 0.0
            accr = 0.0
            for t in range(st[p], st[p + 1]):
                tm = cml[t]
                tr = crl[t]
                et = ex[t]
                for v in range(k):
                    e = et[v]
                    if e:
                        tm, tr = _mul(tm, tr, pm[v][e], pr[v][e])
                accm, accr = _add(accm, accr, tm, tr)
            out_m[q][p] = accm
            out_r[q][p] = accr
    return np.array(out_m, dtype=np.float64).reshape(n, npoly), np.array(
        out_r, dtype=np.float64
    ).reshape(n, npoly)


def _leaf(am, ar, bm, br, cm, cr):
    """(delta_m, delta_r, j_m, j_r, status); status 0 ok, 1 delta<=0, 2 a~0."""
    bbm, bbr = _mul(bm, br, bm, br)
    acm, acr = _mul(am, ar, cm, cr)
    dm, dr = _add(bbm, bbr, -4.0 * acm, 4.0 * acr)
    lo = nextafter(dm - dr, -inf)
    if lo <= 0.0:
        return dm, dr, 0.0, inf, 1
    hi = nextafter(dm + dr, inf)
    slo = nextafter(sqrt(lo), -inf)
    shi = nextafter(sqrt(hi), inf)
    sm = 0.5 * (slo + shi)
    sr = _up(max(shi - sm, sm - slo))
    nm, nr = _add(-bm, br, -sm, sr)
    alo = nextafter(2.0 * am - 2.0 * ar, -inf)
    ahi = nextafter(2.0 * am + 2.0 * ar, inf)
    if alo <= 0.0 <= ahi:
        return dm, dr, 0.0, inf, 2
    ilo = nextafter(1.0 / ahi, -inf)
    ihi = nextafter(1.0 / alo, inf)
    im = 0.5 * (ilo + ihi)
    ir = _up(max(ihi - im, im - ilo))
    jm, jr = _mul(nm, nr, im, ir)
    return dm, dr, jm, jr, 0


def leaf_grid(am, ar, bm, br, cm, cr):
    """Vectorised (+++) leaf: discriminant ball and root (-b - sqrt(D)) / (2a)."""
    cols = [np.asarray(x, dtype=np.float64).ravel().tolist() for x in (am, ar, bm, br, cm, cr)]
    n = len(cols[0])
    dm = np.empty(n)
    dr = np.empty(n)
    jm = np.empty(n)
    jr = np.empty(n)
    status = np.empty(n, dtype=np.int32)
    for i in range(n):
        r = _leaf(cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i], cols[5][i])
        dm[i], dr[i], jm[i], jr[i], status[i] = r
    return dm, dr, jm, jr, status
