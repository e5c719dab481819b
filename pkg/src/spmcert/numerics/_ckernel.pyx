# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ball kernel.  Same operation order as _pykernel, so results are bit-identical."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, nextafter, INFINITY

cnp.import_array()

BACKEND = "cython"

cdef double _EPS = 2.0 ** -53
cdef double _UP = 1.0 + 2.0 ** -48
cdef double _TINY = 2.0 ** -1060


cdef inline double _up(double x) nogil:
    return x * _UP + _TINY


cdef inline void _mul(double am, double ar, double bm, double br,
                      double* om, double* orad) nogil:
    cdef double m = am * bm
    om[0] = m
    orad[0] = _up(((fabs(am) * br + fabs(bm) * ar) + ar * br) + fabs(m) * _EPS)


cdef inline void _add(double am, double ar, double bm, double br,
                      double* om, double* orad) nogil:
    cdef double m = am + bm
    om[0] = m
    orad[0] = _up((ar + br) + fabs(m) * _EPS)


def eval_polys_grid(exps, cm, cr, starts, xm, xr):
    cdef long[:, :] ex = np.ascontiguousarray(exps, dtype=np.int64)
    cdef double[:] cml = np.ascontiguousarray(cm, dtype=np.float64)
    cdef double[:] crl = np.ascontiguousarray(cr, dtype=np.float64)
    cdef long[:] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef double[:, :] xml = np.ascontiguousarray(xm, dtype=np.float64)
    cdef double[:, :] xrl = np.ascontiguousarray(xr, dtype=np.float64)
    cdef Py_ssize_t n = xml.shape[0]
    cdef Py_ssize_t k = ex.shape[1]
    cdef Py_ssize_t npoly = st.shape[0] - 1
    cdef long maxdeg = 0
    cdef Py_ssize_t t, v, q, p
    cdef long e
    for t in range(ex.shape[0]):
        for v in range(k):
            if ex[t, v] > maxdeg:
                maxdeg = ex[t, v]
    out_m_arr = np.zeros((n, npoly), dtype=np.float64)
    out_r_arr = np.zeros((n, npoly), dtype=np.float64)
    cdef double[:, :] out_m = out_m_arr
    cdef double[:, :] out_r = out_r_arr
    pm_arr = np.ones((k, maxdeg + 1), dtype=np.float64)
    pr_arr = np.zeros((k, maxdeg + 1), dtype=np.float64)
    cdef double[:, :] pm = pm_arr
    cdef double[:, :] pr = pr_arr
    cdef double accm, accr, tm, tr
    with nogil:
        for q in range(n):
            for v in range(k):
                pm[v, 0] = 1.0
                pr[v, 0] = 0.0
                if maxdeg >= 1:
                    pm[v, 1] = xml[q, v]
                    pr[v, 1] = xrl[q, v]
                for e in range(2, maxdeg + 1):
                    _mul(pm[v, e - 1], pr[v, e - 1], xml[q, v], xrl[q, v],
                         &pm[v, e], &pr[v, e])
            for p in range(npoly):
                accm = 0.0
                accr = 0.0
                for t in range(st[p], st[p + 1]):
                    tm = cml[t]
                    tr = crl[t]
                    for v in range(k):
                        e = ex[t, v]
                        if e:
                            _mul(tm, tr, pm[v, e], pr[v, e], &tm, &tr)
                    _add(accm, accr, tm, tr, &accm, &accr)
                out_m[q, p] = accm
                out_r[q, p] = accr
    return out_m_arr, out_r_arr


cdef int _leaf(double am, double ar, double bm, double br, double cm, double cr,
               double* dm, double* dr, double* jm, double* jr) nogil:
    cdef double bbm, bbr, acm, acr, lo, hi, slo, shi, sm, sr, nm, nr
    cdef double alo, ahi, ilo, ihi, im, ir
    _mul(bm, br, bm, br, &bbm, &bbr)
    _mul(am, ar, cm, cr, &acm, &acr)
    _add(bbm, bbr, -4.0 * acm, 4.0 * acr, dm, dr)
    lo = nextafter(dm[0] - dr[0], -INFINITY)
    if lo <= 0.0:
        jm[0] = 0.0
        jr[0] = INFINITY
        return 1
    hi = nextafter(dm[0] + dr[0], INFINITY)
    slo = nextafter(sqrt(lo), -INFINITY)
    shi = nextafter(sqrt(hi), INFINITY)
    sm = 0.5 * (slo + shi)
    sr = _up(max(shi - sm, sm - slo))
    _add(-bm, br, -sm, sr, &nm, &nr)
    alo = nextafter(2.0 * am - 2.0 * ar, -INFINITY)
    ahi = nextafter(2.0 * am + 2.0 * ar, INFINITY)
    if alo <= 0.0 <= ahi:
        jm[0] = 0.0
        jr[0] = INFINITY
        return 2
    ilo = nextafter(1.0 / ahi, -INFINITY)
    ihi = nextafter(1.0 / alo, INFINITY)
    im = 0.5 * (ilo + ihi)
    ir = _up(max(ihi - im, im - ilo))
    _mul(nm, nr, im, ir, jm, jr)
    return 0


def leaf_grid(am, ar, bm, br, cm, cr):
    cdef double[:] a_m = np.ascontiguousarray(am, dtype=np.float64).ravel()
    cdef double[:] a_r = np.ascontiguousarray(ar, dtype=np.float64).ravel()
    cdef double[:] b_m = np.ascontiguousarray(bm, dtype=np.float64).ravel()
    cdef double[:] b_r = np.ascontiguousarray(br, dtype=np.float64).ravel()
    cdef double[:] c_m = np.ascontiguousarray(cm, dtype=np.float64).ravel()
    cdef double[:] c_r = np.ascontiguousarray(cr, dtype=np.float64).ravel()
    cdef Py_ssize_t n = a_m.shape[0]
    cdef Py_ssize_t i
    dm_arr = np.empty(n)
    dr_arr = np.empty(n)
    jm_arr = np.empty(n)
    jr_arr = np.empty(n)
    st_arr = np.empty(n, dtype=np.int32)
    cdef double[:] dm = dm_arr
    cdef double[:] dr = dr_arr
    cdef double[:] jm = jm_arr
    cdef double[:] jr = jr_arr
    cdef int[:] status = st_arr
    with nogil:
        for i in range(n):
            status[i] = _leaf(a_m[i], a_r[i], b_m[i], b_r[i], c_m[i], c_r[i],
                              &dm[i], &dr[i], &jm[i], &jr[i])
    return dm_arr, dr_arr, jm_arr, jr_arr, st_arr
