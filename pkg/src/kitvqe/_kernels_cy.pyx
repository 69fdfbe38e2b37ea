# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels.

Same update rules and conventions as :mod:`kitvqe._kernels_py`; see that
module for documentation.  The compiled path exists because per-shot
noise trajectories and large optimizer budgets execute millions of gate
applications, which dominate wall time on a single core.
"""

from libc.math cimport cos, sin

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    static inline int kv_popcount64(unsigned long long x) { return __builtin_popcountll(x); }
    #else
    static inline int kv_popcount64(unsigned long long x) {
        int c = 0; while (x) { x &= x - 1; ++c; } return c;
    }
    #endif
    """
    int kv_popcount64(unsigned long long x) nogil

OP_EXPP = 0
OP_PAULI = 1
OP_CZ = 2
OP_CPHASE = 3
OP_XY = 4

DEF C_OP_EXPP = 0
DEF C_OP_PAULI = 1
DEF C_OP_CZ = 2
DEF C_OP_CPHASE = 3
DEF C_OP_XY = 4

ctypedef double complex cplx

cdef cplx _ipow(int k) noexcept nogil:
    if k == 0:
        return 1.0 + 0.0j
    elif k == 1:
        return 1.0j
    elif k == 2:
        return -1.0 + 0.0j
    return -1.0j


cdef int _low_bit(long long mask) noexcept nogil:
    cdef int b = 0
    while not (mask >> b) & 1:
        b += 1
    return b


cdef void _exp_pauli(cplx[::1] a, int n, long long xm, long long ym,
                     long long zm, double theta) noexcept nogil:
    # pairs (k0, k1 = k0 ^ flip) satisfy c1 = sigma * c0 with a per-gate
    # sigma, so one parity lookup per pair carries both coefficients
    cdef long long flip = xm | ym
    cdef double ct = cos(theta)
    cdef double st = sin(theta)
    cdef long long dim = (<long long>1) << n
    cdef long long base, k0, k1, pm, lowstep, step
    cdef int bit
    cdef cplx fac0, fac1, u, v, qp, t0, t1
    cdef double s0, sigma
    if flip == 0:
        fac0 = ct - 1.0j * st
        fac1 = ct + 1.0j * st
        for k0 in range(dim):
            if kv_popcount64(<unsigned long long>(k0 & zm)) & 1:
                a[k0] = a[k0] * fac1
            else:
                a[k0] = a[k0] * fac0
        return
    bit = _low_bit(flip)
    lowstep = (<long long>1) << bit
    step = lowstep << 1
    pm = ym | zm
    qp = (1.0j * st) * _ipow(kv_popcount64(<unsigned long long>ym) & 3)
    if pm == 0:
        base = 0
        while base < dim:
            for k0 in range(base, base + lowstep):
                k1 = k0 ^ flip
                u = a[k0]
                v = a[k1]
                a[k0] = ct * u - qp * v
                a[k1] = ct * v - qp * u
            base += step
        return
    sigma = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(flip & pm)) & 1)
    base = 0
    while base < dim:
        for k0 in range(base, base + lowstep):
            k1 = k0 ^ flip
            s0 = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(k0 & pm)) & 1)
            u = a[k0]
            v = a[k1]
            t0 = qp * v
            t1 = qp * u
            a[k0] = ct * u - (sigma * s0) * t0
            a[k1] = ct * v - s0 * t1
        base += step


cdef void _apply_pauli(cplx[::1] a, int n, long long xm, long long ym,
                       long long zm) noexcept nogil:
    cdef long long flip = xm | ym
    cdef long long dim = (<long long>1) << n
    cdef long long base, k0, k1, pm, lowstep, step
    cdef int bit
    cdef cplx pref, c0, u
    cdef double s0, sigma
    if flip == 0:
        for k0 in range(dim):
            if kv_popcount64(<unsigned long long>(k0 & zm)) & 1:
                a[k0] = -a[k0]
        return
    bit = _low_bit(flip)
    lowstep = (<long long>1) << bit
    step = lowstep << 1
    pm = ym | zm
    pref = _ipow(kv_popcount64(<unsigned long long>ym) & 3)
    if pm == 0:
        base = 0
        while base < dim:
            for k0 in range(base, base + lowstep):
                k1 = k0 ^ flip
                u = a[k0]
                a[k0] = a[k1]
                a[k1] = u
            base += step
        return
    sigma = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(flip & pm)) & 1)
    base = 0
    while base < dim:
        for k0 in range(base, base + lowstep):
            k1 = k0 ^ flip
            s0 = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(k0 & pm)) & 1)
            c0 = (s0 * pref)
            u = a[k0]
            a[k0] = (sigma * c0) * a[k1]
            a[k1] = c0 * u
        base += step


cdef void _apply_cz(cplx[::1] a, int n, int i, int j) noexcept nogil:
    cdef int bi = i if i < j else j
    cdef int bj = j if i < j else i
    cdef long long quad = (<long long>1) << (n - 2)
    cdef long long mi = ((<long long>1) << bi) - 1
    cdef long long mj = ((<long long>1) << bj) - 1
    cdef long long set2 = (((<long long>1) << bi) | ((<long long>1) << bj))
    cdef long long m, k
    for m in range(quad):
        k = ((m ^ (m & mi)) << 1) | (m & mi)
        k = ((k ^ (k & mj)) << 1) | (k & mj)
        k |= set2
        a[k] = -a[k]


cdef void _apply_cphase(cplx[::1] a, int n, int i, int j, double phi) noexcept nogil:
    cdef int bi = i if i < j else j
    cdef int bj = j if i < j else i
    cdef long long quad = (<long long>1) << (n - 2)
    cdef long long mi = ((<long long>1) << bi) - 1
    cdef long long mj = ((<long long>1) << bj) - 1
    cdef long long set2 = (((<long long>1) << bi) | ((<long long>1) << bj))
    cdef long long m, k
    cdef cplx ph = cos(phi) + 1.0j * sin(phi)
    for m in range(quad):
        k = ((m ^ (m & mi)) << 1) | (m & mi)
        k = ((k ^ (k & mj)) << 1) | (k & mj)
        k |= set2
        a[k] = a[k] * ph


cdef void _apply_xy(cplx[::1] a, int n, int i, int j, double theta) noexcept nogil:
    cdef int bi = i if i < j else j
    cdef int bj = j if i < j else i
    cdef double c = cos(0.5 * theta)
    cdef double s = sin(0.5 * theta)
    cdef cplx isv = 1.0j * s
    cdef long long quad = (<long long>1) << (n - 2)
    cdef long long mi = ((<long long>1) << bi) - 1
    cdef long long mj = ((<long long>1) << bj) - 1
    cdef long long m, k, ka, kb
    cdef cplx u, v
    for m in range(quad):
        k = ((m ^ (m & mi)) << 1) | (m & mi)
        k = ((k ^ (k & mj)) << 1) | (k & mj)
        ka = k | ((<long long>1) << bi)
        kb = k | ((<long long>1) << bj)
        u = a[ka]
        v = a[kb]
        a[ka] = c * u - isv * v
        a[kb] = c * v - isv * u


cdef double _expval_pauli(cplx[::1] a, int n, long long xm, long long ym,
                          long long zm) noexcept nogil:
    cdef long long flip = xm | ym
    cdef long long dim = (<long long>1) << n
    cdef long long base, k0, k1, pm, lowstep, step
    cdef int bit
    cdef cplx pref, t
    cdef double acc = 0.0
    cdef double acci = 0.0
    cdef double s1, sigma
    if flip == 0:
        for k0 in range(dim):
            if kv_popcount64(<unsigned long long>(k0 & zm)) & 1:
                acc -= a[k0].real * a[k0].real + a[k0].imag * a[k0].imag
            else:
                acc += a[k0].real * a[k0].real + a[k0].imag * a[k0].imag
        return acc
    bit = _low_bit(flip)
    lowstep = (<long long>1) << bit
    step = lowstep << 1
    pm = ym | zm
    pref = _ipow(kv_popcount64(<unsigned long long>ym) & 3)
    sigma = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(flip & pm)) & 1)
    # c1 = pref * sigma * s0; fold pref in once after the loop
    base = 0
    while base < dim:
        for k0 in range(base, base + lowstep):
            k1 = k0 ^ flip
            s1 = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(k0 & pm)) & 1)
            t = (a[k0].conjugate()) * a[k1]
            acc += s1 * t.real
            acci += s1 * t.imag
        base += step
    return 2.0 * sigma * (pref.real * acc - pref.imag * acci)


cdef void _accum_pauli(cplx[::1] src, cplx[::1] out, int n, long long xm,
                       long long ym, long long zm, double w) noexcept nogil:
    cdef long long flip = xm | ym
    cdef long long dim = (<long long>1) << n
    cdef long long base, k0, k1, pm, lowstep, step
    cdef int bit
    cdef cplx wp
    cdef double s0, sigma
    if flip == 0:
        for k0 in range(dim):
            if kv_popcount64(<unsigned long long>(k0 & zm)) & 1:
                out[k0] = out[k0] - w * src[k0]
            else:
                out[k0] = out[k0] + w * src[k0]
        return
    bit = _low_bit(flip)
    lowstep = (<long long>1) << bit
    step = lowstep << 1
    pm = ym | zm
    wp = w * _ipow(kv_popcount64(<unsigned long long>ym) & 3)
    sigma = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(flip & pm)) & 1)
    base = 0
    while base < dim:
        for k0 in range(base, base + lowstep):
            k1 = k0 ^ flip
            s0 = 1.0 - 2.0 * (kv_popcount64(<unsigned long long>(k0 & pm)) & 1)
            out[k0] = out[k0] + (sigma * s0) * (wp * src[k1])
            out[k1] = out[k1] + s0 * (wp * src[k0])
        base += step


def exp_pauli(cplx[::1] a, int n, long long xm, long long ym, long long zm,
              double theta):
    with nogil:
        _exp_pauli(a, n, xm, ym, zm, theta)


def apply_pauli(cplx[::1] a, int n, long long xm, long long ym, long long zm):
    with nogil:
        _apply_pauli(a, n, xm, ym, zm)


def apply_cz(cplx[::1] a, int n, int i, int j):
    with nogil:
        _apply_cz(a, n, i, j)


def apply_cphase(cplx[::1] a, int n, int i, int j, double phi):
    with nogil:
        _apply_cphase(a, n, i, j, phi)


def apply_xy(cplx[::1] a, int n, int i, int j, double theta):
    with nogil:
        _apply_xy(a, n, i, j, theta)


def expval_pauli(cplx[::1] a, int n, long long xm, long long ym, long long zm):
    cdef double r
    with nogil:
        r = _expval_pauli(a, n, xm, ym, zm)
    return r


def accum_pauli(cplx[::1] src, cplx[::1] out, int n, long long xm,
                long long ym, long long zm, double w):
    with nogil:
        _accum_pauli(src, out, n, xm, ym, zm, w)


def run_program(cplx[::1] a, int n,
                int[::1] op, int[::1] si, int[::1] sj,
                long long[::1] xm, long long[::1] ym, long long[::1] zm,
                double[::1] angle,
                long long[::1] inj_ord, long long[::1] inj_xm,
                long long[::1] inj_ym, long long[::1] inj_zm):
    cdef Py_ssize_t g, ngates = op.shape[0]
    cdef Py_ssize_t kinj = 0, ninj = inj_ord.shape[0]
    cdef long long ncz = 0
    cdef int o
    with nogil:
        for g in range(ngates):
            o = op[g]
            if o == C_OP_EXPP:
                _exp_pauli(a, n, xm[g], ym[g], zm[g], angle[g])
            elif o == C_OP_CZ:
                _apply_cz(a, n, si[g], sj[g])
                while kinj < ninj and inj_ord[kinj] == ncz:
                    _apply_pauli(a, n, inj_xm[kinj], inj_ym[kinj], inj_zm[kinj])
                    kinj += 1
                ncz += 1
            elif o == C_OP_CPHASE:
                _apply_cphase(a, n, si[g], sj[g], angle[g])
            elif o == C_OP_XY:
                _apply_xy(a, n, si[g], sj[g], angle[g])
            elif o == C_OP_PAULI:
                _apply_pauli(a, n, xm[g], ym[g], zm[g])
            else:
                with gil:
                    raise ValueError(f"unknown opcode {o}")
