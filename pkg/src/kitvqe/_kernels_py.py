"""Pure-numpy statevector kernels.

Mirrors :mod:`kitvqe._kernels_cy`.  Both backends implement the same
update rules elementwise, so their outputs agree to floating-point
rounding and each backend is individually deterministic.

Conventions
-----------
* Amplitudes are a complex128 array of length ``2**n``; site 0 is the
  least significant bit of the basis index.
* A Pauli string is given by three bit masks ``(xm, ym, zm)`` with
  disjoint support.  Acting on a basis state ``|k>`` it yields
  ``c(k) |k ^ (xm|ym)>`` with ``c(k) = i**nY * (-1)**popcount(k & (ym|zm))``.
* ``exp_pauli`` applies exp(-i * theta * P) with the full angle theta.
"""

from __future__ import annotations

import math

import numpy as np

# Opcodes for compiled gate programs (shared with the compiled backend).
OP_EXPP = 0   # exp(-i * angle * P)
OP_PAULI = 1  # multiply by P
OP_CZ = 2
OP_CPHASE = 3  # diag(1, 1, 1, e^{i*angle}) on (site_i, site_j)
OP_XY = 4      # exp(-i * angle * (XX + YY) / 4)

_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _pair_base(n: int, bit: int) -> np.ndarray:
    """All basis indices with ``bit`` clear, ascending."""
    half = np.arange(1 << (n - 1), dtype=np.int64)
    low = half & ((1 << bit) - 1)
    return ((half ^ low) << 1) | low


def _quad_base(n: int, bi: int, bj: int) -> np.ndarray:
    """All basis indices with bits ``bi < bj`` both clear, ascending."""
    m = np.arange(1 << (n - 2), dtype=np.int64)
    lo = m & ((1 << bi) - 1)
    m = ((m ^ lo) << 1) | lo
    lo = m & ((1 << bj) - 1)
    return ((m ^ lo) << 1) | lo


def _parity(k: np.ndarray, mask: int) -> np.ndarray:
    return (np.bitwise_count(k & mask) & 1).astype(np.float64)


def exp_pauli(a: np.ndarray, n: int, xm: int, ym: int, zm: int, theta: float) -> None:
    ct = math.cos(theta)
    st = math.sin(theta)
    flip = xm | ym
    if flip == 0:
        idx = np.arange(a.size, dtype=np.int64)
        sign = 1.0 - 2.0 * _parity(idx, zm)
        a *= ct - 1j * st * sign
        return
    bit = (flip & -flip).bit_length() - 1
    k0 = _pair_base(n, bit)
    k1 = k0 ^ flip
    pref = _I_POW[int(ym).bit_count() & 3]
    pm = ym | zm
    c0 = pref * (1.0 - 2.0 * _parity(k0, pm))
    c1 = pref * (1.0 - 2.0 * _parity(k1, pm))
    u = a[k0]
    v = a[k1]
    a[k0] = ct * u - 1j * st * (c1 * v)
    a[k1] = ct * v - 1j * st * (c0 * u)


def apply_pauli(a: np.ndarray, n: int, xm: int, ym: int, zm: int) -> None:
    flip = xm | ym
    if flip == 0:
        idx = np.arange(a.size, dtype=np.int64)
        a *= 1.0 - 2.0 * _parity(idx, zm)
        return
    bit = (flip & -flip).bit_length() - 1
    k0 = _pair_base(n, bit)
    k1 = k0 ^ flip
    pref = _I_POW[int(ym).bit_count() & 3]
    pm = ym | zm
    c0 = pref * (1.0 - 2.0 * _parity(k0, pm))
    c1 = pref * (1.0 - 2.0 * _parity(k1, pm))
    u = a[k0].copy()
    a[k0] = c1 * a[k1]
    a[k1] = c0 * u


def apply_cz(a: np.ndarray, n: int, i: int, j: int) -> None:
    bi, bj = (i, j) if i < j else (j, i)
    k11 = _quad_base(n, bi, bj) | (1 << bi) | (1 << bj)
    a[k11] = -a[k11]


def apply_cphase(a: np.ndarray, n: int, i: int, j: int, phi: float) -> None:
    bi, bj = (i, j) if i < j else (j, i)
    k11 = _quad_base(n, bi, bj) | (1 << bi) | (1 << bj)
    a[k11] *= complex(math.cos(phi), math.sin(phi))


def apply_xy(a: np.ndarray, n: int, i: int, j: int, theta: float) -> None:
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    bi, bj = (i, j) if i < j else (j, i)
    base = _quad_base(n, bi, bj)
    ka = base | (1 << bi)
    kb = base | (1 << bj)
    u = a[ka]
    v = a[kb]
    a[ka] = c * u - 1j * s * v
    a[kb] = c * v - 1j * s * u


def expval_pauli(a: np.ndarray, n: int, xm: int, ym: int, zm: int) -> float:
    flip = xm | ym
    if flip == 0:
        idx = np.arange(a.size, dtype=np.int64)
        sign = 1.0 - 2.0 * _parity(idx, zm)
        return float(np.sum((a.real * a.real + a.imag * a.imag) * sign))
    bit = (flip & -flip).bit_length() - 1
    k0 = _pair_base(n, bit)
    k1 = k0 ^ flip
    pref = _I_POW[int(ym).bit_count() & 3]
    pm = ym | zm
    c1 = pref * (1.0 - 2.0 * _parity(k1, pm))
    return float(2.0 * np.sum((np.conj(a[k0]) * (c1 * a[k1])).real))


def accum_pauli(src: np.ndarray, out: np.ndarray, n: int,
                xm: int, ym: int, zm: int, w: float) -> None:
    """out += w * P src  (matrix-free matvec building block)."""
    flip = xm | ym
    if flip == 0:
        idx = np.arange(src.size, dtype=np.int64)
        out += (w * (1.0 - 2.0 * _parity(idx, zm))) * src
        return
    bit = (flip & -flip).bit_length() - 1
    k0 = _pair_base(n, bit)
    k1 = k0 ^ flip
    pref = _I_POW[int(ym).bit_count() & 3]
    pm = ym | zm
    c0 = pref * (1.0 - 2.0 * _parity(k0, pm))
    c1 = pref * (1.0 - 2.0 * _parity(k1, pm))
    out[k0] += (w * c1) * src[k1]
    out[k1] += (w * c0) * src[k0]


def run_program(a: np.ndarray, n: int,
                op: np.ndarray, si: np.ndarray, sj: np.ndarray,
                xm: np.ndarray, ym: np.ndarray, zm: np.ndarray,
                angle: np.ndarray,
                inj_ord: np.ndarray, inj_xm: np.ndarray,
                inj_ym: np.ndarray, inj_zm: np.ndarray) -> None:
    """Execute a compiled gate program in place.

    ``inj_*`` describe Pauli insertions keyed by CZ ordinal (sorted
    ascending); each is applied right after its CZ fires.
    """
    kinj = 0
    ninj = len(inj_ord)
    ncz = 0
    for g in range(len(op)):
        o = op[g]
        if o == OP_EXPP:
            exp_pauli(a, n, int(xm[g]), int(ym[g]), int(zm[g]), float(angle[g]))
        elif o == OP_CZ:
            apply_cz(a, n, int(si[g]), int(sj[g]))
            while kinj < ninj and inj_ord[kinj] == ncz:
                apply_pauli(a, n, int(inj_xm[kinj]), int(inj_ym[kinj]),
                            int(inj_zm[kinj]))
                kinj += 1
            ncz += 1
        elif o == OP_CPHASE:
            apply_cphase(a, n, int(si[g]), int(sj[g]), float(angle[g]))
        elif o == OP_XY:
            apply_xy(a, n, int(si[g]), int(sj[g]), float(angle[g]))
        elif o == OP_PAULI:
            apply_pauli(a, n, int(xm[g]), int(ym[g]), int(zm[g]))
        else:
            raise ValueError(f"unknown opcode {o}")
