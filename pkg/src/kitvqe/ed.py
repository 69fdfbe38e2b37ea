"""Exact diagonalization reference energies.

Small systems (n <= 12) go through a dense eigensolver; larger ones use
a matrix-free block Lanczos with full reorthogonalization (restart-free,
block size k + 2 so degenerate multiplets converge together, capped at
300 block iterations).  All public entry points raise rather than
return unconverged values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .backend import kernels
from .model import Hamiltonian

DENSE_MAX_QUBITS = 12
MAX_QUBITS = 20
_LANCZOS_MAX_ITERS = 300
_LANCZOS_TOL = 1e-8
_CHECK_EVERY = 10     # block iterations between Ritz-residual checks
_FILTER_DEGREE = 180  # Chebyshev damping applied to the start block


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: tuple[float, ...]  # ascending, repeated per multiplicity
    method: str                     # "dense" | "iterative"
    eigenvectors: np.ndarray | None = None  # rows align with eigenvalues

    def __post_init__(self):
        if list(self.eigenvalues) != sorted(self.eigenvalues):
            raise ValueError("eigenvalues must be ascending")


def matvec(h: Hamiltonian, v: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """H @ v without forming H."""
    n = h.n_qubits
    if v.size != (1 << n):
        raise ValueError(f"vector has dim {v.size}, expected {1 << n}")
    if out is None:
        out = np.zeros_like(v)
    else:
        out[:] = 0.0
    for (xm, ym, zm, w) in h.masked_terms():
        kernels.accum_pauli(v, out, n, xm, ym, zm, w)
    return out


def _is_real(h: Hamiltonian) -> bool:
    # Real symmetric iff every term carries an even number of Y factors.
    return all(sum(1 for _, ax in t.sites if ax == "Y") % 2 == 0 for t in h.terms)


class _CompiledH:
    """Gather-form matvec: terms sharing a bit-flip mask merge into one
    coefficient vector, so H @ v costs one fancy-index gather per distinct
    mask instead of one kernel call per term."""

    def __init__(self, h: Hamiltonian):
        dim = 1 << h.n_qubits
        idx = np.arange(dim, dtype=np.int64)
        acc: dict[int, np.ndarray] = {}
        for (xm, ym, zm, w) in h.masked_terms():
            flip = xm | ym
            pref = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)[int(ym).bit_count() & 3]
            # destination-indexed coefficient: out[j] += c(j^flip) * v[j^flip]
            par = (np.bitwise_count((idx ^ flip) & (ym | zm)) & 1).astype(np.float64)
            c = (w * pref) * (1.0 - 2.0 * par)
            acc[flip] = c if flip not in acc else acc[flip] + c
        self.diag: np.ndarray | None = None
        self.perms: list[np.ndarray] = []
        self.coeffs: list[np.ndarray] = []
        real = True
        for flip, c in acc.items():
            if not np.any(c):
                continue
            if np.all(c.imag == 0.0):
                c = np.ascontiguousarray(c.real)
            else:
                real = False
            if flip == 0:
                self.diag = c
            else:
                self.perms.append(idx ^ flip)
                self.coeffs.append(c)
        self.real = real  # True -> H maps real vectors to real vectors
        self.dim = dim
        # triangle inequality: ||H|| <= sum of |term weights|
        self.norm_bound = float(sum(abs(w) for (_, _, _, w) in h.masked_terms()))

    def matvec_into(self, v: np.ndarray, out: np.ndarray, tmp: np.ndarray) -> np.ndarray:
        if self.diag is not None:
            np.multiply(self.diag, v, out=out)
        else:
            out[:] = 0.0
        for perm, c in zip(self.perms, self.coeffs):
            np.take(v, perm, out=tmp)
            tmp *= c
            out += tmp
        return out


def dense_matrix(h: Hamiltonian) -> np.ndarray:
    n = h.n_qubits
    if n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense path capped at {DENSE_MAX_QUBITS} qubits")
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for (xm, ym, zm, w) in h.masked_terms():
        flip = xm | ym
        ny = int(ym).bit_count()
        pref = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)[ny & 3]
        c = pref * (1.0 - 2.0 * ((np.bitwise_count(idx & (ym | zm)) & 1).astype(np.float64)))
        out[idx ^ flip, idx] += w * c
    return out


def _dense(h: Hamiltonian, k: int, want_vectors: bool) -> SpectrumResult:
    dim = 1 << h.n_qubits
    if not (1 <= k <= dim):
        raise ValueError(f"k must be in 1..{dim}")
    m = dense_matrix(h)
    if _is_real(h):
        m = np.ascontiguousarray(m.real)
    if want_vectors:
        vals, vecs = scipy.linalg.eigh(m, subset_by_index=(0, k - 1))
        vectors = np.ascontiguousarray(vecs.T).astype(np.complex128)
    else:
        vals = scipy.linalg.eigh(m, eigvals_only=True, subset_by_index=(0, k - 1))
        vectors = None
    return SpectrumResult(tuple(float(v) for v in vals), "dense", vectors)


def _crude_low_estimate(comp: _CompiledH, rng: np.random.Generator) -> float:
    """Rough lower Ritz value from a short scalar Lanczos pass (no
    reorthogonalization; ghosts are irrelevant for a bound estimate)."""
    dim = comp.dim
    dtype = np.float64 if comp.real else np.complex128
    steps = min(40, dim - 1)
    v = rng.standard_normal(dim).astype(dtype)
    if not comp.real:
        v = v + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    prev = np.zeros_like(v)
    beta_prev = 0.0
    alphas, betas = [], []
    hv = np.empty_like(v)
    tmp = np.empty_like(v)
    for _ in range(steps):
        comp.matvec_into(v, hv, tmp)
        alpha = float(np.vdot(v, hv).real)
        hv -= alpha * v
        hv -= beta_prev * prev
        beta = float(np.linalg.norm(hv))
        alphas.append(alpha)
        if beta < 1e-12:
            break
        betas.append(beta)
        prev, v = v, hv / beta
        beta_prev = beta
    t = np.diag(np.asarray(alphas))
    if betas:
        b = np.asarray(betas[:len(alphas) - 1])
        t += np.diag(b, 1) + np.diag(b, -1)
    return float(np.linalg.eigvalsh(t)[0])


def _filtered_block(comp: _CompiledH, rows: np.ndarray,
                    rng: np.random.Generator, degree: int) -> np.ndarray:
    """Chebyshev-damp the window [a, b] covering all but the lowest part of
    the spectrum, so the returned rows are heavily weighted toward the low
    eigenvectors.  b is the triangle-inequality norm bound, which is
    guaranteed to cover the top of the spectrum; a only needs to sit above
    the ground energy to help and is harmless when it does not."""
    b = comp.norm_bound + 1e-9
    lo = _crude_low_estimate(comp, rng)
    a = lo + 0.02 * (b - lo)
    half = 0.5 * (b - a)
    if half < 1e-12 or degree < 1:
        return rows
    center = 0.5 * (a + b)
    cur = rows
    hv = np.empty_like(rows[0])
    tmp = np.empty_like(rows[0])

    def lmap(block: np.ndarray) -> np.ndarray:
        out = np.empty_like(block)
        for i in range(block.shape[0]):
            comp.matvec_into(block[i], hv, tmp)
            out[i] = (hv - center * block[i]) / half
        return out

    prev = cur
    cur = lmap(cur)
    for _ in range(degree - 1):
        nxt = 2.0 * lmap(cur) - prev
        prev, cur = cur, nxt
        # consistent pair rescale keeps the recurrence valid while
        # preventing overflow (growth below a is exponential in degree)
        scale = np.abs(cur).max()
        if scale > 1e120:
            cur /= scale
            prev /= scale
    return cur


def _lanczos(h: Hamiltonian, k: int, want_vectors: bool, *, seed: int = 1234,
             tol: float = _LANCZOS_TOL,
             max_iters: int = _LANCZOS_MAX_ITERS) -> SpectrumResult:
    dim = 1 << h.n_qubits
    if not (1 <= k <= dim // 4):
        raise ValueError(f"k={k} too large for dim {dim}")
    comp = _CompiledH(h)
    dtype = np.float64 if comp.real else np.complex128
    block = min(k + 2, dim // 2)
    cap = min(block * max_iters, dim)
    # np.empty commits pages lazily, so the cap-sized basis costs only
    # what convergence actually uses.
    bmat = np.empty((cap, dim), dtype=dtype)
    # T = B H B^dagger is genuinely complex Hermitian when H has odd-Y
    # terms; storing only its real part stalls convergence.
    tmat = np.zeros((cap, cap), dtype=dtype)
    tmp = np.empty(dim, dtype=dtype)
    rng = np.random.default_rng(seed)
    m = 0

    def fresh(rows: int) -> np.ndarray:
        v = rng.standard_normal((rows, dim))
        return v if comp.real else v + 1j * rng.standard_normal((rows, dim))

    def overlaps(q: np.ndarray) -> np.ndarray:
        # <b_i, q_r> for all basis rows i and candidate rows r, conjugating
        # only the (block, dim)-sized operand so the basis is never copied.
        if comp.real:
            return bmat[:m] @ q.T
        out = bmat[:m] @ q.conj().T
        np.conj(out, out=out)
        return out

    def append(q: np.ndarray) -> int:
        # Orthogonalize candidate rows against the basis (two passes, as
        # one gemm per pass), then among themselves by QR; directions that
        # collapse are reseeded with fresh randoms.
        nonlocal m
        added = 0
        for _ in range(3):
            free = cap - m
            if free == 0 or q.shape[0] == 0:
                break
            for _ in range(2):
                if m:
                    q -= overlaps(q).T @ bmat[:m]
            qt, r = np.linalg.qr(q.T)
            good = np.abs(np.diag(r)) > 1e-10
            rows = qt.T[good][:free]
            bmat[m:m + rows.shape[0]] = rows
            m += rows.shape[0]
            added += rows.shape[0]
            if good.all():
                break
            q = fresh(int((~good).sum()))
        return added

    def ritz(first_k: int):
        evals, evecs = np.linalg.eigh(tmat[:m, :m])
        res = np.empty(first_k)
        vecs = np.empty((first_k, dim), dtype=dtype)
        hv = np.empty(dim, dtype=dtype)
        for c in range(first_k):
            vecs[c] = evecs[:, c] @ bmat[:m]
            comp.matvec_into(vecs[c], hv, tmp)
            res[c] = np.linalg.norm(hv - evals[c] * vecs[c])
        return evals[:first_k], vecs, res

    queue = _filtered_block(comp, fresh(block), rng, _FILTER_DEGREE)
    evals = vecs = None
    resid = np.array([np.inf])
    since_check = 0
    for _ in range(max_iters):
        lo = m
        if append(queue) == 0:
            break  # space exhausted
        hv_block = np.empty((m - lo, dim), dtype=dtype)
        for i in range(m - lo):
            comp.matvec_into(bmat[lo + i], hv_block[i], tmp)
        coeffs = overlaps(hv_block)
        tmat[:m, lo:m] = coeffs
        tmat[lo:m, :m] = coeffs.conj().T
        queue = hv_block
        since_check += 1
        if m >= k and (since_check >= _CHECK_EVERY or m >= cap):
            since_check = 0
            evals, vecs, resid = ritz(k)
            if np.all(resid <= tol):
                break
        if m >= cap:
            break
    if m >= k and np.any(resid > tol):  # final check after cap/exhaustion
        evals, vecs, resid = ritz(k)

    if evals is None or not np.all(resid <= tol):
        raise RuntimeError(
            f"block Lanczos did not converge within {max_iters} iterations "
            f"(basis {m}, residuals {np.asarray(resid).tolist()})")
    vectors = np.asarray(vecs, dtype=np.complex128) if want_vectors else None
    return SpectrumResult(tuple(float(v) for v in evals[:k]), "iterative", vectors)


def low_spectrum(h: Hamiltonian, k: int = 1, *, method: str = "auto",
                 want_vectors: bool = False, seed: int = 1234) -> SpectrumResult:
    """Lowest k eigenvalues; dense for n <= 12, block Lanczos above."""
    if h.n_qubits > MAX_QUBITS:
        raise ValueError(f"ED capped at {MAX_QUBITS} qubits")
    if not (1 <= k <= 8):
        raise ValueError("k must be in 1..8")
    if method == "auto":
        method = "dense" if h.n_qubits <= DENSE_MAX_QUBITS else "iterative"
    if method == "dense":
        return _dense(h, k, want_vectors)
    if method == "iterative":
        return _lanczos(h, k, want_vectors, seed=seed)
    raise ValueError(f"method must be auto|dense|iterative, got {method!r}")


def ground_energy(h: Hamiltonian, *, method: str = "auto", seed: int = 1234) -> float:
    return low_spectrum(h, 1, method=method, seed=seed).eigenvalues[0]
