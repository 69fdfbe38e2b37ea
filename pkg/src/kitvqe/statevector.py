"""Statevector simulation: gates, compiled gate programs, expectation, sampling.

States are complex128 numpy arrays of length ``2**n`` with site 0 at the
least significant bit.  Circuits are lists of :class:`GateOp`; the hot
path compiles them once into flat arrays (a :class:`Program`) executed
by the active kernel backend in a single call.

Gate conventions (theta is the gate angle after slot resolution):

* ``RX(theta) = exp(-i theta X / 2)``, ``RZ(theta) = exp(-i theta Z / 2)``
* ``CZ = diag(1, 1, 1, -1)``; ``CPHASE(phi) = diag(1, 1, 1, e^{i phi})``
* ``XY(theta) = exp(-i theta (XX + YY) / 4)``
* ``EXP_PAULI_STRING(P, theta) = exp(-i theta P)`` with the full angle
* ``PAULI(P)`` multiplies by the Pauli string itself
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .model import Hamiltonian, PauliString

MAX_QUBITS = 24

GATE_KINDS = ("RX", "RZ", "CZ", "CPHASE", "XY", "PAULI", "EXP_PAULI_STRING")


@dataclass(frozen=True)
class GateOp:
    """One gate. ``slot`` binds the angle to a parameter vector entry.

    For slot-bound gates the resolved gate angle is ``scale * theta[slot]``;
    for fixed gates it is ``angle``.  ``pauli`` carries the string for
    PAULI / EXP_PAULI_STRING kinds.  ``tag`` is free-form metadata (used
    to label CZs for folding schemes).
    """

    kind: str
    sites: tuple[int, ...] = ()
    angle: float | None = None
    slot: int | None = None
    scale: float = 1.0
    pauli: tuple[tuple[int, str], ...] | None = None
    tag: tuple | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("RX", "RZ") and len(self.sites) != 1:
            raise ValueError(f"{self.kind} needs exactly one site")
        if self.kind in ("CZ", "CPHASE", "XY") and len(self.sites) != 2:
            raise ValueError(f"{self.kind} needs exactly two sites")
        if self.kind in ("PAULI", "EXP_PAULI_STRING") and not self.pauli:
            raise ValueError(f"{self.kind} needs a pauli string")
        needs_angle = self.kind in ("RX", "RZ", "CPHASE", "XY", "EXP_PAULI_STRING")
        if needs_angle and self.slot is None and self.angle is None:
            raise ValueError(f"{self.kind} needs an angle or a slot")


def rx(site: int, *, angle: float | None = None, slot: int | None = None,
       scale: float = 1.0) -> GateOp:
    return GateOp("RX", (site,), angle=angle, slot=slot, scale=scale)


def rz(site: int, *, angle: float | None = None, slot: int | None = None,
       scale: float = 1.0) -> GateOp:
    return GateOp("RZ", (site,), angle=angle, slot=slot, scale=scale)


def cz(i: int, j: int, tag: tuple | None = None) -> GateOp:
    return GateOp("CZ", (i, j), tag=tag)


def xy(i: int, j: int, *, angle: float | None = None, slot: int | None = None,
       scale: float = 1.0) -> GateOp:
    return GateOp("XY", (i, j), angle=angle, slot=slot, scale=scale)


def exp_pauli_gate(pauli: tuple[tuple[int, str], ...], *, angle: float | None = None,
                   slot: int | None = None, scale: float = 1.0) -> GateOp:
    return GateOp("EXP_PAULI_STRING", tuple(s for s, _ in pauli), angle=angle,
                  slot=slot, scale=scale, pauli=tuple(pauli))


def pauli_gate(pauli: tuple[tuple[int, str], ...]) -> GateOp:
    return GateOp("PAULI", tuple(s for s, _ in pauli), pauli=tuple(pauli))


def _pauli_masks(pauli: tuple[tuple[int, str], ...]) -> tuple[int, int, int]:
    xm = ym = zm = 0
    for idx, ax in pauli:
        bit = 1 << idx
        if ax == "X":
            xm |= bit
        elif ax == "Y":
            ym |= bit
        elif ax == "Z":
            zm |= bit
        else:
            raise ValueError(f"bad pauli axis {ax!r}")
    return xm, ym, zm


_EMPTY_I64 = np.zeros(0, dtype=np.int64)


@dataclass
class Program:
    """A circuit compiled to flat arrays for one-call execution."""

    n_qubits: int
    param_count: int
    op: np.ndarray
    si: np.ndarray
    sj: np.ndarray
    xm: np.ndarray
    ym: np.ndarray
    zm: np.ndarray
    base: np.ndarray      # fixed part of the exponent angle
    scale: np.ndarray     # multiplier on theta[slot]
    slot: np.ndarray      # -1 for fixed gates
    eps_scale: np.ndarray  # coherent-error multiplier per gate
    n_cz: int
    cz_tags: tuple = ()

    def resolve_angles(self, theta: np.ndarray | None, eps: float = 0.0) -> np.ndarray:
        angles = self.base.copy()
        bound = self.slot >= 0
        if bound.any():
            if theta is None:
                raise ValueError("program has parameter slots but no theta given")
            theta = np.asarray(theta, dtype=np.float64)
            if theta.shape != (self.param_count,):
                raise ValueError(
                    f"theta shape {theta.shape} != ({self.param_count},)")
            angles[bound] += self.scale[bound] * theta[self.slot[bound]]
            if eps != 0.0:
                angles[bound] += eps * self.eps_scale[bound]
        return angles


def compile_program(gates: list[GateOp] | tuple[GateOp, ...], n_qubits: int,
                    param_count: int) -> Program:
    """Lower a gate list to a Program.

    RX/RZ become Pauli exponentials with a 0.5 angle factor; the
    coherent-error multiplier tracks the same factor so an error eps on
    the *gate* angle lands as eps/2 on the exponent.
    """
    g_count = len(gates)
    op = np.zeros(g_count, dtype=np.int32)
    si = np.full(g_count, -1, dtype=np.int32)
    sj = np.full(g_count, -1, dtype=np.int32)
    xm = np.zeros(g_count, dtype=np.int64)
    ym = np.zeros(g_count, dtype=np.int64)
    zm = np.zeros(g_count, dtype=np.int64)
    base = np.zeros(g_count, dtype=np.float64)
    scale = np.ones(g_count, dtype=np.float64)
    slot = np.full(g_count, -1, dtype=np.int32)
    epsf = np.zeros(g_count, dtype=np.float64)
    n_cz = 0
    cz_tags = []
    K = kernels
    for g, gate in enumerate(gates):
        for s in gate.sites:
            if not (0 <= s < n_qubits):
                raise ValueError(f"gate {gate} touches site {s} outside 0..{n_qubits-1}")
        if gate.slot is not None and not (0 <= gate.slot < param_count):
            raise ValueError(f"gate {gate} slot outside 0..{param_count-1}")
        kind = gate.kind
        if kind in ("RX", "RZ"):
            op[g] = K.OP_EXPP
            bit = 1 << gate.sites[0]
            if kind == "RX":
                xm[g] = bit
            else:
                zm[g] = bit
            _bind(g, gate, 0.5, base, scale, slot, epsf)
        elif kind == "EXP_PAULI_STRING":
            op[g] = K.OP_EXPP
            xm[g], ym[g], zm[g] = _pauli_masks(gate.pauli)
            _bind(g, gate, 1.0, base, scale, slot, epsf)
        elif kind == "PAULI":
            op[g] = K.OP_PAULI
            xm[g], ym[g], zm[g] = _pauli_masks(gate.pauli)
        elif kind == "CZ":
            op[g] = K.OP_CZ
            si[g], sj[g] = gate.sites
            cz_tags.append(gate.tag)
            n_cz += 1
        elif kind == "CPHASE":
            op[g] = K.OP_CPHASE
            si[g], sj[g] = gate.sites
            _bind(g, gate, 1.0, base, scale, slot, epsf)
        elif kind == "XY":
            op[g] = K.OP_XY
            si[g], sj[g] = gate.sites
            _bind(g, gate, 1.0, base, scale, slot, epsf)
        else:  # pragma: no cover - GateOp validates kinds
            raise ValueError(f"unknown gate kind {kind!r}")
    return Program(n_qubits, param_count, op, si, sj, xm, ym, zm, base, scale,
                   slot, epsf, n_cz, tuple(cz_tags))


def _bind(g: int, gate: GateOp, factor: float, base, scale, slot, epsf) -> None:
    if gate.slot is not None:
        slot[g] = gate.slot
        scale[g] = factor * gate.scale
        epsf[g] = factor
    else:
        base[g] = factor * gate.angle
        scale[g] = 0.0


def execute(state: np.ndarray, program: Program, theta: np.ndarray | None = None,
            *, eps: float = 0.0, injections=None) -> np.ndarray:
    """Run a compiled program in place and return the state.

    ``injections`` is an optional (ord, xm, ym, zm) int64 array tuple of
    Pauli insertions keyed by CZ ordinal, sorted by ordinal.
    """
    angles = program.resolve_angles(theta, eps)
    if injections is None:
        io = ix = iy = iz = _EMPTY_I64
    else:
        io, ix, iy, iz = injections
    kernels.run_program(state, program.n_qubits, program.op, program.si,
                        program.sj, program.xm, program.ym, program.zm,
                        angles, io, ix, iy, iz)
    return state


def zero_state(n_qubits: int) -> np.ndarray:
    """|0...0> on ``n_qubits`` qubits; capped at MAX_QUBITS to bound memory."""
    if not (1 <= n_qubits <= MAX_QUBITS):
        raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def num_qubits(state: np.ndarray) -> int:
    n = int(state.size).bit_length() - 1
    if (1 << n) != state.size:
        raise ValueError(f"state length {state.size} is not a power of two")
    return n


def apply(state: np.ndarray, gate: GateOp, theta: np.ndarray | None = None) -> np.ndarray:
    """Apply a single gate in place (test/debug path; production code compiles)."""
    prog = compile_program([gate], num_qubits(state),
                           0 if gate.slot is None else gate.slot + 1)
    return execute(state, prog, theta)


def expectation(state: np.ndarray, h: Hamiltonian) -> float:
    n = num_qubits(state)
    if h.n_qubits != n:
        raise ValueError(f"hamiltonian is on {h.n_qubits} qubits, state on {n}")
    total = 0.0
    for (xm, ym, zm, w) in h.masked_terms():
        total += w * kernels.expval_pauli(state, n, xm, ym, zm)
    return total


def expval_string(state: np.ndarray, pauli: tuple[tuple[int, str], ...]) -> float:
    xm, ym, zm = _pauli_masks(pauli)
    return kernels.expval_pauli(state, num_qubits(state), xm, ym, zm)


def overlap_sq(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2."""
    if a.size != b.size:
        raise ValueError("states must have equal dimension")
    ov = np.vdot(a, b)
    return float(ov.real * ov.real + ov.imag * ov.imag)


# Basis rotations mapping the measured axis onto Z.  Probabilities are
# insensitive to global phase and to any trailing diagonal, so X uses
# RZ(pi/2) then RX(pi/2), and Y uses RX(pi/2) alone.
_HALF_PI = math.pi / 2.0


def basis_rotation_gates(basis: str, n_qubits: int) -> list[GateOp]:
    if len(basis) == 1:
        basis = basis * n_qubits
    if len(basis) != n_qubits:
        raise ValueError(f"basis length {len(basis)} != n_qubits {n_qubits}")
    gates: list[GateOp] = []
    for site, ax in enumerate(basis):
        if ax == "X":
            gates.append(rz(site, angle=_HALF_PI))
            gates.append(rx(site, angle=_HALF_PI))
        elif ax == "Y":
            gates.append(rx(site, angle=_HALF_PI))
        elif ax != "Z":
            raise ValueError(f"basis axis must be X|Y|Z, got {ax!r}")
    return gates


def sample_ints(state: np.ndarray, basis: str, shots: int,
                rng: np.random.Generator) -> np.ndarray:
    """Measure every qubit in ``basis``; returns shot outcomes as int64 indices."""
    n = num_qubits(state)
    work = state.copy()
    gates = basis_rotation_gates(basis, n)
    if gates:
        execute(work, compile_program(gates, n, 0))
    p = (work.real * work.real + work.imag * work.imag)
    return sample_from_probs(p, shots, rng)


def sample_from_probs(p: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(p)
    norm = cdf[-1]
    if not (0.999999 < norm < 1.000001):
        raise ValueError(f"probabilities sum to {norm}, state not normalized")
    cdf /= norm
    return np.searchsorted(cdf, rng.random(shots), side="right").astype(np.int64)


def sample(state: np.ndarray, basis: str, shots: int,
           rng: np.random.Generator) -> dict[int, int]:
    """Counts dict {basis_index: count} for ``shots`` measurements."""
    if shots < 1:
        raise ValueError("shots must be positive")
    ints = sample_ints(state, basis, shots, rng)
    vals, counts = np.unique(ints, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def estimate_terms_from_ints(samples: np.ndarray,
                             terms: list[tuple[int, float]]) -> float:
    """Sum of w * mean((-1)^<bits in mask>) over (mask, w) terms."""
    total = 0.0
    inv = 1.0 / len(samples)
    for mask, w in terms:
        ones = int(np.count_nonzero(np.bitwise_count(samples & mask) & 1))
        total += w * (1.0 - 2.0 * ones * inv)
    return total
