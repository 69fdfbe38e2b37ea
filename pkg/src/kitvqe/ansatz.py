"""Parameterized circuits: Hamiltonian-variational and hardware-efficient ansaetze.

Parameter layout
----------------
HVA layer ``l`` (0-based) owns slots ``6l .. 6l+5`` in the order
(x bonds, X field, y bonds, Y field, z bonds, Z field); one slot is
shared by all bonds (or all field rotations) of the same axis within the
layer, and gates of layer 0 apply first.

Both HEA kinds start with ``U0``: per qubit ``i``, RX at slot ``2i``
then RZ at slot ``2i+1``.  HEA-CZ adds, per layer and edge, CZ followed
by RX on both sites then RZ on both sites (4 slots per edge).  HEA-XY
adds, per layer and edge, a parameterized XY then an RZ-RX-RZ triple on
both sites (7 slots per edge).  Edges iterate in canonical bond order
(the equations leave the order open; fixing it keeps circuits
byte-stable).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .lattice import AXES, Lattice
from .statevector import GateOp, cz, exp_pauli_gate, rx, rz, xy

ANSATZ_KINDS = ("HVA", "HEA-CZ", "HEA-XY")

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class AnsatzSpec:
    kind: str
    layers: int
    lattice: Lattice
    connectivity: tuple[tuple[int, int], ...] | None = None  # HEA edge set

    def __post_init__(self):
        if self.kind not in ANSATZ_KINDS:
            raise ValueError(f"kind must be one of {ANSATZ_KINDS}, got {self.kind!r}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.connectivity is not None and self.kind == "HVA":
            raise ValueError("HVA takes its structure from the lattice bonds")

    def edges(self) -> tuple[tuple[int, int], ...]:
        if self.connectivity is not None:
            return self.connectivity
        return tuple((i, j) for (i, j, _ax) in self.lattice.bonds)

    def param_count(self) -> int:
        n = self.lattice.n_qubits
        if self.kind == "HVA":
            return 6 * self.layers
        g = len(self.edges())
        if self.kind == "HEA-CZ":
            return 2 * n + 4 * self.layers * g
        return 2 * n + 7 * self.layers * g


@dataclass(frozen=True)
class CircuitIR:
    n_qubits: int
    gates: tuple[GateOp, ...]
    param_count: int
    cz_count: int  # CZ gates present in this gate list (ZNE accounting)

    def __post_init__(self):
        actual = sum(1 for g in self.gates if g.kind == "CZ")
        if actual != self.cz_count:
            raise ValueError(f"cz_count {self.cz_count} != actual {actual}")
        for g in self.gates:
            if g.slot is not None and not (0 <= g.slot < self.param_count):
                raise ValueError(f"slot {g.slot} outside param_count {self.param_count}")

    def to_json(self) -> str:
        entries = []
        for g in self.gates:
            entry: dict = {"kind": g.kind, "sites": list(g.sites)}
            if g.slot is not None:
                entry["slot"] = g.slot
                if g.scale != 1.0:
                    entry["scale"] = g.scale
            elif g.angle is not None:
                entry["angle"] = g.angle
            if g.pauli is not None:
                entry["pauli"] = [[i, ax] for i, ax in g.pauli]
            entries.append(entry)
        return json.dumps({"n_qubits": self.n_qubits,
                           "param_count": self.param_count,
                           "gates": entries}, indent=2)


def hva_circuit(lattice: Lattice, layers: int) -> CircuitIR:
    """Alternating bond/field exponential blocks; full-angle convention."""
    if layers < 1:
        raise ValueError("layers must be >= 1")
    gates: list[GateOp] = []
    for layer in range(layers):
        for a_idx, axis in enumerate(AXES):
            op = axis.upper()
            bond_slot = 6 * layer + 2 * a_idx
            field_slot = bond_slot + 1
            for (i, j, _ax) in lattice.bonds_by_axis(axis):
                gates.append(exp_pauli_gate(((i, op), (j, op)), slot=bond_slot))
            for site in range(lattice.n_qubits):
                gates.append(exp_pauli_gate(((site, op),), slot=field_slot))
    return CircuitIR(lattice.n_qubits, tuple(gates), 6 * layers, 0)


def _u0_gates(n_qubits: int) -> list[GateOp]:
    gates = []
    for i in range(n_qubits):
        gates.append(rx(i, slot=2 * i))
        gates.append(rz(i, slot=2 * i + 1))
    return gates


def hea_cz_circuit(lattice: Lattice, layers: int,
                   connectivity: tuple[tuple[int, int], ...] | None = None) -> CircuitIR:
    spec = AnsatzSpec("HEA-CZ", layers, lattice, connectivity)
    edges = spec.edges()
    n = lattice.n_qubits
    gates = _u0_gates(n)
    n_cz = 0
    for layer in range(layers):
        for e_idx, (j, k) in enumerate(edges):
            base = 2 * n + 4 * (layer * len(edges) + e_idx)
            gates.append(cz(j, k, tag=(layer, e_idx)))
            n_cz += 1
            gates.append(rx(j, slot=base + 0))
            gates.append(rx(k, slot=base + 1))
            gates.append(rz(j, slot=base + 2))
            gates.append(rz(k, slot=base + 3))
    return CircuitIR(n, tuple(gates), spec.param_count(), n_cz)


def hea_xy_circuit(lattice: Lattice, layers: int,
                   connectivity: tuple[tuple[int, int], ...] | None = None) -> CircuitIR:
    spec = AnsatzSpec("HEA-XY", layers, lattice, connectivity)
    edges = spec.edges()
    n = lattice.n_qubits
    gates = _u0_gates(n)
    for layer in range(layers):
        for e_idx, (j, k) in enumerate(edges):
            base = 2 * n + 7 * (layer * len(edges) + e_idx)
            gates.append(xy(j, k, slot=base + 0))
            gates.append(rz(j, slot=base + 1))
            gates.append(rx(j, slot=base + 2))
            gates.append(rz(j, slot=base + 3))
            gates.append(rz(k, slot=base + 4))
            gates.append(rx(k, slot=base + 5))
            gates.append(rz(k, slot=base + 6))
    return CircuitIR(n, tuple(gates), spec.param_count(), 0)


def build_circuit(spec: AnsatzSpec) -> CircuitIR:
    if spec.kind == "HVA":
        return hva_circuit(spec.lattice, spec.layers)
    if spec.kind == "HEA-CZ":
        return hea_cz_circuit(spec.lattice, spec.layers, spec.connectivity)
    return hea_xy_circuit(spec.lattice, spec.layers, spec.connectivity)


def _h_gates(site: int) -> list[GateOp]:
    # H = i * RZ(pi/2) RX(pi/2) RZ(pi/2); the i cancels over the four
    # H applications of each bond exponential, so equality is exact.
    return [rz(site, angle=_HALF_PI), rx(site, angle=_HALF_PI),
            rz(site, angle=_HALF_PI)]


def _zz_block(i: int, j: int, src: GateOp, tag_base: tuple) -> list[GateOp]:
    # exp(-i theta ZZ) = CNOT_ij RZ_j(2 theta) CNOT_ij, CNOT = H_j CZ H_j.
    if src.slot is not None:
        core = rz(j, slot=src.slot, scale=2.0 * src.scale)
    else:
        core = rz(j, angle=2.0 * src.angle)
    out = []
    out += _h_gates(j) + [cz(i, j, tag=tag_base + (1,))] + _h_gates(j)
    out.append(core)
    out += _h_gates(j) + [cz(i, j, tag=tag_base + (2,))] + _h_gates(j)
    return out


def _decompose_exp(gate: GateOp, counters: dict) -> list[GateOp]:
    pauli = gate.pauli
    if len(pauli) == 1:
        (site, ax) = pauli[0]
        if ax == "X":
            return [_scaled(rx, site, gate)]
        if ax == "Z":
            return [_scaled(rz, site, gate)]
        # exp(-i theta Y) = RZ(pi/2) RX(2 theta) RZ(-pi/2)
        return [rz(site, angle=-_HALF_PI), _scaled(rx, site, gate),
                rz(site, angle=_HALF_PI)]
    if len(pauli) == 2:
        (i, ax1), (j, ax2) = pauli
        if ax1 != ax2:
            raise ValueError(f"no decomposition for mixed-axis string {pauli}")
        axis = ax1.lower()
        # HVA bond slots encode the layer as slot // 6; other circuits
        # land in block 0, which is all folding schemes ever address.
        block = gate.slot // 6 if gate.slot is not None else 0
        idx = counters.setdefault((block, axis), 0)
        counters[(block, axis)] = idx + 1
        tag_base = (block, axis, idx)
        if ax1 == "Z":
            return _zz_block(i, j, gate, tag_base)
        if ax1 == "X":
            wrap = _h_gates(i) + _h_gates(j)
            return wrap + _zz_block(i, j, gate, tag_base) + wrap
        # YY: conjugate ZZ by RX(pi/2) on both sites
        pre = [rx(i, angle=-_HALF_PI), rx(j, angle=-_HALF_PI)]
        post = [rx(i, angle=_HALF_PI), rx(j, angle=_HALF_PI)]
        return pre + _zz_block(i, j, gate, tag_base) + post
    raise ValueError(f"no decomposition for weight-{len(pauli)} string")


def _scaled(builder, site: int, src: GateOp) -> GateOp:
    # exp(-i theta P_single) = R_P(2 theta)
    if src.slot is not None:
        return builder(site, slot=src.slot, scale=2.0 * src.scale)
    return builder(site, angle=2.0 * src.angle)


def cz_decompose(circuit: CircuitIR) -> CircuitIR:
    """Rewrite Pauli exponentials into RX/RZ/CZ form for noise emulation.

    Bond exponentials become basis rotations around a CNOT-RZ-CNOT core
    (two CZs per bond exponential); field exponentials become single
    rotations.  Native RX/RZ/CZ/XY gates pass through.  The rewrite is
    exact including global phase.

    CZs introduced here are tagged ``(block, axis, bond_index, which)``
    where ``block`` is the HVA layer (from the parameter slot) and
    ``which`` is 1 or 2 for the first or second CZ of the pair.
    """
    gates: list[GateOp] = []
    n_cz = 0
    counters: dict = {}
    for gate in circuit.gates:
        if gate.kind == "EXP_PAULI_STRING":
            new = _decompose_exp(gate, counters)
            gates.extend(new)
            n_cz += sum(1 for g in new if g.kind == "CZ")
        else:
            gates.append(gate)
            if gate.kind == "CZ":
                n_cz += 1
    return CircuitIR(circuit.n_qubits, tuple(gates), circuit.param_count, n_cz)
