import json

import numpy as np
import pytest

from kitvqe.ansatz import (ANSATZ_KINDS, AnsatzSpec, build_circuit,
                           cz_decompose, hea_cz_circuit, hea_xy_circuit,
                           hva_circuit)
from kitvqe.lattice import PRESET_NAMES, build_preset
from kitvqe.statevector import compile_program, execute, overlap_sq, zero_state
from kitvqe.vqe import simulate_state


def test_param_count_examples():
    open8 = build_preset("open8")
    assert hva_circuit(open8, 4).param_count == 24
    assert hea_cz_circuit(open8, 1).param_count == 48
    assert hea_xy_circuit(open8, 4).param_count == 240
    assert hea_xy_circuit(build_preset("open4"), 1).param_count == 29
    open16 = build_preset("open16")
    assert len(open16.bonds) == 18
    assert hea_xy_circuit(open16, 4).param_count == 536


def test_param_count_formulas_across_presets():
    for name in PRESET_NAMES:
        lat = build_preset(name)
        n, g = lat.n_qubits, len(lat.bonds)
        for layers in (1, 3, 8):
            assert hva_circuit(lat, layers).param_count == 6 * layers
            assert (hea_cz_circuit(lat, layers).param_count
                    == 2 * n + 4 * layers * g)
            assert (hea_xy_circuit(lat, layers).param_count
                    == 2 * n + 7 * layers * g)


def test_spec_validation():
    lat = build_preset("open4")
    with pytest.raises(ValueError):
        AnsatzSpec("QAOA", 1, lat)
    with pytest.raises(ValueError):
        AnsatzSpec("HVA", 0, lat)
    with pytest.raises(ValueError):
        AnsatzSpec("HVA", 1, lat, connectivity=((0, 1),))
    for builder in (hva_circuit, hea_cz_circuit, hea_xy_circuit):
        with pytest.raises(ValueError):
            builder(lat, 0)


def test_build_circuit_dispatch():
    lat = build_preset("open8")
    for kind, builder in zip(ANSATZ_KINDS,
                             (hva_circuit, hea_cz_circuit, hea_xy_circuit)):
        assert build_circuit(AnsatzSpec(kind, 2, lat)) == builder(lat, 2)


def test_hva_slot_layout():
    lat = build_preset("open8")
    circ = hva_circuit(lat, 2)
    by_slot: dict[int, list] = {}
    for g in circ.gates:
        by_slot.setdefault(g.slot, []).append(g)
    assert set(by_slot) == set(range(12))
    counts = lat.bond_counts()
    for layer in range(2):
        for a_idx, axis in enumerate("xyz"):
            bond_gates = by_slot[6 * layer + 2 * a_idx]
            field_gates = by_slot[6 * layer + 2 * a_idx + 1]
            assert len(bond_gates) == counts[axis]
            assert len(field_gates) == lat.n_qubits
            for g in bond_gates:
                assert len(g.pauli) == 2
                assert {ax for _i, ax in g.pauli} == {axis.upper()}
            for g in field_gates:
                assert g.pauli == ((g.pauli[0][0], axis.upper()),)


def test_hva_is_identity_at_zero():
    lat = build_preset("open8")
    circ = hva_circuit(lat, 3)
    assert overlap_sq(simulate_state(circ, np.zeros(18)), zero_state(8)) == \
        pytest.approx(1.0, abs=1e-12)
    # identity on arbitrary states, not just |0...0>
    rng = np.random.default_rng(7)
    v = rng.normal(size=256) + 1j * rng.normal(size=256)
    v /= np.linalg.norm(v)
    out = v.copy()
    execute(out, compile_program(list(circ.gates), 8, circ.param_count),
            np.zeros(18))
    assert np.linalg.norm(out - v) < 1e-10


def test_u0_layout():
    lat = build_preset("open4")
    circ = hea_cz_circuit(lat, 1)
    for i in range(4):
        assert circ.gates[2 * i].kind == "RX"
        assert circ.gates[2 * i].slot == 2 * i
        assert circ.gates[2 * i + 1].kind == "RZ"
        assert circ.gates[2 * i + 1].slot == 2 * i + 1


def test_hea_cz_layer_structure():
    lat = build_preset("open8")
    circ = hea_cz_circuit(lat, 3)
    assert circ.cz_count == 8 * 3
    # per edge: CZ then RX,RX,RZ,RZ on its two sites
    body = circ.gates[16:]
    assert len(body) == 3 * 8 * 5
    for e in range(3 * 8):
        chunk = body[5 * e:5 * e + 5]
        assert [g.kind for g in chunk] == ["CZ", "RX", "RX", "RZ", "RZ"]
        sites = set(chunk[0].sites)
        assert {chunk[1].sites[0], chunk[2].sites[0]} == sites
        assert {chunk[3].sites[0], chunk[4].sites[0]} == sites


def test_hea_xy_layer_structure():
    lat = build_preset("open4")
    circ = hea_xy_circuit(lat, 2)
    xy_gates = [g for g in circ.gates if g.kind == "XY"]
    assert len(xy_gates) == 2 * 3
    assert len({g.slot for g in xy_gates}) == len(xy_gates)
    body = circ.gates[8:]
    assert len(body) == 2 * 3 * 7
    for e in range(2 * 3):
        chunk = body[7 * e:7 * e + 7]
        assert [g.kind for g in chunk] == \
            ["XY", "RZ", "RX", "RZ", "RZ", "RX", "RZ"]


def test_all_slots_in_range_and_used():
    for kind in ANSATZ_KINDS:
        circ = build_circuit(AnsatzSpec(kind, 2, build_preset("open8")))
        slots = {g.slot for g in circ.gates if g.slot is not None}
        assert slots == set(range(circ.param_count))


def test_simulation_is_deterministic():
    lat = build_preset("open8")
    circ = hea_xy_circuit(lat, 2)
    theta = np.random.default_rng(19).uniform(-np.pi, np.pi, circ.param_count)
    assert np.array_equal(simulate_state(circ, theta),
                          simulate_state(circ, theta))


def test_rz_commutes_past_cz():
    lat = build_preset("open8")
    circ = hea_cz_circuit(lat, 2)
    gates = list(circ.gates)
    swapped = False
    for i in range(len(gates) - 1):
        a, b = gates[i], gates[i + 1]
        if a.kind == "RZ" and b.kind == "CZ" and a.sites[0] in b.sites:
            gates[i], gates[i + 1] = b, a
            swapped = True
    assert swapped
    moved = type(circ)(circ.n_qubits, tuple(gates), circ.param_count,
                       circ.cz_count)
    theta = np.random.default_rng(23).uniform(-np.pi, np.pi, circ.param_count)
    assert np.linalg.norm(simulate_state(circ, theta)
                          - simulate_state(moved, theta)) < 1e-10


def test_cz_decompose_counts():
    for name, layers in (("open4", 1), ("open8", 4)):
        lat = build_preset(name)
        circ = hva_circuit(lat, layers)
        assert circ.cz_count == 0
        dec = cz_decompose(circ)
        assert dec.cz_count == 2 * len(lat.bonds) * layers
        assert dec.param_count == circ.param_count


def test_circuit_json_export():
    circ = hva_circuit(build_preset("open4"), 1)
    payload = json.loads(circ.to_json())
    assert payload["n_qubits"] == 4
    assert payload["param_count"] == 6
    assert len(payload["gates"]) == len(circ.gates)
    assert all(g["kind"] == "EXP_PAULI_STRING" for g in payload["gates"])


def test_cz_count_field_is_checked():
    circ = hva_circuit(build_preset("open4"), 1)
    with pytest.raises(ValueError):
        type(circ)(circ.n_qubits, circ.gates, circ.param_count, 5)
    with pytest.raises(ValueError):
        type(circ)(circ.n_qubits, circ.gates, 3, 0)  # slot out of range
