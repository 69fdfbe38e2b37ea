import json
import math

import pytest

from kitvqe.lattice import build_preset
from kitvqe.model import (Hamiltonian, ModelParams, PauliString,
                          build_hamiltonian, measurement_groups, preset)

SQ3 = math.sqrt(3.0)


def test_preset_values():
    assert preset("TC_z") == ModelParams(0.1, 0.1, 1.0)
    assert preset("GL") == ModelParams(1 / math.sqrt(2), 1 / math.sqrt(2), 1.0)
    h = 0.05 / SQ3
    assert preset("TC_z+h") == ModelParams(0.1, 0.1, 1.0, h, h, h)
    assert preset("GL+h") == ModelParams(1 / math.sqrt(2), 1 / math.sqrt(2),
                                         1.0, h, h, h)


def test_unknown_preset_label():
    with pytest.raises(ValueError):
        preset("TC_x")


def test_params_must_be_finite():
    with pytest.raises(ValueError):
        ModelParams(float("nan"), 0.0, 1.0)


def _by_weight(h: Hamiltonian) -> dict[float, int]:
    out: dict[float, int] = {}
    for t in h.terms:
        out[t.weight] = out.get(t.weight, 0) + 1
    return out


def test_open8_tcz_terms():
    h = build_hamiltonian(build_preset("open8"), preset("TC_z"))
    assert len(h.terms) == 8
    assert all(len(t.sites) == 2 for t in h.terms)
    # couplings enter with a minus sign
    assert _by_weight(h) == {-0.1: 4, -1.0: 4}


def test_zero_params_give_empty_hamiltonian():
    h = build_hamiltonian(build_preset("open8"), ModelParams(0, 0, 0))
    assert h.terms == ()


def test_open8_glh_terms():
    h = build_hamiltonian(build_preset("open8"), preset("GL+h"))
    two = [t for t in h.terms if len(t.sites) == 2]
    one = [t for t in h.terms if len(t.sites) == 1]
    assert len(two) == 8 and len(one) == 24
    for t in two:
        (_, ax1), (_, ax2) = t.sites
        assert ax1 == ax2
        expected = -1.0 if ax1 == "Z" else -1 / math.sqrt(2)
        assert t.weight == pytest.approx(expected, abs=0)
    # field enters with a plus sign
    assert all(t.weight == pytest.approx(0.05 / SQ3) for t in one)


def test_build_is_linear_in_params():
    lat = build_preset("open8")
    p = preset("GL+h")
    doubled = ModelParams(2 * p.jx, 2 * p.jy, 2 * p.jz,
                          2 * p.hx, 2 * p.hy, 2 * p.hz)
    h1 = build_hamiltonian(lat, p)
    h2 = build_hamiltonian(lat, doubled)
    assert len(h1.terms) == len(h2.terms)
    for a, b in zip(h1.terms, h2.terms):
        assert a.sites == b.sites
        assert b.weight == pytest.approx(2 * a.weight, rel=1e-15)


def test_measurement_group_sizes():
    lat = build_preset("open8")
    tcz = dict((ax, len(terms)) for ax, terms in
               measurement_groups(build_hamiltonian(lat, preset("TC_z"))))
    assert tcz == {"X": 2, "Y": 2, "Z": 4}
    glh = dict((ax, len(terms)) for ax, terms in
               measurement_groups(build_hamiltonian(lat, preset("GL+h"))))
    assert glh == {"X": 10, "Y": 10, "Z": 12}


def test_groups_partition_the_term_list():
    h = build_hamiltonian(build_preset("open8"), preset("GL+h"))
    groups = measurement_groups(h)
    pooled = [t for _, terms in groups for t in terms]
    assert len(pooled) == len(h.terms)
    assert set(pooled) == set(h.terms)


def test_empty_hamiltonian_has_no_groups():
    assert measurement_groups(Hamiltonian(4, ())) == []


def test_mixed_axis_term_rejected():
    h = Hamiltonian(2, (PauliString(1.0, ((0, "X"), (1, "Z"))),))
    with pytest.raises(ValueError):
        measurement_groups(h)


def test_pauli_string_masks():
    s = PauliString(0.5, ((0, "X"), (2, "Y"), (3, "Z")))
    assert s.masks() == (0b0001, 0b0100, 0b1000)
    assert s.single_axis() is None
    assert PauliString(1.0, ((1, "Y"), (4, "Y"))).single_axis() == "Y"


def test_hamiltonian_json_round_trip():
    h = build_hamiltonian(build_preset("open8"), preset("GL+h"))
    clone = Hamiltonian.from_json(h.to_json())
    assert clone == h
    payload = json.loads(h.to_json())
    assert payload["n_qubits"] == 8
    assert len(payload["terms"]) == 32


def test_term_order_is_byte_stable():
    lat = build_preset("open8")
    a = build_hamiltonian(lat, preset("GL+h")).to_json()
    b = build_hamiltonian(lat, preset("GL+h")).to_json()
    assert a == b
