import numpy as np
import pytest

from kitvqe import ed
from kitvqe.lattice import build_preset
from kitvqe.model import Hamiltonian, PauliString, build_hamiltonian, preset

REFERENCE = {
    ("open4", "TC_z"): -1.0100,
    ("open4", "GL+h"): -1.5831,
    ("open8", "TC_z"): -4.0100,
    ("open8", "GL+h"): -4.7011,
}


def _h(lattice_name, label):
    return build_hamiltonian(build_preset(lattice_name), preset(label))


@pytest.mark.parametrize("key", sorted(REFERENCE))
def test_ground_energy_reference_values(key):
    assert ed.ground_energy(_h(*key)) == pytest.approx(REFERENCE[key],
                                                       abs=5e-5)


def test_ground_energy_matches_low_spectrum():
    h = _h("open8", "GL+h")
    res = ed.low_spectrum(h, k=4)
    assert ed.ground_energy(h) == pytest.approx(res.eigenvalues[0], abs=1e-9)
    assert res.method == "dense"


def test_dense_and_iterative_agree():
    h = _h("open8", "GL+h")
    dense = ed.low_spectrum(h, k=4, method="dense")
    iterative = ed.low_spectrum(h, k=4, method="iterative")
    assert iterative.method == "iterative"
    assert np.allclose(dense.eigenvalues, iterative.eigenvalues, atol=1e-8)


def test_eigenvector_residuals():
    h = _h("open8", "GL+h")
    for method in ("dense", "iterative"):
        res = ed.low_spectrum(h, k=3, method=method, want_vectors=True)
        for lam, vec in zip(res.eigenvalues, res.eigenvectors):
            resid = np.linalg.norm(ed.matvec(h, vec) - lam * vec)
            assert resid < 1e-8


def test_relabel_invariance():
    lat = build_preset("open8")
    perm = (3, 5, 0, 7, 2, 4, 6, 1)
    h0 = build_hamiltonian(lat, preset("GL+h"))
    h1 = build_hamiltonian(lat.relabel(perm), preset("GL+h"))
    a = ed.low_spectrum(h0, k=4).eigenvalues
    b = ed.low_spectrum(h1, k=4).eigenvalues
    assert np.allclose(a, b, atol=1e-9)


def test_periodic8_has_positive_gap():
    res = ed.low_spectrum(_h("periodic8", "GL+h"), k=2)
    assert res.eigenvalues[1] - res.eigenvalues[0] > 1e-6


def test_dense_matrix_is_hermitian():
    m = ed.dense_matrix(_h("open4", "GL+h"))
    assert np.allclose(m, m.conj().T, atol=1e-12)
    direct = np.linalg.eigvalsh(m)[0]
    assert ed.ground_energy(_h("open4", "GL+h")) == pytest.approx(direct,
                                                                  abs=1e-10)


def test_matvec_agrees_with_dense():
    h = _h("open4", "GL+h")
    m = ed.dense_matrix(h)
    rng = np.random.default_rng(4)
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    assert np.allclose(ed.matvec(h, v), m @ v, atol=1e-10)


def test_validation():
    h = _h("open4", "TC_z")
    with pytest.raises(ValueError):
        ed.low_spectrum(h, k=0)
    with pytest.raises(ValueError):
        ed.low_spectrum(h, k=9)
    with pytest.raises(ValueError):
        ed.low_spectrum(h, method="sparse-qr")
    with pytest.raises(ValueError):
        ed.matvec(h, np.zeros(8))
    big = Hamiltonian(21, (PauliString(1.0, ((0, "Z"),)),))
    with pytest.raises(ValueError):
        ed.low_spectrum(big, k=1)


def test_spectrum_result_requires_ascending():
    with pytest.raises(ValueError):
        ed.SpectrumResult((1.0, 0.0), "dense")


def test_empty_hamiltonian_ground_energy():
    h = Hamiltonian(4, ())
    assert ed.ground_energy(h) == pytest.approx(0.0, abs=1e-12)
