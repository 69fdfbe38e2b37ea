import json
import math

import numpy as np
import pytest

from kitvqe.ansatz import cz_decompose, hva_circuit
from kitvqe.lattice import build_preset
from kitvqe.mitigation import (CONDITION_LIMIT, LambdaFamily, NoiseModel,
                               ReadoutModel, RegressionResult, Scheme,
                               ZneSchedule, bootstrap_energy,
                               builtin_schedules, calibrate_readout,
                               case_components, counts_energy,
                               distribution_energy, fold, mitigate_readout,
                               noisy_execute, twirl_circuit, twirl_indices,
                               zne_extrapolate, zne_pipeline)
from kitvqe.model import (Hamiltonian, PauliString, build_hamiltonian,
                          preset)
from kitvqe.statevector import expectation
from kitvqe.vqe import simulate_state

SIGMA = (np.eye(2, dtype=complex),
         np.array([[0, 1], [1, 0]], dtype=complex),
         np.array([[0, -1j], [1j, 0]], dtype=complex),
         np.array([[1, 0], [0, -1]], dtype=complex))
CZ_DENSE = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


# --- Pauli twirling ------------------------------------------------------

def test_twirl_indices_examples():
    assert twirl_indices(0, 0) == (0, 0)
    assert twirl_indices(1, 0) == (1, 3)  # X on control picks up Z
    assert twirl_indices(0, 3) == (0, 3)  # Z commutes through
    assert twirl_indices(1, 1) == (2, 2)


def test_twirl_indices_is_a_bijection():
    images = {twirl_indices(a, b) for a in range(4) for b in range(4)}
    assert len(images) == 16


def test_twirl_indices_validation():
    with pytest.raises(ValueError):
        twirl_indices(4, 0)
    with pytest.raises(ValueError):
        twirl_indices(0, -1)


def test_twirl_conjugation_identity_dense():
    # CZ (sa x sb) CZ = +/- (sc x sd) on the two-qubit space
    for a in range(4):
        for b in range(4):
            c, d = twirl_indices(a, b)
            lhs = CZ_DENSE @ np.kron(SIGMA[b], SIGMA[a]) @ CZ_DENSE
            rhs = np.kron(SIGMA[d], SIGMA[c])
            err = min(np.abs(lhs - rhs).max(), np.abs(lhs + rhs).max())
            assert err < 1e-12, (a, b)


class _ZeroRng:
    def integers(self, low, high, size):
        return np.zeros(size, dtype=np.int64)


def test_twirl_with_identity_draws_is_a_no_op():
    _lat, _params, circuit = case_components("open4-hva1")
    assert twirl_circuit(circuit, _ZeroRng()) == circuit


def test_twirled_circuit_preserves_the_state_up_to_sign():
    lat, params, circuit = case_components("open4-hva1")
    h = build_hamiltonian(lat, params)
    rng = np.random.default_rng(8)
    theta = rng.uniform(-np.pi, np.pi, circuit.param_count)
    base = simulate_state(circuit, theta)
    for _ in range(5):
        tw = twirl_circuit(circuit, rng)
        assert tw.cz_count == circuit.cz_count
        state = simulate_state(tw, theta)
        assert abs(abs(np.vdot(base, state)) - 1.0) < 1e-10
        assert expectation(state, h) == pytest.approx(expectation(base, h),
                                                      abs=1e-10)


# --- folding schedules ---------------------------------------------------

def test_scheme_validation():
    Scheme("ok", ((0, 3), (2, 5)))
    with pytest.raises(ValueError):
        Scheme("even", ((0, 2),))
    with pytest.raises(ValueError):
        Scheme("one", ((0, 1),))
    with pytest.raises(ValueError):
        Scheme("neg", ((-1, 3),))
    with pytest.raises(ValueError):
        Scheme("dup", ((0, 3), (0, 5)))


def test_scheme_folded_count():
    assert Scheme("bare", ()).folded_count(6) == 6
    assert Scheme("s", ((0, 3), (1, 3))).folded_count(6) == 10


def test_lambda_family_validation():
    s = Scheme("s", ((0, 3),))
    with pytest.raises(ValueError):
        LambdaFamily(1.3, 8, (s,), (1, 1))
    with pytest.raises(ValueError):
        LambdaFamily(1.3, 8, (s,), (0,))


def test_schedule_consistency_is_enforced():
    s = Scheme("s", ((0, 3),))  # yields base + 2
    with pytest.raises(ValueError):
        ZneSchedule("open4-hva1", 6, (LambdaFamily(2.0, 12, (s,), (1,)),))


def test_builtin_schedule_open4():
    sched = builtin_schedules("open4-hva1")
    assert sched.base_cz == 6
    labels = [f.label for f in sched.families]
    counts = [f.cz_count for f in sched.families]
    widths = [len(f.schemes) for f in sched.families]
    assert labels == [1.0, 1.3, 1.6, 2.0, 2.3]
    assert counts == [6, 8, 10, 12, 14]
    assert widths == [1, 3, 3, 2, 3]
    assert sched.families[1].instances == (34, 33, 33)
    assert sched.effective_lambda(sched.families[1]) == pytest.approx(8 / 6)


def test_builtin_schedule_open8():
    sched = builtin_schedules("open8-hva1", instances_per_lambda=40)
    assert sched.base_cz == 16
    assert [f.label for f in sched.families] == [1.0, 1.5, 2.0, 3.0, 5.0]
    assert [f.cz_count for f in sched.families] == [16, 24, 32, 48, 80]
    assert [len(f.schemes) for f in sched.families] == [1, 4, 2, 1, 1]
    for fam in sched.families:
        assert sum(fam.instances) == 40
        assert sched.effective_lambda(fam) == pytest.approx(fam.label,
                                                            rel=0.35)


def test_case_components_validation():
    with pytest.raises(ValueError):
        case_components("open16-hva4")


def test_fold_preserves_the_noiseless_state():
    _lat, _params, circuit = case_components("open4-hva1")
    theta = np.random.default_rng(2).uniform(-np.pi, np.pi, 6)
    base = simulate_state(circuit, theta)
    for fam in builtin_schedules("open4-hva1").families:
        for scheme in fam.schemes:
            folded = fold(circuit, scheme)
            assert folded.cz_count == fam.cz_count
            assert np.linalg.norm(simulate_state(folded, theta) - base) < 1e-10


def test_fold_rejects_out_of_range_ordinals():
    _lat, _params, circuit = case_components("open4-hva1")
    with pytest.raises(ValueError):
        fold(circuit, Scheme("bad", ((circuit.cz_count, 3),)))


# --- noisy execution -----------------------------------------------------

def test_noisy_execute_validation():
    _lat, _params, circuit = case_components("open4-hva1")
    noise = NoiseModel()
    with pytest.raises(ValueError):
        noisy_execute(circuit, np.zeros(6), noise, 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        noisy_execute(circuit, np.zeros(6), noise, 10,
                      np.random.default_rng(0), trajectories="per-batch")


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(p2=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(p2=1.5)
    with pytest.raises(ValueError):
        NoiseModel(eps=float("nan"))


def test_noiseless_execution_is_unbiased():
    lat, params, circuit = case_components("open4-hva1")
    h = build_hamiltonian(lat, params)
    theta = np.random.default_rng(3).uniform(-np.pi, np.pi, 6)
    exact = expectation(simulate_state(circuit, theta), h)
    rng = np.random.default_rng(4)
    vals = np.array([counts_energy(noisy_execute(circuit, theta, NoiseModel(),
                                                 1000, rng), h)[0]
                     for _ in range(40)])
    sigma = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - exact) < 4 * max(sigma, 1e-4)


def test_noisy_execute_is_deterministic():
    _lat, _params, circuit = case_components("open4-hva1")
    noise = NoiseModel(p2=0.05)
    a = noisy_execute(circuit, np.zeros(6), noise, 200,
                      np.random.default_rng(9))
    b = noisy_execute(circuit, np.zeros(6), noise, 200,
                      np.random.default_rng(9))
    assert a.keys() == b.keys()
    for basis in a:
        assert np.array_equal(a[basis], b[basis])


@pytest.mark.parametrize("mode", ["per-shot", "per-circuit"])
def test_gate_noise_raises_the_energy(mode):
    lat, params, circuit = case_components("open4-hva1")
    h = build_hamiltonian(lat, params)
    theta = np.zeros(6)
    exact = expectation(simulate_state(circuit, theta), h)
    rng = np.random.default_rng(5)
    noise = NoiseModel(p2=0.25)
    vals = [counts_energy(noisy_execute(circuit, theta, noise, 500, rng,
                                        trajectories=mode), h)[0]
            for _ in range(30)]
    assert np.mean(vals) > exact + 0.05


# --- readout model -------------------------------------------------------

def test_readout_model_validation():
    with pytest.raises(ValueError):
        ReadoutModel(2)  # neither rates nor matrix
    with pytest.raises(ValueError):
        ReadoutModel(2, eps0=(0.1, 0.1), eps1=(0.1, 0.1),
                     matrix=np.eye(4))
    with pytest.raises(ValueError):
        ReadoutModel.per_qubit(2, 0.1, 1.2)
    with pytest.raises(ValueError):
        ReadoutModel.from_matrix(np.full((4, 4), 0.5))
    with pytest.raises(ValueError):
        ReadoutModel(2, matrix=np.eye(8))


def test_readout_full_matrix_tensor_structure():
    r = ReadoutModel(2, eps0=(0.1, 0.3), eps1=(0.2, 0.4)).full_matrix()
    assert r[:, 0].sum() == pytest.approx(1.0)
    # P(read 00 | prepared 00) = (1 - eps0_0)(1 - eps0_1)
    assert r[0, 0] == pytest.approx(0.9 * 0.7)
    # P(read 01 | prepared 00): qubit 0 flips up
    assert r[1, 0] == pytest.approx(0.1 * 0.7)
    # P(read 10 | prepared 11): qubit 0 flips down
    assert r[2, 3] == pytest.approx(0.2 * (1 - 0.4))
    ideal = ReadoutModel.ideal(3).full_matrix()
    assert np.array_equal(ideal, np.eye(8))


def test_corrupt_flip_statistics():
    model = ReadoutModel.per_qubit(1, 0.1, 0.0)
    rng = np.random.default_rng(6)
    read = model.corrupt(np.zeros(20_000, dtype=np.int64), rng)
    frac = read.mean()
    assert abs(frac - 0.1) < 4 * math.sqrt(0.1 * 0.9 / 20_000)
    # eps1 = 0 never flips prepared ones down
    ones = model.corrupt(np.ones(1000, dtype=np.int64), rng)
    assert np.array_equal(ones, np.ones(1000, dtype=np.int64))


def test_calibrate_readout_recovers_the_matrix():
    noise = NoiseModel(readout=ReadoutModel.per_qubit(2, 0.05, 0.1))
    r_hat = calibrate_readout(noise, shots_per_bitstring=20_000,
                              rng=np.random.default_rng(7))
    want = noise.readout.full_matrix()
    assert np.abs(r_hat.full_matrix() - want).max() < 0.02


def test_calibrate_readout_validation():
    with pytest.raises(ValueError):
        calibrate_readout(NoiseModel())
    noise = NoiseModel(readout=ReadoutModel.per_qubit(12, 0.02, 0.05))
    with pytest.raises(ValueError):
        calibrate_readout(noise)
    small = NoiseModel(readout=ReadoutModel.per_qubit(1, 0.02, 0.05))
    with pytest.raises(ValueError):
        calibrate_readout(small, shots_per_bitstring=0)


def test_mitigate_readout_round_trip():
    model = ReadoutModel.per_qubit(2, 0.05, 0.1)
    p = np.array([0.4, 0.3, 0.2, 0.1])
    read = model.full_matrix() @ p
    assert np.abs(mitigate_readout(read, model) - p).max() < 1e-10
    # plain arrays work too
    assert np.abs(mitigate_readout(read, model.full_matrix()) - p).max() < 1e-10
    same = mitigate_readout(p, ReadoutModel.ideal(2))
    assert np.array_equal(same, p)


def test_mitigate_readout_refuses_singular_matrices():
    depolarized = ReadoutModel.per_qubit(1, 0.5, 0.5)
    with pytest.raises(np.linalg.LinAlgError):
        mitigate_readout(np.array([0.5, 0.5]), depolarized)
    assert CONDITION_LIMIT == 1e8


# --- energy estimates from counts ---------------------------------------

def _xz_hamiltonian():
    return Hamiltonian(1, (PauliString(2.0, ((0, "X"),)),
                           PauliString(1.0, ((0, "Z"),))))


def test_distribution_energy_hand_example():
    h = _xz_hamiltonian()
    dists = {"X": np.array([1.0, 0.0]), "Z": np.array([0.25, 0.75])}
    # 2 * <X> + <Z> = 2 * 1 + (0.25 - 0.75)
    assert distribution_energy(dists, h) == pytest.approx(1.5, abs=1e-12)


def test_counts_energy_without_readout():
    h = _xz_hamiltonian()
    counts = {"X": np.array([100, 0]), "Z": np.array([25, 75])}
    raw, mitigated = counts_energy(counts, h)
    assert raw == pytest.approx(1.5, abs=1e-12)
    assert mitigated == raw


def test_bootstrap_energy_statistics():
    h = _xz_hamiltonian()
    counts = {"X": np.array([900, 100]), "Z": np.array([250, 750])}
    est, unc = bootstrap_energy(counts, h, np.random.default_rng(1),
                                resamples=400)
    raw, _ = counts_energy(counts, h)
    assert unc > 0
    assert abs(est - raw) < 3 * unc
    again = bootstrap_energy(counts, h, np.random.default_rng(1),
                             resamples=400)
    assert (est, unc) == again
    with pytest.raises(ValueError):
        bootstrap_energy(counts, h, np.random.default_rng(0), resamples=1)


# --- extrapolation -------------------------------------------------------

def test_zne_extrapolate_validation():
    pts = [(1.0, 0.5, 0.0), (1.0, 0.6, 0.0)]
    with pytest.raises(ValueError):
        zne_extrapolate(pts)
    with pytest.raises(ValueError):
        zne_extrapolate([(1.0, 0.5, 0.0), (2.0, 0.6, 0.0)], mode="richardson")


def test_zne_extrapolate_recovers_a_line():
    pts = [(lam, -1.5 + 0.2 * lam, 0.01) for lam in (1.0, 1.5, 2.0, 3.0)]
    res = zne_extrapolate(pts)
    assert res.intercept == pytest.approx(-1.5, abs=1e-6)
    assert res.slope == pytest.approx(0.2, abs=1e-6)
    assert res.intercept_lo <= res.intercept <= res.intercept_hi
    assert res.mode == "bayes-conjugate"
    assert res.points == tuple(pts)


def test_zne_extrapolate_flat_prior_limit_is_weighted_least_squares():
    rng = np.random.default_rng(10)
    lams = np.array([1.0, 1.3, 1.6, 2.0, 2.3])
    y = -1.2 + 0.35 * lams + rng.normal(0, 0.02, lams.size)
    unc = np.array([0.01, 0.02, 0.015, 0.03, 0.02])
    res = zne_extrapolate(list(zip(lams, y, unc)), prior_sd=1e8)
    w = 1.0 / unc ** 2
    x = np.column_stack([np.ones_like(lams), lams])
    beta = np.linalg.solve((x.T * w) @ x, (x.T * w) @ y)
    assert res.intercept == pytest.approx(beta[0], abs=1e-8)
    assert res.slope == pytest.approx(beta[1], abs=1e-8)


def test_regression_result_validation_and_json():
    with pytest.raises(ValueError):
        RegressionResult(0.0, 0.1, 0.2, 1.0, 0.5, 1.5, "bayes-conjugate", ())
    res = zne_extrapolate([(1.0, 0.3, 0.0), (2.0, 0.5, 0.0)])
    payload = json.loads(res.to_json())
    assert payload["intercept"] == res.intercept
    assert payload["intercept_ci"] == [res.intercept_lo, res.intercept_hi]
    assert payload["mode"] == res.mode
    assert len(payload["points"]) == 2


# --- the full pipeline ---------------------------------------------------

def test_zne_pipeline_zero_noise_recovers_the_energy():
    theta = np.random.default_rng(12).uniform(-np.pi, np.pi, 6)
    out = zne_pipeline("open4-hva1", theta, NoiseModel(), shots=2000,
                       circuits_per_scheme=2, master_seed=3)
    assert len(out.rows) == 2 * 12  # 12 schemes across the five families
    assert out.confusion is None
    assert out.result.mode == "bootstrap-then-bayes"
    assert abs(out.result.intercept - out.noiseless_energy) < 0.05
    for row in out.rows:
        assert row.mitigated_energy == row.raw_energy  # no readout model
        assert abs(row.raw_energy - out.noiseless_energy) < 0.2


def test_zne_pipeline_is_deterministic():
    theta = np.zeros(6)
    noise = NoiseModel(p2=0.02)
    kw = dict(shots=300, circuits_per_scheme=1, master_seed=5)
    assert zne_pipeline("open4-hva1", theta, noise, **kw) == \
        zne_pipeline("open4-hva1", theta, noise, **kw)


def test_zne_pipeline_exclude_lambdas():
    theta = np.zeros(6)
    out = zne_pipeline("open4-hva1", theta, NoiseModel(p2=0.05), shots=300,
                       circuits_per_scheme=1, exclude_lambdas=(2.3,),
                       master_seed=6)
    assert any(row.label == 2.3 for row in out.rows)
    fit_lams = {lam for (lam, _e, _u) in out.result.points}
    assert all(abs(lam - 14 / 6) > 1e-9 for lam in fit_lams)
    assert len(fit_lams) == 4


def test_zne_pipeline_twirled_mode():
    theta = np.zeros(6)
    out = zne_pipeline("open4-hva1", theta, NoiseModel(p2=0.05), twirl=True,
                       shots=300, circuits_per_scheme=1, master_seed=7)
    assert out.result.mode == "bayes-conjugate"
    assert len(out.result.points) == len(out.rows)
