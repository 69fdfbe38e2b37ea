"""Noisy-execution emulation and error mitigation.

Covers the full mitigation stack: stochastic two-qubit Pauli noise with
optional coherent rotation offsets, Pauli twirling of CZ gates, digital
noise scaling by replacing CZs with odd powers, readout confusion
calibration and inversion, and Bayesian linear extrapolation to the
zero-noise limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.stats

from .ansatz import CircuitIR, cz_decompose, hva_circuit
from .lattice import Lattice, build_preset
from .model import Hamiltonian, ModelParams, build_hamiltonian, measurement_groups, preset
from .statevector import (GateOp, basis_rotation_gates, compile_program, cz,
                          execute, expectation, pauli_gate, sample_from_probs,
                          zero_state)

AXES_1Q = ("I", "X", "Y", "Z")


# ---------------------------------------------------------------------------
# readout model


@dataclass(frozen=True)
class ReadoutModel:
    """Classical readout corruption: p_read = R p_prepared.

    Either a full column-stochastic matrix (column = prepared bitstring)
    or per-qubit asymmetric flip rates composed as a tensor product.
    ``eps0[q]`` is P(read 1 | prepared 0), ``eps1[q]`` is P(read 0 |
    prepared 1).
    """

    n_qubits: int
    eps0: tuple[float, ...] | None = None
    eps1: tuple[float, ...] | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if (self.matrix is None) == (self.eps0 is None):
            raise ValueError("provide either per-qubit rates or a full matrix")
        if self.matrix is not None:
            dim = 1 << self.n_qubits
            m = self.matrix
            if m.shape != (dim, dim):
                raise ValueError(f"matrix shape {m.shape}, expected {(dim, dim)}")
            if (m < -1e-12).any() or (m > 1 + 1e-12).any():
                raise ValueError("matrix entries must lie in [0, 1]")
            cols = m.sum(axis=0)
            if not np.allclose(cols, 1.0, atol=1e-9):
                raise ValueError("matrix columns must each sum to 1")
        else:
            if self.eps1 is None or len(self.eps0) != self.n_qubits \
                    or len(self.eps1) != self.n_qubits:
                raise ValueError("need one (eps0, eps1) pair per qubit")
            for e in (*self.eps0, *self.eps1):
                if not 0.0 <= e <= 1.0:
                    raise ValueError("flip probabilities must lie in [0, 1]")

    @classmethod
    def per_qubit(cls, n_qubits: int, eps0, eps1) -> "ReadoutModel":
        if np.isscalar(eps0):
            eps0 = (float(eps0),) * n_qubits
        if np.isscalar(eps1):
            eps1 = (float(eps1),) * n_qubits
        return cls(n_qubits, tuple(eps0), tuple(eps1), None)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "ReadoutModel":
        n = int(matrix.shape[0]).bit_length() - 1
        return cls(n, None, None, np.asarray(matrix, dtype=np.float64))

    @classmethod
    def ideal(cls, n_qubits: int) -> "ReadoutModel":
        return cls.per_qubit(n_qubits, 0.0, 0.0)

    def full_matrix(self) -> np.ndarray:
        """The induced 2^N x 2^N matrix (tensor expansion if per-qubit)."""
        if self.matrix is not None:
            return self.matrix
        # bit 0 varies fastest in the index, so qubit 0 is the last factor
        r = np.array([[1.0]])
        for q in reversed(range(self.n_qubits)):
            rq = np.array([[1.0 - self.eps0[q], self.eps1[q]],
                           [self.eps0[q], 1.0 - self.eps1[q]]])
            r = np.kron(r, rq)
        return r

    def corrupt(self, ints: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Sample read bitstrings for prepared outcomes ``ints``."""
        if self.matrix is not None:
            out = np.empty_like(ints)
            values, inverse = np.unique(ints, return_inverse=True)
            for k, v in enumerate(values):
                idx = np.nonzero(inverse == k)[0]
                out[idx] = sample_from_probs(self.matrix[:, v], idx.size, rng)
            return out
        out = ints.copy()
        for q in range(self.n_qubits):
            bit = np.int64(1) << q
            is_one = (out & bit) != 0
            u = rng.random(out.size)
            flip = np.where(is_one, u < self.eps1[q], u < self.eps0[q])
            out[flip] ^= bit
        return out


def calibrate_readout(noise: "NoiseModel", shots_per_bitstring: int = 10_000,
                      rng: np.random.Generator | None = None,
                      max_qubits: int = 10) -> ReadoutModel:
    """Empirical full confusion matrix: prepare every bitstring, read it
    ``shots_per_bitstring`` times, record the outcome fractions."""
    model = noise.readout
    if model is None:
        raise ValueError("noise model has no readout component")
    n = model.n_qubits
    if n > max_qubits:
        raise ValueError(f"full calibration limited to {max_qubits} qubits; "
                         f"use the per-qubit model for n={n}")
    if shots_per_bitstring < 1:
        raise ValueError("shots_per_bitstring must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    dim = 1 << n
    r_hat = np.empty((dim, dim))
    for prepared in range(dim):
        ints = np.full(shots_per_bitstring, prepared, dtype=np.int64)
        read = model.corrupt(ints, rng)
        r_hat[:, prepared] = np.bincount(read, minlength=dim) / shots_per_bitstring
    return ReadoutModel.from_matrix(r_hat)


CONDITION_LIMIT = 1e8


def mitigate_readout(p_read: np.ndarray, readout: ReadoutModel | np.ndarray,
                     condition_limit: float = CONDITION_LIMIT) -> np.ndarray:
    """R^{-1} p_read; entries may be negative (quasi-probabilities)."""
    r = readout.full_matrix() if isinstance(readout, ReadoutModel) else readout
    cond = np.linalg.cond(r)
    if not np.isfinite(cond) or cond > condition_limit:
        raise np.linalg.LinAlgError(
            f"confusion matrix condition number {cond:.3g} exceeds "
            f"{condition_limit:.1g}; refusing to invert")
    return np.linalg.solve(r, np.asarray(p_read, dtype=np.float64))


# ---------------------------------------------------------------------------
# noise model


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic two-qubit Pauli noise after each CZ (probability ``p2``
    of a uniformly random non-identity two-site Pauli), an optional
    coherent offset ``eps`` on every parameterized rotation angle, and
    optional readout corruption."""

    p2: float = 0.0
    eps: float = 0.0
    readout: ReadoutModel | None = None

    def __post_init__(self):
        if not 0.0 <= self.p2 <= 1.0:
            raise ValueError("p2 must lie in [0, 1]")
        if not math.isfinite(self.eps):
            raise ValueError("eps must be finite")


# ---------------------------------------------------------------------------
# Pauli twirling


def twirl_indices(a: int, b: int) -> tuple[int, int]:
    """Indices (c, d) with sigma_c^c sigma_t^d ~ CZ sigma_c^a sigma_t^b CZ
    (equal up to a sign); 0..3 encode I, X, Y, Z."""
    if a not in (0, 1, 2, 3) or b not in (0, 1, 2, 3):
        raise ValueError(f"pauli indices must be in 0..3, got ({a}, {b})")
    c = a + b * (3 - b) * (3 - 2 * a) // 2
    d = b + a * (3 - a) * (3 - 2 * b) // 2
    return c, d


def _pauli_insert(i: int, j: int, a: int, b: int) -> GateOp | None:
    terms = []
    if a:
        terms.append((i, AXES_1Q[a]))
    if b:
        terms.append((j, AXES_1Q[b]))
    return pauli_gate(tuple(terms)) if terms else None


def twirl_circuit(circuit: CircuitIR, rng: np.random.Generator) -> CircuitIR:
    """Sandwich every CZ between a random Pauli pair and its conjugation
    partner; logically the identity (up to global sign)."""
    gates: list[GateOp] = []
    for g in circuit.gates:
        if g.kind != "CZ":
            gates.append(g)
            continue
        a, b = (int(v) for v in rng.integers(0, 4, size=2))
        c, d = twirl_indices(a, b)
        i, j = g.sites
        before = _pauli_insert(i, j, a, b)
        after = _pauli_insert(i, j, c, d)
        if before is not None:
            gates.append(before)
        gates.append(g)
        if after is not None:
            gates.append(after)
    return CircuitIR(circuit.n_qubits, tuple(gates), circuit.param_count,
                     circuit.cz_count)


# ---------------------------------------------------------------------------
# noise-scaling schedules


@dataclass(frozen=True)
class Scheme:
    """One way to hit a target CZ count: ``replace`` maps CZ ordinals
    (position among the circuit's CZs) to odd multiplicities."""

    name: str
    replace: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for ordinal, mult in self.replace:
            if ordinal < 0:
                raise ValueError("CZ ordinal must be nonnegative")
            if mult < 3 or mult % 2 == 0:
                raise ValueError("replacement multiplicity must be odd and >= 3")
            if ordinal in seen:
                raise ValueError(f"duplicate ordinal {ordinal}")
            seen.add(ordinal)

    def folded_count(self, base_cz: int) -> int:
        return base_cz + sum(mult - 1 for _, mult in self.replace)


@dataclass(frozen=True)
class LambdaFamily:
    label: float                 # nominal scale factor
    cz_count: int                # exact CZ count of every scheme
    schemes: tuple[Scheme, ...]
    instances: tuple[int, ...]   # circuit instances per scheme

    def __post_init__(self):
        if len(self.instances) != len(self.schemes):
            raise ValueError("need one instance count per scheme")
        if any(i < 1 for i in self.instances):
            raise ValueError("instance counts must be positive")


@dataclass(frozen=True)
class ZneSchedule:
    case: str
    base_cz: int
    families: tuple[LambdaFamily, ...]

    def __post_init__(self):
        for fam in self.families:
            for s in fam.schemes:
                got = s.folded_count(self.base_cz)
                if got != fam.cz_count:
                    raise ValueError(
                        f"scheme {s.name!r} yields {got} CZs, family "
                        f"label {fam.label} requires {fam.cz_count}")

    def effective_lambda(self, family: LambdaFamily) -> float:
        return family.cz_count / self.base_cz


ZNE_CASES = ("open4-hva1", "open8-hva1")


def case_components(case: str) -> tuple[Lattice, ModelParams, CircuitIR]:
    """Lattice, couplings, and the CZ-decomposed one-layer circuit for a
    built-in noise-scaling case."""
    if case not in ZNE_CASES:
        raise ValueError(f"unknown case {case!r}; known: {ZNE_CASES}")
    lattice = build_preset("open4" if case == "open4-hva1" else "open8")
    return lattice, preset("GL+h"), cz_decompose(hva_circuit(lattice, 1))


def _cz_ordinals_by(circuit: CircuitIR, axis: str | None = None,
                    which: int | None = None,
                    bond_indices: tuple[int, ...] | None = None) -> list[int]:
    """Ordinals of tagged CZs filtered by generating-term attributes."""
    out = []
    ordinal = 0
    for g in circuit.gates:
        if g.kind != "CZ":
            continue
        tag = g.tag
        if tag is not None and len(tag) == 4:
            _block, t_axis, t_bond, t_which = tag
            if ((axis is None or t_axis == axis)
                    and (which is None or t_which == which)
                    and (bond_indices is None or t_bond in bond_indices)):
                out.append(ordinal)
        ordinal += 1
    return out


def _split_instances(total: int, parts: int) -> tuple[int, ...]:
    base, extra = divmod(total, parts)
    return tuple(base + (1 if k < extra else 0) for k in range(parts))


def _schedule_open4(circuit: CircuitIR, per_lambda: int) -> tuple[LambdaFamily, ...]:
    # one bond per axis; each bond exponential compiles to a CZ pair
    first = {ax: _cz_ordinals_by(circuit, ax, which=1) for ax in "xyz"}
    both = {ax: _cz_ordinals_by(circuit, ax) for ax in "xyz"}

    def fam(label, cz_count, schemes):
        return LambdaFamily(label, cz_count, tuple(schemes),
                            _split_instances(per_lambda, len(schemes)))

    families = [fam(1.0, 6, [Scheme("bare", ())])]
    families.append(fam(1.3, 8, [
        Scheme(f"first-{ax}x3", tuple((o, 3) for o in first[ax])) for ax in "xyz"]))
    families.append(fam(1.6, 10, [
        Scheme(f"both-{ax}x3", tuple((o, 3) for o in both[ax])) for ax in "xyz"]))
    families.append(fam(2.0, 12, [
        Scheme("xx-and-first-y", tuple((o, 3) for o in both["x"]
                                       + _cz_ordinals_by(circuit, "y", which=1))),
        Scheme("zz-and-second-y", tuple((o, 3) for o in both["z"]
                                        + _cz_ordinals_by(circuit, "y", which=2)))]))
    families.append(fam(2.3, 14, [
        Scheme("xx-and-yy", tuple((o, 3) for o in both["x"] + both["y"])),
        Scheme("xx-and-zz", tuple((o, 3) for o in both["x"] + both["z"])),
        Scheme("yy-and-zz", tuple((o, 3) for o in both["y"] + both["z"]))]))
    return tuple(families)


def _schedule_open8(circuit: CircuitIR, per_lambda: int) -> tuple[LambdaFamily, ...]:
    by_axis = {ax: _cz_ordinals_by(circuit, ax) for ax in "xyz"}
    z_first = _cz_ordinals_by(circuit, "z", bond_indices=(0, 1))
    z_last = _cz_ordinals_by(circuit, "z", bond_indices=(2, 3))
    every = _cz_ordinals_by(circuit)

    def fam(label, cz_count, schemes):
        return LambdaFamily(label, cz_count, tuple(schemes),
                            _split_instances(per_lambda, len(schemes)))

    return (
        fam(1.0, 16, [Scheme("bare", ())]),
        fam(1.5, 24, [
            Scheme("x-linksx3", tuple((o, 3) for o in by_axis["x"])),
            Scheme("y-linksx3", tuple((o, 3) for o in by_axis["y"])),
            Scheme("z-first-pairx3", tuple((o, 3) for o in z_first)),
            Scheme("z-second-pairx3", tuple((o, 3) for o in z_last))]),
        fam(2.0, 32, [
            Scheme("xy-linksx3", tuple((o, 3) for o in by_axis["x"] + by_axis["y"])),
            Scheme("z-linksx3", tuple((o, 3) for o in by_axis["z"]))]),
        fam(3.0, 48, [Scheme("allx3", tuple((o, 3) for o in every))]),
        fam(5.0, 80, [Scheme("allx5", tuple((o, 5) for o in every))]),
    )


def builtin_schedules(case: str, instances_per_lambda: int = 100) -> ZneSchedule:
    """The built-in per-scale replacement families for each case.

    Each scale factor's instance budget is split evenly across its
    scheme variants (25 x 4 and 50 x 2 at the eight-qubit middle scales
    for the default 100).
    """
    _lattice, _params, circuit = case_components(case)
    if case == "open4-hva1":
        families = _schedule_open4(circuit, instances_per_lambda)
    else:
        families = _schedule_open8(circuit, instances_per_lambda)
    return ZneSchedule(case, circuit.cz_count, families)


def fold(circuit: CircuitIR, scheme: Scheme) -> CircuitIR:
    """Replace each named CZ by its odd multiplicity of consecutive CZs;
    noiseless equivalence follows from CZ being an involution."""
    repl = dict(scheme.replace)
    bad = [o for o in repl if o >= circuit.cz_count]
    if bad:
        raise ValueError(f"scheme names CZ ordinals {bad} but the circuit "
                         f"has {circuit.cz_count} CZs")
    gates: list[GateOp] = []
    ordinal = 0
    n_cz = 0
    for g in circuit.gates:
        if g.kind != "CZ":
            gates.append(g)
            continue
        mult = repl.get(ordinal, 1)
        i, j = g.sites
        for copy in range(mult):
            tag = g.tag if copy == 0 else (g.tag or ()) + ("fold", copy)
            gates.append(cz(i, j, tag=tag))
        n_cz += mult
        ordinal += 1
    return CircuitIR(circuit.n_qubits, tuple(gates), circuit.param_count, n_cz)


# ---------------------------------------------------------------------------
# noisy execution


def _injection_arrays(flags: np.ndarray, czs: list[tuple[int, int]],
                      rng: np.random.Generator):
    """Random non-identity two-site Paulis for the flagged CZ ordinals."""
    ordinals = np.nonzero(flags)[0]
    io = ordinals.astype(np.int64)
    ix = np.zeros(io.size, dtype=np.int64)
    iy = np.zeros(io.size, dtype=np.int64)
    iz = np.zeros(io.size, dtype=np.int64)
    pick = rng.integers(1, 16, size=io.size)  # 15 non-identity pairs
    for k, (o, p) in enumerate(zip(ordinals, pick)):
        a, b = divmod(int(p), 4)
        i, j = czs[o]
        for site, idx in ((i, a), (j, b)):
            if idx == 1:
                ix[k] |= 1 << site
            elif idx == 2:
                iy[k] |= 1 << site
            elif idx == 3:
                iz[k] |= 1 << site
    return io, ix, iy, iz


TRAJECTORY_MODES = ("per-shot", "per-circuit")


def noisy_execute(circuit: CircuitIR, theta: np.ndarray | None,
                  noise: NoiseModel, shots: int, rng: np.random.Generator,
                  bases: tuple[str, ...] = ("X", "Y", "Z"),
                  trajectories: str = "per-shot") -> dict[str, np.ndarray]:
    """Per-basis bitstring counts under the noise model.

    Every CZ independently inserts a random two-site Pauli with
    probability p2, coherent eps offsets every parameterized rotation,
    and outcomes pass through the readout model.  ``per-shot`` draws a
    fresh noise trajectory for each shot (shots sharing the noise-free
    trajectory come from one simulation); ``per-circuit`` draws one
    trajectory per basis and samples all shots from it.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    if trajectories not in TRAJECTORY_MODES:
        raise ValueError(f"trajectories must be one of {TRAJECTORY_MODES}")
    n = circuit.n_qubits
    czs = [g.sites for g in circuit.gates if g.kind == "CZ"]
    counts: dict[str, np.ndarray] = {}
    for basis in bases:
        prog = compile_program(
            list(circuit.gates) + basis_rotation_gates(basis, n), n,
            circuit.param_count)
        rows = shots if trajectories == "per-shot" else 1
        if noise.p2 > 0.0 and czs:
            flags = rng.random((rows, len(czs))) < noise.p2
            noisy_rows = np.nonzero(flags.any(axis=1))[0]
        else:
            flags = None
            noisy_rows = np.zeros(0, dtype=np.int64)
        outcomes = np.empty(shots, dtype=np.int64)
        if trajectories == "per-circuit":
            state = zero_state(n)
            inj = (_injection_arrays(flags[0], czs, rng)
                   if noisy_rows.size else None)
            execute(state, prog, theta, eps=noise.eps, injections=inj)
            p = state.real * state.real + state.imag * state.imag
            outcomes[:] = sample_from_probs(p, shots, rng)
        else:
            clean_shots = shots - noisy_rows.size
            pos = 0
            if clean_shots:
                state = zero_state(n)
                execute(state, prog, theta, eps=noise.eps)
                p = state.real * state.real + state.imag * state.imag
                outcomes[:clean_shots] = sample_from_probs(p, clean_shots, rng)
                pos = clean_shots
            for row in noisy_rows:
                inj = _injection_arrays(flags[row], czs, rng)
                state = zero_state(n)
                execute(state, prog, theta, eps=noise.eps, injections=inj)
                p = state.real * state.real + state.imag * state.imag
                outcomes[pos] = sample_from_probs(p, 1, rng)[0]
                pos += 1
        if noise.readout is not None:
            outcomes = noise.readout.corrupt(outcomes, rng)
        counts[basis] = np.bincount(outcomes, minlength=1 << n)
    return counts


# ---------------------------------------------------------------------------
# energy estimation from counts


def _group_masks(h: Hamiltonian) -> dict[str, list[tuple[int, float]]]:
    out: dict[str, list[tuple[int, float]]] = {}
    for axis, terms in measurement_groups(h):
        masked = []
        for t in terms:
            xm, ym, zm = t.masks()
            masked.append((xm | ym | zm, t.weight))
        out[axis] = masked
    return out


def distribution_energy(dists: dict[str, np.ndarray], h: Hamiltonian) -> float:
    """Sum over measurement groups of the group estimate under the given
    (quasi-)distributions, one distribution per Pauli axis."""
    total = 0.0
    for axis, masked in _group_masks(h).items():
        q = np.asarray(dists[axis], dtype=np.float64)
        idx = np.arange(q.size, dtype=np.int64)
        for mask, w in masked:
            signs = 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)
            total += w * float(q @ signs)
    return total


def counts_energy(counts: dict[str, np.ndarray], h: Hamiltonian,
                  readout: ReadoutModel | np.ndarray | None = None
                  ) -> tuple[float, float]:
    """(raw, mitigated) energy estimates from per-basis counts; the
    mitigated value inverts the readout model first (equal to raw when
    no readout model is given)."""
    raw_dists = {ax: c / c.sum() for ax, c in counts.items()}
    raw = distribution_energy(raw_dists, h)
    if readout is None:
        return raw, raw
    mit_dists = {ax: mitigate_readout(p, readout) for ax, p in raw_dists.items()}
    return raw, distribution_energy(mit_dists, h)


def bootstrap_energy(counts: dict[str, np.ndarray], h: Hamiltonian,
                     rng: np.random.Generator,
                     readout: ReadoutModel | np.ndarray | None = None,
                     resamples: int = 100) -> tuple[float, float]:
    """Dirichlet-weight Bayesian bootstrap over the shot data: returns
    (estimate, uncertainty) for the mitigated energy."""
    if resamples < 2:
        raise ValueError("need at least 2 resamples")
    supports = {}
    for ax, c in counts.items():
        nz = np.nonzero(c)[0]
        supports[ax] = (nz, c[nz].astype(np.float64))
    vals = np.empty(resamples)
    for r in range(resamples):
        dists = {}
        for ax, c in counts.items():
            nz, conc = supports[ax]
            q = np.zeros(c.size)
            q[nz] = rng.dirichlet(conc)
            dists[ax] = q if readout is None else mitigate_readout(q, readout)
        vals[r] = distribution_energy(dists, h)
    return float(vals.mean()), float(vals.std(ddof=1))


# ---------------------------------------------------------------------------
# Bayesian linear extrapolation


REGRESSION_MODES = ("bayes-conjugate", "bootstrap-then-bayes")


@dataclass(frozen=True)
class RegressionResult:
    """Posterior summary of the linear fit estimate = b0 + b1 * lambda."""

    intercept: float
    intercept_lo: float
    intercept_hi: float
    slope: float
    slope_lo: float
    slope_hi: float
    mode: str
    points: tuple[tuple[float, float, float], ...]  # (lambda, estimate, unc)

    def __post_init__(self):
        if not self.intercept_lo <= self.intercept <= self.intercept_hi:
            raise ValueError("intercept interval must contain the mean")
        if not self.slope_lo <= self.slope <= self.slope_hi:
            raise ValueError("slope interval must contain the mean")

    def to_json(self) -> str:
        return json.dumps({
            "intercept": self.intercept,
            "intercept_ci": [self.intercept_lo, self.intercept_hi],
            "slope": self.slope,
            "slope_ci": [self.slope_lo, self.slope_hi],
            "mode": self.mode,
            "points": [list(p) for p in self.points],
        }, indent=2)


def zne_extrapolate(points, mode: str = "bayes-conjugate",
                    prior_sd: float = 1000.0, level: float = 0.95
                    ) -> RegressionResult:
    """Conjugate Bayesian weighted linear regression of estimate on
    lambda; the intercept posterior is the zero-noise estimate.

    Priors: independent zero-mean Gaussians (sd ``prior_sd``) on slope
    and intercept, weak inverse-gamma on the noise variance.  Points
    carry (lambda, estimate, uncertainty); uncertainties set relative
    weights 1/unc^2 (``None`` or 0 means unit weight).
    """
    if mode not in REGRESSION_MODES:
        raise ValueError(f"mode must be one of {REGRESSION_MODES}")
    pts = [(float(l), float(e), float(u) if u else 0.0) for (l, e, u) in points]
    lams = np.array([p[0] for p in pts])
    if np.unique(lams).size < 2:
        raise ValueError("need at least 2 distinct lambda values")
    y = np.array([p[1] for p in pts])
    unc = np.array([p[2] for p in pts])
    w = np.where(unc > 0.0, 1.0 / np.square(np.maximum(unc, 1e-12)), 1.0)
    x = np.column_stack([np.ones_like(lams), lams])

    prior_precision = np.eye(2) / prior_sd ** 2
    a0 = b0 = 1e-3  # weak variance prior
    xtw = x.T * w
    vn_inv = prior_precision + xtw @ x
    vn = np.linalg.inv(vn_inv)
    mn = vn @ (xtw @ y)
    a_n = a0 + len(pts) / 2.0
    b_n = b0 + 0.5 * float(y @ (w * y) - mn @ vn_inv @ mn)
    b_n = max(b_n, 1e-300)
    t_crit = float(scipy.stats.t.ppf(0.5 + level / 2.0, 2.0 * a_n))
    sd = np.sqrt(np.maximum(b_n / a_n * np.diag(vn), 0.0))
    return RegressionResult(
        float(mn[0]), float(mn[0] - t_crit * sd[0]), float(mn[0] + t_crit * sd[0]),
        float(mn[1]), float(mn[1] - t_crit * sd[1]), float(mn[1] + t_crit * sd[1]),
        mode, tuple(pts))


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class ZneRow:
    label: float
    effective_lambda: float
    scheme: str
    instance: int
    raw_energy: float
    mitigated_energy: float


@dataclass(frozen=True)
class ZneOutcome:
    result: RegressionResult
    rows: tuple[ZneRow, ...]
    lambda_means: tuple[tuple[float, float, float], ...]  # (eff lambda, raw, mitigated)
    noiseless_energy: float
    confusion: np.ndarray | None = None   # calibrated R-hat when readout is modeled


def zne_pipeline(case: str, theta: np.ndarray, noise: NoiseModel,
                 twirl: bool = False, shots: int = 1000,
                 circuits_per_scheme: int | None = None,
                 exclude_lambdas: tuple[float, ...] = (),
                 master_seed: int = 0, calibration_shots: int = 10_000,
                 trajectories: str = "per-shot") -> ZneOutcome:
    """Generate, execute, mitigate, and extrapolate the full schedule.

    ``circuits_per_scheme`` overrides every scheme's builtin instance
    count with a uniform value (for reduced-budget runs).  Twirled runs
    regress per-instance point estimates; untwirled runs first bootstrap
    per-instance (estimate, uncertainty) pairs.  ``exclude_lambdas``
    names nominal labels to keep out of the fit (their rows still
    appear in the table).  RNG streams derive per (family, scheme,
    instance) so any sub-run can be replayed independently.
    """
    lattice, params, circuit = case_components(case)
    h = build_hamiltonian(lattice, params)
    theta = np.asarray(theta, dtype=np.float64)
    schedule = builtin_schedules(case)
    if circuits_per_scheme is not None:
        if circuits_per_scheme < 1:
            raise ValueError("circuits_per_scheme must be positive")
        schedule = replace(schedule, families=tuple(
            replace(f, instances=(circuits_per_scheme,) * len(f.schemes))
            for f in schedule.families))
    root = np.random.SeedSequence(master_seed)
    cal_stream, run_root = root.spawn(2)

    r_hat = None
    if noise.readout is not None:
        r_hat = calibrate_readout(noise, calibration_shots,
                                  np.random.default_rng(cal_stream))

    clean = zero_state(circuit.n_qubits)
    execute(clean, compile_program(circuit.gates, circuit.n_qubits,
                                   circuit.param_count), theta)
    noiseless = expectation(clean, h)

    mode = "bayes-conjugate" if twirl else "bootstrap-then-bayes"
    rows: list[ZneRow] = []
    points: list[tuple[float, float, float]] = []
    per_lambda: dict[float, tuple[list[float], list[float]]] = {}
    for f_idx, family in enumerate(schedule.families):
        eff = schedule.effective_lambda(family)
        raws, mits = per_lambda.setdefault(eff, ([], []))
        excluded = family.label in exclude_lambdas
        for s_idx, (scheme, m) in enumerate(zip(family.schemes, family.instances)):
            folded = fold(circuit, scheme)
            for inst in range(m):
                stream = np.random.SeedSequence(
                    entropy=run_root.entropy,
                    spawn_key=run_root.spawn_key + (f_idx, s_idx, inst))
                rng = np.random.default_rng(stream)
                circ = twirl_circuit(folded, rng) if twirl else folded
                counts = noisy_execute(circ, theta, noise, shots, rng,
                                       trajectories=trajectories)
                raw, mit = counts_energy(counts, h, r_hat)
                rows.append(ZneRow(family.label, eff, scheme.name, inst, raw, mit))
                raws.append(raw)
                mits.append(mit)
                if excluded:
                    continue
                if twirl:
                    points.append((eff, mit, 0.0))
                else:
                    est, unc = bootstrap_energy(counts, h, rng, r_hat)
                    points.append((eff, est, unc))
    result = zne_extrapolate(points, mode)
    means = tuple((eff, float(np.mean(r)), float(np.mean(m)))
                  for eff, (r, m) in sorted(per_lambda.items()))
    return ZneOutcome(result, tuple(rows), means, noiseless,
                      None if r_hat is None else r_hat.full_matrix())
