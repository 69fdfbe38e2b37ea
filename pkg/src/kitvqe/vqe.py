"""VQE drivers: ground- and excited-state costs, observables, sweeps.

Cost functions come in two evaluation modes.  Exact mode simulates the
ansatz and returns the Hamiltonian expectation.  Sampled mode draws a
configured number of shots for each qubit-wise-commuting measurement
group (one group per Pauli axis here) and sums the empirical estimates;
the excited-state overlap penalty is estimated from the all-zeros
frequency after appending the inverted reference circuit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import ed
from .ansatz import AnsatzSpec, CircuitIR, build_circuit
from .lattice import Lattice
from .model import Hamiltonian, ModelParams, build_hamiltonian, measurement_groups
from .optim import (AnnealConfig, BFGSConfig, CMAConfig, MixedStrategyConfig,
                    MultiStartConfig, OptResult, SPSAConfig, TrustRegionConfig,
                    anneal_runner, bfgs_runner, cma_runner, mixed_strategy,
                    multistart, spsa_runner, trust_runner)
from .statevector import (GateOp, Program, basis_rotation_gates, compile_program,
                          execute, expectation, expval_string, overlap_sq,
                          sample_from_probs, zero_state)

PAULI_AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class VqeProblem:
    """A lattice model plus the ansatz and evaluation mode used to probe it.

    ``shots=None`` selects exact expectations; a positive value samples
    that many shots per measurement group.  ``seed`` feeds the sampling
    streams (exact mode ignores it).
    """

    lattice: Lattice
    params: ModelParams
    ansatz: AnsatzSpec
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.ansatz.lattice.n_qubits != self.lattice.n_qubits:
            raise ValueError(
                f"ansatz acts on {self.ansatz.lattice.n_qubits} qubits, "
                f"lattice has {self.lattice.n_qubits}")
        if self.shots is not None and self.shots <= 0:
            raise ValueError("shots must be positive in sampled mode")

    @property
    def n_params(self) -> int:
        return self.ansatz.param_count()

    def hamiltonian(self) -> Hamiltonian:
        return build_hamiltonian(self.lattice, self.params)


@dataclass(frozen=True)
class ExcitedSpec:
    """Penalty weight and the ground-reference parameters it projects out."""

    reference_theta: tuple[float, ...]
    penalty: float = 0.3

    def __post_init__(self):
        if not self.penalty > 0:
            raise ValueError("penalty weight must be positive")


@dataclass(frozen=True)
class ObservableReport:
    """Site-averaged magnetizations and bond-averaged connected correlators."""

    x: float
    y: float
    z: float
    cxx: float
    cyy: float
    czz: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            if abs(getattr(self, name)) > 1.0 + 1e-9:
                raise ValueError(f"<{name.upper()}> outside [-1, 1]")
        for name in ("cxx", "cyy", "czz"):
            if abs(getattr(self, name)) > 2.0 + 1e-9:
                raise ValueError(f"{name} outside [-2, 2]")


def _compiled(circuit: CircuitIR) -> Program:
    return compile_program(circuit.gates, circuit.n_qubits, circuit.param_count)


def simulate_state(circuit: CircuitIR, theta: np.ndarray,
                   program: Program | None = None) -> np.ndarray:
    state = zero_state(circuit.n_qubits)
    execute(state, program if program is not None else _compiled(circuit), theta)
    return state


def inverted_reference_gates(circuit: CircuitIR,
                             theta_ref: np.ndarray) -> list[GateOp]:
    """Gates of U†(theta_ref): reversed order, angles bound and negated."""
    theta_ref = np.asarray(theta_ref, dtype=np.float64)
    if theta_ref.shape != (circuit.param_count,):
        raise ValueError(f"reference theta shape {theta_ref.shape} != "
                         f"({circuit.param_count},)")
    out: list[GateOp] = []
    for g in reversed(circuit.gates):
        if g.kind in ("CZ", "PAULI"):    # self-inverse
            out.append(g)
            continue
        val = g.angle if g.slot is None else g.scale * float(theta_ref[g.slot])
        out.append(GateOp(g.kind, g.sites, angle=-val, pauli=g.pauli))
    return out


def overlap_program(circuit: CircuitIR, theta_ref: np.ndarray) -> Program:
    """Compiled U†(theta_ref) U(theta); the all-zeros population of its
    output equals |<psi(theta_ref)|psi(theta)>|^2."""
    gates = list(circuit.gates) + inverted_reference_gates(circuit, theta_ref)
    return compile_program(gates, circuit.n_qubits, circuit.param_count)


class EnergyCost:
    """Callable cost with its own evaluation counter.

    Exact mode returns <H> of the simulated state; sampled mode sums the
    per-axis group estimates from ``shots`` measurements each.
    """

    def __init__(self, problem: VqeProblem,
                 seed_seq: np.random.SeedSequence | None = None):
        self.problem = problem
        self.circuit = build_circuit(problem.ansatz)
        self.n = self.circuit.param_count
        self.hamiltonian = problem.hamiltonian()
        self.program = _compiled(self.circuit)
        self.evaluations = 0
        self.shots = problem.shots
        if self.shots is not None:
            self.rng = np.random.default_rng(
                seed_seq if seed_seq is not None else problem.seed)
            nq = self.circuit.n_qubits
            self.groups = []
            for axis, terms in measurement_groups(self.hamiltonian):
                rot = basis_rotation_gates(axis, nq)
                prog = compile_program(rot, nq, 0) if rot else None
                masked = [(t.masks()[0] | t.masks()[1] | t.masks()[2], t.weight)
                          for t in terms]
                self.groups.append((axis, prog, masked))

    def state(self, theta: np.ndarray) -> np.ndarray:
        return simulate_state(self.circuit, theta, self.program)

    def exact(self, theta: np.ndarray) -> float:
        return expectation(self.state(theta), self.hamiltonian)

    def _sampled_energy(self, state: np.ndarray) -> float:
        total = 0.0
        for _axis, prog, masked in self.groups:
            work = state.copy()
            if prog is not None:
                execute(work, prog)
            p = work.real * work.real + work.imag * work.imag
            ints = sample_from_probs(p, self.shots, self.rng)
            total += sum(w * _parity_mean(ints, mask) for mask, w in masked)
        return total

    def __call__(self, theta: np.ndarray) -> float:
        self.evaluations += 1
        if self.shots is None:
            return self.exact(theta)
        return self._sampled_energy(self.state(theta))


def _parity_mean(ints: np.ndarray, mask: int) -> float:
    ones = int(np.count_nonzero(np.bitwise_count(ints & mask) & 1))
    return 1.0 - 2.0 * ones / len(ints)


class ExcitedCost(EnergyCost):
    """Energy plus ``penalty * |<psi(theta_ref)|psi(theta)>|^2``.

    Exact mode computes the overlap from the two statevectors; sampled
    mode measures the all-zeros frequency of the inverted-reference
    composition, spending one extra group of ``shots``.
    """

    def __init__(self, problem: VqeProblem, excited: ExcitedSpec,
                 seed_seq: np.random.SeedSequence | None = None):
        super().__init__(problem, seed_seq)
        theta_ref = np.asarray(excited.reference_theta, dtype=np.float64)
        if theta_ref.shape != (self.n,):
            raise ValueError(f"reference theta has {theta_ref.shape[0] if theta_ref.ndim else 0} "
                             f"entries, ansatz takes {self.n}")
        self.excited = excited
        self.theta_ref = theta_ref
        if self.shots is None:
            self.ref_state = self.state(theta_ref)
        else:
            self.overlap_prog = overlap_program(self.circuit, theta_ref)

    def overlap(self, theta: np.ndarray) -> float:
        if self.shots is None:
            return overlap_sq(self.ref_state, self.state(theta))
        state = zero_state(self.circuit.n_qubits)
        execute(state, self.overlap_prog, theta)
        p = state.real * state.real + state.imag * state.imag
        ints = sample_from_probs(p, self.shots, self.rng)
        return float(np.count_nonzero(ints == 0)) / self.shots

    def __call__(self, theta: np.ndarray) -> float:
        self.evaluations += 1
        if self.shots is None:
            state = self.state(theta)
            return (expectation(state, self.hamiltonian)
                    + self.excited.penalty * overlap_sq(self.ref_state, state))
        return self._sampled_energy(self.state(theta)) \
            + self.excited.penalty * self.overlap(theta)


def energy_cost(problem: VqeProblem,
                seed_seq: np.random.SeedSequence | None = None) -> EnergyCost:
    return EnergyCost(problem, seed_seq)


def excited_cost(problem: VqeProblem, excited: ExcitedSpec,
                 seed_seq: np.random.SeedSequence | None = None) -> ExcitedCost:
    return ExcitedCost(problem, excited, seed_seq)


def exact_energy(problem: VqeProblem, theta: np.ndarray) -> float:
    """<H> at theta from the exact simulator, regardless of problem mode."""
    return EnergyCost(dataclasses.replace(problem, shots=None)).exact(theta)


OPTIMIZERS = ("mixed", "trust", "cma", "spsa", "anneal", "bfgs")


@dataclass(frozen=True)
class GroundStrategy:
    """How to minimize: a named optimizer under multi-start, or the
    two-branch mixed strategy (trust-region restarts plus CMA restarts)."""

    optimizer: str = "mixed"
    restarts: int = 1                       # trust branch when mixed
    per_restart_evals: int | None = None    # trust branch when mixed
    cma_restarts: int = 1
    cma_evals: int | None = None
    master_seed: int = 0
    trust: TrustRegionConfig = field(default_factory=TrustRegionConfig)
    cma: CMAConfig = field(default_factory=CMAConfig)
    spsa: SPSAConfig = field(default_factory=SPSAConfig)
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    bfgs: BFGSConfig = field(default_factory=BFGSConfig)

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")

    def runner(self):
        # mixed reduces to its local branch for single warm-start runs
        name = "trust" if self.optimizer == "mixed" else self.optimizer
        return {"trust": trust_runner(self.trust), "cma": cma_runner(self.cma),
                "spsa": spsa_runner(self.spsa),
                "anneal": anneal_runner(self.anneal),
                "bfgs": bfgs_runner(self.bfgs)}[name]


@dataclass(frozen=True)
class BranchSummary:
    name: str
    best_value: float
    restarts: int
    mean_evals: float
    max_evals: int


@dataclass(frozen=True)
class GroundReport:
    best: OptResult
    per_restart: tuple[tuple[str, OptResult], ...]  # (branch name, result)
    branches: tuple[BranchSummary, ...]
    e0: float
    energy: float      # exact <H> at the best parameters
    error: float       # energy - e0

    @property
    def restarts(self) -> tuple[OptResult, ...]:
        return tuple(r for _, r in self.per_restart)


def _cost_factory(problem: VqeProblem) -> Callable[[], EnergyCost]:
    base = np.random.SeedSequence(problem.seed)

    def make() -> EnergyCost:
        if problem.shots is None:
            return EnergyCost(problem)
        return EnergyCost(problem, seed_seq=base.spawn(1)[0])
    return make


def _excited_factory(problem: VqeProblem,
                     excited: ExcitedSpec) -> Callable[[], ExcitedCost]:
    base = np.random.SeedSequence(problem.seed)

    def make() -> ExcitedCost:
        if problem.shots is None:
            return ExcitedCost(problem, excited)
        return ExcitedCost(problem, excited, seed_seq=base.spawn(1)[0])
    return make


def _run_strategy(factory: Callable[[], EnergyCost], n: int,
                  strategy: GroundStrategy,
                  on_restart: Callable[[str, int, OptResult], None] | None = None,
                  completed: dict[str, dict[int, OptResult]] | None = None
                  ) -> tuple[OptResult, tuple[tuple[str, OptResult], ...],
                             tuple[BranchSummary, ...]]:
    completed = completed or {}
    if strategy.optimizer == "mixed":
        cfg = MixedStrategyConfig(
            trust_ms=MultiStartConfig(strategy.restarts, n,
                                      per_restart_evals=strategy.per_restart_evals),
            cma_ms=MultiStartConfig(strategy.cma_restarts, n,
                                    per_restart_evals=strategy.cma_evals),
            trust=strategy.trust, cma=strategy.cma,
            master_seed=strategy.master_seed)
        out = mixed_strategy(factory, cfg, on_restart, completed)
        per = tuple([("trust", r) for r in out.trust_branch.results]
                    + [("cma", r) for r in out.cma_branch.results])
        branches = (
            BranchSummary("trust", out.trust_branch.best.best_value,
                          len(out.trust_branch.results),
                          out.trust_branch.mean_evals, out.trust_branch.max_evals),
            BranchSummary("cma", out.cma_branch.best.best_value,
                          len(out.cma_branch.results),
                          out.cma_branch.mean_evals, out.cma_branch.max_evals))
        return out.best, per, branches
    ms = MultiStartConfig(strategy.restarts, n,
                          per_restart_evals=strategy.per_restart_evals)
    name = strategy.optimizer
    hook = (None if on_restart is None
            else lambda r, res: on_restart(name, r, res))
    out = multistart(strategy.runner(), factory, ms, strategy.master_seed,
                     hook, completed.get(name))
    per = tuple((name, r) for r in out.results)
    branches = (BranchSummary(name, out.best.best_value,
                              len(out.results), out.mean_evals, out.max_evals),)
    return out.best, per, branches


def reference_ground_energy(problem: VqeProblem, seed: int = 1234) -> float:
    return ed.ground_energy(problem.hamiltonian(), seed=seed)


def optimize_ground(problem: VqeProblem, strategy: GroundStrategy,
                    e0: float | None = None,
                    on_restart: Callable[[str, int, OptResult], None] | None = None,
                    completed: dict[str, dict[int, OptResult]] | None = None
                    ) -> GroundReport:
    """Minimize the energy cost; the error column compares the exact
    energy at the optimum against the diagonalization ground energy.
    ``on_restart`` / ``completed`` plumb per-restart checkpointing."""
    if e0 is None:
        e0 = reference_ground_energy(problem)
    best, per, branches = _run_strategy(_cost_factory(problem),
                                        problem.n_params, strategy,
                                        on_restart, completed)
    energy = exact_energy(problem, np.asarray(best.best_theta))
    return GroundReport(best, per, branches, e0, energy, energy - e0)


@dataclass(frozen=True)
class ExcitedReport:
    best: OptResult
    energy: float                 # exact <H> at the optimum (penalty removed)
    overlap: float                # exact overlap with the reference state
    spectrum: tuple[float, ...]   # low eigenvalues from diagonalization
    gap: float                    # energy - spectrum[0]


def optimize_excited(problem: VqeProblem, excited: ExcitedSpec,
                     strategy: GroundStrategy, k: int = 6) -> ExcitedReport:
    best, _per, _branches = _run_strategy(_excited_factory(problem, excited),
                                          problem.n_params, strategy)
    theta = np.asarray(best.best_theta)
    exact_problem = dataclasses.replace(problem, shots=None)
    probe = ExcitedCost(exact_problem, excited)
    state = probe.state(theta)
    energy = expectation(state, probe.hamiltonian)
    ov = overlap_sq(probe.ref_state, state)
    spec = ed.low_spectrum(probe.hamiltonian, k=k).eigenvalues
    return ExcitedReport(best, energy, ov, spec, energy - spec[0])


def measure_observables(problem: VqeProblem, theta: np.ndarray) -> ObservableReport:
    """Exact site-averaged <X>,<Y>,<Z> and bond-averaged connected
    correlators over the bonds of each axis carrying a nonzero coupling."""
    circuit = build_circuit(problem.ansatz)
    state = simulate_state(circuit, np.asarray(theta, dtype=np.float64))
    n = problem.lattice.n_qubits
    singles = {ax: [expval_string(state, ((q, ax),)) for q in range(n)]
               for ax in PAULI_AXES}
    avg = {ax: float(np.mean(singles[ax])) for ax in PAULI_AXES}
    corr = {}
    for ax in PAULI_AXES:
        bonds = problem.lattice.bonds_by_axis(ax.lower())
        if not bonds or problem.params.coupling(ax.lower()) == 0.0:
            corr[ax] = 0.0
            continue
        vals = []
        for (i, j, _a) in bonds:
            two = expval_string(state, ((i, ax), (j, ax)))
            vals.append(two - singles[ax][i] * singles[ax][j])
        corr[ax] = float(np.mean(vals))
    return ObservableReport(avg["X"], avg["Y"], avg["Z"],
                            corr["X"], corr["Y"], corr["Z"])


SWEEP_AXES = ("j_perp", "h")


@dataclass(frozen=True)
class SweepRow:
    value: float
    energy: float
    e0: float
    error: float
    observables: ObservableReport
    theta: tuple[float, ...]
    excited_energy: float | None = None
    gap: float | None = None
    spectrum: tuple[float, ...] = ()


def _sweep_params(params: ModelParams, axis: str, value: float) -> ModelParams:
    if axis == "j_perp":
        return dataclasses.replace(params, jx=value, jy=value)
    if axis == "h":
        comp = value / math.sqrt(3.0)
        return dataclasses.replace(params, hx=comp, hy=comp, hz=comp)
    raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


def sweep(problem: VqeProblem, axis: str, values,
          strategy: GroundStrategy, excited_penalty: float | None = None,
          warm_start: bool = False) -> tuple[SweepRow, ...]:
    """One optimized row per swept value; gap columns appear when an
    excited-state penalty weight is supplied."""
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    rows: list[SweepRow] = []
    prev_theta: np.ndarray | None = None
    for value in values:
        params = _sweep_params(problem.params, axis, value)
        point = dataclasses.replace(problem, params=params)
        report = optimize_ground(point, strategy)
        best = report.best
        if warm_start and prev_theta is not None:
            warm_rng = np.random.default_rng(
                np.random.SeedSequence([strategy.master_seed, len(rows)]))
            warm = strategy.runner()(_cost_factory(point)(), prev_theta,
                                     warm_rng, strategy.per_restart_evals)
            if warm.best_value < best.best_value:
                best = warm
        theta = np.asarray(best.best_theta)
        energy = exact_energy(point, theta)
        obs = measure_observables(point, theta)
        excited_energy = gap = None
        spectrum: tuple[float, ...] = ()
        if excited_penalty is not None:
            exc = optimize_excited(
                point, ExcitedSpec(tuple(float(t) for t in theta),
                                   penalty=excited_penalty), strategy)
            excited_energy = exc.energy
            gap = exc.energy - energy
            spectrum = exc.spectrum
        rows.append(SweepRow(float(value), energy, report.e0, energy - report.e0,
                             obs, tuple(float(t) for t in theta),
                             excited_energy, gap, spectrum))
        prev_theta = theta
    return tuple(rows)
