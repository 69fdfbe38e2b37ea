"""Timing comparison of the compiled and pure-python gate kernels.

Run without arguments: the script re-launches itself once per backend
(via KITVQE_BACKEND, which is read at import time), then prints a
side-by-side table.  Workloads cover the optimization hot path (circuit
execution and exact energy), the shot-sampling path, and the noisy
trajectory path.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

MIN_SECONDS = 0.4


def _time_per_call(fn, min_seconds: float = MIN_SECONDS) -> float:
    """Seconds per call, repeating until min_seconds of work is timed."""
    fn()  # warm-up
    calls = 0
    t0 = time.perf_counter()
    elapsed = 0.0
    while elapsed < min_seconds:
        fn()
        calls += 1
        elapsed = time.perf_counter() - t0
    return elapsed / calls


def workloads() -> dict[str, object]:
    from kitvqe.ansatz import AnsatzSpec, build_circuit, cz_decompose
    from kitvqe.lattice import build_preset
    from kitvqe.mitigation import NoiseModel, noisy_execute
    from kitvqe.model import build_hamiltonian, preset
    from kitvqe.statevector import compile_program, execute, zero_state
    from kitvqe.vqe import VqeProblem, energy_cost

    rng = np.random.default_rng(0)
    out: dict[str, object] = {}

    for name, layers in (("open8", 4), ("open16", 4)):
        lattice = build_preset(name)
        circuit = build_circuit(AnsatzSpec("HVA", layers, lattice))
        program = compile_program(circuit.gates, circuit.n_qubits,
                                  circuit.param_count)
        theta = rng.uniform(-np.pi, np.pi, circuit.param_count)
        state = zero_state(circuit.n_qubits)

        def run_exec(state=state, program=program, theta=theta):
            state[:] = 0.0
            state[0] = 1.0
            execute(state, program, theta)

        out[f"execute hva4 {name}"] = run_exec

    lattice = build_preset("open8")
    problem = VqeProblem(lattice, preset("GL+h"),
                         AnsatzSpec("HVA", 4, lattice))
    cost = energy_cost(problem)
    theta8 = rng.uniform(-np.pi, np.pi, problem.n_params)
    out["exact energy open8"] = lambda: cost(theta8)

    sampled = energy_cost(VqeProblem(lattice, preset("GL+h"),
                                     AnsatzSpec("HVA", 4, lattice),
                                     shots=8000, seed=1))
    out["sampled energy open8 (3x8000 shots)"] = lambda: sampled(theta8)

    lattice4 = build_preset("open4")
    circ4 = cz_decompose(build_circuit(AnsatzSpec("HVA", 1, lattice4)))
    theta4 = rng.uniform(-np.pi, np.pi, circ4.param_count)
    noise = NoiseModel(p2=0.05)
    traj_rng = np.random.default_rng(2)
    out["noisy trajectories open4 (1000 shots)"] = \
        lambda: noisy_execute(circ4, theta4, noise, 1000, traj_rng)
    return out


def run_backend() -> None:
    from kitvqe.backend import BACKEND

    results = {name: _time_per_call(fn) for name, fn in workloads().items()}
    print(json.dumps({"backend": BACKEND, "timings": results}))


def compare() -> int:
    rows: dict[str, dict[str, float]] = {}
    for backend in ("python", "cython"):
        env = dict(os.environ, KITVQE_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--backend-run"],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"{backend} backend failed:\n{proc.stderr}", file=sys.stderr)
            return 1
        payload = json.loads(proc.stdout.splitlines()[-1])
        for name, seconds in payload["timings"].items():
            rows.setdefault(name, {})[backend] = seconds

    width = max(len(n) for n in rows)
    print(f"{'workload':<{width}}  {'python':>10}  {'cython':>10}  speedup")
    for name, t in rows.items():
        ratio = t["python"] / t["cython"]
        print(f"{name:<{width}}  {t['python'] * 1e3:>8.3f}ms  "
              f"{t['cython'] * 1e3:>8.3f}ms  {ratio:>6.1f}x")
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--backend-run", action="store_true",
                        help="time the active backend and emit JSON")
    args = parser.parse_args()
    if args.backend_run:
        run_backend()
        return 0
    return compare()


if __name__ == "__main__":
    sys.exit(main())
