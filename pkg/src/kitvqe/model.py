"""Spin models on trivalent lattices: couplings, Hamiltonians, measurement groups.

The Hamiltonian is

    H = -Jx * sum_x XX - Jy * sum_y YY - Jz * sum_z ZZ
        + sum_i (hx X_i + hy Y_i + hz Z_i)

where the bond sums run over the lattice's x/y/z bonds.  Terms are kept
as weighted Pauli strings in a canonical order: x bonds, y bonds, z
bonds (each in lattice order), then X, Y, Z field terms in site order.
Zero-weight terms are dropped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

from .lattice import AXES, Lattice

PAULI_AXES = ("X", "Y", "Z")

_H_COMPONENT = 0.05 / math.sqrt(3.0)  # |h| = 0.05 along (1,1,1)
_J_PERP_GAPLESS = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ModelParams:
    """Bond couplings and uniform field components."""

    jx: float
    jy: float
    jz: float
    hx: float = 0.0
    hy: float = 0.0
    hz: float = 0.0

    def __post_init__(self):
        for name in ("jx", "jy", "jz", "hx", "hy", "hz"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")

    def coupling(self, axis: str) -> float:
        return {"x": self.jx, "y": self.jy, "z": self.jz}[axis]

    def field(self, axis: str) -> float:
        return {"x": self.hx, "y": self.hy, "z": self.hz}[axis]


PRESETS: dict[str, ModelParams] = {
    "TC_z": ModelParams(0.1, 0.1, 1.0),
    "TC_z+h": ModelParams(0.1, 0.1, 1.0, _H_COMPONENT, _H_COMPONENT, _H_COMPONENT),
    "GL": ModelParams(_J_PERP_GAPLESS, _J_PERP_GAPLESS, 1.0),
    "GL+h": ModelParams(_J_PERP_GAPLESS, _J_PERP_GAPLESS, 1.0,
                        _H_COMPONENT, _H_COMPONENT, _H_COMPONENT),
}


def preset(label: str) -> ModelParams:
    try:
        return PRESETS[label]
    except KeyError:
        raise ValueError(f"unknown preset {label!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class PauliString:
    """A weighted Pauli string; ``sites`` is ((index, axis), ...) sorted by index."""

    weight: float
    sites: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not math.isfinite(self.weight):
            raise ValueError("weight must be finite")
        seen = set()
        for idx, ax in self.sites:
            if ax not in PAULI_AXES:
                raise ValueError(f"axis must be one of {PAULI_AXES}, got {ax!r}")
            if not isinstance(idx, int) or idx < 0:
                raise ValueError(f"site index must be a nonnegative int, got {idx!r}")
            if idx in seen:
                raise ValueError(f"repeated site {idx}")
            seen.add(idx)
        if tuple(sorted(self.sites)) != self.sites:
            raise ValueError("sites must be sorted by index")

    def masks(self) -> tuple[int, int, int]:
        xm = ym = zm = 0
        for idx, ax in self.sites:
            bit = 1 << idx
            if ax == "X":
                xm |= bit
            elif ax == "Y":
                ym |= bit
            else:
                zm |= bit
        return xm, ym, zm

    def single_axis(self) -> str | None:
        """The common axis if every factor shares one, else None."""
        axes = {ax for _, ax in self.sites}
        return axes.pop() if len(axes) == 1 else None


class Hamiltonian:
    """An ordered collection of weighted Pauli strings on ``n_qubits``."""

    def __init__(self, n_qubits: int, terms: Iterable[PauliString]):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        terms = tuple(terms)
        for t in terms:
            if t.sites and t.sites[-1][0] >= n_qubits:
                raise ValueError(f"term {t} exceeds n_qubits={n_qubits}")
        self.n_qubits = n_qubits
        self.terms = terms
        self._mask_cache: list[tuple[int, int, int, float]] | None = None

    def masked_terms(self) -> list[tuple[int, int, int, float]]:
        """[(xm, ym, zm, weight)] per term, cached."""
        if self._mask_cache is None:
            self._mask_cache = [(*t.masks(), t.weight) for t in self.terms]
        return self._mask_cache

    def __eq__(self, other) -> bool:
        return (isinstance(other, Hamiltonian)
                and self.n_qubits == other.n_qubits
                and self.terms == other.terms)

    def __repr__(self) -> str:
        return f"Hamiltonian(n_qubits={self.n_qubits}, terms={len(self.terms)})"

    def to_json(self) -> str:
        payload = {
            "n_qubits": self.n_qubits,
            "terms": [
                {"weight": t.weight, "sites": [[i, ax] for i, ax in t.sites]}
                for t in self.terms
            ],
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Hamiltonian":
        payload = json.loads(text)
        try:
            n = payload["n_qubits"]
            raw = payload["terms"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed hamiltonian JSON: {exc}") from None
        terms = []
        for entry in raw:
            sites = tuple(sorted((int(i), str(ax)) for i, ax in entry["sites"]))
            terms.append(PauliString(float(entry["weight"]), sites))
        return cls(int(n), terms)


def build_hamiltonian(lattice: Lattice, params: ModelParams) -> Hamiltonian:
    terms: list[PauliString] = []
    for axis in AXES:
        j = params.coupling(axis)
        if j == 0.0:
            continue
        op = axis.upper()
        for (i, k, _ax) in lattice.bonds_by_axis(axis):
            terms.append(PauliString(-j, ((i, op), (k, op))))
    for axis in AXES:
        h = params.field(axis)
        if h == 0.0:
            continue
        op = axis.upper()
        for site in range(lattice.n_qubits):
            terms.append(PauliString(h, ((site, op),)))
    return Hamiltonian(lattice.n_qubits, terms)


def measurement_groups(h: Hamiltonian) -> list[tuple[str, tuple[PauliString, ...]]]:
    """Partition terms into qubit-wise commuting groups, one per Pauli axis.

    Every term of the models built here is single-axis, so measuring all
    qubits in that axis covers the whole group.  Raises on mixed-axis
    terms rather than attempting general grouping.
    """
    buckets: dict[str, list[PauliString]] = {ax: [] for ax in PAULI_AXES}
    for t in h.terms:
        ax = t.single_axis()
        if ax is None:
            raise ValueError(f"term {t} mixes axes; cannot group qubit-wise")
        buckets[ax].append(t)
    return [(ax, tuple(buckets[ax])) for ax in PAULI_AXES if buckets[ax]]
