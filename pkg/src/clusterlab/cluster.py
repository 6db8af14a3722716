"""Embedded cluster state, its Z-error family, fidelities and per-site bounds."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .hamiltonian import HamiltonianParams, embed_logical, encoded_stabilizer
from .lattice import GraphSpec, ensure_valid
from .pauli import PauliString, StateVector, apply, expectation, WeightedPauliSum

__all__ = [
    "MAX_EMBED_QUBITS",
    "FidelityReport",
    "graph_state_amplitudes",
    "logical_graph_state",
    "logical_cluster_state",
    "z_error_state",
    "fidelity",
    "fidelity_via_duality",
    "per_site_bound_coefficient",
    "per_site_report",
    "stabilizer_expectations",
]

MAX_EMBED_QUBITS = 24

# k in d > 1/(1 + k (lam/g)^2), from the first-order corrected state
BOUND_BY_KIND = {
    "line": Fraction(1),
    "ring": Fraction(1),
    "hex": Fraction(3, 16),
    "square": Fraction(4, 16),
    "cubic": Fraction(6, 64),
}
BOUND_BY_COORDINATION = {2: Fraction(1), 3: Fraction(3, 16), 4: Fraction(4, 16), 6: Fraction(6, 64)}


def graph_state_amplitudes(spec: GraphSpec) -> np.ndarray:
    """Unnormalized ``prod_bonds (-1)^(s_a s_b)`` over logical configurations."""
    n = spec.n_sites
    cfg = np.arange(1 << n)
    par = np.zeros(1 << n, dtype=np.int64)
    for a, _, b, _ in spec.bonds:
        par ^= ((cfg >> a) & (cfg >> b)) & 1
    return (1 - 2 * par).astype(float)


def logical_graph_state(spec: GraphSpec) -> StateVector:
    """The cluster state on one qubit per site."""
    ensure_valid(spec)
    return StateVector(graph_state_amplitudes(spec)).normalized()


def logical_cluster_state(spec: GraphSpec) -> StateVector:
    """Bond pairs ``(|0+> + |1->)/sqrt2`` projected onto each site's logical space.

    On a site only the all-zeros and all-ones configurations survive, which
    leaves the graph-state sign ``(-1)^(s_a s_b)`` per bond.
    """
    ensure_valid(spec)
    if spec.n_qubits > MAX_EMBED_QUBITS:
        raise ValueError(f"{spec.n_qubits} qubits is too many to embed")
    amps = graph_state_amplitudes(spec)
    assert np.any(amps), "projected bond state vanished"
    return embed_logical(spec, StateVector(amps)).normalized()


def _check_cfg(spec: GraphSpec, cfg: Iterable[int]) -> list[int]:
    cfg = sorted(set(cfg))
    for s in cfg:
        if not 0 <= s < spec.n_sites:
            raise IndexError(f"no site {s}")
    return cfg


def z_error_state(spec: GraphSpec, cfg: Iterable[int] = ()) -> StateVector:
    """Cluster state with a Z on port 0 of every listed site."""
    cfg = _check_cfg(spec, cfg)
    z = 0
    for s in cfg:
        z |= 1 << spec.qubit(s, 0)
    return apply(PauliString(spec.n_qubits, 0, z), logical_cluster_state(spec))


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2`` for normalized states."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("states have different dimensions")
    for s in (a, b):
        if abs(s.norm - 1) > 1e-10:
            raise ValueError("fidelity needs normalized states")
    return abs(a.inner(b)) ** 2


def fidelity_via_duality(spec: GraphSpec, params: HamiltonianParams) -> float:
    """``|<C|E0>|^2`` as a product of per-site overlaps in the dual frame.

    The bond CSIGNs send ``|C>`` to a product of per-site GHZ states
    ``(|0..0> + |1..1>)/sqrt2`` and the ground state to the product of
    site ground vectors.  Only valid for ``lam > 0`` (unique ground state).
    """
    from .duality import site_ground_vector

    ensure_valid(spec)
    if not params.lam > 0:
        raise ValueError("the ground state is degenerate at lam = 0")
    cache: dict = {}
    F = 1.0
    for site in spec.sites:
        if site.signature not in cache:
            v = site_ground_vector(site, params)
            cache[site.signature] = (v[0] + v[-1]) ** 2 / 2
        F *= cache[site.signature]
    return float(F)


def per_site_bound_coefficient(kind: str | None = None, c: int | None = None) -> Fraction:
    if kind in BOUND_BY_KIND:
        return BOUND_BY_KIND[kind]
    if c in BOUND_BY_COORDINATION:
        return BOUND_BY_COORDINATION[c]
    raise ValueError(f"no per-site bound for kind={kind!r}, c={c!r}")


@dataclass(frozen=True)
class FidelityReport:
    F: float
    n_sites: int
    d: float
    bound: float
    holds: bool
    kind: str
    params: HamiltonianParams


def per_site_report(
    F: float, n_sites: int, kind: str, params: HamiltonianParams, c: int | None = None
) -> FidelityReport:
    """``d = F^(1/N_S)`` compared with ``1/(1 + k (lam/g)^2)`` for the lattice kind."""
    if not 0 < F <= 1 + 1e-12:
        raise ValueError("F must lie in (0, 1]")
    if n_sites < 1:
        raise ValueError("N_S must be positive")
    F = min(F, 1.0)
    d = F ** (1.0 / n_sites)
    k = per_site_bound_coefficient(kind, c)
    bound = 1.0 / (1.0 + float(k) * params.ratio ** 2)
    return FidelityReport(F, n_sites, d, bound, d > bound, kind, params)


def stabilizer_expectations(spec: GraphSpec, state: StateVector) -> list[float]:
    """``<K_mu>`` for every site."""
    out = []
    for s in range(spec.n_sites):
        k = encoded_stabilizer(spec, s)
        out.append(expectation(state, WeightedPauliSum(spec.n_qubits, ((1.0, k),))))
    return out
