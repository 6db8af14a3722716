"""Site Ising term, bond term, encoded and logical stabilizers.

``H = g*H0 + lam*V`` with

* ``H0 = -sum_sites sum_{i<->j} Z_(mu,i) Z_(mu,j)`` (no term on boundary sites),
* ``V = -sum_bonds [X_(mu,i) Z_(nu,j) + Z_(mu,i) X_(nu,j)]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import GraphSpec, ensure_valid
from .pauli import PauliString, StateVector, WeightedPauliSum

__all__ = [
    "HamiltonianParams",
    "BondTerm",
    "LogicalOperator",
    "build_h0",
    "build_v",
    "bond_terms",
    "build_total",
    "encoded_stabilizer",
    "logical_stabilizer",
    "logical_image",
    "build_cluster_hamiltonian",
    "logical_indices",
    "embed_logical",
    "restrict_logical",
    "h0_ground_energy",
    "excitation_count",
]


@dataclass(frozen=True)
class HamiltonianParams:
    g: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("g must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def ratio(self) -> float:
        return self.lam / self.g

    def require_perturbative(self) -> "HamiltonianParams":
        if not self.ratio < 1:
            raise ValueError("perturbative routines need lambda/g < 1")
        return self


@dataclass(frozen=True)
class BondTerm:
    """One bond term ``X`` on ``(x_site, x_port)`` times ``Z`` on its partner."""

    pauli: PauliString
    x_site: int
    x_port: int
    z_site: int
    z_port: int
    coefficient: float = -1.0


@lru_cache(maxsize=256)
def bond_terms(spec: GraphSpec) -> tuple[BondTerm, ...]:
    """The V terms, two per bond, in bond order."""
    ensure_valid(spec)
    n = spec.n_qubits
    out = []
    for a, pa, b, pb in spec.bonds:
        qa, qb = spec.qubit(a, pa), spec.qubit(b, pb)
        out.append(BondTerm(PauliString(n, 1 << qa, 1 << qb), a, pa, b, pb))
        out.append(BondTerm(PauliString(n, 1 << qb, 1 << qa), b, pb, a, pa))
    return tuple(out)


def _intra_pairs(spec: GraphSpec):
    for s_idx, s in enumerate(spec.sites):
        if s.boundary:
            continue
        for i, j in s.intra_edges:
            yield s_idx, spec.qubit(s_idx, i), spec.qubit(s_idx, j)


@lru_cache(maxsize=256)
def build_h0(spec: GraphSpec) -> WeightedPauliSum:
    ensure_valid(spec)
    n = spec.n_qubits
    return WeightedPauliSum(
        n, tuple((-1.0, PauliString(n, 0, (1 << qi) | (1 << qj))) for _, qi, qj in _intra_pairs(spec))
    )


@lru_cache(maxsize=256)
def build_v(spec: GraphSpec) -> WeightedPauliSum:
    return WeightedPauliSum(spec.n_qubits, tuple((t.coefficient, t.pauli) for t in bond_terms(spec)))


def build_total(spec: GraphSpec, params: HamiltonianParams) -> WeightedPauliSum:
    """``g*H0 + lam*V`` with equal strings merged."""
    h = params.g * build_h0(spec) + params.lam * build_v(spec)
    return h.simplify()


def h0_ground_energy(spec: GraphSpec, g: float = 1.0) -> float:
    """Energy of the logical space under ``g*H0``."""
    return -g * sum(1 for _ in _intra_pairs(spec))


def excitation_count(spec: GraphSpec, x_mask: int) -> int:
    """Number of H0 edges anticommuting with a Pauli whose X-part is ``x_mask``.

    Each one raises the ``g*H0`` energy by ``2g`` above the logical space.
    """
    return sum(((x_mask >> qi) ^ (x_mask >> qj)) & 1 for _, qi, qj in _intra_pairs(spec))


def encoded_stabilizer(spec: GraphSpec, site: int) -> PauliString:
    """``K_mu``: X on every qubit of the site, Z on every bond partner."""
    ensure_valid(spec)
    if not 0 <= site < spec.n_sites:
        raise IndexError(f"no site {site}")
    z = 0
    for p in range(spec.sites[site].coordination):
        z |= 1 << spec.qubit(*spec.partner(site, p))
    return PauliString(spec.n_qubits, spec.site_mask(site), z)


@dataclass(frozen=True)
class LogicalOperator:
    """``sign * prod_mu X_mu^{x_mu} Z_mu^{z_mu}`` on one qubit per site.

    The per-site order is X then Z (``X Z``), so a site with both bits set is
    ``X Z = -iY``; ``sign`` is restricted to +-1.
    """

    n_sites: int
    x: int = 0
    z: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("logical operator sign must be +-1")

    def to_pauli(self) -> PauliString:
        # PauliString phase is relative to Y labels and X Z = -iY
        n_y = bin(self.x & self.z).count("1")
        return PauliString(self.n_sites, self.x, self.z, (0 if self.sign == 1 else 2) - n_y)

    def __mul__(self, other: "LogicalOperator") -> "LogicalOperator":
        p = self.to_pauli() * other.to_pauli()
        return _from_pauli(p)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0


def _from_pauli(p: PauliString) -> LogicalOperator:
    xz = p.xz_phase
    if xz % 2:
        raise ArithmeticError(f"logical operator with imaginary phase: {p.label()}")
    return LogicalOperator(p.n_qubits, p.x, p.z, 1 if xz == 0 else -1)


def logical_stabilizer(spec: GraphSpec, site: int) -> LogicalOperator:
    """``S_mu = X_mu prod_{nu~mu} Z_nu`` (Z exponents mod 2 on multigraphs)."""
    ensure_valid(spec)
    if not 0 <= site < spec.n_sites:
        raise IndexError(f"no site {site}")
    z = 0
    for nb in spec.neighbors(site):
        z ^= 1 << nb
    return LogicalOperator(spec.n_sites, 1 << site, z)


def logical_image(spec: GraphSpec, p: PauliString) -> LogicalOperator | None:
    """``P_L p P_L`` as a logical operator, or ``None`` if it vanishes.

    On a non-boundary site the X part must be all or nothing; the site then
    contributes ``X_L^{all} Z_L^{parity(z)}``.
    """
    if excitation_count(spec, p.x):
        return None
    lx = lz = 0
    for s in range(spec.n_sites):
        m = spec.site_mask(s)
        if p.x & m:
            lx |= 1 << s
        if bin(p.z & m).count("1") % 2:
            lz |= 1 << s
    xz = p.xz_phase
    if xz % 2:
        raise ArithmeticError(f"logical image with imaginary phase: {p.label()}")
    return LogicalOperator(spec.n_sites, lx, lz, 1 if xz == 0 else -1)


def build_cluster_hamiltonian(spec: GraphSpec, delta: float = 1.0) -> WeightedPauliSum:
    """``-delta * sum_mu S_mu`` on one qubit per site."""
    terms = []
    for s in range(spec.n_sites):
        p = logical_stabilizer(spec, s).to_pauli()
        terms.append((-delta, p))
    return WeightedPauliSum(spec.n_sites, tuple(terms))


@lru_cache(maxsize=64)
def logical_indices(spec: GraphSpec) -> np.ndarray:
    """Physical basis index of each logical basis state ``|s_0 s_1 ...>``.

    Logical bit of site ``mu`` set means every qubit of the site is 1.
    """
    n = spec.n_sites
    masks = np.array([spec.site_mask(s) for s in range(n)], dtype=np.int64)
    cfg = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, dtype=np.int64)
    for s in range(n):
        out |= np.where((cfg >> s) & 1, masks[s], 0)
    return out


def embed_logical(spec: GraphSpec, v: StateVector) -> StateVector:
    """Map a one-qubit-per-site state into the physical logical space."""
    if v.n_qubits != spec.n_sites:
        raise ValueError("logical vector has wrong number of qubits")
    amps = np.zeros(1 << spec.n_qubits, dtype=complex)
    amps[logical_indices(spec)] = v.amplitudes
    return StateVector(amps)


def restrict_logical(spec: GraphSpec, v: StateVector) -> StateVector:
    """Components of a physical state on the logical basis (not renormalized)."""
    return StateVector(v.amplitudes[logical_indices(spec)])
