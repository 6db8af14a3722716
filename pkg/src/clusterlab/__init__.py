"""Two-body Hamiltonians whose ground state approximates a cluster state.

Each lattice site holds one qubit per incident bond.  A strong Ising term
``g*H0`` inside every site and weak bond couplings ``lam*V`` between sites
give a ground state close to the graph's cluster state.  The package builds
these Hamiltonians, solves them directly and through a CSIGN duality,
and runs exact-rational degenerate perturbation theory on them.
"""
from .pauli import PauliString, StateVector, WeightedPauliSum, apply, commutes, expectation, multiply
from .lattice import GraphError, GraphSpec, SiteSpec, build_named, load_graph, validate
from .hamiltonian import (
    HamiltonianParams,
    LogicalOperator,
    build_cluster_hamiltonian,
    build_h0,
    build_total,
    build_v,
    encoded_stabilizer,
    logical_stabilizer,
)
from .spectral import GapFit, SpectrumReport, closed_form_energy, closed_form_gap, fit_gap_exponent, low_spectrum
from .duality import SiteDualModel, compose_spectrum, cs_transform, site_dual_models, site_gap
from .cluster import FidelityReport, fidelity, logical_cluster_state, per_site_report, z_error_state
from .perturbation import (
    StabilizerPolynomial,
    ZErrorConfig,
    energy_series,
    eigenvalue,
    first_order_state,
    numeric_theta_oracle,
    theta,
    theta_series,
)

__version__ = "0.1.0"
