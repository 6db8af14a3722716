import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from clusterlab.cluster import fidelity, logical_cluster_state
from clusterlab.duality import compose_spectrum, site_dual_models
from clusterlab.hamiltonian import HamiltonianParams, build_total
from clusterlab.lattice import build_named, graph_from_edges
from clusterlab.perturbation import (
    PathBudgetExceeded,
    StabilizerPolynomial,
    ZErrorConfig,
    energy_series,
    enumerate_paths,
    eigenvalue,
    first_order_amplitudes,
    first_order_state,
    fixed_square_report,
    numeric_theta_oracle,
    symbolic_matrix,
    theta,
    theta_series,
)
from clusterlab.spectral import low_spectrum

K4 = graph_from_edges(itertools.combinations(range(4), 2), name="K4")
RING3 = build_named("ring", [3])


# examples ------------------------------------------------------------------

def test_ring_theta2_and_theta4():
    t = theta_series(build_named("ring", [5]), 4)
    assert t[0].is_zero and t[2].is_zero
    assert t[1].identity_coefficient == -5
    assert set(t[1].single_site_coefficients().values()) == {-1}
    assert t[3].identity_coefficient == 5
    assert set(t[3].single_site_coefficients().values()) == {1}


def test_hex_theta3_has_no_identity():
    t = theta(build_named("hex", [2, 2]), 3)
    assert t.identity_coefficient == 0
    assert set(t.single_site_coefficients().values()) == {Fraction(-3, 8)}


def test_fixed_line_theta1_only_boundary():
    spec = build_named("line", [6], "fixed")
    t1 = theta(spec, 1)
    assert t1.terms == {frozenset({0}): -1, frozenset({5}): -1}


def test_eigenvalue_on_configurations():
    spec = build_named("ring", [4])
    t2 = theta(spec, 2)
    assert eigenvalue(t2) == -8
    assert eigenvalue(t2, ZErrorConfig({1})) == -6
    assert eigenvalue(t2, [0, 1]) == -4


def test_zerror_config_range_check():
    with pytest.raises(IndexError):
        ZErrorConfig({7}).check(RING3)


def test_order_cap_and_method():
    with pytest.raises(ValueError):
        theta_series(RING3, 7)
    with pytest.raises(ValueError):
        theta_series(RING3, 0)
    with pytest.raises(ValueError):
        theta_series(RING3, 2, method="exact")


def test_budget_exceeded_is_reported():
    with pytest.raises(PathBudgetExceeded) as exc:
        theta_series(build_named("square", [3, 3]), 4, method="global", budget=1000)
    assert exc.value.budget == 1000 and exc.value.order == 4


def test_paths_end_in_logical_space_with_stabilizer_images():
    paths = list(enumerate_paths(K4, 3))
    assert paths
    for p in paths:
        assert len(p.denominators) == p.length - 1
        assert all(d < 0 and d % 2 == 0 for d in p.denominators)


# energy series -------------------------------------------------------------

def test_energy_series_costs_by_class():
    es = energy_series(build_named("line", [6], "fixed"), 2)
    assert es.costs["boundary"] == {1: 2, 2: 0}
    assert es.costs["c=2"] == {1: 0, 2: 2}
    assert es.leading_cost("c=2") == (2, 2)
    assert es.leading_cost("boundary") == (1, 2)


def test_energy_series_matches_dual_energy():
    spec = build_named("square", [3, 3])
    es = energy_series(spec, 4)
    p = HamiltonianParams(1.0, 0.02)
    exact = compose_spectrum(site_dual_models(spec, p), 1).energies[0]
    # error is O(x^6) per site
    assert abs(es.evaluate(p) - exact) < spec.n_sites * 10 * 0.02 ** 6


@pytest.mark.parametrize("spec,order", [(RING3, 2), (K4, 3), (build_named("square", [2, 2]), 4)])
def test_truncation_error_scales_beyond_last_order(spec, order):
    """log-log slope of |E_exact - E_series| exceeds order + 1/2."""
    es = energy_series(spec, order)
    xs = np.array([0.01, 0.02, 0.04])
    errs = []
    for x in xs:
        p = HamiltonianParams(1.0, x)
        exact = compose_spectrum(site_dual_models(spec, p), 1).energies[0]
        errs.append(abs(es.evaluate(p) - exact))
    slope = np.polyfit(np.log(xs), np.log(errs), 1)[0]
    assert slope >= order + 0.5


def test_fixed_square_report_rows():
    rows, series = fixed_square_report(build_named("square", [4, 4], "fixed"), HamiltonianParams(1.0, 0.05))
    assert [r.n_corner_errors for r in rows] == [0, 1, 2, 3, 4]
    assert rows[0].computed == rows[0].published == rows[0].dual_exact == 0
    # computed cost per corner error: 2x^2 - 2x^4, the expansion of the exact c=2 gap
    for r in rows:
        assert r.computed_coefficients[2] == 2 * r.n_corner_errors
        assert r.computed_coefficients[4] == -2 * r.n_corner_errors
        assert abs(r.computed - r.dual_exact) <= 10 * r.n_corner_errors * 0.05 ** 6
    assert series.leading_cost("c=3") == (3, Fraction(3, 4))
    assert series.leading_cost("c=4") == (4, Fraction(5, 8))


# oracle --------------------------------------------------------------------

@pytest.mark.parametrize("spec,order", [(RING3, 6), (K4, 4), (build_named("line", [4], "fixed"), 4),
                                        (build_named("hex", [1, 1]), 4)])
def test_symbolic_matches_numeric_oracle(spec, order):
    sym = theta_series(spec, order)
    num = numeric_theta_oracle(spec, order)
    for k in range(order):
        np.testing.assert_allclose(num[k], symbolic_matrix(sym[k]), atol=1e-10)


def test_oracle_size_limit():
    with pytest.raises(ValueError):
        numeric_theta_oracle(build_named("square", [2, 2]), 2)


@pytest.mark.parametrize("spec,order", [(RING3, 6), (K4, 4), (build_named("square", [2, 2]), 4),
                                        (build_named("line", [5], "fixed"), 4), (build_named("hex", [1, 1]), 4)])
def test_local_and_global_methods_agree(spec, order):
    assert theta_series(spec, order, "local") == theta_series(spec, order, "global")


@pytest.mark.parametrize("kind,dims", [("ring", [6]), ("hex", [2, 2]), ("square", [3, 3])])
def test_translation_invariance(kind, dims):
    for t in theta_series(build_named(kind, dims), 4):
        assert len(set(t.single_site_coefficients().values())) == 1


# first-order state ---------------------------------------------------------

@pytest.mark.parametrize("spec,n_states,amp", [
    (build_named("ring", [4]), 4, Fraction(1)),
    (K4, 12, Fraction(1, 4)),
    (build_named("square", [2, 2]), 16, Fraction(1, 4)),
])
def test_first_order_amplitudes(spec, n_states, amp):
    amps = first_order_amplitudes(spec)
    assert len(amps) == n_states
    assert {a for _, a in amps} == {amp}


@pytest.mark.parametrize("spec", [RING3, K4])
def test_first_order_state_deficit(spec):
    """1 - |<first-order state | exact ground>|^2 shrinks at least as x^3."""
    xs = np.array([0.01, 0.02, 0.04])
    deficits = []
    for x in xs:
        p = HamiltonianParams(1.0, x)
        exact = low_spectrum(build_total(spec, p), k=1, want_vector=True).ground_vector
        deficits.append(1 - fidelity(exact, first_order_state(spec, p)))
    slope = np.polyfit(np.log(xs), np.log(deficits), 1)[0]
    assert slope >= 3


def test_first_order_state_beats_cluster_state():
    p = HamiltonianParams(1.0, 0.05)
    exact = low_spectrum(build_total(K4, p), k=1, want_vector=True).ground_vector
    assert fidelity(exact, first_order_state(K4, p)) > fidelity(exact, logical_cluster_state(K4))


# algebra -------------------------------------------------------------------

subsets = st.frozensets(st.integers(0, 3), max_size=4)
polys = st.dictionaries(subsets, st.fractions(max_denominator=20), max_size=6).map(
    lambda d: StabilizerPolynomial(4, d)
)
cfgs = st.frozensets(st.integers(0, 3))


@given(polys, polys, cfgs)
def test_eigenvalue_is_additive_and_multiplicative(a, b, cfg):
    assert (a + b).eigenvalue(cfg) == a.eigenvalue(cfg) + b.eigenvalue(cfg)
    assert (a * b).eigenvalue(cfg) == a.eigenvalue(cfg) * b.eigenvalue(cfg)


@given(polys, polys, polys)
def test_product_is_commutative_and_associative(a, b, c):
    assert (a * b).terms == (b * a).terms
    assert ((a * b) * c).terms == (a * (b * c)).terms


@given(polys)
def test_zero_one_and_scale(a):
    assert (a + StabilizerPolynomial.zero(4)).terms == a.terms
    assert (a * StabilizerPolynomial.one(4)).terms == a.terms
    assert a.scale(0).is_zero


def test_polynomial_str():
    assert str(StabilizerPolynomial.zero(3)) == "0"
    p = StabilizerPolynomial(3, {frozenset(): Fraction(-1, 2), frozenset({0, 2}): 3})
    assert str(p) == "-1/2*1 + 3*S0*S2"


# random graphs -------------------------------------------------------------

def _random_graph(seed):
    rng = random.Random(seed)
    n = rng.randint(3, 5)
    edges = [(rng.randrange(i), i) for i in range(1, n)]
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) not in edges and rng.random() < 0.3:
            edges.append((a, b))
    deg = [sum(v in e for e in edges) for v in range(n)]
    if max(deg) > 4:
        return None
    return graph_from_edges(edges, n)


@given(st.integers(0, 10_000))
def test_random_graph_leading_orders(seed):
    spec = _random_graph(seed)
    if spec is None:
        return
    cs = [s.coordination for s in spec.sites]
    ts = theta_series(spec, max(cs))
    for mu, c in enumerate(cs):
        # a site's stabilizer first appears at order c, with a negative coefficient
        assert all(t.coefficient({mu}) == 0 for t in ts[: c - 1])
        assert ts[c - 1].coefficient({mu}) < 0
