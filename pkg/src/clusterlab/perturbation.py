"""Exact degenerate perturbation theory on the logical space.

The effective operator at order ``k`` is written as a polynomial in the
logical stabilizers, ``theta_k = sum_T c_T prod_{mu in T} S_mu``, with exact
rational coefficients in units of ``lam^k / g^(k-1)``.

A contribution is a path: a word of bond terms applied to the logical space
whose intermediate states are all excited.  Since the site Ising term is
diagonal, each intermediate state is an eigenstate of it and its energy
denominator is ``-2g`` times the number of intra-site edges cut by the
current X pattern.  Energy shifts inside the resolvent are expanded as

    1/(d + E(lam)) = (1/d) * sum_n (-E(lam)/d)^n

with ``E(lam) = sum_j theta_j lam^j`` kept operator valued, so every order
only needs the lower ones.

Two enumerators are provided.  ``local`` uses the fact that the duality
decouples the sites: each site's paths only involve the bond terms carrying
an X on that site, and its own lower-order operators.  ``global`` walks all
bond terms of the graph and is the brute-force cross-check on small graphs.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

from .hamiltonian import (
    HamiltonianParams,
    LogicalOperator,
    bond_terms,
    build_h0,
    build_v,
    h0_ground_energy,
    logical_image,
    logical_indices,
    logical_stabilizer,
)
from .lattice import GraphSpec, ensure_valid
from .pauli import PauliString, StateVector, apply

__all__ = [
    "StabilizerPolynomial",
    "PathTerm",
    "ZErrorConfig",
    "PathBudgetExceeded",
    "DEFAULT_ORDER_CAP",
    "DEFAULT_NODE_BUDGET",
    "enumerate_paths",
    "theta_series",
    "theta",
    "eigenvalue",
    "EnergySeries",
    "energy_series",
    "FixedSquareRow",
    "fixed_square_report",
    "numeric_theta_oracle",
    "symbolic_matrix",
    "first_order_amplitudes",
    "first_order_state",
]

DEFAULT_ORDER_CAP = 6
DEFAULT_NODE_BUDGET = 2_000_000


class PathBudgetExceeded(RuntimeError):
    def __init__(self, budget: int, order: int, where: str):
        super().__init__(
            f"path enumeration for order {order} on {where} exceeded the node budget of {budget}"
        )
        self.budget = budget
        self.order = order


# ---------------------------------------------------------------------------
# polynomial in the logical stabilizers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilizerPolynomial:
    """``sum_T c_T S_T`` with ``S_T = prod_{mu in T} S_mu``; ``S_{}`` is the identity."""

    n_sites: int
    terms: Mapping[frozenset, Fraction] = field(default_factory=dict)
    order: int | None = None

    def __post_init__(self):
        clean = {}
        for t, c in self.terms.items():
            c = Fraction(c)
            if c:
                clean[frozenset(t)] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def zero(cls, n_sites: int, order: int | None = None) -> "StabilizerPolynomial":
        return cls(n_sites, {}, order)

    @classmethod
    def one(cls, n_sites: int) -> "StabilizerPolynomial":
        return cls(n_sites, {frozenset(): Fraction(1)})

    def coefficient(self, sites: Iterable[int] = ()) -> Fraction:
        return self.terms.get(frozenset(sites), Fraction(0))

    @property
    def identity_coefficient(self) -> Fraction:
        return self.coefficient(())

    def single_site_coefficients(self) -> dict[int, Fraction]:
        return {mu: self.coefficient((mu,)) for mu in range(self.n_sites)}

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_scalar(self) -> bool:
        return all(not t for t in self.terms)

    def __add__(self, other: "StabilizerPolynomial") -> "StabilizerPolynomial":
        out = dict(self.terms)
        for t, c in other.terms.items():
            out[t] = out.get(t, 0) + c
        return StabilizerPolynomial(self.n_sites, out, self.order)

    def scale(self, c) -> "StabilizerPolynomial":
        return StabilizerPolynomial(self.n_sites, {t: v * c for t, v in self.terms.items()}, self.order)

    def __mul__(self, other: "StabilizerPolynomial") -> "StabilizerPolynomial":
        if other.is_scalar:
            return self.scale(other.identity_coefficient)
        if self.is_scalar:
            return other.scale(self.identity_coefficient)
        out: dict[frozenset, Fraction] = {}
        for t1, c1 in self.terms.items():
            for t2, c2 in other.terms.items():
                t = t1 ^ t2
                out[t] = out.get(t, 0) + c1 * c2
        return StabilizerPolynomial(self.n_sites, out)

    def eigenvalue(self, cfg: Iterable[int] = ()) -> Fraction:
        cfg = frozenset(cfg)
        return sum(
            (c if len(t & cfg) % 2 == 0 else -c for t, c in self.terms.items()), Fraction(0)
        )

    def relabel(self, mapping: Mapping[int, int], n_sites: int) -> "StabilizerPolynomial":
        return StabilizerPolynomial(
            n_sites, {frozenset(mapping[m] for m in t): c for t, c in self.terms.items()}, self.order
        )

    def items(self):
        """Terms in canonical order: by subset size, then sorted site ids."""
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for t, c in self.items():
            op = "1" if not t else "*".join(f"S{m}" for m in sorted(t))
            parts.append(f"{c}*{op}")
        return " + ".join(parts)


@dataclass(frozen=True)
class ZErrorConfig:
    """Set of sites carrying a logical Z error."""

    sites: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "sites", frozenset(self.sites))

    def check(self, spec: GraphSpec) -> "ZErrorConfig":
        for s in self.sites:
            if not 0 <= s < spec.n_sites:
                raise IndexError(f"no site {s}")
        return self

    @property
    def mask(self) -> int:
        return sum(1 << s for s in self.sites)


def eigenvalue(p: StabilizerPolynomial, cfg: ZErrorConfig | Iterable[int] = ()) -> Fraction:
    """``sum_T c_T (-1)^|T & cfg|`` in units of ``lam^k / g^(k-1)``."""
    sites = cfg.sites if isinstance(cfg, ZErrorConfig) else cfg
    return p.eigenvalue(sites)


# ---------------------------------------------------------------------------
# path enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathTerm:
    terms: tuple[int, ...]
    pauli: PauliString
    denominators: tuple[int, ...]
    logical: LogicalOperator | None
    sites: frozenset

    @property
    def length(self) -> int:
        return len(self.terms)


class _Walker:
    """Shared machinery: term X masks, per-site cut counts, the image check."""

    def __init__(self, spec: GraphSpec, term_indices, where: str):
        self.spec = spec
        self.where = where
        terms = bond_terms(spec)
        self.indices = tuple(term_indices)
        self.paulis = [terms[i].pauli for i in self.indices]
        self.site_masks = [spec.site_mask(s) for s in range(spec.n_sites)]
        self.cut_tables = []
        for s, site in enumerate(spec.sites):
            c, off = site.coordination, spec.offsets[s]
            table = [0] * (1 << c)
            if not site.boundary:
                for pat in range(1 << c):
                    table[pat] = sum(((pat >> i) ^ (pat >> j)) & 1 for i, j in site.intra_edges)
            self.cut_tables.append((off, (1 << c) - 1, table))
        self.stabs = [logical_stabilizer(spec, s) for s in range(spec.n_sites)]
        self._image_cache: dict = {}

    def cuts(self, x: int, sites) -> int:
        tot = 0
        for s in sites:
            off, m, table = self.cut_tables[s]
            tot += table[(x >> off) & m]
        return tot

    def full_sites(self, x: int) -> frozenset:
        return frozenset(s for s, m in enumerate(self.site_masks) if x & m == m)

    def check_image(self, p: PauliString, sites: frozenset) -> LogicalOperator:
        key = (p.x, p.z, p.phase)
        if key not in self._image_cache:
            img = logical_image(self.spec, p)
            want = LogicalOperator(self.spec.n_sites)
            for s in sorted(sites):
                want = want * self.stabs[s]
            # a returning word must act on |C> as the stabilizer product with sign +1
            assert img is not None and img == want, (
                f"returning path has unexpected logical image {img} (expected {want})"
            )
            self._image_cache[key] = img
        return self._image_cache[key]


def _walk(walker: _Walker, touched_sites, max_len: int, budget: int, include_open: bool = False):
    """Depth-first enumeration of returning words up to ``max_len`` letters."""
    n = walker.spec.n_qubits
    xs = [p.x for p in walker.paulis]
    nodes = 0
    stack = [((), 0, PauliString(n), ())]
    while stack:
        word, x, pauli, dens = stack.pop()
        if len(word) == max_len:
            if include_open:
                yield PathTerm(tuple(walker.indices[i] for i in word), pauli, dens, None, frozenset())
            continue
        for i in reversed(range(len(xs))):
            nodes += 1
            if nodes > budget:
                raise PathBudgetExceeded(budget, max_len, walker.where)
            nx = x ^ xs[i]
            np_ = pauli * walker.paulis[i]
            m = walker.cuts(nx, touched_sites)
            nw = word + (i,)
            if m == 0:
                sites = walker.full_sites(nx)
                img = walker.check_image(np_, sites)
                yield PathTerm(tuple(walker.indices[j] for j in nw), np_, dens, img, sites)
            else:
                stack.append((nw, nx, np_, dens + (-2 * m,)))


def enumerate_paths(
    spec: GraphSpec,
    max_len: int,
    site: int | None = None,
    budget: int = DEFAULT_NODE_BUDGET,
    include_open: bool = False,
) -> Iterator[PathTerm]:
    """Returning words of bond terms, all of them or those with X on ``site``.

    Denominators are in units of ``g``.
    """
    ensure_valid(spec)
    terms = bond_terms(spec)
    if site is None:
        idx = range(len(terms))
        touched = range(spec.n_sites)
        where = spec.name
    else:
        idx = [i for i, t in enumerate(terms) if t.x_site == site]
        touched = [site]
        where = f"{spec.name} site {spec.sites[site].id}"
    walker = _Walker(spec, idx, where)
    yield from _walk(walker, list(touched), max_len, budget, include_open)


def _group_paths(paths: Iterable[PathTerm]) -> Counter:
    groups: Counter = Counter()
    for p in paths:
        groups[(p.length, tuple(sorted(p.denominators)), p.sites)] += 1
    return groups


# ---------------------------------------------------------------------------
# order-by-order assembly
# ---------------------------------------------------------------------------

def _resolvent_factor(d: int, energy: list, r_max: int, n_sites: int) -> list:
    """Series coefficients of ``1/(1 + E(lam)/d)`` through ``lam^r_max``."""
    one = StabilizerPolynomial.one(n_sites)
    zero = StabilizerPolynomial.zero(n_sites)
    u = [zero] + [e.scale(Fraction(1, d)) for e in energy[1:r_max + 1]]
    y = [one]
    for r in range(1, r_max + 1):
        acc = zero
        for j in range(1, r + 1):
            if j < len(u) and not u[j].is_zero:
                acc = acc + u[j] * y[r - j]
        y.append(acc.scale(-1))
    return y


def _series_mul(a: list, b: list, r_max: int, n_sites: int) -> list:
    zero = StabilizerPolynomial.zero(n_sites)
    out = []
    for r in range(r_max + 1):
        acc = zero
        for j in range(r + 1):
            if j < len(a) and r - j < len(b):
                acc = acc + a[j] * b[r - j]
        out.append(acc)
    return out


def _assemble(groups: Counter, max_order: int, n_sites: int) -> list[StabilizerPolynomial]:
    """``theta_1 .. theta_max_order`` from grouped path counts."""
    zero = StabilizerPolynomial.zero(n_sites)
    energy = [zero]  # energy[j] = theta_j, index 0 unused
    for k in range(1, max_order + 1):
        acc: dict[frozenset, Fraction] = {}
        lower = energy + [zero] * (max_order + 1 - len(energy))
        for (length, dens, sites), count in groups.items():
            if length > k:
                continue
            r = k - length
            weight = Fraction((-1) ** length * count)
            for d in dens:
                weight /= d
            if r == 0:
                corr = StabilizerPolynomial.one(n_sites)
            elif not dens:
                continue
            else:
                series = [StabilizerPolynomial.one(n_sites)]
                for d in dens:
                    series = _series_mul(series, _resolvent_factor(d, lower, r, n_sites), r, n_sites)
                corr = series[r]
            for t, c in corr.terms.items():
                key = t ^ sites
                acc[key] = acc.get(key, 0) + weight * c
        energy.append(StabilizerPolynomial(n_sites, acc, k))
    return energy[1:]


@lru_cache(maxsize=256)
def _site_series(spec: GraphSpec, site: int, max_order: int, budget: int) -> tuple:
    groups = _group_paths(enumerate_paths(spec, max_order, site=site, budget=budget))
    # relabel onto a one-site algebra: the only returning image is S_site
    local = Counter()
    for (length, dens, sites), count in groups.items():
        local[(length, dens, frozenset({0}) if sites else frozenset())] += count
    return tuple(_assemble(local, max_order, 1))


def theta_series(
    spec: GraphSpec,
    max_order: int,
    method: str = "local",
    cap: int = DEFAULT_ORDER_CAP,
    budget: int = DEFAULT_NODE_BUDGET,
) -> list[StabilizerPolynomial]:
    """``[theta_1, ..., theta_max_order]``, each in units of ``lam^k/g^(k-1)``."""
    ensure_valid(spec)
    if not 1 <= max_order <= cap:
        raise ValueError(f"order {max_order} outside 1..{cap}")
    n = spec.n_sites
    if method == "global":
        groups = _group_paths(enumerate_paths(spec, max_order, budget=budget))
        return _assemble(groups, max_order, n)
    if method != "local":
        raise ValueError("method must be 'local' or 'global'")
    # sites with the same local problem and neighbourhood shape share paths;
    # the local series only depends on the site's own Ising graph
    by_sig: dict[tuple, int] = {}
    out = [StabilizerPolynomial.zero(n, k + 1) for k in range(max_order)]
    for s in range(n):
        rep = by_sig.setdefault(spec.sites[s].signature, s)
        series = _site_series(spec, rep, max_order, budget)
        for k, poly in enumerate(series):
            out[k] = out[k] + poly.relabel({0: s}, n)
    return [StabilizerPolynomial(n, p.terms, k + 1) for k, p in enumerate(out)]


def theta(spec: GraphSpec, k: int, method: str = "local", cap: int = DEFAULT_ORDER_CAP,
          budget: int = DEFAULT_NODE_BUDGET) -> StabilizerPolynomial:
    return theta_series(spec, k, method, cap, budget)[k - 1]


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

@dataclass
class EnergySeries:
    """Perturbative energies of the Z-error configurations.

    ``base`` is the unperturbed energy in units of ``g``; ``vacuum[k]`` and the
    per-class error costs ``costs[label][k]`` are in units of ``lam^k/g^(k-1)``.
    """

    spec: GraphSpec
    thetas: list[StabilizerPolynomial]
    base: Fraction
    vacuum: dict[int, Fraction]
    costs: dict[str, dict[int, Fraction]]
    classes: dict[str, list[int]]

    @property
    def max_order(self) -> int:
        return len(self.thetas)

    def config_coefficients(self, cfg: Iterable[int]) -> dict[int, Fraction]:
        return {k + 1: t.eigenvalue(cfg) for k, t in enumerate(self.thetas)}

    def evaluate(self, params: HamiltonianParams, cfg: Iterable[int] = ()) -> float:
        g, lam = params.g, params.lam
        tot = float(self.base) * g
        for k, c in self.config_coefficients(cfg).items():
            tot += float(c) * lam ** k / g ** (k - 1)
        return tot

    def cost(self, label: str, params: HamiltonianParams) -> float:
        g, lam = params.g, params.lam
        return sum(float(c) * lam ** k / g ** (k - 1) for k, c in self.costs[label].items())

    def leading_cost(self, label: str) -> tuple[int, Fraction]:
        for k in sorted(self.costs[label]):
            if self.costs[label][k]:
                return k, self.costs[label][k]
        return 0, Fraction(0)


def _class_label(spec: GraphSpec, s: int) -> str:
    site = spec.sites[s]
    return "boundary" if site.boundary else f"c={site.coordination}"


def energy_series(
    spec: GraphSpec, max_order: int, method: str = "local", budget: int = DEFAULT_NODE_BUDGET
) -> EnergySeries:
    """Vacuum energy and single-error costs per site class through ``max_order``."""
    thetas = theta_series(spec, max_order, method, budget=budget)
    base = Fraction(int(round(h0_ground_energy(spec, 1.0))))
    vacuum = {k + 1: t.eigenvalue(()) for k, t in enumerate(thetas)}
    classes: dict[str, list[int]] = {}
    for s in range(spec.n_sites):
        classes.setdefault(_class_label(spec, s), []).append(s)
    costs = {}
    for label, members in classes.items():
        per = {}
        for k, t in enumerate(thetas):
            vals = {t.eigenvalue({s}) - t.eigenvalue(()) for s in members}
            if len(vals) != 1:
                raise ArithmeticError(f"sites of class {label} have different error costs")
            per[k + 1] = vals.pop()
        costs[label] = per
    return EnergySeries(spec, thetas, base, vacuum, costs, classes)


# k_{n1} offsets of the published corner-error cost (units lam^4/g^3)
PUBLISHED_CORNER_OFFSETS = {0: 0, 1: 6, 2: 8, 3: 6, 4: 0}


@dataclass(frozen=True)
class FixedSquareRow:
    n_corner_errors: int
    computed: float
    computed_coefficients: dict
    published: float
    published_coefficients: dict
    dual_exact: float


def fixed_square_report(spec: GraphSpec, params: HamiltonianParams, max_order: int = 4):
    """Corner-error cost ``Delta(n1)`` on an open square grid, three ways.

    * computed: from the symbolic series through ``max_order``;
    * published: ``(2x^2 - 6x^4) n1 + 2x^4 n1^2 + k_n1 x^4``;
    * dual_exact: ``n1 g (sqrt(1 + 4x^2) - 1)``, the exact c=2 site gap.

    Returns ``(rows, series)``.
    """
    series = energy_series(spec, max_order)
    corners = series.classes.get("c=2", [])
    g, x = params.g, params.ratio
    rows = []
    for n1 in range(len(corners) + 1):
        cfg = corners[:n1]
        coeffs = {k: series.config_coefficients(cfg)[k] - series.vacuum[k] for k in series.vacuum}
        computed = sum(float(c) * params.lam ** k / g ** (k - 1) for k, c in coeffs.items())
        pub = {2: Fraction(2 * n1), 4: Fraction(-6 * n1 + 2 * n1 * n1 + PUBLISHED_CORNER_OFFSETS.get(n1, 0))}
        published = sum(float(c) * params.lam ** k / g ** (k - 1) for k, c in pub.items())
        exact = n1 * g * (np.sqrt(1 + 4 * x * x) - 1)
        rows.append(FixedSquareRow(n1, computed, coeffs, published, pub, float(exact)))
    return rows, series


# ---------------------------------------------------------------------------
# numeric oracle
# ---------------------------------------------------------------------------

ORACLE_MAX_QUBITS = 14


def _logical_mask(spec: GraphSpec) -> np.ndarray:
    mask = np.zeros(1 << spec.n_qubits, dtype=bool)
    mask[logical_indices(spec)] = True
    return mask


def numeric_theta_oracle(spec: GraphSpec, max_order: int) -> list[np.ndarray]:
    """Matrices of ``theta_1..theta_max_order`` in the Z-error basis, by brute force.

    Column ``A`` (bitmask of Z-error sites) is built from the physical state
    ``|C_A>`` with the resolvent series

        u_n = Omega [Q V (delta_{n1} |C_A> + u_{n-1})] - sum_j e_j(A) Omega u_{n-j}
        theta_n |C_A> = P V (delta_{n1} |C_A> + u_{n-1})

    where ``Omega = 1/(E0 - H0)`` on excited states and ``e_j(A)`` is the
    diagonal entry of the already known ``theta_j``.  Units: g = lam = 1.
    """
    from .cluster import z_error_state

    ensure_valid(spec)
    if spec.n_qubits > ORACLE_MAX_QUBITS:
        raise ValueError(f"oracle limited to {ORACLE_MAX_QUBITS} qubits")
    n = spec.n_sites
    h0 = build_h0(spec).diagonal()
    e0 = h0_ground_energy(spec, 1.0)
    logical = _logical_mask(spec)
    omega = np.zeros_like(h0)
    omega[~logical] = 1.0 / (e0 - h0[~logical])
    v = build_v(spec)
    cols = np.column_stack([z_error_state(spec, [s for s in range(n) if a >> s & 1]).amplitudes
                            for a in range(1 << n)])
    cols = cols.real if np.abs(cols.imag).max() == 0 else cols
    mats = []
    u = [None]  # u[j], j >= 1
    diag = []   # diag[j-1] = e_j per column
    for order in range(1, max_order + 1):
        src = cols if order == 1 else u[order - 1]
        w = v.apply_array(src)
        # theta_order column A = P w, expressed in the Z-error basis
        m = cols.conj().T @ np.where(logical[:, None], w, 0)
        mats.append(m)
        diag.append(np.real(np.diag(m)))
        nxt = omega[:, None] * np.where(logical[:, None], 0, w)
        for j in range(1, order):
            nxt = nxt - diag[j - 1][None, :] * (omega[:, None] * u[order - j])
        u.append(nxt)
    return mats


def symbolic_matrix(p: StabilizerPolynomial) -> np.ndarray:
    """Diagonal matrix of ``p`` in the Z-error basis (column index = error bitmask)."""
    n = p.n_sites
    vals = [float(p.eigenvalue([s for s in range(n) if a >> s & 1])) for a in range(1 << n)]
    return np.diag(vals)


# ---------------------------------------------------------------------------
# first-order corrected state
# ---------------------------------------------------------------------------

def first_order_amplitudes(spec: GraphSpec) -> list[tuple[tuple[int, ...], Fraction]]:
    """Distinct first-order excited states ``t|C>`` and their amplitudes.

    Each entry is ``(bond term indices giving the same state, amplitude)`` in
    units of ``lam/g``.  A single term contributes ``-1/d = 1/(2m)``; terms
    whose product stabilizes ``|C>`` give the same state and are merged.
    """
    from .cluster import logical_graph_state

    ensure_valid(spec)
    terms = bond_terms(spec)
    walker = _Walker(spec, range(len(terms)), spec.name)
    gs = logical_graph_state(spec)
    groups: list[list[int]] = []
    for i, t in enumerate(terms):
        m = walker.cuts(t.pauli.x, range(spec.n_sites))
        if m == 0:
            continue
        for grp in groups:
            prod = terms[grp[0]].pauli * t.pauli
            img = logical_image(spec, prod)
            if img is not None and abs(gs.inner(apply(img.to_pauli(), gs)) - 1) < 1e-12:
                grp.append(i)
                break
        else:
            groups.append([i])
    out = []
    for grp in groups:
        amp = Fraction(0)
        for i in grp:
            m = walker.cuts(terms[i].pauli.x, range(spec.n_sites))
            amp += Fraction(int(terms[i].coefficient), -2 * m)
        out.append((tuple(grp), amp))
    return out


def first_order_state(spec: GraphSpec, params: HamiltonianParams) -> StateVector:
    """``|C> + (lam/g) sum amp |k>`` normalized."""
    from .cluster import logical_cluster_state

    c = logical_cluster_state(spec)
    terms = bond_terms(spec)
    acc = c.amplitudes.copy()
    for grp, amp in first_order_amplitudes(spec):
        acc = acc + float(amp) * params.ratio * apply(terms[grp[0]].pauli, c).amplitudes
    return StateVector(acc).normalized()
