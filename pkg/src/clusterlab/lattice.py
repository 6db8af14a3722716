"""Graphs, per-site qubit layout and the global qubit index map.

Every site carries one physical qubit per incident bond ("port").  Global
qubit order is sites in declaration order, ports ``0..c-1`` within a site.

Graph document format (YAML or JSON)::

    name: k4                       # optional
    sites:
      - id: a
        coordination: 3
        intra_edges: [[0, 1], [1, 2], [2, 0]]   # optional, defaulted by c
        boundary: false                         # optional, default c == 1
    bonds:
      - [a, 0, b, 0]               # site, port, site, port
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import yaml

__all__ = [
    "GraphError",
    "SiteSpec",
    "GraphSpec",
    "default_intra_edges",
    "build_named",
    "load_graph",
    "graph_from_edges",
    "to_document",
    "validate",
    "ensure_valid",
    "LATTICE_KINDS",
]

LATTICE_KINDS = ("ring", "line", "square", "hex", "cubic", "complete")


class GraphError(ValueError):
    """Invalid graph specification; ``violations`` lists every problem found."""

    def __init__(self, violations: Sequence[str] | str):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def default_intra_edges(c: int) -> tuple[tuple[int, int], ...]:
    """Default intra-site Ising graph for coordination ``c``.

    c=1: none, c=2: a single edge, c=6: octahedron with antipodal ports
    ``(0,1), (2,3), (4,5)``; anything else: a ring.
    """
    if c <= 1:
        return ()
    if c == 2:
        return ((0, 1),)
    if c == 6:
        return tuple((a, b) for a, b in itertools.combinations(range(6), 2) if a // 2 != b // 2)
    return tuple((i, (i + 1) % c) for i in range(c))


@dataclass(frozen=True)
class SiteSpec:
    id: str
    coordination: int
    intra_edges: tuple[tuple[int, int], ...] = ()
    boundary: bool = False

    @classmethod
    def default(cls, id: str, c: int) -> "SiteSpec":
        return cls(str(id), c, default_intra_edges(c), c == 1)

    @property
    def signature(self) -> tuple:
        """Hashable description of the local problem (shape, not identity)."""
        edges = tuple(sorted(tuple(sorted(e)) for e in self.intra_edges))
        return (self.coordination, edges, self.boundary)


@dataclass(frozen=True)
class GraphSpec:
    sites: tuple[SiteSpec, ...]
    bonds: tuple[tuple[int, int, int, int], ...]
    name: str = "graph"
    n_interior: int | None = None
    kind: str = "general"
    dims: tuple[int, ...] = ()
    boundary_mode: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "bonds", tuple(tuple(b) for b in self.bonds))
        if self.n_interior is None:
            cmax = max((s.coordination for s in self.sites), default=0)
            object.__setattr__(
                self, "n_interior", sum(s.coordination == cmax for s in self.sites)
            )

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for s in self.sites:
            out.append(acc)
            acc += s.coordination
        return tuple(out)

    @property
    def n_qubits(self) -> int:
        return sum(s.coordination for s in self.sites)

    def qubit(self, site: int, port: int) -> int:
        s = self.sites[site]
        if not 0 <= port < s.coordination:
            raise IndexError(f"port {port} out of range at site {s.id}")
        return self.offsets[site] + port

    def site_qubits(self, site: int) -> list[int]:
        o = self.offsets[site]
        return list(range(o, o + self.sites[site].coordination))

    def site_mask(self, site: int) -> int:
        return ((1 << self.sites[site].coordination) - 1) << self.offsets[site]

    @cached_property
    def _partner(self) -> dict[tuple[int, int], tuple[int, int]]:
        out = {}
        for a, pa, b, pb in self.bonds:
            out[(a, pa)] = (b, pb)
            out[(b, pb)] = (a, pa)
        return out

    def partner(self, site: int, port: int) -> tuple[int, int]:
        """``(site, port)`` at the other end of the bond through ``(site, port)``."""
        return self._partner[(site, port)]

    def neighbors(self, site: int) -> list[int]:
        """Neighbouring sites, one entry per port (repeats for multi-bonds)."""
        return [self.partner(site, p)[0] for p in range(self.sites[site].coordination)]

    def site_index(self, site_id: str) -> int:
        for i, s in enumerate(self.sites):
            if s.id == site_id:
                return i
        raise KeyError(site_id)

    @property
    def is_multigraph(self) -> bool:
        pairs = [tuple(sorted((a, b))) for a, _, b, _ in self.bonds]
        return len(pairs) != len(set(pairs))

    def site_classes(self) -> dict[tuple, list[int]]:
        """Sites grouped by local signature, in first-appearance order."""
        out: dict[tuple, list[int]] = {}
        for i, s in enumerate(self.sites):
            out.setdefault(s.signature, []).append(i)
        return out


def _intra_connected(site: SiteSpec) -> bool:
    c = site.coordination
    if c <= 1:
        return True
    parent = list(range(c))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in site.intra_edges:
        if 0 <= i < c and 0 <= j < c:
            parent[find(i)] = find(j)
    return len({find(i) for i in range(c)}) == 1


def validate(spec: GraphSpec) -> list[str]:
    """Every violated invariant, naming the offending site or bond.  Empty if ok."""
    out: list[str] = []
    ids = [s.id for s in spec.sites]
    if len(set(ids)) != len(ids):
        out.append("duplicate site ids")
    for i, s in enumerate(spec.sites):
        if s.coordination < 1:
            out.append(f"site {s.id}: coordination must be >= 1")
            continue
        for e in s.intra_edges:
            if len(e) != 2 or not all(0 <= p < s.coordination for p in e) or e[0] == e[1]:
                out.append(f"site {s.id}: invalid intra edge {tuple(e)}")
        if s.boundary and (s.coordination != 1 or s.intra_edges):
            out.append(f"site {s.id}: boundary sites must have c=1 and no intra edges")
        if not s.boundary and s.coordination > 1 and not _intra_connected(s):
            out.append(
                f"site {s.id}: intra-site graph is disconnected "
                f"(logical space would exceed dimension 2)"
            )
    used: dict[tuple[int, int], int] = {}
    for k, bond in enumerate(spec.bonds):
        if len(bond) != 4:
            out.append(f"bond {k}: expected (site, port, site, port)")
            continue
        a, pa, b, pb = bond
        if not (0 <= a < spec.n_sites and 0 <= b < spec.n_sites):
            out.append(f"bond {k}: unknown site")
            continue
        if a == b:
            out.append(f"bond {k}: self-loop at site {spec.sites[a].id}")
        for site, port in ((a, pa), (b, pb)):
            if not 0 <= port < spec.sites[site].coordination:
                out.append(f"bond {k}: port {port} out of range at site {spec.sites[site].id}")
            elif (site, port) in used:
                out.append(
                    f"bond {k}: duplicate bond on port {port} of site "
                    f"{spec.sites[site].id} (also in bond {used[(site, port)]})"
                )
            else:
                used[(site, port)] = k
    for i, s in enumerate(spec.sites):
        for p in range(max(s.coordination, 0)):
            if (i, p) not in used:
                out.append(f"site {s.id}: dangling port {p}")
    return out


def ensure_valid(spec: GraphSpec) -> GraphSpec:
    problems = validate(spec)
    if problems:
        raise GraphError(problems)
    return spec


# ---------------------------------------------------------------------------
# named lattices
# ---------------------------------------------------------------------------

def _ring(n: int, periodic: bool) -> GraphSpec:
    if periodic:
        if n < 3:
            raise GraphError("periodic ring needs at least 3 sites")
        sites = [SiteSpec.default(str(i), 2) for i in range(n)]
        bonds = [(i, 1, (i + 1) % n, 0) for i in range(n)]
        return GraphSpec(tuple(sites), tuple(bonds), f"ring{n}", n, "ring", (n,), "periodic")
    if n < 3:
        raise GraphError("fixed line needs at least 3 sites (2 boundary + 1 interior)")
    sites = [SiteSpec.default("B1", 1)]
    sites += [SiteSpec.default(str(i), 2) for i in range(1, n - 1)]
    sites += [SiteSpec.default("B2", 1)]
    bonds = [(0, 0, 1, 0)]
    bonds += [(i, 1, i + 1, 0) for i in range(1, n - 2)]
    bonds += [(n - 2, 1, n - 1, 0)]
    return GraphSpec(tuple(sites), tuple(bonds), f"line{n}-fixed", n - 2, "line", (n,), "fixed")


def _grid(dims: Sequence[int], periodic: bool, kind: str) -> GraphSpec:
    nd = len(dims)
    coords = list(itertools.product(*[range(d) for d in dims]))
    index = {c: i for i, c in enumerate(coords)}
    if nd == 2:
        # ring order around the site so adjacent ports are geometric neighbours
        directions = [(0, +1), (1, +1), (0, -1), (1, -1)]
    else:
        directions = [(a, s) for a in range(nd) for s in (+1, -1)]

    def step(c, d):
        axis, sgn = d
        n = list(c)
        n[axis] += sgn
        if periodic:
            n[axis] %= dims[axis]
        elif not 0 <= n[axis] < dims[axis]:
            return None
        return tuple(n)

    ports: dict[tuple, dict] = {}
    sites = []
    for c in coords:
        present = [d for d in directions if step(c, d) is not None]
        ports[c] = {d: k for k, d in enumerate(present)}
        cc = len(present)
        if nd == 3 and cc == 6:
            intra = default_intra_edges(6)
        else:
            intra = default_intra_edges(cc)
        sites.append(SiteSpec(",".join(map(str, c)), cc, intra, cc == 1))
    bonds = []
    for c in coords:
        for d, p in ports[c].items():
            if d[1] != +1:
                continue
            n = step(c, d)
            bonds.append((index[c], p, index[n], ports[n][(d[0], -1)]))
    interior = sum(s.coordination == 2 * nd for s in sites)
    mode = "periodic" if periodic else "fixed"
    name = f"{kind}{'x'.join(map(str, dims))}-{mode}"
    return GraphSpec(tuple(sites), tuple(bonds), name, interior, kind, tuple(dims), mode)


def _hex(lx: int, ly: int) -> GraphSpec:
    # honeycomb: A(x,y) bonds to B(x,y), B(x-1,y), B(x,y-1)
    sites, index = [], {}
    for x in range(lx):
        for y in range(ly):
            for s in "AB":
                index[(x, y, s)] = len(sites)
                sites.append(SiteSpec.default(f"{s}{x},{y}", 3))
    bonds = []
    for x in range(lx):
        for y in range(ly):
            a = index[(x, y, "A")]
            bonds.append((a, 0, index[(x, y, "B")], 0))
            bonds.append((a, 1, index[((x - 1) % lx, y, "B")], 1))
            bonds.append((a, 2, index[(x, (y - 1) % ly, "B")], 2))
    return GraphSpec(tuple(sites), tuple(bonds), f"hex{lx}x{ly}", len(sites), "hex", (lx, ly), "periodic")


def _complete(n: int) -> GraphSpec:
    if n < 2:
        raise GraphError("complete graph needs at least 2 sites")
    return graph_from_edges(list(itertools.combinations(range(n), 2)), name=f"K{n}", kind="complete")


def build_named(kind: str, dims: Sequence[int], boundary: str = "periodic") -> GraphSpec:
    """Build a validated named lattice.

    ``ring``/``line`` take ``[n_sites]`` (a fixed line counts its two one-qubit
    boundary sites), ``square`` ``[lx, ly]``, ``hex`` ``[cells_x, cells_y]``
    (two sites per cell, periodic only), ``cubic`` ``[lx, ly, lz]`` and
    ``complete`` ``[n]``.  Periodic lattices of linear size 2 (and hex of
    size 1) necessarily contain doubled bonds.
    """
    dims = [int(d) for d in dims]
    if boundary not in ("periodic", "fixed"):
        raise GraphError(f"unknown boundary mode {boundary!r}")
    periodic = boundary == "periodic"
    if kind in ("ring", "line"):
        if len(dims) != 1:
            raise GraphError(f"{kind} needs one dimension")
        if kind == "line" and boundary == "periodic":
            periodic = True
        return ensure_valid(_ring(dims[0], periodic))
    if kind == "square":
        if len(dims) != 2 or min(dims) < 2:
            raise GraphError("square needs two dimensions, each >= 2")
        return ensure_valid(_grid(dims, periodic, "square"))
    if kind == "cubic":
        if len(dims) != 3 or min(dims) < 2:
            raise GraphError("cubic needs three dimensions, each >= 2")
        return ensure_valid(_grid(dims, periodic, "cubic"))
    if kind == "hex":
        if not periodic:
            raise GraphError("hex lattice is only available with periodic boundaries")
        if len(dims) != 2 or min(dims) < 1:
            raise GraphError("hex needs two cell counts, each >= 1")
        return ensure_valid(_hex(*dims))
    if kind == "complete":
        if len(dims) != 1:
            raise GraphError("complete needs one dimension")
        return ensure_valid(_complete(dims[0]))
    raise GraphError(f"unknown lattice kind {kind!r}; expected one of {LATTICE_KINDS}")


def graph_from_edges(
    edges: Iterable[tuple[int, int]],
    n_sites: int | None = None,
    name: str = "graph",
    kind: str = "general",
) -> GraphSpec:
    """Spec from a site-level (multi)edge list; ports assigned in edge order."""
    edges = [tuple(e) for e in edges]
    if n_sites is None:
        n_sites = 1 + max(max(e) for e in edges)
    counts = [0] * n_sites
    bonds = []
    for a, b in edges:
        bonds.append((a, counts[a], b, counts[b]))
        counts[a] += 1
        counts[b] += 1
    sites = tuple(SiteSpec.default(str(i), c) for i, c in enumerate(counts))
    return ensure_valid(GraphSpec(sites, tuple(bonds), name, None, kind))


def load_graph(text: str) -> GraphSpec:
    """Parse a graph document (YAML or JSON text) into a validated spec."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise GraphError(f"parse error: {exc}") from exc
    if not isinstance(doc, dict) or "sites" not in doc or "bonds" not in doc:
        raise GraphError("parse error: document needs 'sites' and 'bonds'")
    sites, index = [], {}
    for k, entry in enumerate(doc["sites"]):
        try:
            sid = str(entry["id"])
            c = int(entry["coordination"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"parse error: site entry {k} needs id and coordination") from exc
        intra = entry.get("intra_edges")
        intra = default_intra_edges(c) if intra is None else tuple(tuple(int(p) for p in e) for e in intra)
        boundary = bool(entry.get("boundary", c == 1))
        if sid in index:
            raise GraphError(f"duplicate site id {sid!r}")
        index[sid] = len(sites)
        sites.append(SiteSpec(sid, c, intra, boundary))
    bonds = []
    for k, b in enumerate(doc["bonds"]):
        if not isinstance(b, (list, tuple)) or len(b) != 4:
            raise GraphError(f"parse error: bond {k} must be [site, port, site, port]")
        sa, pa, sb, pb = b
        for sid in (sa, sb):
            if str(sid) not in index:
                raise GraphError(f"bond {k}: unknown site {sid!r}")
        bonds.append((index[str(sa)], int(pa), index[str(sb)], int(pb)))
    spec = GraphSpec(
        tuple(sites), tuple(bonds), str(doc.get("name", "graph")), doc.get("n_interior"), "general"
    )
    return ensure_valid(spec)


def to_document(spec: GraphSpec) -> dict:
    """Inverse of :func:`load_graph` (explicit intra edges, ids for bonds)."""
    return {
        "name": spec.name,
        "sites": [
            {
                "id": s.id,
                "coordination": s.coordination,
                "intra_edges": [list(e) for e in s.intra_edges],
                "boundary": s.boundary,
            }
            for s in spec.sites
        ],
        "bonds": [[spec.sites[a].id, pa, spec.sites[b].id, pb] for a, pa, b, pb in spec.bonds],
    }
