"""Direct eigensolving, closed-form energies and gaps, power-law gap fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .hamiltonian import HamiltonianParams
from .pauli import StateVector, WeightedPauliSum

__all__ = [
    "ConvergenceError",
    "SpectrumReport",
    "GapFit",
    "group_levels",
    "degeneracy_tolerance",
    "low_spectrum",
    "closed_form_energy",
    "closed_form_gap",
    "fit_gap_exponent",
]

DEFAULT_SEED = 20240611
DENSE_LIMIT = 256
MAX_QUBITS = 24
RESIDUAL_TOL = 1e-8


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def degeneracy_tolerance(e0: float) -> float:
    return 1e-7 * max(1.0, abs(e0))


def group_levels(energies, tol: float | None = None) -> tuple[list[float], list[int]]:
    """Collapse a sorted energy list into (level, degeneracy) pairs."""
    energies = list(energies)
    if not energies:
        return [], []
    if tol is None:
        tol = degeneracy_tolerance(energies[0])
    levels, degs = [energies[0]], [1]
    for e in energies[1:]:
        if e - levels[-1] <= tol:
            degs[-1] += 1
        else:
            levels.append(e)
            degs.append(1)
    return levels, degs


@dataclass
class SpectrumReport:
    """Lowest levels of a Hamiltonian.

    ``gap`` is the distance between the first two degenerate groups, or 0.0
    when every returned energy falls in the ground group.
    """

    energies: list[float]
    degeneracies: list[int]
    gap: float
    ground_vector: StateVector | None = None
    params: HamiltonianParams | None = None
    seed: int | None = None
    residuals: list[float] = field(default_factory=list)
    method: str = ""

    def __post_init__(self):
        if any(b < a for a, b in zip(self.energies, self.energies[1:])):
            raise ValueError("energies must be sorted")

    @classmethod
    def from_energies(cls, energies, **kw) -> "SpectrumReport":
        energies = sorted(float(e) for e in energies)
        levels, degs = group_levels(energies)
        gap = levels[1] - levels[0] if len(levels) > 1 else 0.0
        return cls(energies, degs, gap, **kw)

    @property
    def ground_energy(self) -> float:
        return self.energies[0]

    @property
    def levels(self) -> list[float]:
        return group_levels(self.energies)[0]


def _dense_matrix(h: WeightedPauliSum) -> np.ndarray:
    dim = 1 << h.n_qubits
    m = h.apply_array(np.eye(dim))
    return m.real if np.isrealobj(m) or not np.abs(m.imag).max() else m


def _residuals(h: WeightedPauliSum, vals, vecs) -> np.ndarray:
    hv = h.apply_array(vecs)
    return np.linalg.norm(hv - vecs * vals[None, :], axis=0)


def low_spectrum(
    h: WeightedPauliSum,
    k: int = 6,
    want_vector: bool = False,
    seed: int = DEFAULT_SEED,
    params: HamiltonianParams | None = None,
    maxiter: int = 20000,
) -> SpectrumReport:
    """The ``k`` lowest eigenpairs of ``h``.

    Small problems go through a dense ``eigh``.  Larger ones use restarted
    Lanczos (ARPACK) on the matrix-free operator, followed by a deflation
    pass against the converged vectors so no degenerate copy is missed.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = h.n_qubits
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the direct solver limit of {MAX_QUBITS}")
    dim = 1 << n
    k = min(k, dim)
    if dim <= DENSE_LIMIT:
        vals, vecs = np.linalg.eigh(_dense_matrix(h))
        vals, vecs = vals[:k], vecs[:, :k]
        method = "dense"
    else:
        vals, vecs = _lanczos(h, k, seed, maxiter)
        method = "lanczos"
    res = _residuals(h, vals, vecs)
    worst = float(res.max())
    if worst > RESIDUAL_TOL:
        raise ConvergenceError("eigenpairs did not converge", worst)
    gv = StateVector(vecs[:, 0]).normalized() if want_vector else None
    return SpectrumReport.from_energies(
        vals, ground_vector=gv, params=params, seed=seed, residuals=res.tolist(), method=method
    )


def _lanczos(h: WeightedPauliSum, k: int, seed: int, maxiter: int):
    op = h.as_linear_operator()
    dim = op.shape[0]
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    if op.dtype == complex:
        v0 = v0 + 1j * rng.standard_normal(dim)
    try:
        vals, vecs = eigsh(op, k=k, which="SA", v0=v0, tol=1e-13, maxiter=maxiter,
                           ncv=min(dim - 1, max(2 * k + 1, 24)))
    except ArpackNoConvergence as exc:
        raise ConvergenceError("Lanczos iteration cap reached", float("inf")) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    shift = h.norm_bound() * 2 + 1.0
    # deflation: look for a state below the top of what we have, orthogonal to it
    for _ in range(k + 4):
        q = vecs

        def mv(x, q=q):
            x = x if x.ndim == 1 else x[:, 0]
            y = x - q @ (q.conj().T @ x)
            hy = h.apply_array(y)
            hy = hy - q @ (q.conj().T @ hy)
            return hy + shift * (q @ (q.conj().T @ x))

        dop = LinearOperator(op.shape, matvec=mv, dtype=op.dtype)
        w0 = rng.standard_normal(dim)
        try:
            lo, lv = eigsh(dop, k=1, which="SA", v0=w0, tol=1e-13, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            raise ConvergenceError("deflation pass did not converge", float("inf")) from exc
        if lo[0] >= vals[-1] - degeneracy_tolerance(vals[0]) * 1e-3:
            break
        vals = np.append(vals[:-1], lo[0])
        vecs = np.column_stack([vecs[:, :-1], lv[:, 0]])
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        # re-orthonormalize and rediagonalize inside the span
        qv, _ = np.linalg.qr(vecs)
        small = qv.conj().T @ h.apply_array(qv)
        sv, sw = np.linalg.eigh((small + small.conj().T) / 2)
        vals, vecs = sv, qv @ sw
    return vals, vecs


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

CLOSED_FORM_KINDS = ("line", "ring", "hex", "square", "cubic")


def closed_form_energy(kind: str, n_sites: int, params: HamiltonianParams) -> float:
    """Ground energy of the periodic lattice of ``kind`` with ``n_sites`` sites.

    ``cubic`` is a truncated sixth-order series, not a closed form.
    """
    g, x = params.g, params.ratio
    if kind in ("line", "ring"):
        return -g * n_sites * math.sqrt(1 + 4 * x * x)
    if kind == "hex":
        return -g * n_sites * (1 + x + 2 * math.sqrt(x * x + x + 1))
    if kind == "square":
        return -2 * g * n_sites * math.sqrt(2 + 2 * x * x + 2 * math.sqrt(x ** 4 + 1))
    if kind == "cubic":
        return -12 * g * n_sites * (
            1 + x ** 2 / 16 + x ** 4 / 3072 + 131 * x ** 6 / (9 * 32768)
        )
    raise ValueError(f"no closed-form energy for {kind!r}; supported: {CLOSED_FORM_KINDS}")


LEADING_GAP = {
    # kind: (coefficient, power of lam/g)
    "line": (2.0, 2),
    "ring": (2.0, 2),
    "hex": (3 / 4, 3),
    "square": (5 / 8, 4),
    "cubic": (83 / 8192, 6),
}


def closed_form_gap(kind: str, params: HamiltonianParams, order: str = "leading") -> float:
    """Gap above the ground state.  ``order`` is ``"exact"`` or ``"leading"``.

    An exact form is only available for ``line`` and ``hex``.  The published
    square expression does not evaluate to a positive gap and no cubic form
    exists, so exact requests for those are refused.
    """
    g, x = params.g, params.ratio
    if kind not in LEADING_GAP:
        raise ValueError(f"no closed-form gap for {kind!r}")
    if order == "leading":
        c, p = LEADING_GAP[kind]
        return g * c * x ** p
    if order != "exact":
        raise ValueError("order must be 'exact' or 'leading'")
    if kind in ("line", "ring"):
        return g * (math.sqrt(1 + 4 * x * x) - 1)
    if kind == "hex":
        return 2 * g * (x - math.sqrt(x * x + x + 1) + math.sqrt(x * x - x + 1))
    raise ValueError(
        f"exact {kind} gap refused: the published form is unreliable or absent; "
        "use order='leading' or the dual-site gap"
    )


# ---------------------------------------------------------------------------
# power-law fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapFit:
    exponent: float
    coefficient: float
    residual: float
    x_min: float
    x_max: float
    n_samples: int


def fit_gap_exponent(samples) -> GapFit:
    """Least-squares fit of ``log(gap) = log(coefficient) + exponent*log(x)``.

    ``residual`` is the RMS of the log-space residuals.
    """
    samples = [(float(x), float(d)) for x, d in samples]
    if len(samples) < 4:
        raise ValueError("need at least 4 samples")
    if any(d <= 0 for _, d in samples):
        raise ValueError("all gaps must be positive")
    if any(x <= 0 for x, _ in samples):
        raise ValueError("all lam/g values must be positive")
    xs = np.array([s[0] for s in samples])
    ds = np.array([s[1] for s in samples])
    if xs.max() < 3 * xs.min():
        raise ValueError("lam/g samples must span at least a factor 3")
    lx, ld = np.log(xs), np.log(ds)
    slope, intercept = np.polyfit(lx, ld, 1)
    resid = ld - (slope * lx + intercept)
    return GapFit(
        float(slope), float(math.exp(intercept)), float(np.sqrt(np.mean(resid ** 2))),
        float(xs.min()), float(xs.max()), len(samples),
    )
