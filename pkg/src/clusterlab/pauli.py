"""Pauli strings, weighted Pauli sums and matrix-free state-vector application.

Conventions
-----------
* Qubit ``q`` is bit ``q`` of both masks and of a computational basis index
  (little-endian: basis index ``b`` has qubit ``q`` in state ``(b >> q) & 1``).
* Labels are written qubit 0 first, e.g. ``"XZI"`` is X on qubit 0, Z on qubit 1.
* ``phase`` is the power of ``i`` multiplying the tensor product of the
  single-qubit labels I, X, Y, Z.  Internally products are carried out in
  the ``X^x Z^z`` form, where ``Y = i X Z``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator

__all__ = [
    "DimensionError",
    "PauliString",
    "WeightedPauliSum",
    "StateVector",
    "multiply",
    "commutes",
    "apply",
    "expectation",
]

_PHASES = (1, 1j, -1, -1j)


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _check_same(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"qubit count mismatch: {a} != {b}")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        full = (1 << self.n_qubits) - 1
        if self.n_qubits < 0 or self.x & ~full or self.z & ~full:
            raise ValueError("masks exceed n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # construction -------------------------------------------------------
    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse e.g. ``"-iXYZ"``; character ``k`` of the body acts on qubit ``k``."""
        label = label.strip()
        phase = 0
        for prefix, p in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if label.startswith(prefix):
                phase, label = p, label[len(prefix):]
                break
        x = z = 0
        for q, ch in enumerate(label):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli label character {ch!r}")
        return cls(len(label), x, z, phase)

    @classmethod
    def from_ops(cls, n_qubits: int, ops: dict[int, str], phase: int = 0) -> "PauliString":
        x = z = 0
        for q, ch in ops.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range")
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
        return cls(n_qubits, x, z, phase)

    # views ---------------------------------------------------------------
    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def xz_phase(self) -> int:
        """Power of ``i`` in front of ``X^x Z^z``."""
        return (self.phase + self.n_y) % 4

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def label(self) -> str:
        body = "".join(
            "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]
            for q in range(self.n_qubits)
        )
        return ("+", "+i", "-", "-i")[self.phase] + body

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"

    def unsigned(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x, self.z, 0)

    # algebra -------------------------------------------------------------
    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def commutes(self, other: "PauliString") -> bool:
        return commutes(self, other)

    def to_matrix(self) -> np.ndarray:
        """Dense ``2^n x 2^n`` matrix; intended for small test oracles."""
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        idx = np.arange(dim)
        out[idx ^ self.x, idx] = _signs(idx, self.z) * _PHASES[self.xz_phase]
        return out


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact operator product ``a @ b`` including phase."""
    _check_same(a.n_qubits, b.n_qubits)
    x, z = a.x ^ b.x, a.z ^ b.z
    xz = a.xz_phase + b.xz_phase + 2 * _popcount(a.z & b.x)
    return PauliString(a.n_qubits, x, z, xz - _popcount(x & z))


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the symplectic overlap of ``a`` and ``b`` is even."""
    _check_same(a.n_qubits, b.n_qubits)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


def _signs(idx: np.ndarray, zmask: int) -> np.ndarray:
    if zmask == 0:
        return np.ones(idx.shape, dtype=np.int8)
    par = np.bitwise_count(idx & zmask) & 1
    return (1 - 2 * par.astype(np.int8)).astype(np.int8)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0 or amps.size & (amps.size - 1):
            raise ValueError("amplitude array length must be a power of two")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n)

    def inner(self, other: "StateVector") -> complex:
        _check_same(self.n_qubits, other.n_qubits)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same(self.n_qubits, other.n_qubits)
        return StateVector(self.amplitudes + other.amplitudes)

    def __rmul__(self, c: complex) -> "StateVector":
        return StateVector(c * self.amplitudes)


def _apply_raw(p: PauliString, v: np.ndarray) -> np.ndarray:
    idx = np.arange(v.size)
    src = idx ^ p.x
    return _PHASES[p.xz_phase] * _signs(src, p.z) * v[src]


def apply(p: PauliString, s: StateVector) -> StateVector:
    """Return ``p|s>``."""
    _check_same(p.n_qubits, s.n_qubits)
    return StateVector(_apply_raw(p, s.amplitudes))


@dataclass(frozen=True)
class WeightedPauliSum:
    """Real linear combination of Hermitian Pauli strings."""

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...] = ()
    _ops: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple((float(c), p) for c, p in self.terms)
        for c, p in terms:
            _check_same(self.n_qubits, p.n_qubits)
            if not p.is_hermitian:
                raise ValueError(f"non-Hermitian term {p.label()}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[float, PauliString]]):
        return cls(n_qubits, tuple(terms))

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "WeightedPauliSum") -> "WeightedPauliSum":
        _check_same(self.n_qubits, other.n_qubits)
        return WeightedPauliSum(self.n_qubits, self.terms + other.terms)

    def __rmul__(self, c: float) -> "WeightedPauliSum":
        return WeightedPauliSum(self.n_qubits, tuple((c * w, p) for w, p in self.terms))

    def simplify(self, atol: float = 0.0) -> "WeightedPauliSum":
        """Merge equal strings (sign folded into the coefficient), drop zeros."""
        merged: dict[tuple[int, int], float] = {}
        for c, p in self.terms:
            key = (p.x, p.z)
            merged[key] = merged.get(key, 0.0) + (c if p.phase == 0 else -c)
        return WeightedPauliSum(
            self.n_qubits,
            tuple(
                (c, PauliString(self.n_qubits, x, z))
                for (x, z), c in merged.items()
                if abs(c) > atol
            ),
        )

    def term_multiset(self) -> dict[tuple[int, int], float]:
        """Canonical ``(x, z) -> coefficient`` map used for exact comparison."""
        return {(p.x, p.z): c for c, p in self.simplify().terms}

    @property
    def is_real(self) -> bool:
        return all(p.n_y % 2 == 0 for _, p in self.terms)

    def norm_bound(self) -> float:
        return sum(abs(c) for c, _ in self.terms)

    # matrix-free application ---------------------------------------------
    def _grouped(self):
        # one (x-mask, diagonal-weight-vector) pair per distinct x-mask
        if "groups" not in self._ops:
            dim = 1 << self.n_qubits
            idx = np.arange(dim)
            dtype = float if self.is_real else complex
            groups: dict[int, np.ndarray] = {}
            for c, p in self.terms:
                src = idx ^ p.x
                w = groups.setdefault(p.x, np.zeros(dim, dtype=dtype))
                ph = _PHASES[p.xz_phase]
                w += (c * (ph.real if dtype is float else ph)) * _signs(src, p.z)
            self._ops["groups"] = [(x, w, idx ^ x) for x, w in groups.items()]
        return self._ops["groups"]

    def apply_array(self, v: np.ndarray) -> np.ndarray:
        """``H @ v`` on raw amplitude arrays (1-D or column blocks)."""
        groups = self._grouped()
        if v.shape[0] != 1 << self.n_qubits:
            raise DimensionError("vector length does not match 2**n_qubits")
        out = np.zeros(v.shape, dtype=np.result_type(v.dtype, groups[0][1].dtype) if groups else v.dtype)
        for x, w, src in groups:
            if v.ndim == 1:
                out += w * v[src]
            else:
                out += w[:, None] * v[src]
        return out

    def apply(self, s: StateVector) -> StateVector:
        _check_same(self.n_qubits, s.n_qubits)
        return StateVector(self.apply_array(s.amplitudes))

    def as_linear_operator(self) -> LinearOperator:
        dim = 1 << self.n_qubits
        dtype = float if self.is_real else complex
        return LinearOperator(
            (dim, dim),
            matvec=self.apply_array,
            matmat=self.apply_array,
            rmatvec=self.apply_array,
            dtype=dtype,
        )

    def diagonal(self) -> np.ndarray:
        for x, w, _ in self._grouped():
            if x == 0:
                return w.copy()
        return np.zeros(1 << self.n_qubits)

    def to_matrix(self) -> np.ndarray:
        """Dense matrix, built term by term.  Test-oracle use only."""
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for c, p in self.terms:
            out += c * p.to_matrix()
        return out


def expectation(s: StateVector, h: WeightedPauliSum) -> float:
    """``<s|h|s>`` for a normalized state."""
    _check_same(s.n_qubits, h.n_qubits)
    if abs(s.norm - 1.0) > 1e-10:
        raise ValueError(f"state is not normalized (norm={s.norm!r})")
    val = np.vdot(s.amplitudes, h.apply_array(s.amplitudes))
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def pauli_sum_from_labels(items: Sequence[tuple[float, str]]) -> WeightedPauliSum:
    ps = [(c, PauliString.from_label(s)) for c, s in items]
    return WeightedPauliSum(ps[0][1].n_qubits, tuple(ps))
