"""Truncated symmetric Fock space with sparse occupation-basis states.

A basis vector is labelled by the sorted tuple of one-particle indices it
carries (a multiset), e.g. ``(0, 0, 3)`` is ``a_0^+ a_0^+ a_3^+ Omega / sqrt(2!)``.
States keep only nonzero amplitudes and a particle cutoff ``P``; creating past
the cutoff drops the component.

Operators are rules acting on states together with their adjoint rules, so
nothing is ever materialized unless :func:`densify` is asked to.
"""

from __future__ import annotations

from bisect import insort
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import factorial, sqrt
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

PRUNE = 1e-15
UNITARY_TOL = 1e-10


class CutoffError(ValueError):
    pass


def as_vector(xi, d: int | None = None) -> dict:
    """One-particle vector as a sparse ``{index: amplitude}`` dict."""
    if isinstance(xi, Mapping):
        out = {int(i): complex(a) for i, a in xi.items() if a != 0}
    else:
        arr = np.asarray(xi, dtype=complex).reshape(-1)
        if d is not None and arr.shape[0] != d:
            raise ValueError(f"one-particle vector has length {arr.shape[0]}, expected {d}")
        nz = np.flatnonzero(arr)
        out = {int(i): complex(arr[i]) for i in nz}
    if d is not None and out and (max(out) >= d or min(out) < 0):
        raise ValueError("one-particle index out of range")
    return out


def vec_inner(u: dict, v: dict) -> complex:
    if len(u) > len(v):
        return np.conj(vec_inner(v, u))
    return complex(sum(np.conj(a) * v[i] for i, a in u.items() if i in v))


def apply_one_particle(X: sp.spmatrix, xi: dict) -> dict:
    X = sp.csc_matrix(X)
    out: dict = {}
    for j, a in xi.items():
        lo, hi = X.indptr[j], X.indptr[j + 1]
        for i, x in zip(X.indices[lo:hi], X.data[lo:hi]):
            out[int(i)] = out.get(int(i), 0) + x * a
    return {i: a for i, a in out.items() if abs(a) > PRUNE}


@dataclass(frozen=True)
class OneParticleBasis:
    """``d = d_internal * cells`` with the cell index running fastest."""

    d_internal: int
    cells: int

    @property
    def dimension(self) -> int:
        return self.d_internal * self.cells

    def index(self, i: int, k: int) -> int:
        return i * self.cells + k

    def tensor(self, internal, time_coeffs) -> dict:
        """``u (x) g`` for an internal vector ``u`` and cell coefficients ``g``."""
        u = as_vector(internal, self.d_internal)
        g = np.asarray(time_coeffs, dtype=complex)
        out = {}
        for i, a in u.items():
            for k in np.flatnonzero(g):
                val = a * g[k]
                if abs(val) > PRUNE:
                    out[self.index(i, int(k))] = val
        return out

    def operator(self, internal: sp.spmatrix, time_diag) -> sp.csc_matrix:
        """``X (x) diag(g)`` as a sparse one-particle operator."""
        return sp.kron(sp.csr_matrix(internal), sp.diags(np.asarray(time_diag, dtype=complex)),
                       format="csc")


@dataclass(frozen=True, eq=False)
class SparseState:
    amps: Mapping = field(default_factory=dict)
    cutoff: int = 2

    def __post_init__(self):
        clean = {}
        for key, a in self.amps.items():
            key = tuple(sorted(key))
            if len(key) > self.cutoff:
                raise CutoffError(f"component {key} exceeds cutoff {self.cutoff}")
            if abs(a) > PRUNE:
                clean[key] = clean.get(key, 0) + complex(a)
        object.__setattr__(self, "amps", clean)

    @classmethod
    def _raw(cls, amps: dict, cutoff: int) -> "SparseState":
        # amps already canonical: sorted keys, within cutoff
        s = object.__new__(cls)
        object.__setattr__(s, "amps", {k: a for k, a in amps.items() if abs(a) > PRUNE})
        object.__setattr__(s, "cutoff", cutoff)
        return s

    def __add__(self, other: "SparseState") -> "SparseState":
        out = dict(self.amps)
        for k, a in other.amps.items():
            out[k] = out.get(k, 0) + a
        return SparseState._raw(out, max(self.cutoff, other.cutoff))

    def __sub__(self, other: "SparseState") -> "SparseState":
        return self + other.scale(-1)

    def scale(self, z: complex) -> "SparseState":
        return SparseState._raw({k: z * a for k, a in self.amps.items()}, self.cutoff)

    __rmul__ = scale

    def inner(self, other: "SparseState") -> complex:
        a, b = (self.amps, other.amps)
        if len(a) <= len(b):
            return complex(sum(np.conj(x) * b[k] for k, x in a.items() if k in b))
        return complex(sum(np.conj(a[k]) * y for k, y in b.items() if k in a))

    def norm(self) -> float:
        return sqrt(sum(abs(a) ** 2 for a in self.amps.values()))

    def vacuum_amplitude(self) -> complex:
        return self.amps.get((), 0j)

    def max_particles(self) -> int:
        return max((len(k) for k in self.amps), default=0)

    def particle_numbers(self) -> set:
        return {len(k) for k in self.amps}

    def project(self, max_particles: int) -> "SparseState":
        return SparseState._raw({k: a for k, a in self.amps.items()
                                 if len(k) <= max_particles}, self.cutoff)

    def with_cutoff(self, cutoff: int) -> "SparseState":
        return SparseState(self.amps, cutoff)

    def to_json(self) -> list:
        return [{"multi_index": list(k), "re": a.real, "im": a.imag}
                for k, a in sorted(self.amps.items())]


def vacuum(cutoff: int) -> SparseState:
    return SparseState._raw({(): 1.0 + 0j}, cutoff)


@dataclass(frozen=True, eq=False)
class FockOperator:
    rule: Callable[[SparseState], SparseState]
    adjoint_rule: Callable[[SparseState], SparseState]
    kind: str = "composite"
    raise_by: int = 0

    def __call__(self, state: SparseState) -> SparseState:
        return self.rule(state)

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.adjoint_rule, self.rule, self.kind, self.raise_by)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(lambda s: self.rule(s) + other.rule(s),
                            lambda s: self.adjoint_rule(s) + other.adjoint_rule(s),
                            "composite", max(self.raise_by, other.raise_by))

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return self + other.scale(-1.0)

    def scale(self, z: complex) -> "FockOperator":
        zc = np.conj(z)
        return FockOperator(lambda s: self.rule(s).scale(z),
                            lambda s: self.adjoint_rule(s).scale(zc),
                            self.kind, self.raise_by)

    def __mul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(lambda s: self.rule(other.rule(s)),
                                lambda s: other.adjoint_rule(self.adjoint_rule(s)),
                                "composite", self.raise_by + other.raise_by)
        return self.scale(other)

    def __rmul__(self, z):
        return self.scale(z)


def commutator(A: FockOperator, B: FockOperator) -> FockOperator:
    return A * B - B * A


def identity() -> FockOperator:
    f = lambda s: s
    return FockOperator(f, f, "identity", 0)


def scalar(c: complex) -> FockOperator:
    cc = np.conj(c)
    return FockOperator(lambda s: s.scale(c), lambda s: s.scale(cc), "identity", 0)


def zero_operator() -> FockOperator:
    return scalar(0.0)


def _create(xi: dict, s: SparseState) -> SparseState:
    out: dict = {}
    P = s.cutoff
    for key, a in s.amps.items():
        if len(key) + 1 > P:
            continue
        occ = Counter(key)
        for i, x in xi.items():
            new = list(key)
            insort(new, i)
            new = tuple(new)
            out[new] = out.get(new, 0) + sqrt(occ[i] + 1) * x * a
    return SparseState._raw(out, P)


def _annihilate(xi: dict, s: SparseState) -> SparseState:
    out: dict = {}
    for key, a in s.amps.items():
        occ = Counter(key)
        for i, n in occ.items():
            x = xi.get(i)
            if x is None:
                continue
            pos = key.index(i)
            new = key[:pos] + key[pos + 1:]
            out[new] = out.get(new, 0) + sqrt(n) * np.conj(x) * a
    return SparseState._raw(out, s.cutoff)


def _conserve(X: sp.csc_matrix, s: SparseState) -> SparseState:
    out: dict = {}
    indptr, indices, data = X.indptr, X.indices, X.data
    for key, a in s.amps.items():
        occ = Counter(key)
        for j, nj in occ.items():
            lo, hi = indptr[j], indptr[j + 1]
            if lo == hi:
                continue
            pos = key.index(j)
            rest = key[:pos] + key[pos + 1:]
            occ_rest = Counter(rest)
            base = sqrt(nj) * a
            for i, x in zip(indices[lo:hi], data[lo:hi]):
                i = int(i)
                new = list(rest)
                insort(new, i)
                new = tuple(new)
                out[new] = out.get(new, 0) + sqrt(occ_rest[i] + 1) * x * base
    return SparseState._raw(out, s.cutoff)


def creation(xi, d: int | None = None) -> FockOperator:
    """``A^*(xi)``; linear in ``xi``."""
    v = as_vector(xi, d)
    return FockOperator(lambda s: _create(v, s), lambda s: _annihilate(v, s), "creation", 1)


def annihilation(xi, d: int | None = None) -> FockOperator:
    """``A(xi)``; anti-linear in ``xi``, ``A(xi) A^*(eta) Omega = <xi, eta> Omega``."""
    v = as_vector(xi, d)
    return FockOperator(lambda s: _annihilate(v, s), lambda s: _create(v, s), "annihilation", 0)


def conservation(X, d: int | None = None) -> FockOperator:
    """``Lambda(X)``, the differential second quantization of ``X``."""
    X = sp.csc_matrix(X, dtype=complex)
    if d is not None and X.shape != (d, d):
        raise ValueError(f"one-particle operator has shape {X.shape}, expected ({d}, {d})")
    X.sum_duplicates()
    XH = sp.csc_matrix(X.conj().T)
    return FockOperator(lambda s: _conserve(X, s), lambda s: _conserve(XH, s),
                        "conservation", 0)


def exp_vector(f, cutoff: int, d: int | None = None) -> SparseState:
    """Truncated exponential vector ``sum_{k<=P} A^*(f)^k Omega / k!``."""
    A = creation(f, d)
    term = vacuum(cutoff)
    total = term
    for k in range(1, cutoff + 1):
        term = A(term).scale(1.0 / k)
        total = total + term
    return total


def _check_unitary(U: sp.spmatrix):
    d = U.shape[0]
    if U.shape != (d, d):
        raise ValueError("unitary must be square")
    err = abs(U.conj().T @ U - sp.identity(d)).max() if d else 0.0
    err = max(err, abs(U @ U.conj().T - sp.identity(d)).max() if d else 0.0)
    if err > UNITARY_TOL:
        raise ValueError(f"operator is not unitary (defect {err:.3g})")


def _gamma(U: sp.csc_matrix, s: SparseState) -> SparseState:
    out: dict = {}
    for key, a in s.amps.items():
        part = {(): a / sqrt(np.prod([factorial(n) for n in Counter(key).values()]))}
        for j in key:
            col = {int(i): x for i, x in zip(U.indices[U.indptr[j]:U.indptr[j + 1]],
                                             U.data[U.indptr[j]:U.indptr[j + 1]])}
            part = _create(col, SparseState._raw(part, len(key))).amps
        for k2, b in part.items():
            out[k2] = out.get(k2, 0) + b
    return SparseState._raw(out, s.cutoff)


def second_quantization(U, d: int | None = None) -> FockOperator:
    """``Gamma(U)``: ``e(f) -> e(Uf)``, particle number preserving."""
    U = sp.csc_matrix(U, dtype=complex)
    if d is not None and U.shape != (d, d):
        raise ValueError(f"unitary has shape {U.shape}, expected ({d}, {d})")
    _check_unitary(U)
    UH = sp.csc_matrix(U.conj().T)
    return FockOperator(lambda s: _gamma(U, s), lambda s: _gamma(UH, s), "second_quantization", 0)


@dataclass(frozen=True)
class CcrReport:
    residuals: dict
    max_residual: float


def check_ccr(xi, eta, X, Y, probe: SparseState, d: int | None = None) -> CcrReport:
    """Residual norms of the six canonical brackets applied to ``probe``."""
    if probe.max_particles() > probe.cutoff - 2:
        raise CutoffError("probe must carry at most P-2 particles")
    xi_v, eta_v = as_vector(xi, d), as_vector(eta, d)
    X = sp.csc_matrix(X, dtype=complex)
    Y = sp.csc_matrix(Y, dtype=complex)
    A, As = annihilation, creation
    Ax, Asx, Aeta, Aseta = A(xi_v), As(xi_v), A(eta_v), As(eta_v)
    LX, LY = conservation(X), conservation(Y)

    cases = {
        "[A,A*]": (commutator(Ax, Aseta), scalar(vec_inner(xi_v, eta_v))),
        "[A,A]": (commutator(Ax, Aeta), zero_operator()),
        "[A*,A*]": (commutator(Asx, Aseta), zero_operator()),
        "[L,L]": (commutator(LX, LY), conservation(X @ Y - Y @ X)),
        "[L,A*]": (commutator(LX, Aseta), As(apply_one_particle(X, eta_v))),
        "[L,A]": (commutator(LX, Aeta), A(apply_one_particle(X.conj().T, eta_v)).scale(-1.0)),
    }
    res = {name: (lhs(probe) - rhs(probe)).norm() for name, (lhs, rhs) in cases.items()}
    return CcrReport(res, max(res.values()))


def fock_basis(d: int, cutoff: int) -> list:
    """All occupation multi-indices with at most ``cutoff`` particles, ordered by particle number."""
    keys = []
    for n in range(cutoff + 1):
        keys.extend(combinations_with_replacement(range(d), n))
    return keys


def to_dense(state: SparseState, basis: list) -> np.ndarray:
    pos = {k: i for i, k in enumerate(basis)}
    v = np.zeros(len(basis), dtype=complex)
    for k, a in state.amps.items():
        v[pos[k]] = a
    return v


def from_dense(v: np.ndarray, basis: list, cutoff: int) -> SparseState:
    return SparseState._raw({basis[i]: complex(v[i]) for i in np.flatnonzero(np.abs(v) > PRUNE)},
                            cutoff)


def densify(op: FockOperator, basis: list, cutoff: int) -> np.ndarray:
    """Matrix of ``op`` compressed to the span of ``basis``."""
    pos = {k: i for i, k in enumerate(basis)}
    M = np.zeros((len(basis), len(basis)), dtype=complex)
    for j, key in enumerate(basis):
        out = op(SparseState._raw({key: 1.0 + 0j}, cutoff))
        for k, a in out.amps.items():
            i = pos.get(k)
            if i is not None:
                M[i, j] = a
    return M


def random_state(rng: np.random.Generator, d: int, particles: int, cutoff: int,
                 terms: int = 6, indices=None) -> SparseState:
    """Normalized random superposition of ``particles``-particle basis states."""
    pool = np.arange(d) if indices is None else np.asarray(indices)
    amps = {}
    for _ in range(terms):
        key = tuple(sorted(int(i) for i in rng.choice(pool, size=particles)))
        amps[key] = amps.get(key, 0) + complex(rng.normal(), rng.normal())
    s = SparseState(amps, cutoff)
    return s.scale(1.0 / s.norm())
