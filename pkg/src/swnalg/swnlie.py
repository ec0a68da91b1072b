"""The square-of-white-noise *-Lie algebra over step functions.

An element is ``c0*1 + b_{f_b} + b+_{f_bplus} + n_{f_n}``.  Because ``b`` is
anti-linear in its argument, scalars are folded into the function slots and
the stored representation is unique.

Besides the bracket and involution this module holds the quasifree machinery:
classification of a triple of linear maps ``(T1, T2, T3)`` as a quasifree
endomorphism, the resulting pair ``(T, alpha)``, its action on elements and
words, and the type (A)/(B) split.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .kcell import (ENDO_TOL, Grid, GridMismatchError, KLinearMap, StepFunction,
                    inner, is_hilbert_algebra_endomorphism)

PHASE_TOL = 1e-10


@dataclass(frozen=True)
class AlgebraParams:
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be strictly positive")


@dataclass(frozen=True, eq=False)
class SwnElement:
    c0: complex
    f_b: StepFunction
    f_bplus: StepFunction
    f_n: StepFunction

    def __post_init__(self):
        g = self.f_b.grid
        if self.f_bplus.grid != g or self.f_n.grid != g:
            raise GridMismatchError("element slots live on different grids")
        object.__setattr__(self, "c0", complex(self.c0))

    @property
    def grid(self) -> Grid:
        return self.f_b.grid

    @classmethod
    def zero(cls, grid: Grid) -> "SwnElement":
        z = grid.zero()
        return cls(0.0, z, z, z)

    @classmethod
    def one(cls, grid: Grid, c: complex = 1.0) -> "SwnElement":
        z = grid.zero()
        return cls(c, z, z, z)

    @classmethod
    def b(cls, f: StepFunction) -> "SwnElement":
        z = f.grid.zero()
        return cls(0.0, f, z, z)

    @classmethod
    def bplus(cls, f: StepFunction) -> "SwnElement":
        z = f.grid.zero()
        return cls(0.0, z, f, z)

    @classmethod
    def n(cls, f: StepFunction) -> "SwnElement":
        z = f.grid.zero()
        return cls(0.0, z, z, f)

    def __add__(self, other: "SwnElement") -> "SwnElement":
        return SwnElement(self.c0 + other.c0, self.f_b + other.f_b,
                          self.f_bplus + other.f_bplus, self.f_n + other.f_n)

    def __neg__(self) -> "SwnElement":
        return self.scale(-1.0)

    def __sub__(self, other: "SwnElement") -> "SwnElement":
        return self + (-other)

    def scale(self, z: complex) -> "SwnElement":
        # z * b_f = b_{conj(z) f}
        return SwnElement(z * self.c0, self.f_b.scale(np.conj(z)),
                          self.f_bplus.scale(z), self.f_n.scale(z))

    __rmul__ = scale

    def allclose(self, other: "SwnElement", atol: float = 1e-12) -> bool:
        return (abs(self.c0 - other.c0) <= atol
                and self.f_b.allclose(other.f_b, atol)
                and self.f_bplus.allclose(other.f_bplus, atol)
                and self.f_n.allclose(other.f_n, atol))

    def max_abs(self) -> float:
        return max(abs(self.c0), *(float(np.max(np.abs(f.coeffs)))
                                   for f in (self.f_b, self.f_bplus, self.f_n)))

    def to_json(self) -> dict:
        return {"c0": [self.c0.real, self.c0.imag], "f_b": self.f_b.to_json(),
                "f_bplus": self.f_bplus.to_json(), "f_n": self.f_n.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "SwnElement":
        c0 = d["c0"]
        c0 = complex(c0[0], c0[1]) if isinstance(c0, (list, tuple)) else complex(c0)
        return cls(c0, StepFunction.from_json(d["f_b"]),
                   StepFunction.from_json(d["f_bplus"]), StepFunction.from_json(d["f_n"]))


def commutator(x: SwnElement, y: SwnElement, p: AlgebraParams) -> SwnElement:
    """Lie bracket ``[x, y]`` expanded bilinearly over the generator relations."""
    if x.grid != y.grid:
        raise GridMismatchError("elements live on different grids")
    g = p.gamma

    # [b_phi, b+_psi] = gamma <phi, psi> 1 + n_{conj(phi) psi}
    c0 = g * inner(x.f_b, y.f_bplus) - g * inner(y.f_b, x.f_bplus)
    f_n = x.f_b.conj() * y.f_bplus - y.f_b.conj() * x.f_bplus
    # [n_phi, b_psi] = -2 b_{conj(phi) psi}
    f_b = (x.f_n.conj() * y.f_b - y.f_n.conj() * x.f_b).scale(-2.0)
    # [n_phi, b+_psi] = 2 b+_{phi psi}
    f_bplus = (x.f_n * y.f_bplus - y.f_n * x.f_bplus).scale(2.0)
    return SwnElement(c0, f_b, f_bplus, f_n)


def involution(x: SwnElement) -> SwnElement:
    return SwnElement(np.conj(x.c0), x.f_bplus, x.f_b, x.f_n.conj())


class Kind(str, Enum):
    B = "B"
    BPLUS = "BPLUS"
    N = "N"
    ONE = "ONE"


@dataclass(frozen=True, eq=False)
class Letter:
    kind: Kind
    arg: StepFunction
    scalar: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "scalar", complex(self.scalar))

    def element(self) -> SwnElement:
        z = self.scalar
        if self.kind is Kind.ONE:
            return SwnElement.one(self.arg.grid, z)
        base = {Kind.B: SwnElement.b, Kind.BPLUS: SwnElement.bplus,
                Kind.N: SwnElement.n}[self.kind](self.arg)
        return base.scale(z)

    def star(self) -> "Letter":
        z = np.conj(self.scalar)
        if self.kind is Kind.B:
            return Letter(Kind.BPLUS, self.arg, z)
        if self.kind is Kind.BPLUS:
            return Letter(Kind.B, self.arg, z)
        if self.kind is Kind.N:
            return Letter(Kind.N, self.arg.conj(), z)
        return Letter(Kind.ONE, self.arg, z)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "scalar": [self.scalar.real, self.scalar.imag],
                "arg": self.arg.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "Letter":
        s = d.get("scalar", 1.0)
        s = complex(s[0], s[1]) if isinstance(s, (list, tuple)) else complex(s)
        return cls(Kind(d["kind"]), StepFunction.from_json(d["arg"]), s)


@dataclass(frozen=True)
class GeneratorWord:
    """Ordered product of generators; the empty word is the identity."""

    letters: tuple = ()
    max_length: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        if self.max_length is not None and len(self.letters) > self.max_length:
            raise ValueError(f"word longer than {self.max_length}")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: "GeneratorWord") -> "GeneratorWord":
        return GeneratorWord(self.letters + other.letters)

    def star(self) -> "GeneratorWord":
        return GeneratorWord(tuple(l.star() for l in reversed(self.letters)))

    def scale(self, z: complex) -> "GeneratorWord":
        if not self.letters:
            raise ValueError("scale the empty word through a ONE letter instead")
        first = self.letters[0]
        return GeneratorWord((Letter(first.kind, first.arg, z * first.scalar),)
                             + self.letters[1:])

    def count(self, kind: Kind) -> int:
        return sum(1 for l in self.letters if l.kind is Kind(kind))

    def to_json(self) -> list:
        return [l.to_json() for l in self.letters]

    @classmethod
    def from_json(cls, items: list) -> "GeneratorWord":
        return cls(tuple(Letter.from_json(d) for d in items))


def word(*letters) -> GeneratorWord:
    return GeneratorWord(tuple(letters))


@dataclass(frozen=True, eq=False)
class QuasifreePair:
    T: KLinearMap
    alpha: StepFunction

    def __post_init__(self):
        if self.alpha.grid != self.T.grid_out:
            raise GridMismatchError("alpha must live on the output grid of T")
        if np.max(np.abs(self.alpha.coeffs.imag), initial=0.0) > PHASE_TOL:
            raise ValueError("alpha must be real")

    @property
    def T0(self) -> KLinearMap:
        """The common value of ``T1 = T2 = e^{i alpha} T``."""
        return self.T.phase(self.alpha)

    def generator_maps(self):
        return self.T0, self.T0, self.T


class FailureReason(str, Enum):
    T1_NE_T2 = "T1_ne_T2"
    NOT_ENDOMORPHISM = "T3_not_endomorphism"
    MODULUS_MISMATCH = "modulus_mismatch"
    INCONSISTENT_PHASE = "inconsistent_phase"


# the condition behind each reason, reported alongside it
REASON_CONDITIONS = {
    FailureReason.T1_NE_T2: "T1 = T2",
    FailureReason.NOT_ENDOMORPHISM: "T3 multiplicative, real and isometric",
    FailureReason.MODULUS_MISMATCH: "conj(T1 f) T1 g = T3(conj(f) g)",
    FailureReason.INCONSISTENT_PHASE: "T1 = exp(i alpha) T3",
}


@dataclass(frozen=True)
class ClassifyFailure:
    reason: FailureReason
    violation: float
    detail: str = ""

    def __bool__(self):
        return False


def _cols(T: KLinearMap, domain):
    dom = np.ones(T.matrix.shape[1], dtype=bool) if domain is None else np.asarray(domain, bool)
    return T.matrix[:, dom], dom


def classify_quasifree(T1: KLinearMap, T2: KLinearMap, T3: KLinearMap,
                       domain=None, tol: float = PHASE_TOL):
    """Decide whether ``b -> b_{T1.}, b+ -> b+_{T2.}, n -> n_{T3.}`` is quasifree.

    Returns a :class:`QuasifreePair` ``(T3, alpha)`` with ``T1 = e^{i alpha} T3``,
    or a falsy :class:`ClassifyFailure` naming the first condition that breaks,
    checked in the order in which they are derived from the relations.  ``domain`` restricts every
    check to the given input cells (needed for truncated shifts).
    """
    grid = T3.grid_in
    for T in (T1, T2):
        if T.grid_in != grid or T.grid_out != T3.grid_out:
            raise GridMismatchError("the three maps must act between the same grids")

    A1, dom = _cols(T1, domain)
    A2, _ = _cols(T2, domain)
    A3, _ = _cols(T3, domain)

    v = float(np.max(np.abs(A1 - A2), initial=0.0))
    if v > tol:
        return ClassifyFailure(FailureReason.T1_NE_T2, v, "T1 and T2 differ")

    rep = is_hilbert_algebra_endomorphism(T3, domain=dom, tol=ENDO_TOL)
    if not rep.ok:
        worst = max(rep.multiplicative_violation, rep.star_violation, rep.isometric_violation)
        bad = [name for name, ok in (("multiplicative", rep.multiplicative),
                                     ("star", rep.star), ("isometric", rep.isometric)) if not ok]
        return ClassifyFailure(FailureReason.NOT_ENDOMORPHISM, worst, ",".join(bad))

    # |T1(chi_k)| = |T3(chi_k)| pointwise
    v = float(np.max(np.abs(np.abs(A1) - np.abs(A3)), initial=0.0))
    if v > tol:
        return ClassifyFailure(FailureReason.MODULUS_MISMATCH, v, "pointwise modulus differs")

    # per-entry phases on the image support; all entries feeding the same
    # output cell must agree, and must agree with the phase read off the
    # image of the whole grid indicator
    support = np.abs(A3) > ENDO_TOL
    n_out = A3.shape[0]
    alpha = np.zeros(n_out)
    worst = 0.0
    ratio_full = (A1.sum(axis=1), A3.sum(axis=1))
    for j in range(n_out):
        ks = np.flatnonzero(support[j])
        if ks.size == 0:
            continue
        ph = np.angle(A1[j, ks] / A3[j, ks])
        ref = float(np.angle(ratio_full[0][j] / ratio_full[1][j])) \
            if abs(ratio_full[1][j]) > ENDO_TOL else ph[0]
        d = np.abs(np.angle(np.exp(1j * (ph - ref))))
        worst = max(worst, float(d.max()))
        alpha[j] = ref
    if worst > tol:
        return ClassifyFailure(FailureReason.INCONSISTENT_PHASE, worst,
                               "phases disagree on shared image cells")
    alpha_f = StepFunction(T3.grid_out, alpha)
    recon = float(np.max(np.abs(np.exp(1j * alpha)[:, None] * A3 - A1), initial=0.0))
    if recon > tol:
        return ClassifyFailure(FailureReason.INCONSISTENT_PHASE, recon,
                               "no single phase function reproduces T1")
    return QuasifreePair(T3, alpha_f)


def apply_quasifree(pair: QuasifreePair, x):
    """Act with the lifting of ``pair`` on an element, a letter or a word."""
    if isinstance(x, GeneratorWord):
        return GeneratorWord(tuple(apply_quasifree(pair, l) for l in x.letters))
    T, T0 = pair.T, pair.T0
    if isinstance(x, Letter):
        if x.kind in (Kind.B, Kind.BPLUS):
            return Letter(x.kind, T0(x.arg), x.scalar)
        if x.kind is Kind.N:
            return Letter(x.kind, T(x.arg), x.scalar)
        out = T.grid_out
        return Letter(Kind.ONE, out.zero(), x.scalar)
    if x.grid != T.grid_in:
        raise GridMismatchError("element and pair live on different grids")
    return SwnElement(x.c0, T0(x.f_b), T0(x.f_bplus), T(x.f_n))


def compose(second: QuasifreePair, first: QuasifreePair) -> QuasifreePair:
    """Pair whose lifting is ``lift(second) o lift(first)``.

    ``e^{i a2} T2 e^{i a1} T1`` is again of the form ``e^{i a} T`` only when
    ``T2`` carries ``a1`` along; the composite phase is read off by the
    classifier so that this never guesses.
    """
    T0 = second.T0.compose(first.T0)
    T = second.T.compose(first.T)
    res = classify_quasifree(T0, T0, T)
    if not res:
        raise ValueError(f"composition is not quasifree: {res.reason.value}")
    return res


def identity_pair(grid: Grid) -> QuasifreePair:
    return QuasifreePair(KLinearMap.identity(grid), grid.zero())


def decompose(pair: QuasifreePair):
    """Split into ``(typeA, typeB) = ((T, 0), (1, alpha))``.

    The lifting of ``pair`` equals ``lift(typeB) o lift(typeA)``: the phase
    acts on the output side of ``T``.
    """
    T = pair.T
    typeA = QuasifreePair(T, T.grid_out.zero())
    typeB = QuasifreePair(KLinearMap.identity(T.grid_out), pair.alpha)
    return typeA, typeB


def tau_group(lam: float, t: float, grid: Grid) -> QuasifreePair:
    """Type (B) pair realizing ``b -> lam^{-it} b``, ``b+ -> lam^{it} b+``, ``n -> n``."""
    _check_lambda(lam)
    return QuasifreePair(KLinearMap.identity(grid), grid.constant(t * math.log(lam)))


def tau_analytic_factor(w: GeneratorWord, lam: float) -> float:
    """Scalar by which the analytic continuation to ``t = i`` multiplies ``w``.

    Uses ``b+ -> lam b+`` and ``b -> lam^{-1} b`` (the scaling under which the
    KMS identity ``w(b+ y) = lam w(y b+)`` holds).
    """
    _check_lambda(lam)
    return lam ** (w.count(Kind.BPLUS) - w.count(Kind.B))


def _check_lambda(lam):
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")


def random_element(grid: Grid, rng: np.random.Generator) -> SwnElement:
    from .kcell import random_step_function
    c0 = complex(rng.normal(), rng.normal())
    return SwnElement(c0, random_step_function(grid, rng),
                      random_step_function(grid, rng), random_step_function(grid, rng))
