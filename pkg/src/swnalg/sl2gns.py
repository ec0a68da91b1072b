"""The ladder representations rho+/- of sl2, their geometric states and the GNS data.

``rho+`` raises with ``sqrt((n+1)(n+2))`` and has ``M e_n = (2n+2) e_n``;
``rho-`` swaps the two ladder matrices and flips the sign of ``M``.  On
untruncated indices these satisfy ``[B-, B+] = M`` and ``[M, B+-] = +-2 B+-``.

The GNS vector ``psi`` lives on the diagonal of ``l2 (x) l2``.  It is cut at
``n <= N`` but the doubled operators act on a slightly larger space
(``N + 1 + pad`` levels per leg), so every computation that raises an index at
most ``pad`` times starting from ``psi`` is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp

from .swnlie import AlgebraParams

DEFAULT_PAD = 4


@dataclass(frozen=True, eq=False)
class Sl2Rep:
    cutoff: int
    Bplus: sp.csr_matrix = field(repr=False)
    Bminus: sp.csr_matrix = field(repr=False)
    M: sp.csr_matrix = field(repr=False)
    sign: int = 1

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def op(self, letter: str) -> sp.csr_matrix:
        return {"B+": self.Bplus, "B-": self.Bminus, "M": self.M}[letter]

    def word(self, letters) -> sp.csr_matrix:
        out = sp.identity(self.dim, dtype=complex, format="csr")
        for l in letters:
            out = out @ self.op(l)
        return out


def _raising(N: int) -> sp.csr_matrix:
    n = np.arange(N)
    return sp.csr_matrix((np.sqrt((n + 1.0) * (n + 2.0)), (n + 1, n)), shape=(N + 1, N + 1),
                         dtype=complex)


def rho_plus(N: int) -> Sl2Rep:
    if N < 1:
        raise ValueError("cutoff must be at least 1")
    up = _raising(N)
    M = sp.diags(2.0 * np.arange(N + 1) + 2.0, format="csr", dtype=complex)
    return Sl2Rep(N, up, sp.csr_matrix(up.conj().T), M, +1)


def rho_minus(N: int) -> Sl2Rep:
    if N < 1:
        raise ValueError("cutoff must be at least 1")
    up = _raising(N)
    M = sp.diags(-(2.0 * np.arange(N + 1) + 2.0), format="csr", dtype=complex)
    return Sl2Rep(N, sp.csr_matrix(up.conj().T), up, M, -1)


def phi_state(lam: float, rep: Sl2Rep, letters) -> complex:
    """Geometric state ``(1-lam) sum_n lam^n <e_n, rho(w) e_n>``.

    The sum runs over ``n <= N - len(w)``, the levels on which the truncated
    word agrees with the untruncated one (for the empty word, all ``n <= N``).
    """
    letters = list(letters)
    if 2 * len(letters) > rep.cutoff:
        raise ValueError("word too long for this cutoff")
    top = rep.cutoff - len(letters)
    W = rep.word(letters).diagonal()[: top + 1]
    n = np.arange(top + 1)
    return complex((1 - lam) * np.sum(lam ** n * W))


@dataclass(frozen=True, eq=False)
class GnsData:
    lam: float
    cutoff: int
    pad: int
    psi: np.ndarray = field(repr=False)
    ops: dict = field(repr=False)

    @property
    def level_dim(self) -> int:
        return self.cutoff + 1 + self.pad

    @property
    def dim(self) -> int:
        return self.level_dim ** 2

    def index(self, n1: int, n2: int) -> int:
        return n1 * self.level_dim + n2

    def retained_mask(self) -> np.ndarray:
        """Components ``e_j (x) e_k`` with ``j, k <= N``."""
        D, N = self.level_dim, self.cutoff
        j, k = np.divmod(np.arange(D * D), D)
        return (j <= N) & (k <= N)

    def family(self, leg: int) -> dict:
        s = str(leg)
        return {"B+": self.ops["B" + s + "+"], "B-": self.ops["B" + s + "-"],
                "M": self.ops["M" + s]}


def build_gns(lam: float, N: int, pad: int = DEFAULT_PAD) -> GnsData:
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    if N < 2:
        raise ValueError("cutoff must be at least 2")
    if pad < 0:
        raise ValueError("pad must be non-negative")
    D = N + 1 + pad
    rp, rm = rho_plus(D - 1), rho_minus(D - 1)
    I = sp.identity(D, dtype=complex, format="csr")
    kron = lambda a, b: sp.kron(a, b, format="csr")
    ops = {
        "B1+": kron(rp.Bplus, I), "B1-": kron(rp.Bminus, I), "M1": kron(rp.M, I),
        "B2+": kron(I, rm.Bplus), "B2-": kron(I, rm.Bminus), "M2": kron(I, rm.M),
    }
    psi = np.zeros(D * D, dtype=complex)
    n = np.arange(N + 1)
    psi[n * D + n] = math.sqrt(1 - lam) * lam ** (n / 2.0)
    psi.setflags(write=False)
    return GnsData(lam, N, pad, psi, ops)


@dataclass(frozen=True)
class Prop3Report:
    residuals: dict
    max_residual: float
    drift: dict


def check_prop3(g: GnsData) -> Prop3Report:
    """Residuals of ``B1- psi = sqrt(lam) B2- psi``, ``B1+ psi = B2+ psi / sqrt(lam)``,
    ``M1 psi = -M2 psi`` on the retained components, plus ``<psi, B2+- psi>``."""
    psi, o, lam = g.psi, g.ops, g.lam
    mask = g.retained_mask()
    pairs = {
        "B1-psi - sqrt(lam) B2-psi": o["B1-"] @ psi - math.sqrt(lam) * (o["B2-"] @ psi),
        "B1+psi - B2+psi/sqrt(lam)": o["B1+"] @ psi - (o["B2+"] @ psi) / math.sqrt(lam),
        "M1psi + M2psi": o["M1"] @ psi + o["M2"] @ psi,
    }
    res = {k: float(np.max(np.abs(v[mask]))) for k, v in pairs.items()}
    drift = {k: complex(np.vdot(psi, o[k] @ psi)) for k in ("B2+", "B2-", "B1+", "B1-")}
    return Prop3Report(res, max(res.values()), drift)


@dataclass(frozen=True, eq=False)
class SchurmannTriple:
    """``(rep, eta, L)`` with ``eta(x) = rep(x) psi`` and ``L(x) = <psi, rep(x) psi>``
    on generators (the counit vanishes there)."""

    rep: dict = field(repr=False)
    eta: dict = field(repr=False)
    Lval: dict
    params: AlgebraParams
    dim: int

    def restrict(self, leg: int) -> "SchurmannTriple":
        """Triple of ``U(sl2)`` acting through one tensor leg, keyed by ``B+``, ``B-``, ``M``."""
        s = str(leg)
        keys = {"B+": "B" + s + "+", "B-": "B" + s + "-", "M": "M" + s}
        return SchurmannTriple({k: self.rep[v] for k, v in keys.items()},
                               {k: self.eta[v] for k, v in keys.items()},
                               {k: self.Lval[v] for k, v in keys.items()},
                               self.params, self.dim)


def counit(symbol: str) -> float:
    return 1.0 if symbol == "1" else 0.0


def schurmann_triple(g: GnsData, params: AlgebraParams) -> SchurmannTriple:
    eta = {k: op @ g.psi for k, op in g.ops.items()}
    Lval = {k: complex(np.vdot(g.psi, v)) - counit(k) for k, v in eta.items()}
    return SchurmannTriple(dict(g.ops), eta, Lval, params, g.dim)


def tail_bound(lam: float, N: int, degree: int, scale: float = 1.0) -> float:
    """``scale * (1-lam) * sum_{n>N} lam^n (n+2)^degree``, summed until negligible."""
    total, n = 0.0, N + 1
    while True:
        term = (1 - lam) * lam ** n * (n + 2.0) ** degree
        total += term
        if term < 1e-18 * max(total, 1e-300) or n > N + 10_000:
            return scale * total
        n += 1
