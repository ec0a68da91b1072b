"""Fock representations of the SWN algebra and the quasifree dynamics on them.

The one-particle space is ``(l2 (x) l2 cut) (x) cells``.  The time leg uses the
orthonormal cell basis ``chi_k / sqrt(h)``, so a window indicator enters a
creation/annihilation vector with weight ``sqrt(h)`` per cell and a
conservation operator as the plain multiplication operator; ``<chi, chi>``
then reproduces ``t - s``.

Two independent builders exist: :func:`pi_generator` reads a Schurmann triple
``(rep, eta, L)``; :func:`theta_pm` reads the sl2 families and ``psi`` of the
GNS data directly.  Tests compare the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
import time

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import fock
from .fock import FockOperator, OneParticleBasis, SparseState
from .kcell import Grid, KLinearMap, StepFunction, is_grid_aligned
from .sl2gns import GnsData, SchurmannTriple, schurmann_triple
from .swnlie import (AlgebraParams, QuasifreePair, SwnElement, apply_quasifree,
                     commutator as swn_commutator, involution)

DENSE_BASIS_LIMIT = 1000
KINDS = ("b", "b+", "n")


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class TimeWindow:
    s: float
    t: float

    def __post_init__(self):
        if not self.s < self.t:
            raise WindowError("window needs s < t")

    def indicator(self, grid: Grid) -> StepFunction:
        if not (is_grid_aligned(grid, self.s) and is_grid_aligned(grid, self.t)):
            raise WindowError(f"[{self.s}, {self.t}) is not aligned with {grid}")
        return grid.indicator(self.s, self.t)


@dataclass(frozen=True, eq=False)
class RepConfig:
    grid: Grid
    gns: GnsData
    params: AlgebraParams = field(default_factory=AlgebraParams)
    cutoff: int = 3

    @property
    def basis(self) -> OneParticleBasis:
        return OneParticleBasis(self.gns.dim, self.grid.cells)

    @property
    def dimension(self) -> int:
        return self.basis.dimension


def _arg(cfg: RepConfig, w) -> StepFunction:
    if isinstance(w, TimeWindow):
        return w.indicator(cfg.grid)
    if isinstance(w, StepFunction):
        if w.grid != cfg.grid:
            raise WindowError("step function lives on another grid")
        return w
    raise TypeError(f"expected TimeWindow or StepFunction, got {type(w).__name__}")


def _quadratic(basis: OneParticleBasis, X, f_cons: np.ndarray, c_int, f_cre: np.ndarray,
               a_int, f_ann: np.ndarray, const: complex, h: float) -> FockOperator:
    """``Lambda(X (x) f_cons) + A*(c (x) f_cre) + A(a (x) f_ann) + const``."""
    w = math.sqrt(h)
    ops = []
    if np.any(f_cons):
        ops.append(fock.conservation(basis.operator(X, f_cons)))
    if np.any(f_cre):
        ops.append(fock.creation(basis.tensor(c_int, w * f_cre)))
    if np.any(f_ann):
        ops.append(fock.annihilation(basis.tensor(a_int, w * f_ann)))
    out = fock.scalar(const)
    for op in ops:
        out = out + op
    return out


def pi_from_triple(triple: SchurmannTriple, grid: Grid, kind: str,
                   f: StepFunction) -> FockOperator:
    """Image of ``b_f``, ``b+_f`` or ``n_f`` under the representation built from ``triple``.

    ``triple`` must be keyed by ``B+``, ``B-``, ``M`` (one tensor leg).
    """
    basis = OneParticleBasis(triple.dim, grid.cells)
    c, cb, h = f.coeffs, np.conj(f.coeffs), grid.h
    R, eta, L = triple.rep, triple.eta, triple.Lval
    gamma = triple.params.gamma
    if kind == "b":
        return _quadratic(basis, R["B-"], cb, eta["B-"], cb, eta["B+"], c,
                          L["B-"] * h * cb.sum(), h)
    if kind == "b+":
        return _quadratic(basis, R["B+"], c, eta["B+"], c, eta["B-"], cb,
                          L["B+"] * h * c.sum(), h)
    if kind == "n":
        return _quadratic(basis, R["M"], c, eta["M"], c, eta["M"], cb,
                          (L["M"] - gamma) * h * c.sum(), h)
    raise ValueError(f"unknown generator kind {kind!r}")


def leg_triple(cfg: RepConfig, leg: int = 1) -> SchurmannTriple:
    return schurmann_triple(cfg.gns, cfg.params).restrict(leg)


def pi_generator(cfg: RepConfig, w, kind: str, leg: int = 1) -> FockOperator:
    """(Rep) applied to the Schurmann triple of the chosen GNS leg."""
    return pi_from_triple(leg_triple(cfg, leg), cfg.grid, kind, _arg(cfg, w))


def theta_pm(cfg: RepConfig, w, sign: str, kind: str) -> FockOperator:
    """Levy-process images ``theta_+`` (leg 1) or ``theta_-`` (leg 2)."""
    leg = {"+": 1, "-": 2}[sign]
    fam = cfg.gns.family(leg)
    psi = cfg.gns.psi
    f = _arg(cfg, w)
    c, cb, h = f.coeffs, np.conj(f.coeffs), cfg.grid.h
    basis = cfg.basis
    v = {k: fam[k] @ psi for k in fam}
    drift = {k: complex(np.vdot(psi, v[k])) for k in fam}
    if kind == "b":   # j(B-)
        return _quadratic(basis, fam["B-"], cb, v["B-"], cb, v["B+"], c,
                          drift["B-"] * h * cb.sum(), h)
    if kind == "b+":  # j(B+)
        return _quadratic(basis, fam["B+"], c, v["B+"], c, v["B-"], cb,
                          drift["B+"] * h * c.sum(), h)
    if kind == "n":   # j(M) - gamma (t - s)
        return _quadratic(basis, fam["M"], c, v["M"], c, v["M"], cb,
                          (drift["M"] - cfg.params.gamma) * h * c.sum(), h)
    raise ValueError(f"unknown generator kind {kind!r}")


class SwnFockRep:
    """Maps whole SWN elements to Fock operators, caching the leg triple."""

    def __init__(self, cfg: RepConfig, leg: int = 1, via: str = "triple"):
        self.cfg = cfg
        self.leg = leg
        self.via = via
        self._triple = leg_triple(cfg, leg) if via == "triple" else None

    def generator(self, kind: str, f: StepFunction) -> FockOperator:
        if self.via == "triple":
            return pi_from_triple(self._triple, self.cfg.grid, kind, f)
        return theta_pm(self.cfg, f, "+" if self.leg == 1 else "-", kind)

    def element(self, x: SwnElement) -> FockOperator:
        out = fock.scalar(x.c0)
        for kind, f in (("b", x.f_b), ("b+", x.f_bplus), ("n", x.f_n)):
            if not f.is_zero():
                out = out + self.generator(kind, f)
        return out


def generator_elements(grid: Grid, windows=None) -> list:
    """``b``, ``b+``, ``n`` on every cell indicator (or on the given windows)."""
    fs = ([grid.cell_indicator(k) for k in range(grid.cells)] if windows is None
          else [w.indicator(grid) for w in windows])
    out = []
    for f in fs:
        out += [SwnElement.b(f), SwnElement.bplus(f), SwnElement.n(f)]
    return out


def probes(cfg: RepConfig, max_particles: int, seed: int = 0, n_random: int = 20) -> list:
    """Vacuum, one-particle states reached from it by one generator, and random states.

    Random states only use internal levels ``<= N`` on both legs.
    """
    P = cfg.cutoff
    out = [fock.vacuum(P)]
    if max_particles < 1:
        return out
    rep = SwnFockRep(cfg)
    for x in generator_elements(cfg.grid):
        s = rep.element(x)(fock.vacuum(P))
        s = SparseState._raw({k: a for k, a in s.amps.items() if len(k) == 1}, P)
        if s.norm() > 0:
            out.append(s.scale(1 / s.norm()))
    rng = np.random.default_rng(seed)
    keep = np.flatnonzero(cfg.gns.retained_mask())
    pool = np.array([cfg.basis.index(int(i), k) for i in keep for k in range(cfg.grid.cells)])
    for r in range(n_random):
        n = 1 + r % max_particles
        out.append(fock.random_state(rng, cfg.dimension, n, P, indices=pool))
    return out


@dataclass(frozen=True)
class ResidualReport:
    name: str
    max_residual: float
    count: int
    runtime_ms: float
    detail: dict = field(default_factory=dict)


def check_brackets(rep: SwnFockRep, elements, probe_states, name="rep") -> ResidualReport:
    """``[pi(x), pi(y)] v`` versus ``pi([x, y]) v`` for all pairs of elements."""
    t0 = time.perf_counter()
    ops = [rep.element(x) for x in elements]
    worst, count = 0.0, 0
    for i, x in enumerate(elements):
        for j in range(i + 1, len(elements)):
            y = elements[j]
            target = rep.element(swn_commutator(x, y, rep.cfg.params))
            br = fock.commutator(ops[i], ops[j])
            for v in probe_states:
                worst = max(worst, (br(v) - target(v)).norm())
                count += 1
    return ResidualReport(name, worst, count, 1e3 * (time.perf_counter() - t0))


def check_adjoints(rep: SwnFockRep, elements, probe_states, name="adjoint") -> ResidualReport:
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for x in elements:
        A = rep.element(x)
        As = rep.element(involution(x))
        for v in probe_states:
            worst = max(worst, (As(v) - A.adjoint()(v)).norm())
            count += 1
    return ResidualReport(name, worst, count, 1e3 * (time.perf_counter() - t0))


def check_theta_commute(cfg: RepConfig, elements, probe_states) -> ResidualReport:
    t0 = time.perf_counter()
    plus, minus = SwnFockRep(cfg, 1, via="theta"), SwnFockRep(cfg, 2, via="theta")
    worst, count = 0.0, 0
    for x in elements:
        A = plus.element(x)
        for y in elements:
            br = fock.commutator(A, minus.element(y))
            for v in probe_states:
                worst = max(worst, br(v).norm())
                count += 1
    return ResidualReport("theta+/theta- commute", worst, count,
                          1e3 * (time.perf_counter() - t0))


def _cell_unitary(cfg: RepConfig, U: KLinearMap) -> sp.csc_matrix:
    if not U.square or U.grid_in != cfg.grid:
        raise ValueError("U must act on the configuration grid")
    Um = U.matrix
    if np.max(np.abs(Um.conj().T @ Um - np.eye(Um.shape[0]))) > fock.UNITARY_TOL:
        raise ValueError("U is not unitary")
    return sp.kron(sp.identity(cfg.gns.dim), sp.csr_matrix(Um), format="csc")


def lift_type_A(cfg: RepConfig, U: KLinearMap) -> FockOperator:
    """``Gamma(1 (x) U)`` on the Fock space."""
    return fock.second_quantization(_cell_unitary(cfg, U))


def check_prop1(cfg: RepConfig, U: KLinearMap, pair: QuasifreePair | None = None,
                elements=None, seed: int = 0) -> ResidualReport:
    """``Gamma U pi(x) Gamma U^* v`` versus ``pi(tau'(x)) v`` on probes with at most P-1 particles."""
    t0 = time.perf_counter()
    if pair is None:
        pair = QuasifreePair(U, cfg.grid.zero())
    G = lift_type_A(cfg, U)
    Gi = G.adjoint()
    rep = SwnFockRep(cfg)
    if elements is None:
        from .swnlie import random_element
        rng = np.random.default_rng(seed)
        elements = generator_elements(cfg.grid) + [random_element(cfg.grid, rng) for _ in range(2)]
    pr = probes(cfg, cfg.cutoff - 1, seed=seed)
    worst, count = 0.0, 0
    for x in elements:
        lhs = G * rep.element(x) * Gi
        rhs = rep.element(apply_quasifree(pair, x))
        for v in pr:
            worst = max(worst, (lhs(v) - rhs(v)).norm())
            count += 1
    norm_defect = max(abs(G(v).norm() - v.norm()) for v in pr)
    return ResidualReport("prop1", worst, count, 1e3 * (time.perf_counter() - t0),
                          {"norm_defect": norm_defect})


def hamiltonian_H(cfg: RepConfig, alpha: StepFunction, leg: int = 1) -> FockOperator:
    """``H = 1/2 [Lambda(rho(M) (x) alpha) + A*(eta(M) (x) alpha) + A(eta(M) (x) alpha)
    + (L(M) - gamma) int(alpha)]``; the half multiplies the drift as well."""
    if alpha.grid != cfg.grid:
        raise ValueError("alpha lives on another grid")
    if np.max(np.abs(alpha.coeffs.imag)) > 0:
        raise ValueError("alpha must be real")
    tr = leg_triple(cfg, leg)
    a, h = alpha.coeffs.real.astype(complex), cfg.grid.h
    full = _quadratic(cfg.basis, tr.rep["M"], a, tr.eta["M"], a, tr.eta["M"], a,
                      (tr.Lval["M"] - cfg.params.gamma) * h * a.sum(), h)
    return full.scale(0.5)


def check_prop2(cfg: RepConfig, alpha: StepFunction, epsilon: float, psi: StepFunction,
                seed: int = 0, leg: int = 1, probe_particles: int | None = None) -> ResidualReport:
    """Dense check of ``e^{i eps H} pi(b+_psi) e^{-i eps H} = pi(b+_{e^{i eps alpha} psi})``.

    ``H`` and ``pi(b+_psi)`` are compressed to at most ``P`` particles and the
    comparison runs on probes with at most ``probe_particles`` (default ``P - 1``)
    particles.  ``H`` keeps its creation and annihilation parts, so the
    compressed exponential is only exact as ``P`` grows with the probes fixed.
    """
    t0 = time.perf_counter()
    P = cfg.cutoff
    basis = fock.fock_basis(cfg.dimension, P)
    if len(basis) > DENSE_BASIS_LIMIT:
        raise ValueError(f"dense regime too large: {len(basis)} basis states "
                         f"(limit {DENSE_BASIS_LIMIT})")
    H = fock.densify(hamiltonian_H(cfg, alpha, leg), basis, P)
    rep = SwnFockRep(cfg, leg)
    B = fock.densify(rep.generator("b+", psi), basis, P)
    w, V = sla.eigh(H)
    Ep = (V * np.exp(1j * epsilon * w)) @ V.conj().T
    lhs = Ep @ B @ Ep.conj().T
    rotated = StepFunction(cfg.grid, np.exp(1j * epsilon * alpha.coeffs.real) * psi.coeffs)
    rhs_op = rep.generator("b+", rotated)
    worst = 0.0
    k = P - 1 if probe_particles is None else probe_particles
    pr = probes(cfg, k, seed=seed, n_random=10)
    for v in pr:
        lv = lhs @ fock.to_dense(v, basis)
        rv = fock.to_dense(rhs_op(v), basis)
        worst = max(worst, float(np.linalg.norm(lv - rv)))
    herm = float(np.max(np.abs(H - H.conj().T)))
    return ResidualReport("prop2", worst, len(pr), 1e3 * (time.perf_counter() - t0),
                          {"epsilon": epsilon, "basis_size": len(basis), "hermiticity": herm})


def check_prop2_generator(cfg: RepConfig, alpha: StepFunction, psi: StepFunction,
                          seed: int = 0, leg: int = 1) -> ResidualReport:
    """Infinitesimal form ``[H, pi(b+_psi)] = pi(b+_{alpha psi})`` on probes with at most ``P - 2`` particles.

    Differentiating the conjugation identity at ``eps = 0`` gives this bracket;
    it is exact under the particle cutoff, unlike the compressed exponential.
    """
    t0 = time.perf_counter()
    H = hamiltonian_H(cfg, alpha, leg)
    rep = SwnFockRep(cfg, leg)
    lhs = fock.commutator(H, rep.generator("b+", psi))
    rhs = rep.generator("b+", alpha * psi)
    pr = probes(cfg, max(cfg.cutoff - 2, 0), seed=seed, n_random=10)
    worst = max((lhs(v) - rhs(v)).norm() for v in pr)
    return ResidualReport("prop2-generator", worst, len(pr), 1e3 * (time.perf_counter() - t0))
