"""Verification suites shared by the command line and the acceptance tests.

Each ``verify_*`` function takes a :class:`~swnalg.kms.KmsConfig` and returns a
list of :class:`~swnalg.kms.CheckReport`.  :data:`SUITE_DEFAULTS` holds the
configuration each suite runs at unless the caller overrides a field.
"""

from __future__ import annotations

from dataclasses import replace
import itertools
import math
import time

import numpy as np
import scipy.sparse as sp

from . import fock
from .kcell import (Grid, KLinearMap, StepFunction, conjugate, inner, multiply,
                    random_step_function)
from .kms import (CheckReport, KmsConfig, StateEvaluator, generator_words, kms_proof_replay,
                  kms_suite, make_report, positivity_check, random_word, state_values)
from .repdyn import (RepConfig, SwnFockRep, check_adjoints, check_brackets, check_prop1,
                     check_prop2, check_prop2_generator, check_theta_commute, generator_elements, probes)
from .sl2gns import build_gns, check_prop3, phi_state, rho_plus, tail_bound
from .swnlie import (AlgebraParams, FailureReason, GeneratorWord, QuasifreePair,
                     classify_quasifree, commutator, decompose, apply_quasifree,
                     involution, random_element, tau_group, compose)

SUITES = ("swn", "ccr", "prop3", "rep", "dynamics", "kms")

SUITE_DEFAULTS = {
    "swn": {},
    "ccr": {"particle_cutoff": 4},
    "prop3": {},
    "rep": {"sl2_cutoff": 6, "particle_cutoff": 3, "half_width": 1.0, "cells": 2},
    "dynamics": {"sl2_cutoff": 3, "particle_cutoff": 2, "half_width": 2.0, "cells": 4},
    "kms": {},
}

ALGEBRA_TOL = 1e-12
CLASSIFY_TOL = 1e-10
CCR_TOL = 1e-10
REP_TOL = 1e-10
PROP3_TOL = 1e-10
DRIFT_TOL = 1e-12
PROP1_TOL = 1e-10
PROP2_TOL = 1e-6


def suite_config(name: str, base: KmsConfig | None = None, explicit: dict | None = None) -> KmsConfig:
    """``base`` with the suite defaults applied to every field not in ``explicit``."""
    base = base or KmsConfig()
    explicit = explicit or {}
    kw = {k: v for k, v in SUITE_DEFAULTS[name].items() if k not in explicit}
    return replace(base, **kw)


# ---------------------------------------------------------------------------
# algebra identities and the classifier

def _elem_err(x, y) -> float:
    return (x - y).max_abs()


def algebra_identities(grid: Grid, params: AlgebraParams, rng: np.random.Generator,
                       n: int = 200) -> dict:
    """Worst antisymmetry, Jacobi and star-compatibility defects over ``n`` random triples."""
    worst = {"antisymmetry": 0.0, "jacobi": 0.0, "star": 0.0}
    br = lambda a, b: commutator(a, b, params)
    for _ in range(n):
        x, y, z = (random_element(grid, rng) for _ in range(3))
        worst["antisymmetry"] = max(worst["antisymmetry"], _elem_err(br(x, y), -br(y, x)))
        jac = br(x, br(y, z)) + br(y, br(z, x)) + br(z, br(x, y))
        worst["jacobi"] = max(worst["jacobi"], jac.max_abs())
        worst["star"] = max(worst["star"],
                            _elem_err(involution(br(x, y)), br(involution(y), involution(x))))
    return worst


def _random_phase(grid: Grid, rng: np.random.Generator) -> StepFunction:
    if rng.random() < 0.5:
        return grid.constant(float(rng.uniform(-math.pi, math.pi)))
    return StepFunction(grid, rng.uniform(-3 * math.pi, 3 * math.pi, size=grid.cells))


def _random_grid(rng: np.random.Generator) -> Grid:
    return Grid(2.0, int(rng.integers(3, 9)))


def _nontrivial_perm(rng: np.random.Generator, m: int) -> list:
    while True:
        p = [int(i) for i in rng.permutation(m)]
        if p != list(range(m)):
            return p


def valid_family(rng: np.random.Generator, n: int = 50) -> list:
    """``(T1, T2, T3, T, alpha)`` with ``T`` a random cell permutation."""
    out = []
    for _ in range(n):
        g = _random_grid(rng)
        T = KLinearMap.permutation(g, _nontrivial_perm(rng, g.cells))
        a = _random_phase(g, rng)
        T0 = T.phase(a)
        out.append((T0, T0, T, T, a))
    return out


INVALID_FAMILIES = ("T1_ne_T2", "broken_multiplicativity", "modulus_mismatch", "phase_leak")


def invalid_family(rng: np.random.Generator, n: int = 50) -> list:
    """``(family, T1, T2, T3)`` cycling through :data:`INVALID_FAMILIES`.

    ``phase_leak`` adds a phased entry of ``T1 = T2`` outside the image cell of
    its column.  On a finite cell grid every multiplicative ``T3`` has disjoint
    column supports, so this is the only way to spoil ``T1 = e^{i alpha} T3``
    once ``T1 = T2`` holds; it is caught at the modulus condition.
    """
    out = []
    for i in range(n):
        fam = INVALID_FAMILIES[i % len(INVALID_FAMILIES)]
        g = _random_grid(rng)
        m = g.cells
        perm = _nontrivial_perm(rng, m)
        T = KLinearMap.permutation(g, perm)
        a = _random_phase(g, rng)
        T0 = T.phase(a)
        if fam == "T1_ne_T2":
            E = np.zeros((m, m), complex)
            E[int(rng.integers(m)), int(rng.integers(m))] = complex(*rng.normal(size=2))
            out.append((fam, T0, KLinearMap(T0.matrix + 0.1 * E, g), T))
        elif fam == "broken_multiplicativity":
            th = float(rng.uniform(0.2, 1.3))
            j, k = (int(v) for v in rng.choice(m, size=2, replace=False))
            R = np.eye(m)
            R[[j, j, k, k], [j, k, j, k]] = [math.cos(th), -math.sin(th),
                                             math.sin(th), math.cos(th)]
            T3 = KLinearMap(R @ T.matrix, g)
            T1 = T3.phase(a)
            out.append((fam, T1, T1, T3))
        elif fam == "modulus_mismatch":
            k = int(rng.integers(m))
            s = float(rng.choice([rng.uniform(0.2, 0.9), rng.uniform(1.1, 2.0)]))
            M = np.array(T0.matrix)
            M[:, k] *= s
            T1 = KLinearMap(M, g)
            out.append((fam, T1, T1, T))
        else:
            k = int(rng.integers(m))
            j = int(rng.choice([r for r in range(m) if r != perm[k]]))
            M = np.array(T0.matrix)
            M[j, k] += 0.5 * np.exp(1j * rng.uniform(-math.pi, math.pi))
            T1 = KLinearMap(M, g)
            out.append((fam, T1, T1, T))
    return out


def oracle_first_failure(T1: KLinearMap, T2: KLinearMap, T3: KLinearMap,
                         rng: np.random.Generator, trials: int = 4, tol: float = 1e-9):
    """First failing quasifree condition judged on random step functions.

    Works on function values only (no matrix entries): ``T1 f = T2 f``; ``T3``
    multiplicative, real and isometric; ``conj(T1 f) T1 g = T3(conj(f) g)``;
    a single unimodular ratio ``T1 f / T3 f`` on the image.  Returns the
    :class:`FailureReason` or ``None``.
    """
    g = T3.grid_in
    fs = [random_step_function(g, rng) for _ in range(3 * trials)]
    close = lambda u, v: np.max(np.abs(u.coeffs - v.coeffs)) <= tol * max(1.0, np.max(np.abs(v.coeffs)))
    for f in fs[:trials]:
        if not close(T1(f), T2(f)):
            return FailureReason.T1_NE_T2
    for f, h in zip(fs[:trials], fs[trials:2 * trials]):
        if not (close(T3(multiply(f, h)), multiply(T3(f), T3(h)))
                and close(T3(conjugate(f)), conjugate(T3(f)))
                and abs(inner(T3(f), T3(h)) - inner(f, h)) <= tol * 10):
            return FailureReason.NOT_ENDOMORPHISM
    for f, h in zip(fs[:trials], fs[trials:2 * trials]):
        if not close(multiply(conjugate(T1(f)), T1(h)), T3(multiply(conjugate(f), h))):
            return FailureReason.MODULUS_MISMATCH
    ratios = []
    for f in fs[:2]:
        a, b = T1(f).coeffs, T3(f).coeffs
        on = np.abs(b) > 1e-9
        ratios.append(np.where(on, a / np.where(on, b, 1), 1.0))
    if np.max(np.abs(np.abs(ratios[0]) - 1)) > tol or np.max(np.abs(ratios[0] - ratios[1])) > tol:
        return FailureReason.INCONSISTENT_PHASE
    alpha = StepFunction(T3.grid_out, np.angle(ratios[0]))
    for f in fs[2 * trials:]:
        if not close(T3.phase(alpha)(f), T1(f)):
            return FailureReason.INCONSISTENT_PHASE
    return None


def classifier_checks(rng: np.random.Generator, n_valid: int = 50, n_invalid: int = 50):
    """Reports for recovery on valid triples and first-failure agreement on invalid ones."""
    t0 = time.perf_counter()
    worst, unrecognized = 0.0, 0
    for T1, T2, T3, T, a in valid_family(rng, n_valid):
        res = classify_quasifree(T1, T2, T3)
        if not res:
            unrecognized += 1
            continue
        worst = max(worst, float(np.max(np.abs(res.T.matrix - T.matrix))),
                    float(np.max(np.abs(np.exp(1j * res.alpha.coeffs) - np.exp(1j * a.coeffs)))))
    err = worst if unrecognized == 0 else float("inf")
    valid = make_report("classify-valid", {"triples": n_valid, "unrecognized": unrecognized},
                        err, CLASSIFY_TOL, t0)
    t0 = time.perf_counter()
    wrong, counts = 0, {}
    orng = np.random.default_rng(rng.integers(2 ** 32))
    for fam, T1, T2, T3 in invalid_family(rng, n_invalid):
        res = classify_quasifree(T1, T2, T3)
        expected = oracle_first_failure(T1, T2, T3, orng)
        got = None if res else res.reason
        key = f"{fam}->{got.value if got else 'accepted'}"
        counts[key] = counts.get(key, 0) + 1
        if expected is None or got != expected:
            wrong += 1
    invalid = make_report("classify-invalid", {"triples": n_invalid, "outcomes": counts,
                                               "mismatches": wrong}, wrong, 0, t0)
    return [valid, invalid]


def group_law_check(grid: Grid, rng: np.random.Generator, lam: float = 0.5) -> CheckReport:
    """``tau_s tau_t = tau_{s+t}`` and ``lift = lift(typeB) o lift(typeA)`` on random elements."""
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10):
        s, t = rng.normal(size=2)
        x = random_element(grid, rng)
        st = compose(tau_group(lam, s, grid), tau_group(lam, t, grid))
        worst = max(worst, _elem_err(apply_quasifree(st, x),
                                     apply_quasifree(tau_group(lam, s + t, grid), x)))
        T = KLinearMap.permutation(grid, _nontrivial_perm(rng, grid.cells))
        pair = QuasifreePair(T, _random_phase(grid, rng))
        A, B = decompose(pair)
        worst = max(worst, _elem_err(apply_quasifree(pair, x),
                                     apply_quasifree(B, apply_quasifree(A, x))))
    return make_report("tau-group-law", {"lambda": lam, "samples": 10}, worst, ALGEBRA_TOL, t0)


def verify_swn(cfg: KmsConfig, n_triples: int = 200) -> list:
    rng = np.random.default_rng(cfg.seed)
    params = AlgebraParams(cfg.gamma)
    t0 = time.perf_counter()
    ids = algebra_identities(cfg.grid, params, rng, n_triples)
    ms = 1e3 * (time.perf_counter() - t0)
    out = []
    for name, err in ids.items():
        r = make_report(f"swn-{name}", {"triples": n_triples, "gamma": cfg.gamma}, err,
                        ALGEBRA_TOL, time.perf_counter())
        r.runtime_ms = ms
        out.append(r)
    out += classifier_checks(rng)
    out.append(group_law_check(cfg.grid, rng, cfg.lam))
    return out


# ---------------------------------------------------------------------------
# canonical commutation relations

def ladder_model(d: int, P: int):
    """Brute-force bosonic Fock space: ``d`` oscillators with occupations ``<= P``.

    Returns ``(keys, lower)`` where ``keys`` lists the occupation multisets with
    at most ``P`` particles (as sorted index tuples) and ``lower[i]`` is the
    sparse matrix of ``a_i`` compressed to them.
    """
    one = sp.diags(np.sqrt(np.arange(1, P + 1, dtype=float)), 1, shape=(P + 1, P + 1),
                   format="csr")
    ident = sp.identity(P + 1, format="csr")
    occ = np.array(list(itertools.product(range(P + 1), repeat=d)), dtype=int)
    keep = np.flatnonzero(occ.sum(axis=1) <= P)
    keys = [tuple(i for i in range(d) for _ in range(occ[r, i])) for r in keep]
    lower = []
    for i in range(d):
        mats = [one if j == i else ident for j in range(d)]
        full = mats[0]
        for m in mats[1:]:
            full = sp.kron(full, m, format="csr")
        lower.append(full[keep][:, keep])
    return keys, lower


def _permuted(basis: list, keys: list) -> np.ndarray:
    pos = {k: i for i, k in enumerate(keys)}
    return np.array([pos[k] for k in basis])


def ccr_checks(rng: np.random.Generator, P: int = 4, dims=(3, 6), n_probes: int = 8) -> list:
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for d in dims:
        xi = rng.normal(size=d) + 1j * rng.normal(size=d)
        eta = rng.normal(size=d) + 1j * rng.normal(size=d)
        X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Y = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        prs = [fock.vacuum(P)] + [fock.random_state(rng, d, 1 + r % (P - 2), P)
                                  for r in range(n_probes)]
        for v in prs:
            worst = max(worst, fock.check_ccr(xi, eta, X, Y, v).max_residual)
            count += 1
    ccr = make_report("ccr", {"particle_cutoff": P, "dims": list(dims), "probes": count},
                      worst, CCR_TOL, t0)

    t0 = time.perf_counter()
    dense_err = 0.0
    for d in dims:
        keys, a = ladder_model(d, P)
        basis = fock.fock_basis(d, P)
        perm = _permuted(basis, keys)
        xi = rng.normal(size=d) + 1j * rng.normal(size=d)
        X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        U, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        ad = [m.T.conj() for m in a]
        brute = {
            "creation": sum(xi[i] * ad[i] for i in range(d)),
            "annihilation": sum(np.conj(xi[i]) * a[i] for i in range(d)),
            "conservation": sum(X[i, j] * (ad[i] @ a[j]) for i in range(d) for j in range(d)),
        }
        ops = {"creation": fock.creation(xi), "annihilation": fock.annihilation(xi),
               "conservation": fock.conservation(X)}
        for name, op in ops.items():
            D = fock.densify(op, basis, P)
            B = brute[name].toarray()[np.ix_(perm, perm)]
            dense_err = max(dense_err, float(np.max(np.abs(D - B))))
        # Gamma(U) maps A*(e_i1)...A*(e_in) Omega to A*(U e_i1)...A*(U e_in) Omega
        G = fock.densify(fock.second_quantization(U), basis, P)
        vac = np.zeros(len(keys), complex)
        vac[keys.index(())] = 1.0
        for key in basis:
            w = vac
            for i in key:
                w = sum(U[j, i] * ad[j] for j in range(d)) @ w
            norm = math.sqrt(math.prod(math.factorial(key.count(i)) for i in set(key)))
            col = G[:, basis.index(key)]
            dense_err = max(dense_err, float(np.max(np.abs(col - w[perm] / norm))))
    dense = make_report("ccr-dense-crosscheck", {"particle_cutoff": P, "dims": list(dims)},
                        dense_err, CCR_TOL, t0)
    return [ccr, dense]


def verify_ccr(cfg: KmsConfig) -> list:
    P = min(cfg.particle_cutoff, 4)
    if P < 3:
        raise ValueError("the CCR suite needs a particle cutoff of at least 3")
    return ccr_checks(np.random.default_rng(cfg.seed), P=P)


# ---------------------------------------------------------------------------
# sl2 GNS data

def verify_prop3(cfg: KmsConfig) -> list:
    t0 = time.perf_counter()
    g = build_gns(cfg.lam, cfg.sl2_cutoff, cfg.pad)
    rep = check_prop3(g)
    params = {"lambda": cfg.lam, "sl2_cutoff": cfg.sl2_cutoff, "residuals": rep.residuals}
    out = [make_report("prop3", params, rep.max_residual, PROP3_TOL, t0)]
    t0 = time.perf_counter()
    drift = max(abs(rep.drift[k]) for k in ("B2+", "B2-"))
    out.append(make_report("prop3-drift", {"lambda": cfg.lam, "sl2_cutoff": cfg.sl2_cutoff},
                           drift, DRIFT_TOL, t0))
    t0 = time.perf_counter()
    exact = 2.0 / (1 - cfg.lam)
    val = phi_state(cfg.lam, rho_plus(cfg.sl2_cutoff), ["M"])
    tol = max(tail_bound(cfg.lam, cfg.sl2_cutoff - 1, 1, 2.0), 1e-12)
    out.append(make_report("phi-state(M)", {"lambda": cfg.lam, "sl2_cutoff": cfg.sl2_cutoff,
                                            "tail_bound": tol},
                           abs(val - exact), tol, t0, exact))
    return out


# ---------------------------------------------------------------------------
# Fock representations and dynamics

def rep_config(cfg: KmsConfig, pad: int | None = None) -> RepConfig:
    return RepConfig(cfg.grid, build_gns(cfg.lam, cfg.sl2_cutoff, cfg.pad if pad is None else pad),
                     AlgebraParams(cfg.gamma), cfg.particle_cutoff)


def _from_residual(r, tol, params) -> CheckReport:
    rep = CheckReport(r.name, {**params, "states": r.count, **r.detail}, float(r.max_residual),
                      bool(r.max_residual <= tol), r.runtime_ms)
    return rep


def verify_rep(cfg: KmsConfig) -> list:
    rc = rep_config(cfg)
    params = {"sl2_cutoff": cfg.sl2_cutoff, "cells": cfg.cells,
              "particle_cutoff": cfg.particle_cutoff}
    pr = probes(rc, max(cfg.particle_cutoff - 2, 0), seed=cfg.seed)
    els = generator_elements(rc.grid)
    out = []
    for name, rep in (("rep-pi", SwnFockRep(rc, 1)), ("rep-theta+", SwnFockRep(rc, 1, "theta")),
                      ("rep-theta-", SwnFockRep(rc, 2, "theta"))):
        out.append(_from_residual(check_brackets(rep, els, pr, name), REP_TOL, params))
        out.append(_from_residual(check_adjoints(rep, els, pr, name + "-adjoint"), REP_TOL, params))
    t0 = time.perf_counter()
    a, b = SwnFockRep(rc, 1), SwnFockRep(rc, 1, "theta")
    diff = max((a.element(x)(v) - b.element(x)(v)).norm() for x in els for v in pr)
    out.append(make_report("pi-equals-theta+", params, diff, REP_TOL, t0))
    out.append(_from_residual(check_theta_commute(rc, els, pr), REP_TOL, params))
    return out


def prop1_permutations(m: int) -> list:
    return [list(range(m))[::-1], [(k + 1) % m for k in range(m)]]


PROP2_EPSILONS = (0.1, 0.5)


def prop2_setup(cfg: KmsConfig):
    """Two cells on ``[-1, 1)``, no level padding, ``alpha = (-0.5, 1)``, ``psi = chi_[0,1)``."""
    g = Grid(1.0, 2)
    rc = RepConfig(g, build_gns(cfg.lam, cfg.sl2_cutoff, 0), AlgebraParams(cfg.gamma),
                   cfg.particle_cutoff)
    return rc, StepFunction(g, [-0.5, 1.0]), g.indicator(0.0, 1.0)


def verify_dynamics(cfg: KmsConfig) -> list:
    rc = rep_config(cfg)
    out = []
    for perm in prop1_permutations(cfg.cells):
        U = KLinearMap.permutation(rc.grid, perm)
        r = check_prop1(rc, U, seed=cfg.seed)
        out.append(_from_residual(r, PROP1_TOL, {"permutation": perm,
                                                 "sl2_cutoff": cfg.sl2_cutoff,
                                                 "cells": cfg.cells,
                                                 "particle_cutoff": cfg.particle_cutoff}))
    rc2, alpha, psi = prop2_setup(cfg)
    for eps in PROP2_EPSILONS:
        r = check_prop2(rc2, alpha, eps, psi, seed=cfg.seed)
        out.append(_from_residual(r, PROP2_TOL, {"sl2_cutoff": cfg.sl2_cutoff, "cells": 2,
                                                 "particle_cutoff": cfg.particle_cutoff}))
    rc4 = replace(rc2, cutoff=cfg.particle_cutoff + 2)
    r = check_prop2_generator(rc4, alpha, psi, seed=cfg.seed)
    out.append(_from_residual(r, PROP1_TOL, {"sl2_cutoff": cfg.sl2_cutoff, "cells": 2,
                                             "particle_cutoff": rc4.cutoff}))
    return out


# ---------------------------------------------------------------------------
# the state omega

def verify_kms(cfg: KmsConfig, n_positivity: int = 50) -> list:
    ev = StateEvaluator(cfg)
    out = state_values(cfg, ev)
    out += kms_suite(cfg, ev=ev)
    replay_words = [GeneratorWord(())] + generator_words(cfg.grid, max_length=1)
    out += [kms_proof_replay(ev, y) for y in replay_words]
    rng = np.random.default_rng(cfg.seed)
    out.append(positivity_check(ev, [random_word(cfg.grid, rng) for _ in range(n_positivity)]))
    return out


VERIFY = {"swn": verify_swn, "ccr": verify_ccr, "prop3": verify_prop3, "rep": verify_rep,
          "dynamics": verify_dynamics, "kms": verify_kms}
