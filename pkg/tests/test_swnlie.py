import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swnalg.kcell import Grid, KLinearMap, StepFunction, shift_isometry, shift_isometry_domain
from swnalg.suites import (INVALID_FAMILIES, invalid_family, oracle_first_failure, valid_family)
from swnalg.swnlie import (AlgebraParams, FailureReason, GeneratorWord, Kind, Letter,
                           QuasifreePair, SwnElement, apply_quasifree, classify_quasifree,
                           commutator, compose, decompose, identity_pair, involution,
                           tau_analytic_factor, tau_group, word)
from strategies import complexes, grid_and_elements

P1 = AlgebraParams(1.0)


def br(x, y, p=P1):
    return commutator(x, y, p)


# -- hand-computed brackets -----------------------------------------------------------

G2 = Grid(1.0, 2)
PHI = StepFunction(G2, [1.0, 2j])
PSI = StepFunction(G2, [3.0, 1.0])


def test_b_bplus_bracket_by_hand():
    # gamma <phi, psi> = 2.5 * (1 * 3 + conj(2j) * 1) with h = 1
    out = br(SwnElement.b(PHI), SwnElement.bplus(PSI), AlgebraParams(2.5))
    assert out.c0 == pytest.approx(2.5 * (3 - 2j))
    assert np.allclose(out.f_n.coeffs, [3.0, -2j])
    assert out.f_b.is_zero() and out.f_bplus.is_zero()


def test_n_b_and_n_bplus_brackets_by_hand():
    out = br(SwnElement.n(PHI), SwnElement.b(PSI))
    assert np.allclose(out.f_b.coeffs, [-6.0, 4j])      # -2 conj(phi) psi
    out = br(SwnElement.n(PHI), SwnElement.bplus(PSI))
    assert np.allclose(out.f_bplus.coeffs, [6.0, 4j])   # 2 phi psi
    assert out.c0 == 0


@pytest.mark.parametrize("make", [SwnElement.b, SwnElement.bplus, SwnElement.n])
def test_like_generators_commute(make):
    assert br(make(PHI), make(PSI)).max_abs() == 0


def test_identity_is_central():
    one = SwnElement.one(G2)
    for x in (SwnElement.b(PHI), SwnElement.bplus(PSI), SwnElement.n(PHI)):
        assert br(one, x).max_abs() == 0


def test_b_is_antilinear():
    z = 1 + 2j
    assert SwnElement.b(PHI).scale(z).allclose(SwnElement.b(PHI.scale(np.conj(z))))
    assert SwnElement.bplus(PHI).scale(z).allclose(SwnElement.bplus(PHI.scale(z)))


def test_involution_by_hand():
    x = SwnElement(1j, PHI, PSI, PHI)
    y = involution(x)
    assert y.c0 == -1j
    assert y.f_b.allclose(PSI) and y.f_bplus.allclose(PHI)
    assert y.f_n.allclose(PHI.conj())


def test_gamma_must_be_positive():
    with pytest.raises(ValueError):
        AlgebraParams(0.0)


# -- structural properties --------------------------------------------------------------

@given(grid_and_elements(2), st.floats(0.1, 3))
def test_antisymmetry(data, gamma):
    _, (x, y) = data
    p = AlgebraParams(gamma)
    assert (br(x, y, p) + br(y, x, p)).max_abs() < 1e-10


@given(grid_and_elements(3))
def test_jacobi(data):
    _, (x, y, z) = data
    jac = br(x, br(y, z)) + br(y, br(z, x)) + br(z, br(x, y))
    assert jac.max_abs() < 1e-9


@given(grid_and_elements(2))
def test_star_compatibility(data):
    _, (x, y) = data
    assert (involution(br(x, y)) - br(involution(y), involution(x))).max_abs() < 1e-10


@given(grid_and_elements(2), complexes)
def test_bracket_is_bilinear_in_the_complex_sense(data, z):
    _, (x, y) = data
    assert (br(x.scale(z), y) - br(x, y).scale(z)).max_abs() < 1e-9


@given(grid_and_elements(1))
def test_involution_is_involutive(data):
    _, (x,) = data
    assert involution(involution(x)).allclose(x)


@given(grid_and_elements(1))
def test_element_json_round_trip(data):
    _, (x,) = data
    assert SwnElement.from_json(json.loads(json.dumps(x.to_json()))).allclose(x, 0)


def test_word_json_round_trip_and_star():
    w = word(Letter(Kind.B, PHI, 2j), Letter(Kind.N, PSI), Letter(Kind.BPLUS, PSI))
    back = GeneratorWord.from_json(json.loads(json.dumps(w.to_json())))
    assert [l.kind for l in back] == [Kind.B, Kind.N, Kind.BPLUS]
    assert back.letters[0].scalar == 2j
    s = w.star()
    assert [l.kind for l in s] == [Kind.B, Kind.N, Kind.BPLUS]
    assert s.letters[2].scalar == -2j
    assert len(w * s) == 6 and w.count(Kind.N) == 1


def test_word_max_length():
    with pytest.raises(ValueError):
        GeneratorWord((Letter(Kind.B, PHI),) * 3, max_length=2)


# -- quasifree maps ------------------------------------------------------------------------

def lift3(T1, T2, T3, x):
    return SwnElement(x.c0, T1(x.f_b), T2(x.f_bplus), T3(x.f_n))


def preserves_relations(T1, T2, T3, domain=None, p=P1, tol=1e-9) -> bool:
    """Brute force: the generator map keeps every bracket and the involution on cell generators."""
    g = T3.grid_in
    cells = range(g.cells) if domain is None else np.flatnonzero(domain)
    gens = []
    for k in cells:
        for f in (g.cell_indicator(k), g.cell_indicator(k).scale(1j)):
            gens += [SwnElement.b(f), SwnElement.bplus(f), SwnElement.n(f)]
    for x in gens:
        if (lift3(T1, T2, T3, involution(x)) - involution(lift3(T1, T2, T3, x))).max_abs() > tol:
            return False
        for y in gens:
            lhs = lift3(T1, T2, T3, br(x, y))
            rhs = br(lift3(T1, T2, T3, x), lift3(T1, T2, T3, y))
            if (lhs - rhs).max_abs() > tol:
                return False
    return True


def test_classifier_recovers_valid_pairs():
    rng = np.random.default_rng(1)
    for T1, T2, T3, T, a in valid_family(rng, 30):
        res = classify_quasifree(T1, T2, T3)
        assert res, res
        assert np.allclose(res.T.matrix, T.matrix, atol=1e-12)
        assert np.allclose(np.exp(1j * res.alpha.coeffs), np.exp(1j * a.coeffs), atol=1e-10)


def test_classifier_matches_independent_oracle_on_invalid_triples():
    rng = np.random.default_rng(2)
    orng = np.random.default_rng(3)
    seen = set()
    for fam, T1, T2, T3 in invalid_family(rng, 40):
        res = classify_quasifree(T1, T2, T3)
        assert not res
        assert res.reason == oracle_first_failure(T1, T2, T3, orng)
        seen.add((fam, res.reason))
    assert (("T1_ne_T2", FailureReason.T1_NE_T2) in seen
            and ("broken_multiplicativity", FailureReason.NOT_ENDOMORPHISM) in seen
            and ("modulus_mismatch", FailureReason.MODULUS_MISMATCH) in seen)
    assert {f for f, _ in seen} == set(INVALID_FAMILIES)


def test_oracle_accepts_valid_triples():
    rng = np.random.default_rng(4)
    for T1, T2, T3, _, _ in valid_family(rng, 10):
        assert oracle_first_failure(T1, T2, T3, rng) is None


def test_classifier_agrees_with_relation_preservation():
    rng = np.random.default_rng(5)
    for T1, T2, T3, _, _ in valid_family(rng, 8):
        assert classify_quasifree(T1, T2, T3) and preserves_relations(T1, T2, T3)
    for _, T1, T2, T3 in invalid_family(rng, 12):
        assert not classify_quasifree(T1, T2, T3)
        assert not preserves_relations(T1, T2, T3)


def test_truncated_shift_is_quasifree_on_its_domain():
    g = Grid(3.0, 6)
    V = shift_isometry(g)
    dom = shift_isometry_domain(g)
    a = StepFunction(g, np.linspace(0, 2, 6))
    VA = V.phase(a)
    res = classify_quasifree(VA, VA, V, domain=dom)
    assert res
    assert preserves_relations(VA, VA, V, domain=dom)
    # without the domain restriction the cells pushed off the grid break isometry
    assert classify_quasifree(VA, VA, V).reason == FailureReason.NOT_ENDOMORPHISM


def test_inconsistent_phase_gets_the_modulus_reason_on_a_grid():
    # a leak into a foreign image cell changes |T1 f|^2 before any phase test sees it
    g = Grid(1.0, 2)
    T3 = KLinearMap.identity(g)
    T1 = KLinearMap(np.array([[1.0, 0.3j], [0.0, 1.0]]), g)
    res = classify_quasifree(T1, T1, T3)
    assert res.reason == FailureReason.MODULUS_MISMATCH


def test_apply_quasifree_is_a_homomorphism():
    rng = np.random.default_rng(6)
    g = Grid(2.0, 4)
    pair = QuasifreePair(KLinearMap.permutation(g, [2, 3, 1, 0]),
                         StepFunction(g, rng.uniform(-3, 3, 4)))
    from swnalg.swnlie import random_element
    for _ in range(10):
        x, y = random_element(g, rng), random_element(g, rng)
        lhs = apply_quasifree(pair, br(x, y))
        rhs = br(apply_quasifree(pair, x), apply_quasifree(pair, y))
        assert (lhs - rhs).max_abs() < 1e-10
        assert (apply_quasifree(pair, involution(x))
                - involution(apply_quasifree(pair, x))).max_abs() < 1e-12


def test_apply_on_letters_and_words():
    g = Grid(2.0, 4)
    pair = QuasifreePair(KLinearMap.permutation(g, [1, 0, 3, 2]), g.constant(0.5))
    f = g.cell_indicator(0)
    w = apply_quasifree(pair, word(Letter(Kind.B, f), Letter(Kind.N, f)))
    assert w.letters[0].arg.allclose(g.cell_indicator(1).scale(np.exp(0.5j)))
    assert w.letters[1].arg.allclose(g.cell_indicator(1))


def test_decomposition_order():
    g = Grid(2.0, 4)
    rng = np.random.default_rng(7)
    pair = QuasifreePair(KLinearMap.permutation(g, [3, 0, 1, 2]),
                         StepFunction(g, rng.uniform(-3, 3, 4)))
    A, B = decompose(pair)
    assert np.allclose(A.alpha.coeffs, 0) and np.allclose(B.T.matrix, np.eye(4))
    from swnalg.swnlie import random_element
    x = random_element(g, rng)
    assert apply_quasifree(pair, x).allclose(apply_quasifree(B, apply_quasifree(A, x)))
    both = compose(B, A)
    assert np.allclose(both.T0.matrix, pair.T0.matrix)


def test_tau_group_is_a_one_parameter_group():
    g = Grid(2.0, 4)
    for s, t in [(0.3, -1.1), (2.0, 0.5)]:
        st_pair = compose(tau_group(0.5, s, g), tau_group(0.5, t, g))
        assert np.allclose(st_pair.T0.matrix, tau_group(0.5, s + t, g).T0.matrix)
    zero = tau_group(0.5, 0.0, g)
    assert np.allclose(zero.T0.matrix, identity_pair(g).T0.matrix)
    # b+ picks up lam^{it}: the phase slot is t log(lam)
    f = g.cell_indicator(2)
    x = apply_quasifree(tau_group(0.5, 1.0, g), SwnElement.bplus(f))
    assert x.f_bplus.allclose(f.scale(0.5 ** 1j))


def test_tau_analytic_factor():
    g = Grid(2.0, 4)
    f = g.cell_indicator(2)
    w = word(Letter(Kind.BPLUS, f), Letter(Kind.BPLUS, f), Letter(Kind.B, f), Letter(Kind.N, f))
    assert tau_analytic_factor(w, 0.5) == pytest.approx(0.5)
    assert tau_analytic_factor(GeneratorWord(()), 0.3) == 1
    with pytest.raises(ValueError):
        tau_analytic_factor(w, 1.5)


def test_pair_rejects_complex_phase():
    g = Grid(1.0, 2)
    with pytest.raises(ValueError):
        QuasifreePair(KLinearMap.identity(g), g.constant(1j))
