import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swnalg import fock
from swnalg.fock import CutoffError, SparseState
from swnalg.suites import ladder_model


def rand_vec(rng, d):
    return rng.normal(size=d) + 1j * rng.normal(size=d)


def test_basis_labels_and_norms():
    s = SparseState({(3, 0, 0): 2.0, (): 1j}, cutoff=3)
    assert (0, 0, 3) in s.amps
    assert s.norm() == pytest.approx(math.sqrt(5))
    assert s.particle_numbers() == {0, 3}
    with pytest.raises(CutoffError):
        SparseState({(0, 1, 2): 1.0}, cutoff=2)


def test_creation_normalization():
    # a+_0 a+_0 Omega = sqrt(2) |(0, 0)>
    a0 = fock.creation({0: 1.0})
    s = a0(a0(fock.vacuum(3)))
    assert s.amps == {(0, 0): pytest.approx(math.sqrt(2))}


def test_creation_truncates_at_cutoff():
    a = fock.creation({0: 1.0})
    s = a(a(fock.vacuum(1)))
    assert s.amps == {}


def test_annihilation_is_antilinear():
    v = fock.creation({0: 1.0})(fock.vacuum(2))
    assert fock.annihilation({0: 1j})(v).vacuum_amplitude() == pytest.approx(-1j)


def test_exponential_vector_inner_products():
    rng = np.random.default_rng(0)
    d, P = 3, 6
    f, g = 0.4 * rand_vec(rng, d), 0.4 * rand_vec(rng, d)
    z = np.vdot(f, g)
    expected = sum(z ** k / math.factorial(k) for k in range(P + 1))
    assert fock.exp_vector(f, P).inner(fock.exp_vector(g, P)) == pytest.approx(expected)


@pytest.mark.parametrize("d,P", [(2, 3), (4, 4), (6, 4)])
def test_dense_cross_check_against_ladder_model(d, P):
    rng = np.random.default_rng(d + P)
    keys, a = ladder_model(d, P)
    basis = fock.fock_basis(d, P)
    assert sorted(keys) == sorted(basis)
    perm = np.array([keys.index(k) for k in basis])
    xi = rand_vec(rng, d)
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    ad = [m.T.conj() for m in a]
    cre = sum(xi[i] * ad[i] for i in range(d)).toarray()[np.ix_(perm, perm)]
    ann = sum(np.conj(xi[i]) * a[i] for i in range(d)).toarray()[np.ix_(perm, perm)]
    con = sum(X[i, j] * (ad[i] @ a[j]) for i in range(d) for j in range(d)).toarray()
    con = con[np.ix_(perm, perm)]
    assert np.allclose(fock.densify(fock.creation(xi), basis, P), cre, atol=1e-13)
    assert np.allclose(fock.densify(fock.annihilation(xi), basis, P), ann, atol=1e-13)
    assert np.allclose(fock.densify(fock.conservation(X), basis, P), con, atol=1e-13)


@given(st.integers(0, 10_000), st.sampled_from(["creation", "annihilation", "conservation"]))
def test_adjoint_rules_are_adjoints(seed, kind):
    rng = np.random.default_rng(seed)
    d, P = 4, 4
    xi = rand_vec(rng, d)
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    op = {"creation": fock.creation(xi), "annihilation": fock.annihilation(xi),
          "conservation": fock.conservation(X)}[kind]
    u = fock.random_state(rng, d, int(rng.integers(0, 4)), P)
    v = fock.random_state(rng, d, int(rng.integers(0, 4)), P)
    assert u.inner(op(v)) == pytest.approx(op.adjoint()(u).inner(v), abs=1e-10)


@given(st.integers(0, 10_000), st.integers(0, 2))
def test_ccr_on_probes(seed, particles):
    rng = np.random.default_rng(seed)
    d = 5
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Y = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    probe = fock.random_state(rng, d, particles, 4)
    rep = fock.check_ccr(rand_vec(rng, d), rand_vec(rng, d), X, Y, probe)
    assert rep.max_residual < 1e-10, rep.residuals


def test_ccr_probe_must_leave_two_levels():
    rng = np.random.default_rng(0)
    with pytest.raises(CutoffError):
        fock.check_ccr([1, 0], [0, 1], np.eye(2), np.eye(2), fock.random_state(rng, 2, 3, 4))


def test_second_quantization_on_exponential_vectors():
    rng = np.random.default_rng(1)
    d, P = 4, 5
    U, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    f = 0.5 * rand_vec(rng, d)
    G = fock.second_quantization(U)
    diff = G(fock.exp_vector(f, P)) - fock.exp_vector(U @ f, P)
    assert diff.norm() < 1e-12
    v = fock.random_state(rng, d, 3, P)
    assert G(v).norm() == pytest.approx(1.0)
    assert (G.adjoint()(G(v)) - v).norm() < 1e-12


def test_second_quantization_rejects_non_unitary():
    with pytest.raises(ValueError):
        fock.second_quantization(2 * np.eye(3))


def test_operator_algebra():
    rng = np.random.default_rng(2)
    d, P = 3, 3
    A = fock.creation(rand_vec(rng, d))
    B = fock.annihilation(rand_vec(rng, d))
    v = fock.random_state(rng, d, 1, P)
    assert ((A + B)(v) - (A(v) + B(v))).norm() < 1e-14
    assert ((A * B)(v) - A(B(v))).norm() < 1e-14
    assert ((2j * A)(v) - A(v).scale(2j)).norm() < 1e-14
    assert (fock.identity()(v) - v).norm() == 0


def test_dense_round_trip():
    rng = np.random.default_rng(3)
    basis = fock.fock_basis(3, 3)
    v = fock.random_state(rng, 3, 2, 3)
    assert (fock.from_dense(fock.to_dense(v, basis), basis, 3) - v).norm() < 1e-15
    assert len(basis) == math.comb(3 + 3, 3)
