import json

import numpy as np
import pytest
from hypothesis import given

from swnalg.kcell import (Grid, GridMismatchError, KLinearMap, StepFunction, conjugate, inner,
                          is_grid_aligned, is_hilbert_algebra_endomorphism, multiply,
                          pointwise_sup, shift_isometry, shift_isometry_domain)
from strategies import grid_and_functions


def test_grid_geometry():
    g = Grid(2.0, 4)
    assert g.h == 1.0
    assert list(g.edges) == [-2, -1, 0, 1, 2]
    assert g.cell_of(0.0) == 2
    assert np.array_equal(g.indicator(0.0, 2.0).coeffs, [0, 0, 1, 1])


@pytest.mark.parametrize("bad", [(0.0, 4), (2.0, 0), (-1.0, 2)])
def test_grid_rejects_bad_shapes(bad):
    with pytest.raises(ValueError):
        Grid(*bad)


def test_misaligned_indicator_raises():
    g = Grid(2.0, 4)
    with pytest.raises(ValueError):
        g.indicator(0.5, 1.0)
    with pytest.raises(ValueError):
        g.indicator(1.0, 1.0)
    assert is_grid_aligned(g, 1.0) and not is_grid_aligned(g, 0.25)


def test_indicator_integral_is_window_length():
    g = Grid(2.0, 8)
    assert g.indicator(-1.0, 1.5).integral() == pytest.approx(2.5)


def test_inner_matches_hand_value():
    g = Grid(1.0, 2)
    f = StepFunction(g, [1j, 2])
    h = StepFunction(g, [1, 1 + 1j])
    # h * (conj(1j) * 1 + 2 * (1 + 1j)) with h = 1
    assert inner(f, h) == pytest.approx(-1j + 2 + 2j)


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        Grid(1.0, 2).zero() + Grid(1.0, 3).zero()


@given(grid_and_functions())
def test_hilbert_algebra_compatibility(data):
    # <f, g h> = <conj(g) f, h>
    _, (f, g, h) = data
    assert inner(f, multiply(g, h)) == pytest.approx(inner(multiply(conjugate(g), f), h),
                                                     abs=1e-9)


@given(grid_and_functions())
def test_inner_is_hermitian_and_sesquilinear(data):
    _, (f, g, h) = data
    assert inner(f, g) == pytest.approx(np.conj(inner(g, f)), abs=1e-9)
    z = 0.3 - 1.2j
    assert inner(f.scale(z), g) == pytest.approx(np.conj(z) * inner(f, g), abs=1e-9)
    assert inner(f, g + h) == pytest.approx(inner(f, g) + inner(f, h), abs=1e-9)


@given(grid_and_functions(1))
def test_step_function_json_round_trip(data):
    _, (f,) = data
    back = StepFunction.from_json(json.loads(json.dumps(f.to_json())))
    assert back.grid == f.grid and np.array_equal(back.coeffs, f.coeffs)


def test_klinear_map_json_round_trip():
    g = Grid(2.0, 4)
    T = KLinearMap.permutation(g, [1, 0, 3, 2]).phase(g.constant(0.4))
    back = KLinearMap.from_json(json.loads(json.dumps(T.to_json())))
    assert np.array_equal(back.matrix, T.matrix) and back.grid_out == g


def test_permutation_sends_indicators():
    g = Grid(2.0, 4)
    T = KLinearMap.permutation(g, [2, 0, 3, 1])
    assert T(g.cell_indicator(0)).allclose(g.cell_indicator(2))
    with pytest.raises(ValueError):
        KLinearMap.permutation(g, [0, 0, 1, 2])


def test_permutation_is_endomorphism():
    g = Grid(2.0, 5)
    assert is_hilbert_algebra_endomorphism(KLinearMap.permutation(g, [4, 3, 2, 1, 0])).ok


def test_phased_map_is_not_real():
    g = Grid(2.0, 4)
    rep = is_hilbert_algebra_endomorphism(KLinearMap.identity(g).phase(g.constant(0.5)))
    assert not rep.star and rep.isometric


def test_scaled_identity_is_not_isometric():
    g = Grid(2.0, 4)
    rep = is_hilbert_algebra_endomorphism(KLinearMap.identity(g).scale(2.0))
    assert not rep.ok and not rep.isometric
    assert rep.isometric_violation == pytest.approx(3.0)


def test_rotation_is_not_multiplicative():
    g = Grid(1.0, 2)
    c, s = np.cos(0.7), np.sin(0.7)
    rep = is_hilbert_algebra_endomorphism(KLinearMap(np.array([[c, -s], [s, c]]), g))
    assert rep.isometric and rep.star and not rep.multiplicative


def test_shift_isometry_on_its_domain():
    g = Grid(3.0, 12)
    V = shift_isometry(g)
    dom = shift_isometry_domain(g)
    assert is_hilbert_algebra_endomorphism(V, domain=dom).ok
    # cells near the boundary are pushed off the grid, so the full map is not isometric
    assert not is_hilbert_algebra_endomorphism(V).isometric
    # chi_[0,1) goes to chi_[1,2)
    assert V(g.indicator(0.0, 1.0)).allclose(g.indicator(1.0, 2.0))
    assert V(g.indicator(-1.0, 0.0)).allclose(g.indicator(-2.0, -1.0))


def test_shift_needs_unit_boundaries():
    with pytest.raises(ValueError):
        shift_isometry(Grid(1.5, 2))


def test_pointwise_sup():
    g = Grid(1.0, 3)
    s = pointwise_sup([StepFunction(g, [1, -2, 0]), StepFunction(g, [0, 5, -1])])
    assert np.array_equal(s.coeffs.real, [1, 5, 0])
