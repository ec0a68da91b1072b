"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from swnalg.kcell import Grid, StepFunction
from swnalg.swnlie import SwnElement

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
grids = st.builds(Grid, st.sampled_from([1.0, 2.0]), st.integers(1, 6))


def step_functions(grid):
    return st.lists(complexes, min_size=grid.cells, max_size=grid.cells).map(
        lambda c: StepFunction(grid, np.array(c)))


def elements(grid):
    return st.builds(SwnElement, complexes, step_functions(grid), step_functions(grid),
                     step_functions(grid))


@st.composite
def grid_and_elements(draw, n=3):
    g = draw(grids)
    return g, [draw(elements(g)) for _ in range(n)]


@st.composite
def grid_and_functions(draw, n=3):
    g = draw(grids)
    return g, [draw(step_functions(g)) for _ in range(n)]
