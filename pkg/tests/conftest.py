import pytest
from hypothesis import strategies as st

from broodsim.core import GameParams


@pytest.fixture
def canon():
    return GameParams(2.0, 0.5, 0.5)


positive = st.floats(min_value=1e-3, max_value=3.0, allow_nan=False)


@st.composite
def game_params(draw):
    return GameParams(draw(positive), draw(positive), draw(positive))


@st.composite
def ne_params(draw):
    """Params in (0, 3]^3 with h - e - i > 0."""
    e = draw(st.floats(min_value=1e-3, max_value=1.4))
    i = draw(st.floats(min_value=1e-3, max_value=1.4))
    h = draw(st.floats(min_value=min(e + i + 1e-3, 3.0), max_value=3.0))
    return GameParams(h, e, i)


@st.composite
def interior_points(draw, lo=1e-3):
    a = draw(st.floats(min_value=lo, max_value=1.0))
    b = draw(st.floats(min_value=lo, max_value=1.0))
    c = draw(st.floats(min_value=lo, max_value=1.0))
    t = a + b + c
    return (a / t, b / t, c / t)
