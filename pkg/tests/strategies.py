from __future__ import annotations

from hypothesis import strategies as st

from fraccur.grid import CubicalChain


@st.composite
def cubical_chains(draw, d=None, m=None, max_faces: int = 8, level=None, span: int = 4):
    d = draw(st.integers(1, 3)) if d is None else d
    m = draw(st.integers(0, d)) if m is None else m
    level = draw(st.integers(0, 3)) if level is None else level
    n = draw(st.integers(1, max_faces))
    terms = {}
    for _ in range(n):
        base = tuple(draw(st.integers(-span, span)) for _ in range(d))
        axes = tuple(sorted(draw(st.permutations(range(d)))[:m]))
        terms[(base, axes)] = float(draw(st.integers(-3, 3)))
    return CubicalChain(d, m, level, terms)
