"""Hypothesis strategies for ring elements and vector fields."""

from fractions import Fraction

from hypothesis import strategies as st

from btoric.b_calculus import BVectorField, CoeffElement, gauss


def small_q(chart, max_layer=2):
  Q = chart.Q
  pool = [(0,) * chart.k]
  for L in range(1, max_layer + 1):
    pool += sorted(Q.layer_elements_intrinsic(L))
  return pool


@st.composite
def elements(draw, chart, max_terms=3, max_layer=2, mu_zero=False, max_exp=2):
  qs = [(0,) * chart.k] if mu_zero else small_q(chart, max_layer)
  terms = []
  for _ in range(draw(st.integers(0, max_terms))):
    q = draw(st.sampled_from(qs))
    m = tuple(draw(st.integers(-1, 1)) for _ in range(chart.k))
    a = tuple(draw(st.integers(0, max_exp)) for _ in range(chart.free_rank))
    b = tuple(draw(st.integers(0, max_exp)) for _ in range(chart.free_rank))
    c = gauss((Fraction(draw(st.integers(-3, 3))), Fraction(draw(st.integers(-2, 2)))))
    terms.append(((q, m, a, b), c))
  return CoeffElement(chart, terms)


@st.composite
def fields(draw, chart, **kw):
  return BVectorField(chart, [draw(elements(chart, max_terms=2, **kw))
                              for _ in range(2 * chart.n)])
