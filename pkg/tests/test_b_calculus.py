import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from btoric import lattice_monoid as lm
from btoric.b_calculus import (BVectorField, Chart, CoeffElement, I_UNIT,
                               algebroid_bracket, b_differential, derive,
                               frame_derive, gauss, lie_bracket,
                               restrict_to_stratum)
from btoric.errors import (ChartMismatch, InvalidPresentation, NotInMonoid,
                           UnsupportedFace)

from strategies import elements, fields

N1 = lm.monoid([(1,)])
CONE2 = lm.monoid([(1, 0), (1, 2), (1, 1)])
CH_N = Chart(N1, 1)
CH_CONE2 = Chart(CONE2, 1)


def test_chart_basics():
  assert (CH_CONE2.k, CH_CONE2.n, CH_CONE2.dim) == (2, 3, 6)
  assert CH_CONE2.frame_labels() == ["v1", "v2", "v3", "w1", "w2", "w3"]
  P = lm.monoid([(1, 0), (0, 1), (0, -1)])
  ch = Chart.of(P)
  assert (ch.k, ch.free_rank) == (1, 1)
  with pytest.raises(InvalidPresentation):
    Chart(P, 0)


def test_keys_must_lie_in_monoid():
  with pytest.raises(NotInMonoid):
    CoeffElement.mu(CH_CONE2, (0, 1))
  with pytest.raises(InvalidPresentation):
    CoeffElement.monomial(CH_N, a=[-1])


def test_bracket_on_N():
  ch = Chart(N1, 0)
  mu = lambda j: CoeffElement.mu(ch, (j,))
  v = lambda f: BVectorField(ch, [f, CoeffElement.zero(ch)])
  assert lie_bracket(v(mu(1)), v(mu(2))) == v(mu(3))


def test_differential_of_holomorphic_monomial():
  f = CoeffElement.holomorphic_monomial(CH_CONE2, (1, 1))
  d = b_differential(f)
  assert d[0] == f and d[1] == f            # v'_a scales by q_a
  assert d[3] == f * I_UNIT and d[4] == f * I_UNIT
  assert d[2].is_zero() and d[5].is_zero()


def test_z_derivatives():
  z, zb = CoeffElement.z(CH_CONE2, 0), CoeffElement.zbar(CH_CONE2, 0)
  f = z * zb
  assert frame_derive(CH_CONE2, 2, f) == z + zb             # ∂x
  assert frame_derive(CH_CONE2, 5, f) == (zb - z) * I_UNIT  # ∂y


def test_order_and_truncate():
  f = CoeffElement.mu(CH_CONE2, (2, 2)) + CoeffElement.mu(CH_CONE2, (1, 0)) * CoeffElement.z(CH_CONE2, 0)
  assert f.order() == 1
  assert CoeffElement.mu(CH_CONE2, (2, 2)).order() == 2
  assert CoeffElement.zero(CH_CONE2).order() == math.inf
  assert f.truncate(2) == CoeffElement.mu(CH_CONE2, (1, 0)) * CoeffElement.z(CH_CONE2, 0)
  assert f.restrict().is_zero()


def test_conjugation():
  f = CoeffElement.holomorphic_monomial(CH_CONE2, (1, 2)) * CoeffElement.z(CH_CONE2, 0)
  g = f.conjugate()
  assert g.conjugate() == f
  assert (f * g).is_real() and (f + g).is_real() and not f.is_real()


def test_exact_and_float_evaluation_agree():
  rng_t = Fraction(3, 2)
  f = (CoeffElement.holomorphic_monomial(CH_N, (2,)) * CoeffElement.zbar(CH_N, 0)
       + CoeffElement.const(CH_N, gauss((1, 2))))
  u = gauss((Fraction(3, 5), Fraction(4, 5)))
  z = gauss((Fraction(1), Fraction(-2)))
  exact = f.evaluate({(2,): rng_t ** 2, (0,): 1}, [u], [z])
  theta = math.atan2(0.8, 0.6)
  flt = f.evaluate_float([math.log(1.5)], [theta], [1.0], [-2.0])
  assert abs(complex(float(exact.x), float(exact.y)) - flt) < 1e-12


def test_stratum_restriction():
  from btoric.lattice_monoid import face_of
  v = BVectorField.frame(CH_CONE2, 0) * CoeffElement.mu(CH_CONE2, (1, 0))
  assert restrict_to_stratum(v).is_zero()
  with pytest.raises(UnsupportedFace):
    restrict_to_stratum(v, face_of(CONE2, {0}))
  # flat normal directions bracket trivially on the stratum
  n = BVectorField.frame(CH_CONE2, 0).restrict()
  for i in range(6):
    assert algebroid_bracket(n, BVectorField.frame(CH_CONE2, i).restrict()).is_zero()


def test_chart_mismatch():
  with pytest.raises(ChartMismatch):
    CoeffElement.const(CH_N) + CoeffElement.const(CH_CONE2)


def _coord_derivative(f, i, u, h=1e-6):
  chart = f.chart
  n, k = chart.n, chart.k

  def ev(u):
    return f.evaluate_float(u[:k], u[n:n + k], u[k:n], u[n + k:])

  up = list(u)
  um = list(u)
  up[i] += h
  um[i] -= h
  return (ev(up) - ev(um)) / (2 * h)


@settings(max_examples=25)
@given(elements(CH_CONE2), st.integers(0, 5), st.lists(st.floats(-0.5, 0.5), min_size=6, max_size=6))
def test_frame_derivation_is_coordinate_derivative(f, i, u):
  chart = f.chart
  n, k = chart.n, chart.k
  d = frame_derive(chart, i, f)
  got = d.evaluate_float(u[:k], u[n:n + k], u[k:n], u[n + k:])
  want = _coord_derivative(f, i, u)
  assert abs(got - want) < 1e-5 * max(1.0, abs(want))


@given(elements(CH_CONE2), elements(CH_CONE2), elements(CH_CONE2))
def test_ring_axioms(f, g, h):
  assert f * g == g * f
  assert (f * g) * h == f * (g * h)
  assert f * (g + h) == f * g + f * h
  assert (f * g).conjugate() == f.conjugate() * g.conjugate()
  assert (f - f).is_zero()
  assert (f * g).order() >= f.order() + g.order() or (f * g).is_zero()


@given(fields(CH_N), elements(CH_N), elements(CH_N))
def test_leibniz(X, f, g):
  assert derive(X, f * g) == derive(X, f) * g + f * derive(X, g)


@given(fields(CH_N), fields(CH_N), elements(CH_N))
def test_bracket_is_commutator(X, Y, f):
  assert derive(lie_bracket(X, Y), f) == derive(X, derive(Y, f)) - derive(Y, derive(X, f))


@settings(max_examples=25)
@given(fields(CH_N), fields(CH_N), fields(CH_N))
def test_jacobi(X, Y, Z):
  jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) \
      + lie_bracket(Z, lie_bracket(X, Y))
  assert jac.is_zero()
  assert lie_bracket(X, Y) == -lie_bracket(Y, X)


@given(fields(CH_CONE2), elements(CH_CONE2))
def test_bracket_preserves_ideal_order(X, f):
  # vector fields of the b-tangent bundle preserve every I^N
  assert derive(X, f).order() >= f.order()
