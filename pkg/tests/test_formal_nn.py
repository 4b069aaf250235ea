import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from btoric import complex_structure as cs
from btoric import formal_nn as fn
from btoric import lattice_monoid as lm
from btoric.b_calculus import Chart, CoeffElement, I_UNIT, gauss
from btoric.errors import (DegreeOverflow, InvalidPresentation, NotClosed,
                           NotExact, NotIntegrable, PreconditionResidual)

from oracles import dbar_block_solve
from strategies import elements

N1 = lm.monoid([(1,)])
N2 = lm.monoid([(1, 0), (0, 1)])
CONE2 = lm.monoid([(1, 0), (1, 2), (1, 1)])
CONE3 = lm.monoid([(1, 0, 0), (0, 1, 1), (0, 1, 0), (1, 0, 1)])
STRATUM = Chart(N1, 2)  # n = 3, one θ-direction


def mu_amb(ch, v):
  return CoeffElement.mu(ch, ch.Q.to_intrinsic(v))


# ---------------------------------------------------------------------------
# jet ideals

def test_ideal_order_examples():
  ch = Chart(CONE2, 1)
  assert fn.ideal_order(CoeffElement.const(ch, 3)).order == 0
  assert fn.ideal_order(CoeffElement.zero(ch)).is_infinite
  assert fn.ideal_order(mu_amb(ch, (1, 1))).order == 1
  assert fn.ideal_order(mu_amb(ch, (2, 2))).order == 2
  assert fn.ideal_order(mu_amb(ch, (3, 4))).order == 3
  f = mu_amb(ch, (2, 1)) * CoeffElement.z(ch, 0) + mu_amb(ch, (4, 4))
  assert fn.ideal_order(f).order == 2
  assert fn.covector_order([mu_amb(ch, (4, 4)), mu_amb(ch, (1, 0))]) == 1


def test_layer_decomposition():
  ch = Chart(CONE2, 1)
  q11, q22 = CONE2.to_intrinsic((1, 1)), CONE2.to_intrinsic((2, 2))
  f = (mu_amb(ch, (1, 1)) * CoeffElement.zbar(ch, 0)
       + CoeffElement.holomorphic_monomial(ch, q22).scale(5) + CoeffElement.const(ch, 1))
  assert fn.layer_decomposition(f, 1) == {q11: CoeffElement.zbar(ch, 0)}
  assert fn.layer_decomposition(f, 2, shift_theta=True) == {q22: CoeffElement.const(ch, 5)}
  assert fn.layer_decomposition(f, 3) == {}


def test_layer_independence_cone_3d():
  ch = Chart(CONE3, 0)
  P = CONE3
  q1 = P.to_intrinsic((1, 1, 1))  # two factorisations, both of length 2
  terms = [(P.to_intrinsic(v), CoeffElement.const(ch, 1)) for v in [(1, 1, 1), (1, 1, 0), (2, 0, 1)]]
  assert fn.layer_independence_check(terms, 2)
  with pytest.raises(InvalidPresentation):
    one = CoeffElement.const(ch, 1)
    fn.layer_independence_check([(q1, one), (q1, one)], 2)
  with pytest.raises(InvalidPresentation):
    fn.layer_independence_check([(P.to_intrinsic((1, 0, 0)), CoeffElement.const(ch, 1))], 2)


# ---------------------------------------------------------------------------
# the stratum complex


def _zb(j):
  return CoeffElement.zbar(STRATUM, j)


def test_dbar_examples():
  ch = STRATUM
  e = CoeffElement.fourier(ch, (2,))
  d = fn.dbar_Sk(fn.StratumForm.function(e))
  assert d == fn.StratumForm(ch, 1, {(0,): e.scale(I_UNIT)})  # (i m/2) with m = 2
  d = fn.dbar_Sk(fn.StratumForm.function(_zb(0) * _zb(1)))
  assert d == fn.StratumForm(ch, 1, {(1,): _zb(1), (2,): _zb(0)})
  d = fn.dbar_Sk(fn.StratumForm(ch, 1, {(1,): _zb(1)}))
  assert d == fn.StratumForm(ch, 2, {(1, 2): CoeffElement.const(ch, -1)})
  assert fn.dbar_Sk(fn.StratumForm.function(CoeffElement.z(ch, 0))).is_zero()
  with pytest.raises(InvalidPresentation):
    fn.dbar_Sk(fn.StratumForm(ch, 3))
  with pytest.raises(InvalidPresentation):
    fn.StratumForm(ch, 1, {(0,): CoeffElement.mu(ch, (1,))})


@st.composite
def forms(draw, degree):
  from itertools import combinations
  comps = {}
  for idx in combinations(range(STRATUM.n), degree):
    if draw(st.booleans()):
      comps[idx] = draw(elements(STRATUM, max_terms=2, mu_zero=True))
  return fn.StratumForm(STRATUM, degree, comps)


@settings(max_examples=30)
@given(st.integers(0, 1).flatmap(forms))
def test_dbar_squared_vanishes(alpha):
  assert fn.dbar_Sk(fn.dbar_Sk(alpha)).is_zero()


@settings(max_examples=30)
@given(st.integers(1, 2).flatmap(forms))
def test_homotopy_identity(alpha):
  K, d, pi = fn.homotopy, fn.dbar_Sk, fn.harmonic_part
  lhs = d(K(alpha)) + (K(d(alpha)) if alpha.degree < STRATUM.n else fn.StratumForm.zero(STRATUM, alpha.degree))
  assert lhs == alpha - pi(alpha)


@settings(max_examples=30)
@given(forms(0))
def test_homotopy_identity_functions(f):
  assert fn.homotopy(fn.dbar_Sk(f)) == f - fn.harmonic_part(f)


def _to_oracle(beta):
  out = {}
  for idx, c in beta.components.items():
    comp = {}
    for (_, m, a, b), v in c.terms.items():
      comp[(m, a, b)] = sympy.Rational(v.x.numerator, v.x.denominator) + \
          sympy.I * sympy.Rational(v.y.numerator, v.y.denominator)
    out[idx] = comp
  return out


@settings(max_examples=15)
@given(st.integers(0, 1).flatmap(forms))
def test_poincare_solve_matches_linear_oracle(alpha):
  beta = fn.dbar_Sk(alpha - fn.harmonic_part(alpha))
  if beta.is_zero():
    return
  sol = fn.poincare_solve(beta)
  assert fn.dbar_Sk(sol) == beta
  assert dbar_block_solve(_to_oracle(beta), STRATUM.n, STRATUM.k, beta.degree - 1) is not None


def test_non_exact_closed_form_agrees_with_oracle():
  # constant dzbar_θ is closed; a primitive would be linear in θ
  beta = fn.StratumForm(STRATUM, 1, {(0,): CoeffElement.const(STRATUM, 1)})
  assert fn.closedness_defect(beta) is None
  with pytest.raises(NotExact):
    fn.poincare_solve(beta)
  assert dbar_block_solve(_to_oracle(beta), STRATUM.n, STRATUM.k, 0) is None


def test_not_closed_and_degree_cap():
  beta = fn.StratumForm(STRATUM, 1, {(0,): _zb(0)})
  with pytest.raises(NotClosed):
    fn.poincare_solve(beta)
  big = fn.dbar_Sk(fn.StratumForm.function(_zb(0) ** 5))
  with pytest.raises(DegreeOverflow):
    fn.poincare_solve(big, degree_cap=3)
  with pytest.raises(InvalidPresentation):
    fn.poincare_solve(fn.StratumForm.function(_zb(0)))


def test_covector_form_round_trip():
  ch = STRATUM
  alpha = fn.StratumForm(ch, 1, {(0,): _zb(0), (2,): CoeffElement.fourier(ch, (1,))})
  xi = fn.form_to_covector(alpha)
  assert fn.covector_to_form(xi) == alpha
  bad = list(xi)
  bad[0] = bad[0] + CoeffElement.const(ch, 1)
  with pytest.raises(PreconditionResidual):
    fn.covector_to_form(bad)


def test_stratum_holomorphy():
  ch = STRATUM
  assert fn.is_holomorphic_on_stratum(CoeffElement.z(ch, 1) * CoeffElement.z(ch, 0))
  assert not fn.is_holomorphic_on_stratum(CoeffElement.fourier(ch, (1,)))
  assert not fn.is_holomorphic_on_stratum(_zb(1))


# ---------------------------------------------------------------------------
# correction


def _pullback_n(N=4):
  ch = Chart(N1, 1)
  F = (CoeffElement.mu(ch, (1,)).scale(gauss((2, 1)))
       + CoeffElement.holomorphic_monomial(ch, (2,)) * CoeffElement.fourier(ch, (-1,)).scale(3))
  return ch, F, cs.pullback_structure(ch, [F])


def test_standard_structure_needs_no_correction():
  ch = Chart(CONE2, 1)
  fam, chart = fn.correct_to_order(cs.standard_structure(ch), None, 4)
  assert fam.g == {} and fam.h == {}
  assert all(v == math.inf for v in chart.residual_orders.values())


def test_pullback_recovers_substitution():
  ch, F, J = _pullback_n()
  N = 4
  fam, chart = fn.correct_to_order(J, None, N)
  assert chart.z[0] == CoeffElement.z(ch, 0) + F.truncate(N)
  assert all(v >= N for v in chart.residual_orders.values())
  for q, f in chart.holomorphic.items():
    assert cs.is_holomorphic(J, f) or fn.covector_order(cs.dbar(J, f)) >= N


def test_pullback_cone_2d_multiplicative():
  ch = Chart(CONE2, 1)
  q = CONE2.to_intrinsic
  F = (mu_amb(ch, (1, 1)).scale(gauss((2, 1)))
       + mu_amb(ch, (1, 0)) * CoeffElement.fourier(ch, q((0, 1))))
  J = cs.pullback_structure(ch, [F])
  N = 4
  fam, chart = fn.correct_to_order(J, None, N)
  assert all(v >= N for v in chart.residual_orders.values())
  h = chart.holomorphic
  for q1 in h:
    for q2 in h:
      s = tuple(x + y for x, y in zip(q1, q2))
      if s in h:
        assert (h[q1] * h[q2]).truncate(N) == h[s]


def test_log_seed_recovered():
  ch = Chart(N2, 1)
  # G_1 = 3 μ_(0,1) is not J_st-holomorphic, so the pulled-back structure differs
  G = [CoeffElement.mu(ch, (0, 1)).scale(3), CoeffElement.zero(ch)]
  J = cs.pullback_structure(ch, [CoeffElement.zero(ch)], G)
  assert J != cs.standard_structure(ch)
  N = 4
  fam, _ = fn.correct_to_order(J, None, N)
  # coefficient of μ_q e^{iθ_q}: 3 e^{-iθ_2}
  assert fam.g == {(1, (0, 1)): CoeffElement.fourier(ch, (0, -1)).scale(3)}
  # the same structure with the true seed needs no correction
  seed = fn.SeedChart(ch, G, [CoeffElement.z(ch, 0)])
  fam2, chart2 = fn.correct_to_order(J, seed, N)
  assert fam2.g == fam.g and all(v >= N for v in chart2.residual_orders.values())


def test_gauge_adds_holomorphic_term():
  ch, F, J = _pullback_n()
  gauge = {("h", 2, (1,)): CoeffElement.z(ch, 0).scale(7)}
  fam, chart = fn.correct_to_order(J, None, 4, gauge=gauge)
  base, _ = fn.correct_to_order(J, None, 4)
  assert fam.h[(2, (1,))] == base.h[(2, (1,))] + CoeffElement.z(ch, 0).scale(7)
  assert all(v >= 4 for v in chart.residual_orders.values())
  with pytest.raises(InvalidPresentation):
    fn.correct_to_order(J, None, 4, gauge={("h", 2, (1,)): CoeffElement.zbar(ch, 0)})
  with pytest.raises(DegreeOverflow):
    fn.correct_to_order(J, None, 3, degree_cap=1,
                        gauge={("h", 2, (1,)): CoeffElement.z(ch, 0) ** 2})


def test_twist_is_not_integrable():
  ch = Chart(N2, 0)
  J = cs.twisted_structure(ch, 0, 1, CoeffElement.mu(ch, (1, 1)))
  assert not cs.nijenhuis(J).is_zero
  with pytest.raises(NotIntegrable) as e:
    fn.correct_to_order(J, None, 4)
  assert e.value.witness["layer"] >= 1


def test_bad_seed():
  ch = Chart(N1, 1)
  J = cs.standard_structure(ch)
  with pytest.raises(PreconditionResidual):
    fn.correct_to_order(J, fn.SeedChart(ch, [CoeffElement.zero(ch)], [CoeffElement.zbar(ch, 0)]), 3)
  with pytest.raises(PreconditionResidual):
    fn.SeedChart(ch, [CoeffElement.const(ch, 1)], [CoeffElement.z(ch, 0)])
  with pytest.raises(InvalidPresentation):
    fn.correct_to_order(J, None, 0)


def test_deterministic_and_thread_independent():
  _, _, J = _pullback_n()
  a, ca = fn.correct_to_order(J, None, 4)
  b, cb = fn.correct_to_order(J, None, 4, threads=3)
  assert a.g == b.g and a.h == b.h and ca.holomorphic == cb.holomorphic
  assert repr(ca.z) == repr(fn.correct_to_order(J, None, 4)[1].z)


def test_exp_truncated():
  ch = Chart(N1, 0)
  m = CoeffElement.mu(ch, (1,))
  e = fn.exp_truncated(m, 4)
  want = CoeffElement.const(ch, 1) + m + (m * m).scale(gauss((Fraction(1, 2), 0))) + \
      (m * m * m).scale(gauss((Fraction(1, 6), 0)))
  assert e == want
  with pytest.raises(InvalidPresentation):
    fn.exp_truncated(CoeffElement.const(ch, 1), 3)
