"""b-almost complex structures on a standard chart.

J is a 2n × 2n matrix M over the coefficient ring acting on the frame by
J(E_j) = Σ_i M[i][j] E_i, with E = (v'_1..v'_n, w'_1..w'_n).  Covectors are
2n-tuples of frame components and J acts on them by the transpose,
(J^*ξ)_j = Σ_i M[i][j] ξ_i.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from . import _linalg as la
from .b_calculus import (HALF, I_UNIT, ONE, ZERO, BVectorField, Chart,
                         CoeffElement, StratumAlgebroidElement,
                         algebroid_bracket, b_differential, conj, derive,
                         gauss, lie_bracket)
from .errors import (InvalidPoint, InvalidPresentation, NotAlmostComplex,
                     TransversalityViolation)
from .lattice_monoid import enumerate_faces
from .model_space import ModelPoint, eval_lambda, random_point, support_face

Matrix = list  # list of rows of CoeffElement


# ---------------------------------------------------------------------------
# matrices over the ring


def mat_identity(chart: Chart, scale=1) -> Matrix:
  N = 2 * chart.n
  z = CoeffElement.zero(chart)
  return [[CoeffElement.const(chart, scale) if i == j else z for j in range(N)]
          for i in range(N)]


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
  N = len(A)
  out = []
  for i in range(N):
    row = []
    for j in range(len(B[0])):
      acc = None
      for t in range(len(B)):
        a, b = A[i][t], B[t][j]
        if a.terms and b.terms:
          acc = a * b if acc is None else acc + a * b
      row.append(acc if acc is not None else CoeffElement.zero(A[0][0].chart))
    out.append(row)
  return out


def mat_add(A: Matrix, B: Matrix) -> Matrix:
  return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A: Matrix, c) -> Matrix:
  return [[a.scale(c) for a in r] for r in A]


def mat_is_zero(A: Matrix) -> bool:
  return all(a.is_zero() for r in A for a in r)


class BACS:
  """A b-almost complex structure on a chart."""

  def __init__(self, chart: Chart, matrix: Sequence[Sequence], *, check: bool = True):
    N = 2 * chart.n
    if len(matrix) != N or any(len(r) != N for r in matrix):
      raise InvalidPresentation(f"J must be a {N}x{N} matrix")
    self.chart = chart
    self.matrix = [[e if isinstance(e, CoeffElement) else CoeffElement.const(chart, e)
                    for e in row] for row in matrix]
    if check:
      self.validate()

  def validate(self):
    sq = mat_mul(self.matrix, self.matrix)
    N = 2 * self.chart.n
    for i in range(N):
      for j in range(N):
        want = CoeffElement.const(self.chart, -1 if i == j else 0)
        if sq[i][j] != want:
          raise NotAlmostComplex(f"J^2 differs from -id at entry ({i + 1},{j + 1})",
                                 {"entry": (i + 1, j + 1), "value": repr(sq[i][j])})
    for i in range(N):
      for j in range(N):
        if not self.matrix[i][j].is_real():
          raise NotAlmostComplex(f"J entry ({i + 1},{j + 1}) is not real",
                                 {"entry": (i + 1, j + 1)})

  def square(self) -> Matrix:
    return mat_mul(self.matrix, self.matrix)

  def apply(self, v: BVectorField) -> BVectorField:
    N = 2 * self.chart.n
    comps = []
    for i in range(N):
      acc = CoeffElement.zero(self.chart)
      for j in range(N):
        if self.matrix[i][j].terms and v.comps[j].terms:
          acc = acc + self.matrix[i][j] * v.comps[j]
      comps.append(acc)
    return BVectorField(self.chart, comps)

  def apply_stratum(self, v: StratumAlgebroidElement) -> StratumAlgebroidElement:
    return self.apply(v.as_field()).restrict()

  def dual_apply(self, xi: Sequence[CoeffElement]) -> tuple[CoeffElement, ...]:
    """J^* on a covector given by frame components."""
    N = 2 * self.chart.n
    out = []
    for j in range(N):
      acc = CoeffElement.zero(self.chart)
      for i in range(N):
        if self.matrix[i][j].terms and xi[i].terms:
          acc = acc + self.matrix[i][j] * xi[i]
      out.append(acc)
    return tuple(out)

  def restrict(self) -> Matrix:
    return [[e.restrict() for e in r] for r in self.matrix]

  def deviation_order(self, other: "BACS"):
    """Order of vanishing of J - J' along the vertex stratum."""
    import math
    return min((a - b).order() for ra, rb in zip(self.matrix, other.matrix)
               for a, b in zip(ra, rb)) if self.matrix else math.inf

  def __eq__(self, other):
    return isinstance(other, BACS) and self.chart == other.chart and \
        self.matrix == other.matrix

  def __repr__(self):
    return f"BACS({self.chart}, {self.matrix})"


def standard_structure(chart: Chart) -> BACS:
  """J(v'_a) = w'_a and J(w'_a) = -v'_a."""
  n = chart.n
  z = CoeffElement.zero(chart)
  M = [[z] * (2 * n) for _ in range(2 * n)]
  for a in range(n):
    M[n + a][a] = CoeffElement.const(chart, 1)
    M[a][n + a] = CoeffElement.const(chart, -1)
  return BACS(chart, M, check=False)


def conjugated_structure(J: BACS, A: Matrix, A_inv: Matrix) -> BACS:
  """A J A^{-1}; A must be invertible over the ring with inverse A_inv."""
  prod = mat_mul(A, A_inv)
  if prod != mat_identity(J.chart):
    raise InvalidPresentation("A_inv is not the inverse of A")
  return BACS(J.chart, mat_mul(mat_mul(A, J.matrix), A_inv))


def twisted_structure(chart: Chart, source: int, target: int,
                      g: CoeffElement) -> BACS:
  """Conjugate J_st by I + N with N(w'_source) = g·v'_target (source != target).

  Then J(v'_s) = w'_s + g v'_t and J(w'_s) = -v'_s - g w'_t.  The structure
  is integrable only in degenerate cases; its Nijenhuis tensor satisfies
  N(v'_s, v'_t) = -v'_t(g) w'_t + (terms of order 2 in g).
  """
  if source == target:
    raise InvalidPresentation("twist needs distinct source and target")
  n = chart.n
  A = mat_identity(chart)
  A_inv = mat_identity(chart)
  A[target][n + source] = g
  A_inv[target][n + source] = -g
  return conjugated_structure(standard_structure(chart), A, A_inv)


def holomorphic_covectors(chart: Chart, subs: Sequence[CoeffElement],
                          log_subs: Sequence[CoeffElement] | None = None):
  """Rows d(log μ_a + iθ_a + G_a) and d(z_j + F_j) for the substitution."""
  n, k = chart.n, chart.k
  one = CoeffElement.const(chart, 1)
  iunit = CoeffElement.const(chart, I_UNIT)
  z = CoeffElement.zero(chart)
  rows = []
  for a in range(k):
    r = [z] * (2 * n)
    r[a] = one
    r[n + a] = iunit
    if log_subs is not None:
      r = [x + y for x, y in zip(r, b_differential(log_subs[a]))]
    rows.append(r)
  for j in range(chart.free_rank):
    r = [z] * (2 * n)
    r[k + j] = one
    r[n + k + j] = iunit
    dF = b_differential(subs[j])
    rows.append([x + y for x, y in zip(r, dF)])
  return rows


def pullback_structure(chart: Chart, subs: Sequence[CoeffElement],
                       log_subs: Sequence[CoeffElement] | None = None,
                       max_terms: int = 64) -> BACS:
  """The structure for which μ_q e^{iθ_q} e^{<q, G>} and z_j + F_j are holomorphic.

  This is the pullback of J_st by the substitution z_j -> z_j + F_j,
  log μ_a + iθ_a -> log μ_a + iθ_a + G_a.  Each F_j must be independent of z
  and zbar; the Jacobian inverse is computed as a series that must terminate
  (e.g. G_a depending only on later θ/μ directions).
  """
  if len(subs) != chart.free_rank:
    raise InvalidPresentation(f"expected {chart.free_rank} substitutions")
  if log_subs is not None and len(log_subs) != chart.k:
    raise InvalidPresentation(f"expected {chart.k} log substitutions")
  for F in subs:
    if any(any(key[2]) or any(key[3]) for key in F.terms):
      raise InvalidPresentation("substitutions must not depend on z or zbar")
  n = chart.n
  top = holomorphic_covectors(chart, subs, log_subs)
  Lam = top + [[c.conjugate() for c in r] for r in top]
  # Lam = Lam0 + E with Lam0 constant
  Lam0 = [[e.restrict() for e in r] for r in Lam]
  Lam0c = [[_constant_value(e) for e in r] for r in Lam0]
  dm = DomainMatrix([[QQ_I.convert(x) for x in r] for r in Lam0c], (2 * n, 2 * n), QQ_I)
  inv0 = dm.inv().to_list()
  Inv0 = [[CoeffElement.const(chart, x) for x in r] for r in inv0]
  E = mat_add(Lam, mat_scale(Lam0, -1))
  Nmat = mat_scale(mat_mul(Inv0, E), -1)
  term = mat_identity(chart)
  series = mat_identity(chart)
  for _ in range(max_terms):
    term = mat_mul(term, Nmat)
    if mat_is_zero(term):
      break
    series = mat_add(series, term)
  else:
    raise InvalidPresentation("Jacobian inverse series does not terminate")
  Lam_inv = mat_mul(series, Inv0)
  D = mat_identity(chart)
  for i in range(2 * n):
    D[i][i] = CoeffElement.const(chart, I_UNIT if i < n else -I_UNIT)
  return BACS(chart, mat_mul(mat_mul(Lam_inv, D), Lam))


def _constant_value(e: CoeffElement):
  if not e.terms:
    return ZERO
  if len(e.terms) == 1:
    (key, c), = e.terms.items()
    if not any(key[1]) and not any(key[2]) and not any(key[3]):
      return c
  raise InvalidPresentation("expected a constant entry", repr(e))


# ---------------------------------------------------------------------------
# Nijenhuis tensor


@dataclass
class NijenhuisTensor:
  chart: Chart
  components: list  # components[i][j] is a BVectorField

  def component(self, i, j, out) -> CoeffElement:
    return self.components[i][j].comps[out]

  @property
  def is_zero(self) -> bool:
    return all(v.is_zero() for row in self.components for v in row)

  is_integrable = is_zero

  def nonzero(self):
    N = len(self.components)
    return [(i, j) for i in range(N) for j in range(i + 1, N)
            if not self.components[i][j].is_zero()]


def nijenhuis_pair(J: BACS, v: BVectorField, w: BVectorField) -> BVectorField:
  Jv, Jw = J.apply(v), J.apply(w)
  inner = lie_bracket(Jv, w) + lie_bracket(v, Jw)
  return lie_bracket(v, w) + J.apply(inner) - lie_bracket(Jv, Jw)


def nijenhuis(J: BACS, threads: int = 1) -> NijenhuisTensor:
  chart = J.chart
  N = 2 * chart.n
  frame = [BVectorField.frame(chart, i) for i in range(N)]
  pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
  fn = lambda ij: nijenhuis_pair(J, frame[ij[0]], frame[ij[1]])
  if threads > 1:
    with ThreadPoolExecutor(max_workers=threads) as ex:
      vals = list(ex.map(fn, pairs))
  else:
    vals = [fn(p) for p in pairs]
  zero = BVectorField.zero(chart)
  comps = [[zero] * N for _ in range(N)]
  for (i, j), v in zip(pairs, vals):
    comps[i][j] = v
    comps[j][i] = -v
  return NijenhuisTensor(chart, comps)


def holomorphic_frame(J: BACS) -> list[BVectorField]:
  """Sections E_i - iJE_i spanning T^{1,0}."""
  chart = J.chart
  out = []
  for i in range(2 * chart.n):
    E = BVectorField.frame(chart, i)
    out.append(E - J.apply(E) * I_UNIT)
  return out


def t10_involutive(J: BACS) -> bool:
  """Whether brackets of frame-generated (1,0) sections stay of type (1,0)."""
  secs = holomorphic_frame(J)
  for a in range(len(secs)):
    for b in range(a + 1, len(secs)):
      B = lie_bracket(secs[a], secs[b])
      if not (J.apply(B) - B * I_UNIT).is_zero():
        return False
  return True


# ---------------------------------------------------------------------------
# dbar on functions and one-forms


def project01(J: BACS, xi: Sequence[CoeffElement]) -> tuple[CoeffElement, ...]:
  """½(id + iJ^*) on a covector."""
  Jxi = J.dual_apply(xi)
  return tuple((a + b * I_UNIT) * HALF for a, b in zip(xi, Jxi))


def dbar(J: BACS, f: CoeffElement) -> tuple[CoeffElement, ...]:
  """^b∂̄ f as the (0,1)-projection of ^b d f, in frame components."""
  return project01(J, b_differential(f))


def is_holomorphic(J: BACS, f: CoeffElement) -> bool:
  return all(c.is_zero() for c in dbar(J, f))


def pair(xi: Sequence[CoeffElement], v: BVectorField) -> CoeffElement:
  acc = CoeffElement.zero(v.chart)
  for a, b in zip(xi, v.comps):
    if a.terms and b.terms:
      acc = acc + a * b
  return acc


def d_one_form(xi: Sequence[CoeffElement], X: BVectorField, Y: BVectorField) -> CoeffElement:
  """(dξ)(X, Y) = X ξ(Y) - Y ξ(X) - ξ([X, Y])."""
  return derive(X, pair(xi, Y)) - derive(Y, pair(xi, X)) - pair(xi, lie_bracket(X, Y))


def antiholomorphic_frame(J: BACS) -> list[BVectorField]:
  """½(E_i + iJE_i), spanning T^{0,1}."""
  out = []
  for i in range(2 * J.chart.n):
    E = BVectorField.frame(J.chart, i)
    out.append((E + J.apply(E) * I_UNIT) * HALF)
  return out


def dbar_one_form(J: BACS, xi: Sequence[CoeffElement]) -> list[list[CoeffElement]]:
  """The (0,2)-part of dξ, as its values on pairs of (0,1) frame sections."""
  secs = antiholomorphic_frame(J)
  N = len(secs)
  out = [[CoeffElement.zero(J.chart)] * N for _ in range(N)]
  for a in range(N):
    for b in range(a + 1, N):
      val = d_one_form(xi, secs[a], secs[b])
      out[a][b] = val
      out[b][a] = -val
  return out


def dbar_squared(J: BACS, f: CoeffElement) -> list[list[CoeffElement]]:
  return dbar_one_form(J, dbar(J, f))


# ---------------------------------------------------------------------------
# pointwise data


def rational_circle_point(rng: random.Random, max_num: int = 6):
  """A random e^{iθ} with rational real and imaginary parts."""
  t = Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_num))
  d = 1 + t * t
  return gauss(((1 - t * t) / d, 2 * t / d))


def random_gaussian(rng: random.Random, max_num: int = 4):
  return gauss((Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_num)),
                Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_num))))


def _mu_values(J: BACS, x: ModelPoint) -> dict:
  Q = J.chart.Q
  keys = set()
  for r in J.matrix:
    for e in r:
      keys |= e.mu_keys()
  return {q: eval_lambda(x, Q.to_ambient(q)) for q in keys}


def evaluate_matrix(J: BACS, x: ModelPoint, theta_units, zs) -> list[list]:
  mu = _mu_values(J, x)
  return [[e.evaluate(mu, theta_units, zs) for e in r] for r in J.matrix]


def normal_basis(chart: Chart, face_indices) -> list[list]:
  """Frame vectors v'_α spanning ^bN at a point with the given support face."""
  Q = chart.Q
  cols = [Q.gen_coords[i] for i in sorted(face_indices)]
  rows = [[c[t] for t in range(chart.k)] for c in cols]
  alphas = la.integer_kernel(rows, chart.k)
  out = []
  for al in alphas:
    vec = [ZERO] * (2 * chart.n)
    for t, a in enumerate(al):
      vec[t] = gauss(a)
    out.append(vec)
  return out


def _matvec(M, v):
  return [sum((M[i][j] * v[j] for j in range(len(v))), ZERO) for i in range(len(M))]


def transversality_at(J: BACS, x: ModelPoint, theta_units, zs) -> bool:
  F = support_face(x)
  Nb = normal_basis(J.chart, F.generator_indices)
  if not Nb:
    return True
  M = evaluate_matrix(J, x, theta_units, zs)
  cols = Nb + [_matvec(M, v) for v in Nb]
  return la.rank_q([[c[i] for c in cols] for i in range(len(cols[0]))], QQ_I) == 2 * len(Nb)


def check_transversality(J: BACS, samples: int = 5, seed: int = 0) -> list[dict]:
  """Sample points on every stratum of the chart; raise on the first failure."""
  rng = random.Random(seed)
  chart = J.chart
  checked = []
  for F in enumerate_faces(chart.Q):
    for _ in range(samples):
      x = random_point(chart.Q, F, rng)
      th = [rational_circle_point(rng) for _ in range(chart.k)]
      zs = [random_gaussian(rng) for _ in range(chart.free_rank)]
      if not transversality_at(J, x, th, zs):
        raise TransversalityViolation(
            "^bN meets J(^bN) at a sampled point",
            {"face": sorted(F.generator_indices),
             "values": [str(v) for v in x.generator_values]})
      checked.append({"face": sorted(F.generator_indices), "codim": F.codim})
  return checked


@dataclass
class CRSplitData:
  point: ModelPoint
  W_basis: list
  Wbar_basis: list
  intersection_basis: list

  @property
  def ranks(self):
    return len(self.W_basis), len(self.Wbar_basis), len(self.intersection_basis)


def _tangent_projection(chart: Chart, v):
  n, k = chart.n, chart.k
  return list(v[n:n + k]) + list(v[k:n]) + list(v[n + k:])


def cr_split_at(J: BACS, x: ModelPoint, theta_units=None, zs=None) -> CRSplitData:
  """Images of T^{1,0} and T^{0,1} under the anchor at a vertex-stratum point."""
  chart = J.chart
  if x.monoid is not chart.Q or support_face(x).generator_indices:
    raise InvalidPoint("cr_split_at expects the vertex of the chart's sharp part")
  theta_units = theta_units or [ONE] * chart.k
  zs = zs or [ZERO] * chart.free_rank
  if not transversality_at(J, x, theta_units, zs):
    raise TransversalityViolation("^bN meets J(^bN) at the point",
                                  [str(v) for v in x.generator_values])
  M = evaluate_matrix(J, x, theta_units, zs)
  N = 2 * chart.n
  shifted = [[M[i][j] - (I_UNIT if i == j else ZERO) for j in range(N)] for i in range(N)]
  t10 = la.nullspace(shifted, N, QQ_I)
  W = [_tangent_projection(chart, v) for v in t10]
  W = la.column_space(W, len(W[0]) if W else 0, QQ_I) if W else []
  Wbar = [[conj(c) for c in w] for w in W]
  dimT = N - chart.k
  both = W + [[-c for c in w] for w in Wbar]
  rows = [[col[i] for col in both] for i in range(dimT)]
  kern = la.nullspace(rows, len(both), QQ_I) if both else []
  inter = []
  for coeffs in kern:
    vec = [sum((coeffs[t] * W[t][i] for t in range(len(W))), ZERO) for i in range(dimT)]
    inter.append(vec)
  inter = la.column_space(inter, dimT, QQ_I) if inter else []
  return CRSplitData(x, W, Wbar, inter)


# ---------------------------------------------------------------------------
# normal form on the vertex stratum


@dataclass
class NormalFrame:
  """Candidate frame on the vertex stratum: v_1..v_k normal, lifts of the
  coordinate fields ∂/∂θ_i, ∂/∂x_j, ∂/∂y_j."""

  v: list
  theta: list
  x: list
  y: list
  coordinate_fields: list | None = None

  def elements(self):
    names = ([f"v{i + 1}" for i in range(len(self.v))]
             + [f"theta{i + 1}" for i in range(len(self.theta))]
             + [f"x{j + 1}" for j in range(len(self.x))]
             + [f"y{j + 1}" for j in range(len(self.y))])
    elems = [_as_stratum(e) for e in self.v + self.theta + self.x + self.y]
    return list(zip(names, elems))


def _as_stratum(e):
  return e.restrict() if isinstance(e, BVectorField) else e


def standard_frame(chart: Chart) -> NormalFrame:
  n, k = chart.n, chart.k
  fr = lambda i: BVectorField.frame(chart, i).restrict()
  return NormalFrame([fr(a) for a in range(k)], [fr(n + a) for a in range(k)],
                     [fr(k + j) for j in range(chart.free_rank)],
                     [fr(n + k + j) for j in range(chart.free_rank)])


@dataclass
class NormalFormReport:
  checks: dict = field(default_factory=dict)
  failures: list = field(default_factory=list)
  omega: dict = field(default_factory=dict)

  @property
  def passed(self) -> bool:
    return all(self.checks.values())

  def omega_vanishes(self) -> bool:
    return all(w.is_zero() for w in self.omega.values())


def verify_normal_form(J: BACS, frame: NormalFrame) -> NormalFormReport:
  chart = J.chart
  k, r = chart.k, chart.free_rank
  rep = NormalFormReport()
  elems = frame.elements()
  basis = [BVectorField.frame(chart, i).restrict() for i in range(2 * chart.n)]
  # (i) normal and flat
  ok = True
  for name, v in elems[:k]:
    if any(not c.is_zero() for c in v.tangent_part):
      ok = False
      rep.failures.append(f"(i) {name} is not normal")
    for i, E in enumerate(basis):
      if not algebroid_bracket(v, E).is_zero():
        ok = False
        rep.failures.append(f"(i) {name} is not flat: bracket with"
                            f" {chart.frame_labels()[i]} is nonzero")
  rep.checks["flat_normal"] = ok
  # (ii) pairwise commutation
  ok = True
  for a in range(len(elems)):
    for b in range(a + 1, len(elems)):
      if not algebroid_bracket(elems[a][1], elems[b][1]).is_zero():
        ok = False
        rep.failures.append(f"(ii) [{elems[a][0]}, {elems[b][0]}] != 0")
  rep.checks["commuting"] = ok
  # (iii) anchors form a coordinate frame
  ok = True
  lifts = elems[k:]
  anchors = [(n_, e.anchor()) for n_, e in lifts]
  for a in range(len(anchors)):
    for b in range(a + 1, len(anchors)):
      if not algebroid_bracket(anchors[a][1], anchors[b][1]).is_zero():
        ok = False
        rep.failures.append(f"(iii) anchors of {anchors[a][0]} and"
                            f" {anchors[b][0]} do not commute")
  if frame.coordinate_fields is not None:
    for (n_, an), want in zip(anchors, frame.coordinate_fields):
      if an != _as_stratum(want).anchor():
        ok = False
        rep.failures.append(f"(iii) anchor of {n_} is not the declared"
                            " coordinate field")
  rep.checks["coordinate_anchors"] = ok
  # (iv) J relations
  ok = True
  named = dict(elems)
  rels = [(f"v{i + 1}", f"theta{i + 1}") for i in range(k)] + \
         [(f"x{j + 1}", f"y{j + 1}") for j in range(r)]
  for a, b in rels:
    if J.apply_stratum(named[a]) != named[b]:
      ok = False
      rep.failures.append(f"(iv) J({a}) != {b}")
    if J.apply_stratum(named[b]) != named[a] * -1:
      ok = False
      rep.failures.append(f"(iv) J({b}) != -{a}")
  rep.checks["j_relations"] = ok
  # obstruction ω_ab^c
  rep.omega = _obstruction(chart, frame, rep)
  return rep


def _obstruction(chart, frame: NormalFrame, rep: NormalFormReport) -> dict:
  k, r = chart.k, chart.free_rank
  vs = [_as_stratum(v) for v in frame.v]
  xs = [_as_stratum(e) for e in frame.x]
  ys = [_as_stratum(e) for e in frame.y]
  if k == 0 or r == 0:
    return {}
  try:
    V = [[_constant_value(vs[c].normal_part[t]) for c in range(k)] for t in range(k)]
    Vinv = DomainMatrix([[QQ_I.convert(e) for e in row] for row in V], (k, k), QQ_I).inv().to_list()
  except Exception:
    rep.failures.append("obstruction: normal frame is not constant and invertible")
    rep.checks["obstruction_defined"] = False
    return {}
  omega = {}
  for a in range(r):
    for b in range(r):
      B = algebroid_bracket(xs[a] - ys[a] * I_UNIT, xs[b] + ys[b] * I_UNIT)
      if any(not c.is_zero() for c in B.tangent_part):
        rep.failures.append(f"obstruction: bracket ({a + 1},{b + 1}) is not normal")
        rep.checks["obstruction_defined"] = False
      normal = B.normal_part
      for c in range(k):
        acc = CoeffElement.zero(chart)
        for t in range(k):
          if Vinv[c][t] != ZERO:
            acc = acc + normal[t].scale(Vinv[c][t])
        omega[(a + 1, b + 1, c + 1)] = acc
  return omega


def shift_theta(frame: NormalFrame, f: Sequence[CoeffElement]) -> NormalFrame:
  """Frame adapted to the coordinates θ̂_c = θ_c - ½ f_c(x, y).

  The θ-lifts and normal fields are unchanged; the x- and y-lifts pick up
  ½ (∂f/∂x) θ̃ ± ½ (∂f/∂y) v as dictated by J.
  """
  chart = (frame.v or frame.x)[0].chart
  k, n = chart.k, chart.n
  vs = [_as_stratum(v) for v in frame.v]
  th = [_as_stratum(t) for t in frame.theta]
  newx, newy = [], []
  for j, (xj, yj) in enumerate(zip(frame.x, frame.y)):
    xj, yj = _as_stratum(xj), _as_stratum(yj)
    for c in range(k):
      fx = BVectorField.frame(chart, k + j)(f[c]).restrict() * HALF
      fy = BVectorField.frame(chart, n + k + j)(f[c]).restrict() * HALF
      xj = xj + th[c] * fx + vs[c] * fy
      yj = yj + th[c] * fy - vs[c] * fx
    newx.append(xj)
    newy.append(yj)
  return NormalFrame(vs, th, newx, newy)


def ddbar_potential(chart: Chart, omega: dict, degree_cap: int = 16) -> list[CoeffElement]:
  """Real f_c with 4i ∂_{z_a} ∂_{zbar_b} f_c = ω_ab^c, θ-independent.

  Solved by an exact linear system over monomials z^α zbar^β of degree at
  most ``degree_cap``; raises NotExact if no real solution exists in the ring."""
  from .errors import DegreeOverflow, NotExact
  k, r = chart.k, chart.free_rank
  out = []
  for c in range(1, k + 1):
    rhs = {}
    deg = 0
    for a in range(1, r + 1):
      for b in range(1, r + 1):
        w = omega.get((a, b, c), CoeffElement.zero(chart))
        for (q, m, al, be), val in w.terms.items():
          if any(q) or any(m):
            raise NotExact("obstruction depends on θ", repr(w))
          rhs[(a, b, al, be)] = val
          deg = max(deg, sum(al) + sum(be) + 2)
    if deg > degree_cap:
      raise DegreeOverflow(f"potential degree {deg} exceeds the cap {degree_cap}", c)
    monos = [(al, be) for al in _exponents(r, deg) for be in _exponents(r, deg)
             if sum(al) + sum(be) <= deg and any(al) and any(be)]
    eq_keys = sorted({(a, b) + tuple(x) for a in range(1, r + 1)
                      for b in range(1, r + 1) for x in _ab_pairs(r, deg)})
    index = {key: t for t, key in enumerate(eq_keys)}
    rows = [[ZERO] * (len(monos) + 1) for _ in eq_keys]
    for col, (al, be) in enumerate(monos):
      for a in range(r):
        for b in range(r):
          if al[a] and be[b]:
            al2 = al[:a] + (al[a] - 1,) + al[a + 1:]
            be2 = be[:b] + (be[b] - 1,) + be[b + 1:]
            rows[index[(a + 1, b + 1, al2, be2)]][col] += QQ_I(0, 4) * al[a] * be[b]
    for (a, b, al, be), val in rhs.items():
      key = (a, b, al, be)
      if key not in index:
        raise NotExact("obstruction degree out of range", key)
      rows[index[key]][-1] = val
    if not monos:
      if rhs:
        raise NotExact("no potential exists", c)
      out.append(CoeffElement.zero(chart))
      continue
    M = DomainMatrix(rows, (len(rows), len(monos) + 1), QQ_I)
    R, piv = M.rref()
    if len(monos) in piv:
      raise NotExact("obstruction is not ∂∂̄-exact", c)
    Rl = R.to_list()
    terms = []
    for row, p in enumerate(piv):
      al, be = monos[p]
      terms.append(((chart._zero_q, chart._zero_q, al, be), Rl[row][-1]))
    f = CoeffElement(chart, terms)
    f = (f + f.conjugate()) * HALF
    out.append(f)
  return out


def _exponents(r, deg):
  from itertools import product
  return [e for e in product(range(deg + 1), repeat=r) if sum(e) <= deg]


def _ab_pairs(r, deg):
  return [(al, be) for al in _exponents(r, deg) for be in _exponents(r, deg)
          if sum(al) + sum(be) <= deg]


# ---------------------------------------------------------------------------
# numeric cross-check


def evaluate_matrix_float(J: BACS, u: Sequence[float]) -> np.ndarray:
  """J at interior coordinates u = (s, x, θ, y) matching the frame order."""
  chart = J.chart
  n, k = chart.n, chart.k
  s, x = u[:k], u[k:n]
  th, y = u[n:n + k], u[n + k:]
  return np.array([[e.evaluate_float(s, th, x, y) for e in r] for r in J.matrix])


def nijenhuis_numeric(J: BACS, u: Sequence[float], h: float = 1e-5) -> np.ndarray:
  """N^l_{ij} at u by central finite differences of the evaluated matrix.

  In the coordinates u the frame fields are coordinate vector fields, so the
  tensor only involves J and its first derivatives."""
  u = np.asarray(u, dtype=float)
  D = len(u)
  M = evaluate_matrix_float(J, u)
  dM = np.zeros((D, D, D), dtype=complex)  # dM[m] = ∂_m M
  for m in range(D):
    e = np.zeros(D)
    e[m] = h
    dM[m] = (evaluate_matrix_float(J, u + e) - evaluate_matrix_float(J, u - e)) / (2 * h)
  out = np.zeros((D, D, D), dtype=complex)
  for i in range(D):
    for j in range(D):
      inner = -dM[j][:, i] + dM[i][:, j]
      t1 = M @ inner
      t2 = sum(M[m, i] * dM[m][:, j] - M[m, j] * dM[m][:, i] for m in range(D))
      out[i, j] = t1 - t2
  return out


def nijenhuis_evaluate_float(T: NijenhuisTensor, u: Sequence[float]) -> np.ndarray:
  chart = T.chart
  n, k = chart.n, chart.k
  s, x = u[:k], u[k:n]
  th, y = u[n:n + k], u[n + k:]
  D = 2 * n
  out = np.zeros((D, D, D), dtype=complex)
  for i in range(D):
    for j in range(D):
      for l, c in enumerate(T.components[i][j].comps):
        if c.terms:
          out[i, j, l] = c.evaluate_float(s, th, x, y)
  return out
