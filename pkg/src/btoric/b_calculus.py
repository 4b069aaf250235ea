"""Exact b-calculus on the standard chart X_P × Hom(P^gp, R), P = Q × Z^(n-k).

Functions live in the ring spanned by monomials

    c · μ_q · e^{i<m, θ>} · z^a · zbar^b

with q in the sharp part Q, m in Q^gp (a Fourier index), a, b in N^(n-k) and
c a Gaussian rational.  Coordinates of q and m are intrinsic, i.e. taken in
the Hermite basis of Q^gp; the frame α_1..α_n of Hom(P^gp, Z) is dual to that
basis followed by the standard basis of Z^(n-k).

Frame fields (0-based index i):
  * i < k          v'_i scales μ_q by q_i
  * k <= i < n     v'_i = ∂/∂x_j  (j = i - k), acting on z_j and zbar_j by 1
  * n <= i < n+k   w'_i scales e^{i<m,θ>} by i·m_i
  * n+k <= i       w'_i = ∂/∂y_j, acting on z_j by i and on zbar_j by -i
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from sympy.polys.domains import QQ, QQ_I

from .errors import ChartMismatch, InvalidPresentation, NotInMonoid, UnsupportedFace
from .lattice_monoid import Face, WeaklyToricMonoid, split_units

G = QQ_I.dtype
ZERO = QQ_I(0, 0)
ONE = QQ_I(1, 0)
I_UNIT = QQ_I(0, 1)
HALF = QQ_I(QQ(1, 2), 0)


def gauss(x) -> G:
  """Coerce int, Fraction, (re, im) pairs or QQ_I elements to QQ_I."""
  if isinstance(x, G):
    return x
  if isinstance(x, tuple):
    re, im = x
    return QQ_I(_q(re), _q(im))
  if isinstance(x, complex):
    if x.real != int(x.real) or x.imag != int(x.imag):
      raise TypeError("only integer complex literals are accepted exactly")
    return QQ_I(int(x.real), int(x.imag))
  return QQ_I(_q(x), 0)


def _q(x):
  if isinstance(x, Fraction):
    return QQ(x.numerator, x.denominator)
  if isinstance(x, int):
    return QQ(x)
  if isinstance(x, str):
    f = Fraction(x)
    return QQ(f.numerator, f.denominator)
  return QQ.convert(x)


def conj(c: G) -> G:
  return QQ_I(c.x, -c.y)


def to_complex(c: G) -> complex:
  return complex(float(c.x), float(c.y))


def fraction_parts(c: G) -> tuple[Fraction, Fraction]:
  return (Fraction(int(c.x.numerator), int(c.x.denominator)),
          Fraction(int(c.y.numerator), int(c.y.denominator)))


class Chart:
  """The chart data P = Q × Z^free_rank with Q toric."""

  def __init__(self, Q: WeaklyToricMonoid, free_rank: int = 0):
    if not Q.is_sharp:
      raise InvalidPresentation("chart requires a sharp monoid; use Chart.of")
    if free_rank < 0:
      raise InvalidPresentation("free rank must be nonnegative", free_rank)
    self.Q = Q
    self.k = Q.gp_rank
    self.free_rank = free_rank
    self.n = self.k + free_rank
    self._zero_q = (0,) * self.k
    self._zero_z = (0,) * free_rank

  @classmethod
  def of(cls, P: WeaklyToricMonoid) -> "Chart":
    Q, r = split_units(P)
    return cls(Q, r)

  def __eq__(self, other):
    return (isinstance(other, Chart) and other.free_rank == self.free_rank
            and (other.Q is self.Q or other.Q.generators == self.Q.generators))

  def __hash__(self):
    return hash((self.Q.generators, self.free_rank))

  def __repr__(self):
    return f"Chart(Q={list(self.Q.generators)}, free_rank={self.free_rank})"

  @property
  def dim(self) -> int:
    return 2 * self.n

  def check_q(self, q):
    if len(q) != self.k or not self.Q.contains_intrinsic(q):
      raise NotInMonoid(f"μ-key {q} is not in the sharp part", q)

  def layer(self, q) -> int:
    return self.Q.layer_intrinsic(q)

  def frame_labels(self) -> list[str]:
    n = self.n
    return [f"v{i + 1}" for i in range(n)] + [f"w{i + 1}" for i in range(n)]


def _add(u, v):
  return tuple(a + b for a, b in zip(u, v))


class CoeffElement:
  """Immutable exact element of the coefficient ring."""

  __slots__ = ("chart", "terms", "_hash")

  def __init__(self, chart: Chart, terms: Mapping | Iterable = (), *,
               check: bool = True):
    self.chart = chart
    items = terms.items() if isinstance(terms, Mapping) else terms
    out: dict = {}
    for key, c in items:
      c = gauss(c)
      if c == ZERO:
        continue
      if check:
        q, m, a, b = key = (tuple(key[0]), tuple(key[1]), tuple(key[2]),
                            tuple(key[3]))
        chart.check_q(q)
        if len(m) != chart.k or len(a) != chart.free_rank or \
            len(b) != chart.free_rank or min(a + b, default=0) < 0:
          raise InvalidPresentation(f"malformed monomial key {key}", key)
      prev = out.get(key)
      if prev is None:
        out[key] = c
      else:
        s = prev + c
        if s == ZERO:
          del out[key]
        else:
          out[key] = s
    self.terms = out
    self._hash = None

  @classmethod
  def _raw(cls, chart, terms: dict) -> "CoeffElement":
    obj = cls.__new__(cls)
    obj.chart = chart
    obj.terms = terms
    obj._hash = None
    return obj

  # -- constructors ------------------------------------------------------
  @classmethod
  def zero(cls, chart):
    return cls._raw(chart, {})

  @classmethod
  def const(cls, chart, c=1):
    c = gauss(c)
    key = (chart._zero_q, chart._zero_q, chart._zero_z, chart._zero_z)
    return cls._raw(chart, {key: c} if c != ZERO else {})

  @classmethod
  def monomial(cls, chart, q=None, m=None, a=None, b=None, c=1):
    z0q, z0z = chart._zero_q, chart._zero_z
    key = (tuple(q) if q is not None else z0q, tuple(m) if m is not None else z0q,
           tuple(a) if a is not None else z0z, tuple(b) if b is not None else z0z)
    return cls(chart, [(key, c)])

  @classmethod
  def mu(cls, chart, q):
    return cls.monomial(chart, q=q)

  @classmethod
  def fourier(cls, chart, m):
    return cls.monomial(chart, m=m)

  @classmethod
  def holomorphic_monomial(cls, chart, q):
    """μ_q e^{iθ_q}."""
    return cls.monomial(chart, q=q, m=q)

  @classmethod
  def z(cls, chart, j):
    a = [0] * chart.free_rank
    a[j] = 1
    return cls.monomial(chart, a=a)

  @classmethod
  def zbar(cls, chart, j):
    b = [0] * chart.free_rank
    b[j] = 1
    return cls.monomial(chart, b=b)

  # -- ring structure ----------------------------------------------------
  def _coerce(self, other) -> "CoeffElement":
    if isinstance(other, CoeffElement):
      if other.chart is not self.chart and other.chart != self.chart:
        raise ChartMismatch("elements live on different charts")
      return other
    return CoeffElement.const(self.chart, other)

  def __add__(self, other):
    other = self._coerce(other)
    out = dict(self.terms)
    for key, c in other.terms.items():
      s = out.get(key)
      if s is None:
        out[key] = c
      else:
        s = s + c
        if s == ZERO:
          del out[key]
        else:
          out[key] = s
    return CoeffElement._raw(self.chart, out)

  __radd__ = __add__

  def __neg__(self):
    return CoeffElement._raw(self.chart, {k: -c for k, c in self.terms.items()})

  def __sub__(self, other):
    return self + (-self._coerce(other))

  def __rsub__(self, other):
    return self._coerce(other) - self

  def scale(self, c) -> "CoeffElement":
    c = gauss(c)
    if c == ZERO:
      return CoeffElement.zero(self.chart)
    return CoeffElement._raw(self.chart, {k: v * c for k, v in self.terms.items()})

  def __mul__(self, other):
    if not isinstance(other, CoeffElement):
      return self.scale(other)
    other = self._coerce(other)
    out: dict = {}
    for (q1, m1, a1, b1), c1 in self.terms.items():
      for (q2, m2, a2, b2), c2 in other.terms.items():
        key = (_add(q1, q2), _add(m1, m2), _add(a1, a2), _add(b1, b2))
        s = out.get(key)
        c = c1 * c2
        if s is None:
          out[key] = c
        else:
          s = s + c
          if s == ZERO:
            del out[key]
          else:
            out[key] = s
    return CoeffElement._raw(self.chart, out)

  def __rmul__(self, other):
    return self.scale(other)

  def __pow__(self, e: int):
    if e < 0:
      raise ValueError("negative powers are not in the ring")
    out = CoeffElement.const(self.chart, 1)
    base = self
    while e:
      if e & 1:
        out = out * base
      base = base * base
      e >>= 1
    return out

  def __eq__(self, other):
    if isinstance(other, CoeffElement):
      return self.chart == other.chart and self.terms == other.terms
    if isinstance(other, (int, Fraction, G)):
      return self == CoeffElement.const(self.chart, other)
    return NotImplemented

  def __hash__(self):
    if self._hash is None:
      self._hash = hash(frozenset(self.terms.items()))
    return self._hash

  def __bool__(self):
    return bool(self.terms)

  def is_zero(self) -> bool:
    return not self.terms

  def conjugate(self) -> "CoeffElement":
    """Complex conjugate: μ_q real, e^{iθ_m} -> e^{-iθ_m}, z <-> zbar."""
    return CoeffElement._raw(self.chart, {
        (q, tuple(-x for x in m), b, a): conj(c)
        for (q, m, a, b), c in self.terms.items()})

  def is_real(self) -> bool:
    return self.conjugate() == self

  # -- filtration --------------------------------------------------------
  def restrict(self) -> "CoeffElement":
    """Restriction to the vertex stratum: keep terms with μ-key 0."""
    z = self.chart._zero_q
    return CoeffElement._raw(self.chart,
                             {k: c for k, c in self.terms.items() if k[0] == z})

  def mu_keys(self) -> set:
    return {k[0] for k in self.terms}

  def order(self):
    """min over terms of the filtration level of the μ-key (inf for 0)."""
    if not self.terms:
      return math.inf
    return min(self.chart.layer(q) for q in self.mu_keys())

  def truncate(self, N: int) -> "CoeffElement":
    """Drop every term in I^N."""
    layer = self.chart.layer
    return CoeffElement._raw(self.chart, {k: c for k, c in self.terms.items()
                                          if layer(k[0]) < N})

  def zbar_degree(self) -> int:
    return max((sum(k[3]) for k in self.terms), default=0)

  def total_z_degree(self) -> int:
    return max((sum(k[2]) + sum(k[3]) for k in self.terms), default=0)

  # -- evaluation --------------------------------------------------------
  def evaluate(self, mu_values: Mapping, theta_units: Sequence, zs: Sequence) -> G:
    """Exact value given μ_q values (dict q -> rational), e^{iθ_a} as unit
    Gaussian rationals and z_j as Gaussian rationals."""
    total = ZERO
    for (q, m, a, b), c in self.terms.items():
      val = c * gauss(mu_values[q])
      for u, e in zip(theta_units, m):
        u = gauss(u)
        val *= u ** e if e >= 0 else conj(u) ** (-e)
      for zj, e, f in zip(zs, a, b):
        zj = gauss(zj)
        val *= zj ** e * conj(zj) ** f
      total += val
    return total

  def evaluate_float(self, s, theta, x, y) -> complex:
    """Value at the interior point with μ_q = exp(<q, s>)."""
    total = 0j
    zs = [complex(a, b) for a, b in zip(x, y)]
    for (q, m, a, b), c in self.terms.items():
      val = to_complex(c) * math.exp(sum(qi * si for qi, si in zip(q, s)))
      val *= cmath.exp(1j * sum(mi * ti for mi, ti in zip(m, theta)))
      for zj, e, f in zip(zs, a, b):
        val *= zj ** e * zj.conjugate() ** f
      total += val
    return total

  # -- display -----------------------------------------------------------
  def sorted_terms(self):
    return sorted(self.terms.items(), key=lambda kv: kv[0])

  def __repr__(self):
    if not self.terms:
      return "0"
    parts = []
    for (q, m, a, b), c in self.sorted_terms():
      fac = [f"({c})"]
      if any(q):
        fac.append(f"mu{list(q)}")
      if any(m):
        fac.append(f"e^(i<{list(m)},θ>)")
      for j, e in enumerate(a):
        if e:
          fac.append(f"z{j + 1}" + (f"^{e}" if e > 1 else ""))
      for j, e in enumerate(b):
        if e:
          fac.append(f"zb{j + 1}" + (f"^{e}" if e > 1 else ""))
      parts.append("*".join(fac))
    return " + ".join(parts)


# ---------------------------------------------------------------------------
# frame derivations


def _frame_derive_terms(chart: Chart, i: int, terms: dict) -> dict:
  n, k = chart.n, chart.k
  out: dict = {}

  def put(key, c):
    s = out.get(key)
    if s is None:
      out[key] = c
    else:
      s = s + c
      if s == ZERO:
        del out[key]
      else:
        out[key] = s

  if i < k:
    for key, c in terms.items():
      e = key[0][i]
      if e:
        put(key, c * e)
  elif i < n:
    j = i - k
    for (q, m, a, b), c in terms.items():
      if a[j]:
        a2 = a[:j] + (a[j] - 1,) + a[j + 1:]
        put((q, m, a2, b), c * a[j])
      if b[j]:
        b2 = b[:j] + (b[j] - 1,) + b[j + 1:]
        put((q, m, a, b2), c * b[j])
  elif i < n + k:
    t = i - n
    for key, c in terms.items():
      e = key[1][t]
      if e:
        put(key, c * I_UNIT * e)
  else:
    j = i - n - k
    for (q, m, a, b), c in terms.items():
      if a[j]:
        a2 = a[:j] + (a[j] - 1,) + a[j + 1:]
        put((q, m, a2, b), c * I_UNIT * a[j])
      if b[j]:
        b2 = b[:j] + (b[j] - 1,) + b[j + 1:]
        put((q, m, a, b2), -(c * I_UNIT * b[j]))
  return out


def frame_derive(chart: Chart, i: int, f: CoeffElement) -> CoeffElement:
  """Apply the i-th frame field to f."""
  if f.chart is not chart and f.chart != chart:
    raise ChartMismatch("function and frame live on different charts")
  return CoeffElement._raw(chart, _frame_derive_terms(chart, i, f.terms))


class BVectorField:
  """A section of the b-tangent bundle: 2n coefficients in the commuting frame
  (v'_1..v'_n, w'_1..w'_n)."""

  __slots__ = ("chart", "comps")

  def __init__(self, chart: Chart, comps: Sequence):
    if len(comps) != 2 * chart.n:
      raise InvalidPresentation(f"expected {2 * chart.n} components, got {len(comps)}")
    cs = []
    for c in comps:
      if isinstance(c, CoeffElement):
        if c.chart is not chart and c.chart != chart:
          raise ChartMismatch("component on a different chart")
        cs.append(c)
      else:
        cs.append(CoeffElement.const(chart, c))
    self.chart = chart
    self.comps = tuple(cs)

  @classmethod
  def zero(cls, chart):
    return cls(chart, [CoeffElement.zero(chart)] * (2 * chart.n))

  @classmethod
  def frame(cls, chart, i, coeff=1):
    comps = [CoeffElement.zero(chart)] * (2 * chart.n)
    comps[i] = coeff if isinstance(coeff, CoeffElement) else CoeffElement.const(chart, coeff)
    return cls(chart, comps)

  @classmethod
  def v_alpha(cls, chart, alpha: Sequence[int], coeff=1):
    """coeff · v'_α for α given in the dual frame basis."""
    return cls._combo(chart, alpha, 0, coeff)

  @classmethod
  def w_alpha(cls, chart, alpha: Sequence[int], coeff=1):
    return cls._combo(chart, alpha, chart.n, coeff)

  @classmethod
  def _combo(cls, chart, alpha, offset, coeff):
    if len(alpha) != chart.n:
      raise InvalidPresentation("α has the wrong length", alpha)
    f = coeff if isinstance(coeff, CoeffElement) else CoeffElement.const(chart, coeff)
    comps = [CoeffElement.zero(chart)] * (2 * chart.n)
    for i, a in enumerate(alpha):
      if a:
        comps[offset + i] = f.scale(a)
    return cls(chart, comps)

  def _check(self, other):
    if other.chart is not self.chart and other.chart != self.chart:
      raise ChartMismatch("vector fields live on different charts")

  def __add__(self, other):
    self._check(other)
    return BVectorField(self.chart, [a + b for a, b in zip(self.comps, other.comps)])

  def __sub__(self, other):
    self._check(other)
    return BVectorField(self.chart, [a - b for a, b in zip(self.comps, other.comps)])

  def __neg__(self):
    return BVectorField(self.chart, [-a for a in self.comps])

  def __mul__(self, f):
    """Multiply by a function or scalar."""
    if isinstance(f, CoeffElement):
      return BVectorField(self.chart, [f * a for a in self.comps])
    return BVectorField(self.chart, [a.scale(f) for a in self.comps])

  __rmul__ = __mul__

  def __eq__(self, other):
    return isinstance(other, BVectorField) and self.comps == other.comps

  def __hash__(self):
    return hash(self.comps)

  def is_zero(self) -> bool:
    return all(c.is_zero() for c in self.comps)

  def conjugate(self):
    return BVectorField(self.chart, [c.conjugate() for c in self.comps])

  def __call__(self, f: CoeffElement) -> CoeffElement:
    return derive(self, f)

  def restrict(self) -> "StratumAlgebroidElement":
    return StratumAlgebroidElement(self.chart, [c.restrict() for c in self.comps])

  def __repr__(self):
    labels = self.chart.frame_labels()
    parts = [f"[{c}]*{l}" for c, l in zip(self.comps, labels) if not c.is_zero()]
    return " + ".join(parts) if parts else "0"


def derive(v: BVectorField, f: CoeffElement) -> CoeffElement:
  if f.chart is not v.chart and f.chart != v.chart:
    raise ChartMismatch("vector field and function live on different charts")
  out = CoeffElement.zero(v.chart)
  for i, c in enumerate(v.comps):
    if c.terms:
      d = frame_derive(v.chart, i, f)
      if d.terms:
        out = out + c * d
  return out


def lie_bracket(u: BVectorField, v: BVectorField) -> BVectorField:
  """[u, v] expanded over the commuting frame."""
  u._check(v)
  chart = u.chart
  comps = []
  for j in range(2 * chart.n):
    comps.append(derive(u, v.comps[j]) - derive(v, u.comps[j]))
  return BVectorField(chart, comps)


def b_differential(f: CoeffElement) -> tuple[CoeffElement, ...]:
  """Frame components <^b d f, frame_i>."""
  chart = f.chart
  return tuple(frame_derive(chart, i, f) for i in range(2 * chart.n))


class StratumAlgebroidElement:
  """Restriction of a b-vector field to the vertex stratum V.

  ``comps`` holds all 2n frame coefficients (μ-key 0).  The normal part is
  (v'_1..v'_k); the tangent part, mapped isomorphically by the anchor onto
  TV, is (w'_1..w'_k, v'_{k+1}..v'_n, w'_{k+1}..w'_n), i.e. ∂/∂θ, ∂/∂x, ∂/∂y.
  """

  __slots__ = ("chart", "comps")

  def __init__(self, chart: Chart, comps: Sequence[CoeffElement]):
    z = chart._zero_q
    for c in comps:
      if any(key[0] != z for key in c.terms):
        raise InvalidPresentation("stratum elements must have μ-key 0")
    self.chart = chart
    self.comps = tuple(comps)

  @property
  def normal_part(self):
    return self.comps[:self.chart.k]

  @property
  def tangent_part(self):
    n, k = self.chart.n, self.chart.k
    return self.comps[n:n + k] + self.comps[k:n] + self.comps[n + k:]

  def as_field(self) -> BVectorField:
    return BVectorField(self.chart, self.comps)

  def anchor(self) -> "StratumAlgebroidElement":
    """The anchor image, kept in frame form with the normal part dropped."""
    k = self.chart.k
    zero = CoeffElement.zero(self.chart)
    return StratumAlgebroidElement(self.chart, [zero] * k + list(self.comps[k:]))

  def apply(self, f: CoeffElement) -> CoeffElement:
    """Anchor action on a function on V."""
    return derive(self.as_field(), f.restrict()).restrict()

  def __add__(self, other):
    return StratumAlgebroidElement(self.chart, [a + b for a, b in zip(self.comps, other.comps)])

  def __sub__(self, other):
    return StratumAlgebroidElement(self.chart, [a - b for a, b in zip(self.comps, other.comps)])

  def __mul__(self, f):
    if isinstance(f, CoeffElement):
      f = f.restrict()
      return StratumAlgebroidElement(self.chart, [f * a for a in self.comps])
    return StratumAlgebroidElement(self.chart, [a.scale(f) for a in self.comps])

  __rmul__ = __mul__

  def __eq__(self, other):
    return isinstance(other, StratumAlgebroidElement) and self.comps == other.comps

  def __hash__(self):
    return hash(self.comps)

  def is_zero(self):
    return all(c.is_zero() for c in self.comps)

  def __repr__(self):
    return f"StratumAlgebroidElement({self.as_field()!r})"


def restrict_to_stratum(v: BVectorField, F: Face | None = None) -> StratumAlgebroidElement:
  """Restrict to the vertex stratum {δ_0} × R^(n-k) × fibres."""
  if F is not None and F.generator_indices:
    raise UnsupportedFace("only the vertex stratum of the sharp part is"
                          " supported", sorted(F.generator_indices))
  return v.restrict()


def algebroid_bracket(u: StratumAlgebroidElement,
                      v: StratumAlgebroidElement) -> StratumAlgebroidElement:
  """[u, v]_{S^k}: bracket of the μ-key-0 extensions, restricted."""
  return lie_bracket(u.as_field(), v.as_field()).restrict()
