"""Formal Newlander-Nirenberg: jet ideals, the stratum ∂̄-complex and the
order-by-order correction of a seed chart.

Functions on the vertex stratum V are ring elements with μ-key 0.  A form of
degree r on V is stored in the basis dzbar_J = dzbar_{j1} ∧ ... ∧ dzbar_{jr}
with 0-based indices, the first k of which are the θ-directions.  In frame
components of a (0,1)-covector the basis element dzbar_a is
e^{w_a} + i e^{v_a} for a < k and e^{v_a} - i e^{w_a} for a ≥ k.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .b_calculus import (HALF, I_UNIT, ONE, ZERO, Chart, CoeffElement,
                         b_differential, gauss)
from .complex_structure import BACS, dbar, project01
from .errors import (DegreeOverflow, InvalidPresentation, NotClosed, NotExact,
                     NotIntegrable, PreconditionResidual)

DEFAULT_DEGREE_CAP = 16


# ---------------------------------------------------------------------------
# jet ideals


@dataclass(frozen=True)
class JetIdealOrder:
  element: CoeffElement
  order: float  # int or math.inf

  @property
  def is_infinite(self) -> bool:
    return self.order == math.inf


def ideal_order(f: CoeffElement) -> JetIdealOrder:
  """Largest N with f in I^N."""
  return JetIdealOrder(f, f.order())


def covector_order(xi: Sequence[CoeffElement]):
  return min((c.order() for c in xi), default=math.inf)


def layer_decomposition(f: CoeffElement, N: int, *,
                        shift_theta: bool = False) -> dict:
  """Coefficients of the layer-N part of f: f ≡ Σ_q μ_q f_q mod I^{N+1}.

  With ``shift_theta`` the factor μ_q e^{iθ_q} is split off instead, so the
  Fourier index of f_q is shifted by -q."""
  chart = f.chart
  out: dict = {}
  for (q, m, a, b), c in f.terms.items():
    if chart.layer(q) != N:
      continue
    if shift_theta:
      m = tuple(x - y for x, y in zip(m, q))
    out.setdefault(q, {})[(chart._zero_q, m, a, b)] = c
  return {q: CoeffElement._raw(chart, t) for q, t in sorted(out.items())}


def layer_independence_check(terms: Sequence[tuple], N: int) -> bool:
  """Whether Σ μ_{q_i} f_i has layer-N decomposition {q_i: f_i|_V}.

  This is the bookkeeping form of the statement that such a sum lies in
  I^{N+1} only if every f_i vanishes on V."""
  if not terms:
    return True
  chart = terms[0][1].chart
  qs = [tuple(q) for q, _ in terms]
  if len(set(qs)) != len(qs):
    raise InvalidPresentation("μ-keys must be distinct", qs)
  for q in qs:
    chart.check_q(q)
    if chart.layer(q) != N:
      raise InvalidPresentation(f"{list(q)} is not in layer {N}", q)
  total = CoeffElement.zero(chart)
  for q, f in zip(qs, (f for _, f in terms)):
    total = total + CoeffElement.mu(chart, q) * f
  want = {q: f.restrict() for q, (_, f) in zip(qs, terms) if not f.restrict().is_zero()}
  return layer_decomposition(total, N) == want


# ---------------------------------------------------------------------------
# forms on V and the stratum ∂̄


def _on_stratum(f: CoeffElement) -> CoeffElement:
  z = f.chart._zero_q
  if any(key[0] != z for key in f.terms):
    raise InvalidPresentation("stratum forms take μ-key 0 coefficients", repr(f))
  return f


class StratumForm:
  """A (0, r)-form on V with coefficients keyed by sorted index tuples."""

  __slots__ = ("chart", "degree", "components")

  def __init__(self, chart: Chart, degree: int, components: Mapping = ()):
    n = chart.n
    if not 0 <= degree <= n:
      raise InvalidPresentation(f"degree must lie in 0..{n}", degree)
    comps = {}
    items = components.items() if isinstance(components, Mapping) else components
    for idx, c in items:
      idx = tuple(idx)
      if len(idx) != degree or list(idx) != sorted(set(idx)) or \
          any(not 0 <= j < n for j in idx):
        raise InvalidPresentation(f"bad index tuple {idx} for degree {degree}", idx)
      c = _on_stratum(c if isinstance(c, CoeffElement) else CoeffElement.const(chart, c))
      if idx in comps:
        c = comps[idx] + c
      if c.is_zero():
        comps.pop(idx, None)
      else:
        comps[idx] = c
    self.chart = chart
    self.degree = degree
    self.components = dict(sorted(comps.items()))

  @classmethod
  def zero(cls, chart, degree):
    return cls(chart, degree)

  @classmethod
  def function(cls, f: CoeffElement):
    return cls(f.chart, 0, {(): f})

  def __add__(self, other):
    self._check(other)
    comps = dict(self.components)
    for idx, c in other.components.items():
      comps[idx] = comps[idx] + c if idx in comps else c
    return StratumForm(self.chart, self.degree, comps)

  def __neg__(self):
    return StratumForm(self.chart, self.degree,
                       {i: -c for i, c in self.components.items()})

  def __sub__(self, other):
    return self + (-other)

  def scale(self, c):
    return StratumForm(self.chart, self.degree,
                       {i: v.scale(c) for i, v in self.components.items()})

  def _check(self, other):
    if self.chart != other.chart or self.degree != other.degree:
      raise InvalidPresentation("forms of different type")

  def __eq__(self, other):
    return isinstance(other, StratumForm) and self.chart == other.chart and \
        self.degree == other.degree and self.components == other.components

  def __hash__(self):
    return hash((self.degree, tuple(self.components.items())))

  def is_zero(self) -> bool:
    return not self.components

  def total_z_degree(self) -> int:
    return max((c.total_z_degree() for c in self.components.values()), default=0)

  def __repr__(self):
    if not self.components:
      return f"0 (degree {self.degree})"
    parts = []
    for idx, c in self.components.items():
      basis = "^".join(f"dzb{j + 1}" for j in idx) or "1"
      parts.append(f"[{c}]*{basis}")
    return " + ".join(parts)


def _wedge_sign(c: int, idx: tuple) -> int:
  """Sign of dzbar_c ∧ dzbar_idx after sorting."""
  return -1 if sum(1 for j in idx if j < c) % 2 else 1


def _insert(c: int, idx: tuple) -> tuple:
  return tuple(sorted(idx + (c,)))


def _partial(chart: Chart, c: int, terms: dict) -> dict:
  """D_c on a μ-key-0 function: ½∂/∂θ_c for c < k, ∂/∂zbar for c ≥ k."""
  k = chart.k
  out = {}
  if c < k:
    for (q, m, a, b), v in terms.items():
      if m[c]:
        out[(q, m, a, b)] = v * QQI(0, Fraction(m[c], 2))
  else:
    j = c - k
    for (q, m, a, b), v in terms.items():
      if b[j]:
        nb = b[:j] + (b[j] - 1,) + b[j + 1:]
        out[(q, m, a, nb)] = v * b[j]
  return out


def QQI(re, im):
  return gauss((Fraction(re), Fraction(im)))


def dbar_Sk(alpha: StratumForm) -> StratumForm:
  """The stratum Cauchy-Riemann operator, raising degree by one."""
  chart = alpha.chart
  if alpha.degree >= chart.n:
    raise InvalidPresentation(f"∂̄ is defined on forms of degree < {chart.n}")
  acc: dict = {}
  for idx, f in alpha.components.items():
    for c in range(chart.n):
      if c in idx:
        continue
      d = _partial(chart, c, f.terms)
      if not d:
        continue
      sgn = _wedge_sign(c, idx)
      slot = acc.setdefault(_insert(c, idx), {})
      for key, v in d.items():
        v = v if sgn > 0 else -v
        s = slot.get(key)
        s = v if s is None else s + v
        if s == ZERO:
          slot.pop(key, None)
        else:
          slot[key] = s
  comps = {i: CoeffElement._raw(chart, t) for i, t in acc.items() if t}
  return StratumForm(chart, alpha.degree + 1, comps)


def _interior(c: int, idx: tuple):
  """ι_c dzbar_idx as (sign, remaining) or None."""
  if c not in idx:
    return None
  p = idx.index(c)
  return (-1 if p % 2 else 1), idx[:p] + idx[p + 1:]


def is_harmonic_key(chart: Chart, key, idx) -> bool:
  """Terms that are closed but not exact: m = 0, no zbar, no z-form part."""
  _, m, _, b = key
  return not any(m) and not any(b) and all(j < chart.k for j in idx)


def homotopy(beta: StratumForm) -> StratumForm:
  """The contracting homotopy K with ∂̄K + K∂̄ = id - π.

  π keeps the terms with zero Fourier index, no zbar factor and a purely
  θ-directional form part; those span the cohomology of the complex on the
  polynomial ring.  On a block with Fourier index m ≠ 0, K is ι_{a0} divided
  by i m_{a0}/2 for the first a0 with m_{a0} ≠ 0; with m = 0 it is the
  Euler contraction in the zbar variables."""
  chart = beta.chart
  k = chart.k
  if beta.degree == 0:
    return StratumForm.zero(chart, 0)
  acc: dict = {}

  def put(idx, key, v):
    slot = acc.setdefault(idx, {})
    s = slot.get(key)
    s = v if s is None else s + v
    if s == ZERO:
      slot.pop(key, None)
    else:
      slot[key] = s

  for idx, f in beta.components.items():
    for key, v in f.terms.items():
      q, m, a, b = key
      a0 = next((t for t in range(k) if m[t]), None)
      if a0 is not None:
        res = _interior(a0, idx)
        if res is None:
          continue
        sgn, rest = res
        lam = QQI(0, Fraction(m[a0], 2))
        put(rest, key, v * sgn / lam)
        continue
      theta_part = [j for j in idx if j < k]
      z_part = [j for j in idx if j >= k]
      weight = sum(b) + len(z_part)
      if weight == 0:
        continue
      pre = -1 if len(theta_part) % 2 else 1
      for p, j in enumerate(z_part):
        sgn = pre * (-1 if p % 2 else 1)
        rest = tuple(theta_part) + tuple(z_part[:p] + z_part[p + 1:])
        t = j - k
        nb = b[:t] + (b[t] + 1,) + b[t + 1:]
        put(rest, (q, m, a, nb), v * sgn * QQI(Fraction(1, weight), 0))
  comps = {i: CoeffElement._raw(chart, t) for i, t in acc.items() if t}
  return StratumForm(chart, beta.degree - 1, comps)


def harmonic_part(beta: StratumForm) -> StratumForm:
  chart = beta.chart
  comps = {}
  for idx, f in beta.components.items():
    t = {key: v for key, v in f.terms.items() if is_harmonic_key(chart, key, idx)}
    if t:
      comps[idx] = CoeffElement._raw(chart, t)
  return StratumForm(chart, beta.degree, comps)


def poincare_solve(beta: StratumForm, *, degree_cap: int = DEFAULT_DEGREE_CAP) -> StratumForm:
  """α with ∂̄_{S^k} α = β for closed β of degree ≥ 1.

  In degree one the answer is normalised to have no holomorphic part."""
  if beta.degree < 1:
    raise InvalidPresentation("poincare_solve needs a form of degree >= 1")
  if beta.total_z_degree() + 1 > degree_cap:
    raise DegreeOverflow(f"z-degree exceeds the cap {degree_cap}",
                         beta.total_z_degree())
  d = closedness_defect(beta)
  if d is not None:
    raise NotClosed("form is not ∂̄-closed", repr(d))
  h = harmonic_part(beta)
  if not h.is_zero():
    raise NotExact("closed form has a component outside the image"
                   " (θ-independent, holomorphic, purely θ-directional)", repr(h))
  alpha = homotopy(beta)
  if beta.degree and dbar_Sk(alpha) != beta:  # pragma: no cover - guarded by the identity
    raise NotExact("homotopy failed to invert ∂̄", repr(beta))
  return alpha


def closedness_defect(beta: StratumForm):
  """∂̄β when it is nonzero, else None (top-degree forms are closed)."""
  if beta.degree >= beta.chart.n:
    return None
  d = dbar_Sk(beta)
  return None if d.is_zero() else d


def is_holomorphic_on_stratum(f: CoeffElement) -> bool:
  if f.chart.n == 0:
    return True
  return dbar_Sk(StratumForm.function(_on_stratum(f))).is_zero()


def covector_to_form(xi: Sequence[CoeffElement]) -> StratumForm:
  """Read a J_st-(0,1) covector with μ-key-0 components as a 1-form on V."""
  chart = xi[0].chart
  n, k = chart.n, chart.k
  comps = {}
  for c in range(n):
    v, w = _on_stratum(xi[c]), _on_stratum(xi[n + c])
    if c < k:
      ok = v == w * I_UNIT
      coeff = w
    else:
      ok = w == v * (-I_UNIT)
      coeff = v
    if not ok:
      raise PreconditionResidual("covector is not of type (0,1) for the"
                                 " standard structure on the stratum",
                                 {"direction": c + 1})
    if not coeff.is_zero():
      comps[(c,)] = coeff
  return StratumForm(chart, 1, comps)


def form_to_covector(alpha: StratumForm) -> tuple[CoeffElement, ...]:
  chart = alpha.chart
  n, k = chart.n, chart.k
  if alpha.degree != 1:
    raise InvalidPresentation("only 1-forms convert to covectors")
  out = [CoeffElement.zero(chart)] * (2 * n)
  for (c,), f in alpha.components.items():
    if c < k:
      out[n + c] = f
      out[c] = f * I_UNIT
    else:
      out[c] = f
      out[n + c] = f * (-I_UNIT)
  return tuple(out)


# ---------------------------------------------------------------------------
# seeds and the correction algorithm


@dataclass
class SeedChart:
  """Uncorrected chart data.

  The seed holomorphic monomials are μ_q e^{iθ_q} exp(Σ_a q_a G_a) with
  G_a = ``log_seed[a]`` in I^1 (so that log μ*_a + iθ*_a = log μ_a + iθ_a + G_a),
  and the seed fibre coordinates are ``z[j]``."""

  chart: Chart
  log_seed: list
  z: list

  @classmethod
  def standard(cls, chart: Chart) -> "SeedChart":
    return cls(chart, [CoeffElement.zero(chart)] * chart.k,
               [CoeffElement.z(chart, j) for j in range(chart.free_rank)])

  def __post_init__(self):
    if len(self.log_seed) != self.chart.k or len(self.z) != self.chart.free_rank:
      raise InvalidPresentation("seed has the wrong number of functions")
    for G in self.log_seed:
      if G.order() < 1:
        raise PreconditionResidual("log-seed corrections must lie in I^1", repr(G))


@dataclass
class CorrectionFamily:
  """g[(a, q)] and h[(j, q)]: coefficients of μ_q e^{iθ_q} (1-based a, j)."""

  g: dict
  h: dict
  order_reached: int
  gauge: dict = field(default_factory=dict)


@dataclass
class CorrectedChart:
  holomorphic: dict  # q -> corrected μ_q e^{iθ_q}
  mu: dict
  theta_exp: dict
  z: list
  truncation_order: int
  residual_orders: dict


def exp_truncated(G: CoeffElement, N: int) -> CoeffElement:
  """exp(G) mod I^N for G in I^1."""
  if G.order() < 1:
    raise InvalidPresentation("exp_truncated needs an element of I^1")
  out = CoeffElement.const(G.chart, 1)
  term = CoeffElement.const(G.chart, 1)
  r = 0
  while True:
    r += 1
    term = (term * G).truncate(N).scale(QQI(Fraction(1, r), 0))
    if term.is_zero():
      return out
    out = out + term


def _assemble(chart: Chart, coeffs: Mapping) -> CoeffElement:
  """Σ_q μ_q e^{iθ_q} c_q."""
  total = {}
  for q, c in coeffs.items():
    for (_, m, a, b), v in c.terms.items():
      key = (q, tuple(x + y for x, y in zip(m, q)), a, b)
      s = total.get(key)
      s = v if s is None else s + v
      if s == ZERO:
        total.pop(key, None)
      else:
        total[key] = s
  return CoeffElement._raw(chart, total)


def _log_residual(J: BACS, a: int, G: CoeffElement):
  """½(1 + iJ^*)(ω_a + i dθ_a + dG)."""
  chart = J.chart
  n = chart.n
  base = [CoeffElement.zero(chart)] * (2 * n)
  base[a] = CoeffElement.const(chart, 1)
  base[n + a] = CoeffElement.const(chart, I_UNIT)
  dG = b_differential(G)
  return project01(J, [x + y for x, y in zip(base, dG)])


def _layer_forms(xi, M):
  """Layer-M coefficient 1-forms of a covector, μ_q e^{iθ_q} split off."""
  chart = xi[0].chart
  per_q: dict = {}
  for i, c in enumerate(xi):
    for q, coeff in layer_decomposition(c, M, shift_theta=True).items():
      per_q.setdefault(q, [CoeffElement.zero(chart)] * len(xi))[i] = coeff
  return {q: covector_to_form(v) for q, v in sorted(per_q.items())}


def _validate_gauge(chart, gauge):
  for key, c in (gauge or {}).items():
    if not is_holomorphic_on_stratum(c):
      raise InvalidPresentation("gauge functions must be holomorphic on V", key)


def correct_to_order(J: BACS, seed: SeedChart | None, N_target: int, *,
                     degree_cap: int = DEFAULT_DEGREE_CAP, threads: int = 1,
                     gauge: Mapping | None = None):
  """Order-by-order ∂̄-correction of a seed chart up to I^{N_target}.

  ``gauge`` maps ("g", a, q) or ("h", j, q), with the 1-based frame index
  used by CorrectionFamily (h indices run from k+1 to n), to a holomorphic function on V
  added to the corresponding layer solution.  Returns the correction family
  and the corrected chart; raises NotIntegrable when a layer residual fails
  to be ∂̄-closed."""
  chart = J.chart
  k, r = chart.k, chart.free_rank
  if N_target < 1:
    raise InvalidPresentation("N_target must be at least 1")
  seed = seed or SeedChart.standard(chart)
  if seed.chart != chart:
    raise InvalidPresentation("seed lives on a different chart")
  gauge = dict(gauge or {})
  _validate_gauge(chart, gauge)
  g_coeffs = [dict() for _ in range(k)]
  h_coeffs = [dict() for _ in range(r)]
  for a, G in enumerate(seed.log_seed):
    for q, c in layer_decomposition_all(G).items():
      g_coeffs[a][q] = c

  def num(kind, idx):
    return idx + 1 if kind == "g" else k + idx + 1

  def g_elem(a):
    return _assemble(chart, g_coeffs[a]).truncate(N_target)

  def h_elem(j):
    return seed.z[j] + _assemble(chart, h_coeffs[j]).truncate(N_target)

  def residuals():
    res = [("g", a, _log_residual(J, a, g_elem(a))) for a in range(k)]
    res += [("h", j, dbar(J, h_elem(j))) for j in range(r)]
    return res

  for kind, idx, xi in residuals():
    if covector_order(xi) < 1:
      raise PreconditionResidual(
          f"seed residual for {kind}{num(kind, idx)} is not in I^1", {"component": f"{kind}{num(kind, idx)}"})

  def solve(item, M):
    kind, idx, xi = item
    out = []
    for q, rho in _layer_forms(xi, M).items():
      d = closedness_defect(rho)
      if d is not None:
        raise NotIntegrable(
            f"layer {M} residual for {kind}{num(kind, idx)} at μ-key {list(q)} is not"
            " ∂̄-closed", {"layer": M, "component": f"{kind}{num(kind, idx)}",
                          "q": list(chart.Q.to_ambient(q)), "dbar": repr(d)})
      try:
        alpha = poincare_solve(rho, degree_cap=degree_cap)
      except NotExact as e:
        raise NotIntegrable(f"layer {M} residual for {kind}{num(kind, idx)} is not exact",
                            {"layer": M, "component": f"{kind}{num(kind, idx)}",
                             "q": list(chart.Q.to_ambient(q))}) from e
      sol = -alpha.components.get((), CoeffElement.zero(chart))
      extra = gauge.get((kind, num(kind, idx), tuple(chart.Q.to_ambient(q))))
      if extra is not None:
        sol = sol + extra
      if sol.total_z_degree() > degree_cap:
        raise DegreeOverflow(f"z-degree exceeds the cap {degree_cap}",
                             {"layer": M, "component": f"{kind}{num(kind, idx)}"})
      out.append((q, sol))
    return out

  for M in range(1, N_target):
    items = residuals()
    for kind, idx, xi in items:
      if covector_order(xi) < M:  # pragma: no cover - invariant of the loop
        raise NotIntegrable(f"residual dropped below order {M}",
                            {"layer": M, "component": f"{kind}{num(kind, idx)}"})
    if threads > 1:
      with ThreadPoolExecutor(max_workers=threads) as ex:
        sols = list(ex.map(lambda it: solve(it, M), items))
    else:
      sols = [solve(it, M) for it in items]
    for (kind, idx, _), found in zip(items, sols):
      target = g_coeffs[idx] if kind == "g" else h_coeffs[idx]
      for q, s in found:
        prev = target.get(q)
        s = s if prev is None else prev + s
        if s.is_zero():
          target.pop(q, None)
        else:
          target[q] = s

  family = CorrectionFamily(
      {(a + 1, tuple(chart.Q.to_ambient(q))): c
       for a in range(k) for q, c in sorted(g_coeffs[a].items())},
      {(k + j + 1, tuple(chart.Q.to_ambient(q))): c
       for j in range(r) for q, c in sorted(h_coeffs[j].items())},
      N_target, gauge)
  corrected = assemble_chart(J, [g_elem(a) for a in range(k)],
                             [h_elem(j) for j in range(r)], N_target)
  return family, corrected


def layer_decomposition_all(f: CoeffElement) -> dict:
  """Every μ_q e^{iθ_q} coefficient of f, over all layers."""
  out = {}
  for N in sorted({f.chart.layer(q) for q in f.mu_keys()}):
    out.update(layer_decomposition(f, N, shift_theta=True))
  return out


def assemble_chart(J: BACS, g: Sequence[CoeffElement], z: Sequence[CoeffElement],
                   N: int) -> CorrectedChart:
  chart = J.chart
  Q = chart.Q
  qs = sorted(q for L in range(1, N) for q in Q.layer_elements_intrinsic(L))
  hol, mu, th, orders = {}, {}, {}, {}
  for q in qs:
    qa = tuple(Q.to_ambient(q))
    S = CoeffElement.zero(chart)
    for qi, ga in zip(q, g):
      if qi:
        S = S + ga.scale(qi)
    re = (S + S.conjugate()) * HALF
    im = (S - S.conjugate()) * QQI(0, Fraction(-1, 2))
    hol[qa] = (CoeffElement.holomorphic_monomial(chart, q) * exp_truncated(S, N)).truncate(N)
    mu[qa] = (CoeffElement.mu(chart, q) * exp_truncated(re, N)).truncate(N)
    th[qa] = CoeffElement.fourier(chart, q) * exp_truncated(im * I_UNIT, N)
    orders[f"mu{list(qa)}"] = covector_order(dbar(J, hol[qa]))
  for j, zj in enumerate(z):
    orders[f"z{j + 1}"] = covector_order(dbar(J, zj))
  return CorrectedChart(hol, mu, th, list(z), N, orders)
