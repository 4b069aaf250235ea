"""Finitely generated submonoids of Z^r: validation, units, faces, duals and
the filtration Q_N of a sharp monoid by sums of N nonzero elements.

All computations are exact.  Internally every monoid is described in
*intrinsic* coordinates: a Hermite basis of the group P^gp, so that
P^gp = Z^d.  Public results are returned in the ambient coordinates of the
presentation unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import floor
from typing import Iterable, Sequence

from sympy import Matrix, Poly, groebner, symbols

from . import _linalg as la
from .errors import (HasTorsion, InvalidPresentation, NotInMonoid, NotIntegral,
                     NotSaturated, NotSharp, RankOverflow)

LatticeVector = tuple[int, ...]
Relation = tuple[tuple[int, ...], tuple[int, ...]]

DEFAULT_MAX_CANDIDATES = 200_000
DEFAULT_SEARCH_NODES = 2_000_000


def _vadd(u, v):
  return tuple(a + b for a, b in zip(u, v))


def _vsub(u, v):
  return tuple(a - b for a, b in zip(u, v))


def _vscale(c, v):
  return tuple(c * a for a in v)


@dataclass(frozen=True)
class MonoidPresentation:
  """Generators p_1..p_m in Z^r together with relations sum a_i p_i = sum b_i p_i."""

  ambient_rank: int
  generators: tuple[LatticeVector, ...]
  relations: tuple[Relation, ...] = ()

  def __post_init__(self):
    r = self.ambient_rank
    if not isinstance(r, int) or r < 0:
      raise InvalidPresentation("ambient rank must be a nonnegative integer", r)
    gens = tuple(tuple(int(x) for x in g) for g in self.generators)
    for i, g in enumerate(gens):
      if len(g) != r:
        raise InvalidPresentation(
            f"generator {i + 1} has length {len(g)}, expected {r}", g)
    if len(set(gens)) != len(gens):
      dup = next(g for g in gens if gens.count(g) > 1)
      raise InvalidPresentation("duplicate generator", dup)
    m = len(gens)
    rels = []
    for j, rel in enumerate(self.relations):
      a, b = (tuple(int(x) for x in side) for side in rel)
      if len(a) != m or len(b) != m:
        raise InvalidPresentation(
            f"relation {j + 1} has sides of length {len(a)} and {len(b)},"
            f" expected {m}", rel)
      if min(a + b, default=0) < 0:
        raise InvalidPresentation(f"relation {j + 1} has negative exponents", rel)
      rels.append((a, b))
    object.__setattr__(self, "generators", gens)
    object.__setattr__(self, "relations", tuple(rels))

  @property
  def num_generators(self) -> int:
    return len(self.generators)

  def combination(self, coeffs: Sequence[int]) -> LatticeVector:
    out = (0,) * self.ambient_rank
    for c, g in zip(coeffs, self.generators):
      if c:
        out = _vadd(out, _vscale(c, g))
    return out


@dataclass(frozen=True)
class Face:
  """A face, recorded by the generators it contains."""

  generator_indices: frozenset[int]
  codim: int

  def __repr__(self):
    return f"Face({sorted(self.generator_indices)}, codim={self.codim})"


@dataclass(frozen=True)
class FiltrationLayer:
  level: int
  elements: frozenset[LatticeVector]


@dataclass(eq=False)
class WeaklyToricMonoid:
  """A validated fine, saturated, torsion-free monoid.

  Build instances with :func:`validate` (or :func:`monoid`).
  """

  presentation: MonoidPresentation
  gp_rank: int
  gp_basis: tuple[LatticeVector, ...]
  gen_coords: tuple[tuple[int, ...], ...]
  facets: tuple[tuple[int, ...], ...]
  unit_generators: frozenset[int]
  unit_lattice_basis: tuple[LatticeVector, ...]
  _cache: dict = field(default_factory=dict, repr=False)

  # -- basic structure ---------------------------------------------------
  @property
  def rank(self) -> int:
    return self.gp_rank

  @property
  def ambient_rank(self) -> int:
    return self.presentation.ambient_rank

  @property
  def generators(self) -> tuple[LatticeVector, ...]:
    return self.presentation.generators

  @property
  def unit_rank(self) -> int:
    return len(self.unit_lattice_basis)

  @property
  def is_sharp(self) -> bool:
    return self.unit_rank == 0

  is_toric = is_sharp

  @property
  def sharp_quotient(self) -> "WeaklyToricMonoid | None":
    if self.is_sharp:
      return None
    if "sharp" not in self._cache:
      self._cache["sharp"] = _sharp_quotient(self)
    return self._cache["sharp"][0]

  def to_intrinsic(self, v: Sequence[int]):
    """Coordinates of an ambient vector in the gp basis, None if outside P^gp."""
    v = tuple(int(x) for x in v)
    if len(v) != self.ambient_rank:
      raise InvalidPresentation(f"vector {v} has wrong length", v)
    return la.coords_in_basis(self.gp_basis, v)

  def to_ambient(self, c: Sequence[int]) -> LatticeVector:
    out = (0,) * self.ambient_rank
    for ci, b in zip(c, self.gp_basis):
      if ci:
        out = _vadd(out, _vscale(ci, b))
    return out

  def contains_intrinsic(self, c: Sequence[int]) -> bool:
    return all(la.dot(n, c) >= 0 for n in self.facets)

  def contains(self, v: Sequence[int]) -> bool:
    c = self.to_intrinsic(v)
    return c is not None and self.contains_intrinsic(c)

  def decompose(self, v: Sequence[int]) -> tuple[int, ...]:
    """Coefficients n with v = sum n_i p_i; n_i >= 0 except on unit generators."""
    c = self.to_intrinsic(v)
    if c is None or not self.contains_intrinsic(c):
      raise NotInMonoid(f"{tuple(v)} is not in the monoid", tuple(v))
    sol = _search_decomposition(self.gen_coords, c, self.facets,
                                self.unit_generators)
    if sol is None:  # cannot happen for a saturated monoid
      raise NotInMonoid(f"{tuple(v)} has no decomposition", tuple(v))
    return sol

  # -- sharp structure -----------------------------------------------------
  def _require_sharp(self):
    if not self.is_sharp:
      raise NotSharp("monoid has nontrivial units",
                     [self.generators[i] for i in sorted(self.unit_generators)])

  def hilbert_basis_intrinsic(self) -> tuple[tuple[int, ...], ...]:
    """Irreducible elements (intrinsic coordinates), sorted."""
    self._require_sharp()
    if "hb" not in self._cache:
      self._cache["hb"] = tuple(sorted(_hilbert_basis(
          self.gen_coords, self.facets, self.gp_rank)))
    return self._cache["hb"]

  def hilbert_basis(self) -> list[LatticeVector]:
    return [self.to_ambient(c) for c in self.hilbert_basis_intrinsic()]

  def grading(self) -> tuple[int, ...]:
    """An integral functional, positive on every nonzero element of a sharp P."""
    g = (0,) * self.gp_rank
    for n in self.facets:
      g = _vadd(g, n)
    return g

  def layer_intrinsic(self, c: Sequence[int]) -> int:
    """Largest N with c a sum of N nonzero elements (the filtration level)."""
    self._require_sharp()
    c = tuple(c)
    memo = self._cache.setdefault("ord", {})
    hb = self.hilbert_basis_intrinsic()
    stack = [c]
    while stack:
      x = stack[-1]
      if x in memo:
        stack.pop()
        continue
      if not any(x):
        memo[x] = 0
        stack.pop()
        continue
      if not self.contains_intrinsic(x):
        raise NotInMonoid(f"{self.to_ambient(x)} is not in the monoid",
                          self.to_ambient(x))
      subs = [_vsub(x, h) for h in hb]
      subs = [s for s in subs if self.contains_intrinsic(s)]
      pending = [s for s in subs if s not in memo]
      if pending:
        stack.extend(pending)
        continue
      memo[x] = 1 + max(memo[s] for s in subs)
      stack.pop()
    return memo[c]

  def layer(self, v: Sequence[int]) -> int:
    c = self.to_intrinsic(v)
    if c is None:
      raise NotInMonoid(f"{tuple(v)} is not in the monoid", tuple(v))
    return self.layer_intrinsic(c)

  def layer_elements_intrinsic(self, N: int) -> frozenset:
    self._require_sharp()
    key = ("layers", N)
    if key not in self._cache:
      hb = self.hilbert_basis_intrinsic()
      level = {(0,) * self.gp_rank}
      for _ in range(N):
        level = {_vadd(s, h) for s in level for h in hb}
      self._cache[key] = frozenset(
          x for x in level if self.layer_intrinsic(x) == N)
    return self._cache[key]

  def __repr__(self):
    p = self.presentation
    return (f"WeaklyToricMonoid(generators={list(p.generators)}, "
            f"gp_rank={self.gp_rank}, unit_rank={self.unit_rank})")


# ---------------------------------------------------------------------------
# validation


def monoid(generators: Sequence[Sequence[int]],
           relations: Sequence[Relation] | None = None,
           ambient_rank: int | None = None, **kw) -> WeaklyToricMonoid:
  """Convenience constructor; a complete relation set is computed when
  ``relations`` is None."""
  gens = [tuple(int(x) for x in g) for g in generators]
  if ambient_rank is None:
    if not gens:
      raise InvalidPresentation("ambient rank needed for an empty generator list")
    ambient_rank = len(gens[0])
  if relations is None:
    relations = toric_relations(gens)
  return validate(MonoidPresentation(ambient_rank, tuple(gens), tuple(relations)), **kw)


def validate(presentation: MonoidPresentation, *,
             max_candidates: int = DEFAULT_MAX_CANDIDATES) -> WeaklyToricMonoid:
  """Check that the presentation defines a weakly toric monoid."""
  p = presentation
  m, r = p.num_generators, p.ambient_rank
  for j, (a, b) in enumerate(p.relations):
    lhs, rhs = p.combination(a), p.combination(b)
    if lhs != rhs:
      raise NotIntegral(
          f"relation {j + 1} fails in the ambient lattice: {lhs} != {rhs}",
          {"relation": j + 1, "lhs": lhs, "rhs": rhs})
  # torsion of the presented group Z^m / (relation lattice)
  rel_rows = [_vsub(a, b) for a, b in p.relations]
  if rel_rows and m:
    diag, _, V = la.smith(rel_rows, m)
    Vinv = Matrix(V).inv()
    for i, d in enumerate(diag):
      if d > 1:
        coeffs = tuple(int(x) for x in Vinv.row(i))
        raise HasTorsion(
            f"the combination {coeffs} of generators is a nonzero torsion"
            f" element of order {d} in the presented group",
            {"coefficients": coeffs, "order": d})
  basis = tuple(la.lattice_basis(p.generators, r))
  d = len(basis)
  coords = tuple(la.coords_in_basis(basis, g) for g in p.generators)
  facets = _facets(coords, d)
  units = frozenset(i for i, c in enumerate(coords)
                    if all(la.dot(n, c) == 0 for n in facets))
  # saturation: every lattice point of the cone is a nonnegative combination
  for cand in _cone_candidates(coords, d, max_candidates):
    if _search_decomposition(coords, cand, facets, units) is None:
      amb = _to_ambient(basis, cand, r)
      raise NotSaturated(f"{amb} lies in the cone and the group but not in"
                         " the monoid", amb)
  unit_basis = tuple(la.lattice_basis([p.generators[i] for i in sorted(units)], r))
  return WeaklyToricMonoid(p, d, basis, coords, facets, units, unit_basis)


def _to_ambient(basis, c, r):
  out = (0,) * r
  for ci, b in zip(c, basis):
    out = _vadd(out, _vscale(ci, b))
  return out


def _facets(coords, d) -> tuple[tuple[int, ...], ...]:
  """Primitive inward normals of the facets of cone(coords) in Z^d."""
  if d == 0:
    return ()
  found = set()
  for idx in combinations(range(len(coords)), d - 1):
    sub = [coords[i] for i in idx]
    if la.rank_q(sub) != d - 1 and d > 1:
      continue
    n = la.hyperplane_normal(sub, d)
    if n is None:
      continue
    vals = [la.dot(n, c) for c in coords]
    if all(v >= 0 for v in vals):
      found.add(n)
    if all(v <= 0 for v in vals):
      found.add(tuple(-x for x in n))
  # a normal with all values zero cannot occur since the coords span Z^d
  return tuple(sorted(found))


def _parallelepiped_points(B, d, limit):
  """Lattice points of the half-open parallelepiped spanned by the rows of B."""
  M = Matrix([list(b) for b in B]).T
  Minv = M.inv()
  Minv = [[Fraction(int(x.p), int(x.q)) for x in Minv.row(i)] for i in range(d)]

  def reduce(x):
    t = [sum(Minv[i][j] * x[j] for j in range(d)) for i in range(d)]
    t = [ti - floor(ti) for ti in t]
    out = [sum(B[j][i] * t[j] for j in range(d)) for i in range(d)]
    return tuple(int(v) for v in out)

  zero = (0,) * d
  seen = {zero}
  frontier = [zero]
  units = [tuple(int(i == j) for j in range(d)) for i in range(d)]
  while frontier:
    nxt = []
    for x in frontier:
      for e in units:
        y = reduce(_vadd(x, e))
        if y not in seen:
          seen.add(y)
          nxt.append(y)
          if len(seen) > limit:
            raise RankOverflow("parallelepiped enumeration exceeded the"
                               f" configured bound {limit}", limit)
    frontier = nxt
  return seen


def _cone_candidates(rays, d, limit) -> list[tuple[int, ...]]:
  """A finite generating set of cone(rays) ∩ Z^d (rays span QQ^d)."""
  out = {la.primitive(v) for v in rays if any(v)}
  total = 0
  for idx in la.independent_subsets(rays, d, d):
    pts = _parallelepiped_points([rays[i] for i in idx], d, limit)
    total += len(pts)
    if total > limit:
      raise RankOverflow(f"Hilbert basis candidates exceed the configured"
                         f" bound {limit}", limit)
    out.update(x for x in pts if any(x))
  return sorted(out)


def _hilbert_basis(rays, ineqs, d, limit=DEFAULT_MAX_CANDIDATES):
  """Hilbert basis of the pointed cone {x : <n, x> >= 0 for n in ineqs},
  which is assumed to be generated by ``rays``."""
  cands = _cone_candidates(rays, d, limit)

  def in_cone(x):
    return all(la.dot(n, x) >= 0 for n in ineqs)

  return [c for c in cands
          if not any(g != c and in_cone(_vsub(c, g)) for g in cands)]


def _search_decomposition(coords, target, facets, units,
                          max_nodes=DEFAULT_SEARCH_NODES):
  """Bounded search for target = sum n_i coords[i] with n_i in N
  (integers on unit generators).  Returns the coefficient tuple or None."""
  m = len(coords)
  grading = (0,) * len(target)
  for n in facets:
    grading = _vadd(grading, n)
  nonunit = [i for i in range(m) if i not in units]
  unit_list = [i for i in range(m) if i in units]
  weights = {i: la.dot(grading, coords[i]) for i in nonunit}
  budget = la.dot(grading, target)
  if budget < 0:
    return None
  nodes = [0]

  def finish(rest):
    sol = la.solve_integer([coords[i] for i in unit_list], rest)
    return sol

  def dfs(pos, rest, budget, acc):
    nodes[0] += 1
    if nodes[0] > max_nodes:
      raise RankOverflow("membership search exceeded its node bound", max_nodes)
    if any(la.dot(n, rest) < 0 for n in facets):
      return None
    if budget == 0:
      sol = finish(rest)
      if sol is None:
        return None
      out = [0] * m
      for i, c in acc:
        out[i] = c
      for i, c in zip(unit_list, sol):
        out[i] = c
      return tuple(out)
    if pos == len(nonunit):
      return None
    i = nonunit[pos]
    w = weights[i]
    for c in range(budget // w, -1, -1):
      res = dfs(pos + 1, _vsub(rest, _vscale(c, coords[i])), budget - c * w,
                acc + [(i, c)] if c else acc)
      if res is not None:
        return res
    return None

  return dfs(0, tuple(target), budget, [])


# ---------------------------------------------------------------------------
# relations


def toric_relations(vectors: Sequence[Sequence[int]]) -> list[Relation]:
  """A generating set of the relations among integer vectors, as the binomial
  generators of the lattice ideal (Groebner elimination)."""
  vectors = [tuple(int(x) for x in v) for v in vectors]
  m = len(vectors)
  if m == 0:
    return []
  dim = len(vectors[0])
  xs = symbols(f"x0:{m}")
  ts = symbols(f"t0:{dim}") if dim else ()
  w = symbols("w")
  eqs = []
  for x, v in zip(xs, vectors):
    c = max(0, -min(v, default=0))
    mono = w ** c
    for t, e in zip(ts, v):
      mono *= t ** (e + c)
    eqs.append(x - mono)
  prod_t = w
  for t in ts:
    prod_t *= t
  eqs.append(prod_t - 1)
  G = groebner(eqs, *ts, w, *xs, order="lex")
  elim = set(ts) | {w}
  rels = []
  for g in G.exprs:
    if g.free_symbols & elim:
      continue
    terms = Poly(g, *xs).terms()
    if len(terms) != 2:
      raise InvalidPresentation("non-binomial relation generator", g)
    (ea, ca), (eb, cb) = terms
    if ca + cb != 0:
      raise InvalidPresentation("non-binomial relation generator", g)
    rels.append((tuple(ea), tuple(eb)))
  return sorted(rels)


# ---------------------------------------------------------------------------
# structure


def _sharp_quotient(P: WeaklyToricMonoid):
  d = P.gp_rank
  unit_coords = [P.gen_coords[i] for i in sorted(P.unit_generators)]
  W = la.integer_kernel(la.lattice_basis(unit_coords, d), d)
  proj = lambda c: tuple(la.dot(w, c) for w in W)
  images = []
  for i, c in enumerate(P.gen_coords):
    if i in P.unit_generators:
      continue
    im = proj(c)
    if any(im) and im not in images:
      images.append(im)
  k = len(W)
  Q = validate(MonoidPresentation(k, tuple(images),
                                  tuple(toric_relations(images))))
  return Q, tuple(W)


def split_units(P: WeaklyToricMonoid) -> tuple[WeaklyToricMonoid, int]:
  """Return the sharp quotient Q and n = rank of the units, P ≅ Q × Z^n."""
  if P.is_sharp:
    return P, 0
  return P.sharp_quotient, P.unit_rank


def sharp_projection(P: WeaklyToricMonoid):
  """Matrix (rows) of the projection from intrinsic coordinates of P onto
  those of its sharp quotient's ambient lattice."""
  if P.is_sharp:
    return tuple(tuple(int(i == j) for j in range(P.gp_rank))
                 for i in range(P.gp_rank))
  P.sharp_quotient
  return P._cache["sharp"][1]


def _closure(P: WeaklyToricMonoid, idx: Iterable[int]) -> frozenset[int]:
  idx = set(idx)
  out = set(range(P.presentation.num_generators))
  for n in P.facets:
    vals = [la.dot(n, c) for c in P.gen_coords]
    if all(vals[i] == 0 for i in idx):
      out &= {i for i, v in enumerate(vals) if v == 0}
  return frozenset(out)


def face_codim(P: WeaklyToricMonoid, idx: Iterable[int]) -> int:
  sub = [P.gen_coords[i] for i in idx]
  return P.gp_rank - la.rank_q(sub) if sub else P.gp_rank


def face_of(P: WeaklyToricMonoid, idx: Iterable[int]) -> Face:
  """The smallest face containing the given generators."""
  cl = _closure(P, idx)
  return Face(cl, face_codim(P, cl))


def is_face(P: WeaklyToricMonoid, idx: Iterable[int]) -> bool:
  idx = frozenset(idx)
  return _closure(P, idx) == idx


def enumerate_faces(P: WeaklyToricMonoid) -> list[Face]:
  """All faces, sorted by codimension then generator indices."""
  if "faces" not in P._cache:
    m = P.presentation.num_generators
    facet_sets = set()
    for n in P.facets:
      facet_sets.add(frozenset(i for i, c in enumerate(P.gen_coords)
                               if la.dot(n, c) == 0))
    faces = {frozenset(range(m))}
    frontier = set(facet_sets)
    while frontier:
      faces |= frontier
      frontier = {a & b for a in frontier for b in facet_sets} - faces
    out = [Face(f, face_codim(P, f)) for f in faces]
    out.sort(key=lambda F: (F.codim, sorted(F.generator_indices)))
    P._cache["faces"] = out
  return list(P._cache["faces"])


def face_monoid(P: WeaklyToricMonoid, F: Face) -> tuple[WeaklyToricMonoid, list[int]]:
  """The face as a monoid in its own right, with the generator index map."""
  idx = sorted(F.generator_indices)
  gens = tuple(P.generators[i] for i in idx)
  rels = []
  for a, b in P.presentation.relations:
    supp = {i for i, x in enumerate(a) if x} | {i for i, x in enumerate(b) if x}
    if supp <= set(idx):
      rels.append((tuple(a[i] for i in idx), tuple(b[i] for i in idx)))
  pres = MonoidPresentation(P.ambient_rank, gens, tuple(rels))
  return validate(pres), idx


def dual_monoid(P: WeaklyToricMonoid, *,
                max_candidates: int = DEFAULT_MAX_CANDIDATES) -> WeaklyToricMonoid:
  """Hom(P, N), presented in coordinates dual to the gp basis of P."""
  d = P.gp_rank
  unit_coords = [P.gen_coords[i] for i in sorted(P.unit_generators)]
  W = la.integer_kernel(unit_coords, d) if unit_coords else [
      tuple(int(i == j) for j in range(d)) for i in range(d)]
  rays = [la.coords_in_basis(W, n) for n in P.facets]
  ineqs = [tuple(la.dot(w, c) for w in W) for c in P.gen_coords]
  hb = _hilbert_basis(rays, ineqs, len(W), max_candidates) if rays else []
  gens = sorted(_to_ambient(W, c, d) for c in hb)
  return validate(MonoidPresentation(d, tuple(gens),
                                     tuple(toric_relations(gens))))


def eta(P: WeaklyToricMonoid, D: WeaklyToricMonoid,
        p: Sequence[int]) -> LatticeVector:
  """The image of p ∈ P (ambient) in Hom(D, N), in coordinates dual to D's
  gp basis, where D = dual_monoid(P)."""
  c = P.to_intrinsic(p)
  return tuple(la.dot(b, c) for b in D.gp_basis)


def double_dual_check(P: WeaklyToricMonoid) -> bool:
  """True iff the natural map P -> P^vv is an isomorphism."""
  D = dual_monoid(P)
  DD = dual_monoid(D)
  if DD.gp_rank != P.gp_rank:
    return False
  # eta is a lattice isomorphism P^gp -> Z^d ...
  mat = [[la.dot(b, e) for b in D.gp_basis]
         for e in [tuple(int(i == j) for j in range(P.gp_rank))
                   for i in range(P.gp_rank)]]
  if abs(la.det_int(mat)) != 1:
    return False
  # ... carrying the irreducibles of P onto those of P^vv
  images = sorted(eta(P, D, h) for h in P.hilbert_basis())
  return images == sorted(DD.hilbert_basis())


def filtration_layers(Q: WeaklyToricMonoid, N_max: int) -> list[FiltrationLayer]:
  """Layers Q_N minus Q_{N+1} for N = 0..N_max, in ambient coordinates."""
  Q._require_sharp()
  if N_max < 0:
    raise ValueError("N_max must be nonnegative")
  return [FiltrationLayer(N, frozenset(Q.to_ambient(c)
                                       for c in Q.layer_elements_intrinsic(N)))
          for N in range(N_max + 1)]


def free_monoid(k: int, free_rank: int = 0) -> WeaklyToricMonoid:
  """N^k × Z^free_rank with the standard presentation."""
  r = k + free_rank
  e = lambda i, s=1: tuple(s * int(i == j) for j in range(r))
  gens = [e(i) for i in range(k)]
  rels = []
  for j in range(k, r):
    gens += [e(j), e(j, -1)]
  m = len(gens)
  for t in range(free_rank):
    a = tuple(int(i in (k + 2 * t, k + 2 * t + 1)) for i in range(m))
    rels.append((a, (0,) * m))
  return validate(MonoidPresentation(r, tuple(gens), tuple(rels)))
