"""Model spaces X_P = Hom(P, [0, ∞)) realised by generator values.

A point is stored as the tuple (x(p_1), ..., x(p_m)).  It is a monoid
morphism iff the values satisfy every binomial relation among the
generators and the support is a face.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import _linalg as la
from .errors import InvalidPoint, NotSharp
from .lattice_monoid import (Face, WeaklyToricMonoid, enumerate_faces,
                             face_codim, face_monoid, is_face)

FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class BinomialEmbedding:
  ambient_dim: int
  equations: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

  def as_strings(self) -> list[str]:
    return [f"{_mono(a)} = {_mono(b)}" for a, b in self.equations]


def _mono(e: Sequence[int]) -> str:
  parts = []
  for i, k in enumerate(e):
    if k == 1:
      parts.append(f"x{i + 1}")
    elif k > 1:
      parts.append(f"x{i + 1}^{k}")
  return "*".join(parts) or "1"


@dataclass(frozen=True)
class StratumDescriptor:
  face: Face
  depth: int
  dim: int


@dataclass(frozen=True, eq=False)
class ModelPoint:
  monoid: WeaklyToricMonoid
  generator_values: tuple
  exact: bool = True

  def __eq__(self, other):
    return (isinstance(other, ModelPoint) and other.monoid is self.monoid
            and other.generator_values == self.generator_values)

  def __hash__(self):
    return hash(self.generator_values)


def _pow(x, n):
  if n == 0:
    return 1 if isinstance(x, Fraction) else 1.0
  return x ** n


def _close(a, b, exact):
  return a == b if exact else abs(a - b) <= FLOAT_TOL * max(1.0, abs(a), abs(b))


def embed(P: WeaklyToricMonoid) -> BinomialEmbedding:
  """Equations x^a = x^b cutting X_P out of [0, ∞)^m."""
  pres = P.presentation
  return BinomialEmbedding(pres.num_generators, pres.relations)


def point(P: WeaklyToricMonoid, values: Sequence, *, exact: bool = True) -> ModelPoint:
  """Validate generator values and return the point of X_P."""
  m = P.presentation.num_generators
  if len(values) != m:
    raise InvalidPoint(f"expected {m} generator values, got {len(values)}",
                       tuple(values))
  vals = tuple(Fraction(v) if exact else float(v) for v in values)
  if any(v < 0 for v in vals):
    raise InvalidPoint("generator values must be nonnegative", vals)
  supp = frozenset(i for i, v in enumerate(vals)
                   if (v != 0 if exact else abs(v) > FLOAT_TOL))
  if not is_face(P, supp):
    raise InvalidPoint("support of the point does not generate a face",
                       sorted(supp))
  for j, (a, b) in enumerate(P.presentation.relations):
    lhs = rhs = 1
    for i in range(m):
      lhs *= _pow(vals[i], a[i])
      rhs *= _pow(vals[i], b[i])
    if not _close(lhs, rhs, exact):
      raise InvalidPoint(f"relation {j + 1} violated: {lhs} != {rhs}",
                         {"relation": j + 1})
  # every lattice relation among the support generators must hold as well
  idx = sorted(supp)
  cols = [P.gen_coords[i] for i in idx]
  rows = [[c[t] for c in cols] for t in range(P.gp_rank)]
  for kv in la.integer_kernel(rows, len(idx)) if idx else []:
    val = 1
    for i, e in zip(idx, kv):
      val *= _pow(vals[i], e)
    if not _close(val, 1, exact):
      raise InvalidPoint("values are not multiplicative on the support",
                         {"kernel_vector": kv})
  return ModelPoint(P, vals, exact)


def eval_lambda(x: ModelPoint, p: Sequence[int]):
  """λ_p(x) = x(p)."""
  coeffs = x.monoid.decompose(p)
  out = Fraction(1) if x.exact else 1.0
  for v, n in zip(x.generator_values, coeffs):
    out *= _pow(v, n)
  return out


def support_face(x: ModelPoint) -> Face:
  supp = [i for i, v in enumerate(x.generator_values)
          if (v != 0 if x.exact else abs(v) > FLOAT_TOL)]
  return Face(frozenset(supp), face_codim(x.monoid, supp))


def support_and_depth(x: ModelPoint) -> StratumDescriptor:
  F = support_face(x)
  return StratumDescriptor(F, F.codim, x.monoid.gp_rank - F.codim)


def face_inclusion(P: WeaklyToricMonoid, F: Face, y: ModelPoint) -> ModelPoint:
  """Extend a point of X_F by zero off F."""
  FM, idx = face_monoid(P, F)
  if len(y.generator_values) != len(idx):
    raise InvalidPoint("point is not over the given face", y.generator_values)
  zero = Fraction(0) if y.exact else 0.0
  vals = [zero] * P.presentation.num_generators
  for i, v in zip(idx, y.generator_values):
    vals[i] = v
  return point(P, vals, exact=y.exact)


def vertex(P: WeaklyToricMonoid) -> ModelPoint:
  """δ_0: sends 0 to 1 and every nonzero element to 0."""
  if not P.is_sharp:
    raise NotSharp("the vertex exists only for sharp monoids")
  return point(P, [0] * P.presentation.num_generators)


def random_point(P: WeaklyToricMonoid, F: Face | None = None,
                 rng: random.Random | None = None, *,
                 exact: bool = True, max_num: int = 5) -> ModelPoint:
  """A random point whose support is exactly F (the interior when F is None).

  Positive rationals are drawn for a basis of F^gp and pushed to the
  generators multiplicatively, so all relations hold by construction."""
  rng = rng or random.Random(0)
  if F is None:
    F = Face(frozenset(range(P.presentation.num_generators)), 0)
  idx = sorted(F.generator_indices)
  basis = la.lattice_basis([P.gen_coords[i] for i in idx], P.gp_rank)
  t = [Fraction(rng.randint(1, max_num), rng.randint(1, max_num)) for _ in basis]
  vals = [Fraction(0)] * P.presentation.num_generators
  for i in idx:
    c = la.coords_in_basis(basis, P.gen_coords[i])
    v = Fraction(1)
    for tj, cj in zip(t, c):
      v *= tj ** cj
    vals[i] = v
  if not exact:
    vals = [float(v) for v in vals]
  return point(P, vals, exact=exact)


def strata(P: WeaklyToricMonoid) -> list[StratumDescriptor]:
  return [StratumDescriptor(F, F.codim, P.gp_rank - F.codim)
          for F in enumerate_faces(P)]
