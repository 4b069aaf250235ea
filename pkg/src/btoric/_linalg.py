"""Small exact linear algebra layer over ZZ, QQ and QQ(i).

Thin wrappers around sympy's normal forms and ``DomainMatrix`` so the rest of
the package works with plain tuples of Python ints / domain elements.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_decomp
from sympy.polys.domains import QQ, QQ_I, ZZ
from sympy.polys.matrices import DomainMatrix

IntVec = tuple[int, ...]


def _imat(rows: Sequence[Sequence[int]], ncols: int) -> Matrix:
  if not rows:
    return Matrix.zeros(0, ncols)
  return Matrix([list(map(int, r)) for r in rows])


def smith(rows: Sequence[Sequence[int]], ncols: int):
  """Return (diag, U, V) with U*A*V = S for the integer matrix A.

  ``diag`` lists the nonzero invariant factors; U and V are nested lists.
  """
  nrows = len(rows)
  if nrows == 0 or ncols == 0:
    eye = [[int(i == j) for j in range(ncols)] for i in range(ncols)]
    return [], [[int(i == j) for j in range(nrows)] for i in range(nrows)], eye
  A = _imat(rows, ncols)
  S, U, V = smith_normal_decomp(A, domain=ZZ)
  diag = [abs(int(S[i, i])) for i in range(min(S.shape)) if S[i, i] != 0]
  Ul = [[int(x) for x in U.row(i)] for i in range(U.rows)]
  Vl = [[int(x) for x in V.row(i)] for i in range(V.rows)]
  # normalise signs so that the diagonal is positive
  for i in range(len(diag)):
    if S[i, i] < 0:
      Ul[i] = [-x for x in Ul[i]]
  return diag, Ul, Vl


def lattice_basis(vectors: Sequence[Sequence[int]], dim: int) -> list[IntVec]:
  """Canonical (Hermite) Z-basis of the lattice spanned by ``vectors``."""
  vecs = [v for v in vectors if any(v)]
  if not vecs or dim == 0:
    return []
  cols = Matrix([list(v) for v in vecs]).T
  H = hermite_normal_form(cols)
  basis = [tuple(int(x) for x in H.col(j)) for j in range(H.cols)]
  return [b for b in basis if any(b)]


def solve_rational(basis: Sequence[Sequence[int]], v: Sequence[int]):
  """Solve sum_j c_j basis[j] = v over QQ; None if no solution."""
  if not basis:
    return () if not any(v) else None
  n = len(v)
  k = len(basis)
  M = DomainMatrix([[QQ(int(basis[j][i])) for j in range(k)] + [QQ(int(v[i]))]
                    for i in range(n)], (n, k + 1), QQ)
  R, pivots = M.rref()
  if k in pivots:
    return None
  sol = [QQ(0)] * k
  Rl = R.to_list()
  for row, p in enumerate(pivots):
    sol[p] = Rl[row][k]
  return tuple(Fraction(int(s.numerator), int(s.denominator)) for s in sol)


def coords_in_basis(basis: Sequence[Sequence[int]], v: Sequence[int]):
  """Integer coordinates of v in a lattice basis, or None if v is outside."""
  sol = solve_rational(basis, v)
  if sol is None or any(c.denominator != 1 for c in sol):
    return None
  return tuple(int(c) for c in sol)


def solve_integer(columns: Sequence[Sequence[int]], v: Sequence[int]):
  """Some integer x with sum_j x_j columns[j] = v, or None."""
  dim = len(v)
  if not columns:
    return () if not any(v) else None
  A = [[int(columns[j][i]) for j in range(len(columns))] for i in range(dim)]
  diag, U, V = smith(A, len(columns))
  Ub = [sum(U[i][j] * int(v[j]) for j in range(dim)) for i in range(dim)]
  y = [0] * len(columns)
  for i, d in enumerate(diag):
    if Ub[i] % d:
      return None
    y[i] = Ub[i] // d
  if any(Ub[i] for i in range(len(diag), dim)):
    return None
  return tuple(sum(V[i][j] * y[j] for j in range(len(columns)))
               for i in range(len(columns)))


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int) -> list[IntVec]:
  """Z-basis of {x in Z^ncols : A x = 0}, in Hermite form."""
  if not rows:
    return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
  diag, _, V = smith(rows, ncols)
  r = len(diag)
  kern = [tuple(V[i][j] for i in range(ncols)) for j in range(r, ncols)]
  return lattice_basis(kern, ncols)


def rank_q(rows: Sequence[Sequence], field=QQ) -> int:
  rows = [list(r) for r in rows]
  if not rows or not rows[0]:
    return 0
  M = DomainMatrix([[field.convert(x) for x in r] for r in rows],
                   (len(rows), len(rows[0])), field)
  return M.rank()


def det_int(rows: Sequence[Sequence[int]]) -> int:
  if not rows:
    return 1
  return int(Matrix([list(r) for r in rows]).det())


def primitive(v: Sequence[int]) -> IntVec:
  from math import gcd
  g = 0
  for x in v:
    g = gcd(g, int(x))
  if g == 0:
    return tuple(int(x) for x in v)
  return tuple(int(x) // g for x in v)


def hyperplane_normal(vectors: Sequence[Sequence[int]], dim: int):
  """Primitive integer normal of the span of ``vectors`` if it is a
  hyperplane of QQ^dim, else None."""
  kern = integer_kernel(vectors, dim) if vectors else integer_kernel([], dim)
  if len(kern) != 1:
    return None
  return primitive(kern[0])


def dot(u: Sequence, v: Sequence):
  return sum(a * b for a, b in zip(u, v))


def independent_subsets(vectors: Sequence[Sequence[int]], size: int,
                        dim: int) -> Iterable[tuple[int, ...]]:
  for idx in combinations(range(len(vectors)), size):
    if rank_q([vectors[i] for i in idx]) == size:
      yield idx


def nullspace(rows: Sequence[Sequence], ncols: int, field=QQ_I) -> list[list]:
  """Basis (as lists of field elements) of the right kernel over ``field``."""
  if not rows:
    return [[field.one if i == j else field.zero for j in range(ncols)]
            for i in range(ncols)]
  M = DomainMatrix([[field.convert(x) for x in r] for r in rows],
                   (len(rows), ncols), field)
  N = M.nullspace()
  return [list(r) for r in N.to_list()] if N.shape[0] else []


def column_space(columns: Sequence[Sequence], nrows: int, field=QQ_I) -> list[list]:
  """A basis of the span of the given column vectors (pivot columns)."""
  if not columns:
    return []
  M = DomainMatrix([[field.convert(columns[j][i]) for j in range(len(columns))]
                    for i in range(nrows)], (nrows, len(columns)), field)
  _, pivots = M.rref()
  return [list(columns[p]) for p in pivots]
