"""Brute-force oracles, independent of the library's algorithms."""

from fractions import Fraction
from itertools import combinations, product

import sympy


def box(dim, lo, hi):
  return product(range(lo, hi + 1), repeat=dim)


def brute_faces(gens, bound=3):
  """Faces as generator-index sets: S is a face iff some integral functional
  in a small box is >= 0 on every generator and vanishes exactly on S."""
  d = len(gens[0])
  out = set()
  for ell in box(d, -bound, bound):
    vals = [sum(a * b for a, b in zip(ell, g)) for g in gens]
    if min(vals) < 0:
      continue
    out.add(frozenset(i for i, v in enumerate(vals) if v == 0))
  return out


def brute_rank(vectors):
  if not vectors:
    return 0
  return sympy.Matrix([list(v) for v in vectors]).rank()


def brute_filtration(member, dim, radius, N_max):
  """ord(x) = max N with x a sum of N nonzero elements, by dynamic programming
  over the lattice points of a box; returns {N: set of elements}."""
  pts = [p for p in box(dim, -radius, radius) if member(p)]
  pts.sort(key=lambda p: sum(abs(x) for x in p))
  S = set(pts)
  nonzero = [p for p in pts if any(p)]
  order = {}
  for x in sorted(pts, key=lambda p: (sum(map(abs, p)), p)):
    if not any(x):
      order[x] = 0
      continue
    best = 1
    for y in nonzero:
      r = tuple(a - b for a, b in zip(x, y))
      if any(r) and r in S and r in order:
        best = max(best, 1 + order[r])
    order[x] = best
  layers = {N: set() for N in range(N_max + 1)}
  for x, o in order.items():
    if o <= N_max:
      layers[o].add(x)
  return layers


def brute_irreducibles(member, dim, radius):
  pts = [p for p in box(dim, -radius, radius) if member(p) and any(p)]
  S = set(pts)
  irr = []
  for x in pts:
    if not any(tuple(a - b for a, b in zip(x, y)) in S for y in pts if y != x):
      irr.append(x)
  return sorted(irr)


def dbar_block_solve(beta_components, n, k, solve_for_degree):
  """Solve ∂̄α = β by a dense linear system over candidate monomials.

  Components are dicts {index tuple: {(m, a, b): coefficient}}; returns the
  solution in the same format or None if inconsistent.  The candidate space
  is every monomial obtained from β's monomials by raising one zbar
  exponent, all index tuples of the lower degree."""
  from sympy import I, Rational, Matrix, linsolve, symbols

  monos = set()
  for comp in beta_components.values():
    for (m, a, b) in comp:
      monos.add((m, a, b))
      for j in range(n - k):
        nb = list(b)
        nb[j] += 1
        monos.add((m, a, tuple(nb)))
  idxs = list(combinations(range(n), solve_for_degree))
  unknowns = [(I_, mono) for I_ in idxs for mono in sorted(monos)]
  syms = symbols(f"c0:{len(unknowns)}")

  def dbar_image(I_, mono, coeff, acc):
    m, a, b = mono
    for c in range(n):
      if c in I_:
        continue
      if c < k:
        if not m[c]:
          continue
        val, nm = coeff * I * Rational(m[c], 2), mono
      else:
        j = c - k
        if not b[j]:
          continue
        nb = list(b)
        nb[j] -= 1
        val, nm = coeff * b[j], (m, a, tuple(nb))
      sign = -1 if sum(1 for x in I_ if x < c) % 2 else 1
      J = tuple(sorted(I_ + (c,)))
      acc[(J, nm)] = acc.get((J, nm), 0) + sign * val

  acc = {}
  for (I_, mono), s in zip(unknowns, syms):
    dbar_image(I_, mono, s, acc)
  eqs = []
  keys = set(acc)
  for J, comp in beta_components.items():
    for mono in comp:
      keys.add((J, mono))
  for key in keys:
    J, mono = key
    rhs = beta_components.get(J, {}).get(mono, 0)
    eqs.append(sympy.expand(acc.get(key, 0) - rhs))
  sol = linsolve(eqs, syms)
  if not sol:
    return None
  (vals,) = sol
  free = {s: 0 for s in syms}
  out = {}
  for (I_, mono), v in zip(unknowns, vals):
    v = sympy.nsimplify(sympy.expand(v.subs(free)))
    if v != 0:
      out.setdefault(I_, {})[mono] = v
  return out
