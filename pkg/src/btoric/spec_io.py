"""Reading and writing job spec files (TOML).

A spec file holds any of the sections below; unknown sections are rejected
in strict mode.

  [monoid]        generators, optional relations / ambient_rank
  [chart]         free_rank (the chart is monoid × Z^free_rank)
  [[points]]      values (rationals as ints or "p/q" strings), exact
  [bacs]          kind = standard | matrix | perturbed; matrix
  [perturbation]  kind = pullback (subs, log_subs) | twisted (source, target, g)
  [seed]          kind = standard | custom (log_seed, z)
  [fields]        named b-vector fields, each a list of 2n elements
  [function]      f
  [frame]         kind = standard | custom (v, theta, x, y); optional shift

Ring elements are lists of records [q, m, a, b, re, im] with q and m in the
ambient coordinates of the monoid, a and b exponent lists of z and zbar, and
re, im rationals.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .b_calculus import BVectorField, Chart, CoeffElement, fraction_parts, gauss
from .errors import InvalidPresentation, ParseError

SECTIONS = ("monoid", "chart", "points", "bacs", "perturbation", "seed",
            "fields", "function", "frame")


@dataclass
class ParsedSpec:
  sections: dict
  text: str = ""
  source: str = "<string>"
  _locator: Any = field(default=None, repr=False)

  @property
  def digest(self) -> str:
    return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

  def has(self, name: str) -> bool:
    return name in self.sections

  def require(self, name: str):
    if name not in self.sections:
      raise ParseError(f"missing [{name}] section", 1, 1, f"a [{name}] section")
    return self.sections[name]

  def __eq__(self, other):
    return isinstance(other, ParsedSpec) and self.sections == other.sections


class _Locator:
  """Maps (section, key) to a 1-based (line, column) in the source text."""

  def __init__(self, text: str):
    self.lines = text.splitlines()

  def find(self, section: str, key: str | None = None):
    header = re.compile(r"^\s*\[\[?\s*" + re.escape(section) + r"(\.[^\]]*)?\s*\]\]?")
    start = None
    for i, line in enumerate(self.lines):
      if header.match(line):
        start = i
        if key is None:
          return i + 1, line.index("[") + 1
        break
    if start is None:
      return 1, 1
    keyre = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start + 1, len(self.lines)):
      line = self.lines[i]
      if re.match(r"^\s*\[", line) and i > start:
        break
      if keyre.match(line):
        return i + 1, line.index(key) + 1
    return start + 1, 1


def _fail(spec_loc: _Locator, section, key, message, hint):
  line, col = spec_loc.find(section, key)
  raise ParseError(message, line, col, hint)


_TOML_POS = re.compile(r"at line (\d+), column (\d+)")


def parse_text(text: str, *, strict: bool = True, source: str = "<string>") -> ParsedSpec:
  loc = _Locator(text)
  try:
    data = tomli.loads(text)
  except tomli.TOMLDecodeError as e:
    m = _TOML_POS.search(str(e))
    if m:
      line, col = int(m.group(1)), int(m.group(2))
    else:  # "at end of document"
      lines = text.splitlines() or [""]
      line, col = len(lines), len(lines[-1]) + 1
    msg = re.sub(r"\s*\((at end of document|at line \d+, column \d+)\)", "", str(e))
    raise ParseError(f"invalid TOML: {msg}", line, col, "valid TOML syntax") from None
  if not data:
    raise ParseError("no sections", 1, 1, "at least one section such as [monoid]")
  for name, val in data.items():
    if name not in SECTIONS:
      if strict:
        _fail(loc, name, None, f"unknown section [{name}]",
              "one of " + ", ".join(SECTIONS))
      continue
    if name == "points":
      if not isinstance(val, list):
        _fail(loc, name, None, "points must be an array of tables", "[[points]]")
    elif not isinstance(val, dict):
      _fail(loc, name, None, f"{name} must be a table", f"[{name}]")
  sections = {k: v for k, v in data.items() if k in SECTIONS}
  spec = ParsedSpec(sections, text, source, loc)
  _check_structure(spec)
  return spec


def parse_spec(path, *, strict: bool = True) -> ParsedSpec:
  p = Path(path)
  try:
    raw = p.read_bytes()
  except OSError as e:
    raise ParseError(f"cannot read {p}: {e.strerror}", 1, 1, "a readable file") from None
  try:
    text = raw.decode("utf-8")
  except UnicodeDecodeError as e:
    raise ParseError(f"input is not UTF-8 ({e.reason})", 1, 1, "UTF-8 text") from None
  return parse_text(text, strict=strict, source=str(p))


# ---------------------------------------------------------------------------
# structural validation


def _is_int(x):
  return isinstance(x, int) and not isinstance(x, bool)


def _int_vector(spec, section, key, v, length=None, what="vector"):
  if not isinstance(v, list) or not all(_is_int(x) for x in v):
    _fail(spec._locator, section, key, f"{what} must be a list of integers",
          "a list of integers")
  if length is not None and len(v) != length:
    _fail(spec._locator, section, key,
          f"{what}: expected {length} entries, got {len(v)}", f"{length} integers")
  return v


def rational(x, *, allow_float=False) -> Fraction:
  if isinstance(x, bool):
    raise ValueError("booleans are not numbers")
  if _is_int(x):
    return Fraction(x)
  if isinstance(x, str):
    return Fraction(x.strip())
  if isinstance(x, float) and allow_float:
    return Fraction(x)
  raise ValueError(f"{x!r} is not a rational")


def _check_structure(spec: ParsedSpec):
  s = spec.sections
  L = spec._locator
  allowed = {
      "monoid": {"generators", "relations", "ambient_rank"},
      "chart": {"free_rank"},
      "bacs": {"kind", "matrix"},
      "perturbation": {"kind", "subs", "log_subs", "source", "target", "g"},
      "seed": {"kind", "log_seed", "z"},
      "function": {"f"},
      "frame": {"kind", "v", "theta", "x", "y", "shift"},
  }
  for name, keys in allowed.items():
    if name in s:
      for key in s[name]:
        if key not in keys:
          _fail(L, name, key, f"unknown key '{key}' in [{name}]",
                "one of " + ", ".join(sorted(keys)))
  if "monoid" in s:
    mon = s["monoid"]
    if "generators" not in mon:
      _fail(L, "monoid", None, "[monoid] needs generators", "generators = [[...], ...]")
    gens = mon["generators"]
    if not isinstance(gens, list):
      _fail(L, "monoid", "generators", "generators must be a list", "a list of vectors")
    rank = mon.get("ambient_rank")
    if rank is not None and (not _is_int(rank) or rank < 0):
      _fail(L, "monoid", "ambient_rank", "ambient_rank must be a nonnegative integer",
            "an integer")
    if rank is None:
      if not gens:
        _fail(L, "monoid", "generators", "empty generator list needs ambient_rank",
              "ambient_rank = <int>")
      rank = len(gens[0]) if isinstance(gens[0], list) else None
    for i, g in enumerate(gens):
      _int_vector(spec, "monoid", "generators", g, rank, f"generator {i + 1}")
    m = len(gens)
    rels = mon.get("relations", [])
    if not isinstance(rels, list):
      _fail(L, "monoid", "relations", "relations must be a list", "[[lhs, rhs], ...]")
    for i, rel in enumerate(rels):
      if not isinstance(rel, list) or len(rel) != 2:
        _fail(L, "monoid", "relations", f"relation {i + 1} must be a pair [lhs, rhs]",
              "[lhs, rhs]")
      for side in rel:
        _int_vector(spec, "monoid", "relations", side, m, f"relation {i + 1}")
  if "chart" in s:
    fr = s["chart"].get("free_rank", 0)
    if not _is_int(fr) or fr < 0:
      _fail(L, "chart", "free_rank", "free_rank must be a nonnegative integer",
            "an integer >= 0")
  for i, p in enumerate(s.get("points", [])):
    if not isinstance(p, dict) or "values" not in p or not isinstance(p["values"], list):
      _fail(L, "points", None, f"point {i + 1} needs a values list", "values = [...]")
    extra = set(p) - {"values", "exact"}
    if extra:
      _fail(L, "points", sorted(extra)[0], f"unknown key in point {i + 1}", "values, exact")
    exact = p.get("exact", True)
    if not isinstance(exact, bool):
      _fail(L, "points", "exact", "exact must be a boolean", "true or false")
    for v in p["values"]:
      try:
        rational(v, allow_float=not exact)
      except (ValueError, ZeroDivisionError):
        _fail(L, "points", "values", f"point {i + 1}: {v!r} is not a rational",
              "integers or strings like \"3/2\"")
  if "bacs" in s:
    kind = s["bacs"].get("kind", "standard")
    if kind not in ("standard", "matrix", "perturbed"):
      _fail(L, "bacs", "kind", f"unknown bacs kind {kind!r}", "standard, matrix or perturbed")
    if kind == "matrix" and "matrix" not in s["bacs"]:
      _fail(L, "bacs", None, "matrix kind needs a matrix", "matrix = [[...]]")
    if kind == "perturbed" and "perturbation" not in s:
      _fail(L, "bacs", "kind", "perturbed kind needs a [perturbation] section",
            "[perturbation]")
  if "perturbation" in s:
    kind = s["perturbation"].get("kind")
    if kind not in ("pullback", "twisted"):
      _fail(L, "perturbation", "kind", f"unknown perturbation kind {kind!r}",
            "pullback or twisted")
    need = ("subs",) if kind == "pullback" else ("source", "target", "g")
    for key in need:
      if key not in s["perturbation"]:
        _fail(L, "perturbation", None, f"{kind} perturbation needs '{key}'", key)
  for name in ("seed", "frame"):
    if name in s:
      kind = s[name].get("kind", "standard")
      if kind not in ("standard", "custom"):
        _fail(L, name, "kind", f"unknown {name} kind {kind!r}", "standard or custom")
  if "function" in s and "f" not in s["function"]:
    _fail(L, "function", None, "[function] needs f", "f = [[q, m, a, b, re, im], ...]")
  if "fields" in s:
    for name, v in s["fields"].items():
      if not isinstance(v, list):
        _fail(L, "fields", name, f"field {name} must be a list of elements", "a list")


# ---------------------------------------------------------------------------
# element records


def element_from_records(spec: ParsedSpec, chart: Chart, records, section: str,
                         key: str) -> CoeffElement:
  Q = chart.Q
  L = spec._locator
  if not isinstance(records, list):
    _fail(L, section, key, "an element must be a list of records",
          "[[q, m, a, b, re, im], ...]")
  terms = []
  for i, rec in enumerate(records):
    where = f"{key} record {i + 1}"
    if not isinstance(rec, list) or len(rec) not in (5, 6):
      _fail(L, section, key, f"{where}: expected [q, m, a, b, re, im]",
            "six entries")
    q, m, a, b = rec[:4]
    for vec, ln, nm in ((q, Q.ambient_rank, "q"), (m, Q.ambient_rank, "m"),
                        (a, chart.free_rank, "a"), (b, chart.free_rank, "b")):
      _int_vector(spec, section, key, vec, ln, f"{where} {nm}")
    try:
      re_, im_ = rational(rec[4]), rational(rec[5] if len(rec) == 6 else 0)
    except (ValueError, ZeroDivisionError):
      _fail(L, section, key, f"{where}: coefficient is not rational",
            "integers or strings like \"-1/2\"")
    qi, mi = Q.to_intrinsic(q), Q.to_intrinsic(m)
    if qi is None or mi is None:
      _fail(L, section, key, f"{where}: q or m is outside the group of the monoid",
            "lattice vectors of the monoid")
    if min(a + b, default=0) < 0:
      _fail(L, section, key, f"{where}: negative z exponent", "nonnegative exponents")
    terms.append(((qi, mi, tuple(a), tuple(b)), gauss((re_, im_))))
  return CoeffElement(chart, terms)


def _frac_out(x: Fraction):
  return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def element_to_records(f: CoeffElement) -> list:
  Q = f.chart.Q
  out = []
  for (q, m, a, b), c in f.sorted_terms():
    re_, im_ = fraction_parts(c)
    out.append([list(Q.to_ambient(q)), list(Q.to_ambient(m)), list(a), list(b),
                _frac_out(re_), _frac_out(im_)])
  return out


def field_from_records(spec, chart, comps, section, key) -> BVectorField:
  if not isinstance(comps, list) or len(comps) != 2 * chart.n:
    _fail(spec._locator, section, key,
          f"{key}: expected {2 * chart.n} frame components", f"{2 * chart.n} elements")
  return BVectorField(chart, [element_from_records(spec, chart, c, section, key)
                              for c in comps])


# ---------------------------------------------------------------------------
# serialization


def canonical_sections(spec: ParsedSpec) -> dict:
  """Sections with rationals normalised, suitable for dumping."""
  def norm(x):
    if isinstance(x, list):
      return [norm(y) for y in x]
    if isinstance(x, dict):
      return {k: norm(v) for k, v in x.items()}
    if isinstance(x, str):
      try:
        return _frac_out(Fraction(x.strip()))
      except (ValueError, ZeroDivisionError):
        return x
    return x
  return {k: norm(spec.sections[k]) for k in SECTIONS if k in spec.sections}


def dump_spec(spec: ParsedSpec) -> str:
  return tomli_w.dumps(canonical_sections(spec))


def monoid_section(P) -> dict:
  """The [monoid] section of a monoid's presentation."""
  pres = P.presentation
  sec = {"generators": [list(g) for g in pres.generators]}
  if pres.relations:
    sec["relations"] = [[list(a), list(b)] for a, b in pres.relations]
  if not pres.generators:
    sec["ambient_rank"] = pres.ambient_rank
  return sec
