"""Command line front end: ``btoric <command> SPEC [options]``.

Exit status is 0 on success, 2 when the library reports a domain error and 1
on parse or I/O errors.  Reports are deterministic for fixed input, options
and seed; timing is only included with ``--timing``.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import complex_structure as cs
from . import formal_nn as fnn
from . import lattice_monoid as lm
from . import model_space as ms
from .b_calculus import BVectorField, Chart, CoeffElement, lie_bracket
from .errors import BToricError, DomainError, InvalidPresentation, ParseError
from .spec_io import (ParsedSpec, element_from_records, element_to_records,
                      field_from_records, parse_spec, rational)

SCHEMA_VERSION = 1

COMMANDS = ("monoid-analyze", "embed", "strata", "bracket", "nijenhuis", "dbar",
            "normal-form", "nn-correct")

# options each command accepts (besides json/timing, which are global)
OPTIONS = {
    "monoid-analyze": {"order"},
    "embed": set(),
    "strata": set(),
    "bracket": set(),
    "nijenhuis": {"samples", "seed", "threads"},
    "dbar": set(),
    "normal-form": {"degree_cap"},
    "nn-correct": {"order", "threads", "degree_cap"},
}
GLOBAL_OPTIONS = {"json", "timing"}
DEFAULTS = {"order": 3, "samples": 5, "seed": 0, "threads": 1,
            "degree_cap": fnn.DEFAULT_DEGREE_CAP, "json": False, "timing": False}


@dataclass
class JobSpec:
  command: str
  input_path: str
  options: dict = field(default_factory=dict)

  def validated_options(self) -> dict:
    if self.command not in COMMANDS:
      raise ValueError(f"unknown command {self.command!r}")
    allowed = OPTIONS[self.command] | GLOBAL_OPTIONS
    for key in self.options:
      if key not in allowed:
        raise ValueError(f"option '{key}' is not valid for {self.command}")
    opts = {k: DEFAULTS[k] for k in allowed}
    opts.update(self.options)
    for key in ("order", "samples", "threads", "degree_cap"):
      if key in opts and (not isinstance(opts[key], int) or opts[key] < 1):
        raise ValueError(f"option '{key}' must be a positive integer")
    return opts


@dataclass
class Report:
  command: str
  digest: str | None
  options: dict
  results: dict
  diagnostics: dict
  exit_code: int = 0
  timing: float | None = None

  def to_dict(self) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": self.command,
           "input_sha256": self.digest,
           "options": {k: v for k, v in sorted(self.options.items())
                       if k not in GLOBAL_OPTIONS},
           "status": "ok" if self.exit_code == 0 else "error",
           "results": self.results, "diagnostics": self.diagnostics}
    if self.timing is not None:
      out["timing_seconds"] = round(self.timing, 6)
    return out

  def to_json(self) -> str:
    return json.dumps(jsonable(self.to_dict()), indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"

  def to_text(self) -> str:
    lines = []
    _render(jsonable(self.to_dict()), 0, lines)
    return "\n".join(lines) + "\n"


def jsonable(x) -> Any:
  if isinstance(x, dict):
    return {str(k): jsonable(v) for k, v in x.items()}
  if isinstance(x, (list, tuple)):
    return [jsonable(v) for v in x]
  if isinstance(x, (set, frozenset)):
    return sorted((jsonable(v) for v in x), key=repr)
  if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
    return x
  if isinstance(x, float):
    return "inf" if math.isinf(x) else x
  if isinstance(x, Fraction):
    return str(x)
  if isinstance(x, CoeffElement):
    return element_to_records(x)
  return str(x)


def _render(x, indent, lines):
  pad = "  " * indent
  if isinstance(x, dict):
    for k, v in x.items():
      if isinstance(v, (dict, list)) and v and not _flat(v):
        lines.append(f"{pad}{k}:")
        _render(v, indent + 1, lines)
      else:
        lines.append(f"{pad}{k}: {_inline(v)}")
  elif isinstance(x, list):
    for v in x:
      if isinstance(v, (dict, list)) and v and not _flat(v):
        lines.append(f"{pad}-")
        _render(v, indent + 1, lines)
      else:
        lines.append(f"{pad}- {_inline(v)}")
  else:
    lines.append(f"{pad}{_inline(x)}")


def _flat(v):
  return isinstance(v, list) and all(not isinstance(y, (dict, list)) or _flat(y) for y in v) \
      and len(json.dumps(v)) <= 72


def _inline(v):
  if isinstance(v, bool):
    return "true" if v else "false"
  if isinstance(v, (list, dict)):
    return json.dumps(v, ensure_ascii=False)
  return str(v)


# ---------------------------------------------------------------------------
# building library objects from sections


def build_monoid(spec: ParsedSpec) -> lm.WeaklyToricMonoid:
  sec = spec.require("monoid")
  gens = [tuple(g) for g in sec["generators"]]
  rank = sec.get("ambient_rank", len(gens[0]) if gens else 0)
  if "relations" in sec:
    pres = lm.MonoidPresentation(rank, tuple(gens),
                                 tuple((tuple(a), tuple(b)) for a, b in sec["relations"]))
    return lm.validate(pres)
  return lm.monoid(gens, ambient_rank=rank)


def build_chart(spec: ParsedSpec) -> Chart:
  Q = build_monoid(spec)
  return Chart(Q, spec.sections.get("chart", {}).get("free_rank", 0))


def _element(spec, chart, records, section, key):
  return element_from_records(spec, chart, records, section, key)


def build_bacs(spec: ParsedSpec, chart: Chart) -> cs.BACS:
  sec = spec.require("bacs")
  kind = sec.get("kind", "standard")
  if kind == "standard":
    return cs.standard_structure(chart)
  if kind == "matrix":
    M = sec["matrix"]
    N = 2 * chart.n
    if not isinstance(M, list) or len(M) != N or any(not isinstance(r, list) or len(r) != N for r in M):
      line, col = spec._locator.find("bacs", "matrix")
      raise ParseError(f"matrix must be {N}x{N}", line, col, f"{N} rows of {N} elements")
    return cs.BACS(chart, [[_element(spec, chart, e, "bacs", "matrix") for e in r] for r in M])
  pert = spec.require("perturbation")
  if pert["kind"] == "pullback":
    subs = [_element(spec, chart, e, "perturbation", "subs") for e in pert["subs"]]
    logs = None
    if "log_subs" in pert:
      logs = [_element(spec, chart, e, "perturbation", "log_subs") for e in pert["log_subs"]]
    return cs.pullback_structure(chart, subs, logs)
  src, tgt = pert["source"], pert["target"]
  for key, v in (("source", src), ("target", tgt)):
    if not isinstance(v, int) or not 1 <= v <= chart.n:
      line, col = spec._locator.find("perturbation", key)
      raise ParseError(f"{key} must be a direction index in 1..{chart.n}", line, col,
                       "an integer")
  g = _element(spec, chart, pert["g"], "perturbation", "g")
  return cs.twisted_structure(chart, src - 1, tgt - 1, g)


def build_seed(spec: ParsedSpec, chart: Chart):
  sec = spec.sections.get("seed", {"kind": "standard"})
  if sec.get("kind", "standard") == "standard":
    return fnn.SeedChart.standard(chart)
  logs = [_element(spec, chart, e, "seed", "log_seed") for e in sec.get("log_seed", [])]
  zs = [_element(spec, chart, e, "seed", "z") for e in sec.get("z", [])]
  return fnn.SeedChart(chart, logs, zs)


def build_frame(spec: ParsedSpec, chart: Chart) -> cs.NormalFrame:
  sec = spec.sections.get("frame", {"kind": "standard"})
  if sec.get("kind", "standard") == "standard":
    frame = cs.standard_frame(chart)
  else:
    parts = {}
    for key, count in (("v", chart.k), ("theta", chart.k), ("x", chart.free_rank),
                       ("y", chart.free_rank)):
      vals = sec.get(key, [])
      if not isinstance(vals, list) or len(vals) != count:
        line, col = spec._locator.find("frame", key)
        raise ParseError(f"frame needs {count} '{key}' fields", line, col,
                         f"{count} fields")
      parts[key] = [field_from_records(spec, chart, c, "frame", key).restrict()
                    for c in vals]
    frame = cs.NormalFrame(parts["v"], parts["theta"], parts["x"], parts["y"])
  if "shift" in sec:
    f = [_element(spec, chart, e, "frame", "shift") for e in sec["shift"]]
    if len(f) != chart.k:
      line, col = spec._locator.find("frame", "shift")
      raise ParseError(f"shift needs {chart.k} functions", line, col, f"{chart.k} elements")
    frame = cs.shift_theta(frame, f)
  return frame


# ---------------------------------------------------------------------------
# commands


def _faces_payload(P):
  faces = lm.enumerate_faces(P)
  census = {}
  for F in faces:
    census[F.codim] = census.get(F.codim, 0) + 1
  return faces, {
      "face_count": len(faces),
      "codim_census": {str(c): census[c] for c in sorted(census)},
      "faces": [{"generators": [i + 1 for i in sorted(F.generator_indices)],
                 "codim": F.codim} for F in faces]}


def cmd_monoid_analyze(spec, opts):
  P = build_monoid(spec)
  out = {"ambient_rank": P.ambient_rank, "gp_rank": P.gp_rank,
         "generators": [list(g) for g in P.generators],
         "gp_basis": [list(b) for b in P.gp_basis],
         "is_sharp": P.is_sharp, "toric": P.is_toric, "unit_rank": P.unit_rank,
         "facet_normals": [list(f) for f in P.facets]}
  _, faces = _faces_payload(P)
  out.update(faces)
  D = lm.dual_monoid(P)
  out["dual_generators"] = [list(g) for g in D.generators]
  if P.is_sharp:
    out["hilbert_basis"] = [list(h) for h in P.hilbert_basis()]
    out["double_dual_isomorphism"] = lm.double_dual_check(P)
    out["filtration"] = [{"level": L.level, "size": len(L.elements),
                          "elements": sorted(list(e) for e in L.elements)}
                         for L in lm.filtration_layers(P, opts["order"])]
  return out


def cmd_embed(spec, opts):
  emb = ms.embed(build_monoid(spec))
  return {"ambient_dim": emb.ambient_dim, "equations": emb.as_strings(),
          "exponents": [[list(a), list(b)] for a, b in emb.equations]}


def cmd_strata(spec, opts):
  P = build_monoid(spec)
  out = {"strata": [{"generators": [i + 1 for i in sorted(s.face.generator_indices)],
                     "depth": s.depth, "dim": s.dim} for s in ms.strata(P)]}
  pts = []
  for p in spec.sections.get("points", []):
    exact = p.get("exact", True)
    vals = [rational(v, allow_float=not exact) for v in p["values"]]
    x = ms.point(P, vals if exact else [float(v) for v in vals], exact=exact)
    sd = ms.support_and_depth(x)
    pts.append({"values": [str(v) for v in x.generator_values],
                "support": [i + 1 for i in sorted(sd.face.generator_indices)],
                "depth": sd.depth, "dim": sd.dim})
  if pts:
    out["points"] = pts
  return out


def _field_payload(v: BVectorField):
  labels = v.chart.frame_labels()
  return {labels[i]: c for i, c in enumerate(v.comps) if not c.is_zero()}


def cmd_bracket(spec, opts):
  chart = build_chart(spec)
  fields = spec.require("fields")
  names = list(fields)
  if len(names) < 2:
    line, col = spec._locator.find("fields")
    raise ParseError("[fields] needs at least two fields", line, col, "u = ..., v = ...")
  vs = [field_from_records(spec, chart, fields[n], "fields", n) for n in names]
  u, v = vs[0], vs[1]
  br = lie_bracket(u, v)
  out = {"fields": names, "bracket": _field_payload(br),
         "antisymmetric": (br + lie_bracket(v, u)).is_zero()}
  if len(vs) >= 3:
    w = vs[2]
    jac = lie_bracket(u, lie_bracket(v, w)) + lie_bracket(v, lie_bracket(w, u)) + \
        lie_bracket(w, lie_bracket(u, v))
    out["jacobi"] = jac.is_zero()
  return out


def cmd_nijenhuis(spec, opts):
  chart = build_chart(spec)
  J = build_bacs(spec, chart)
  T = cs.nijenhuis(J, threads=opts["threads"])
  labels = chart.frame_labels()
  out = {"j_squared_minus_identity": True, "integrable": T.is_zero,
         "t10_involutive": cs.t10_involutive(J),
         "nonzero_components": [{"pair": [labels[i], labels[j]],
                                 "value": _field_payload(T.components[i][j])}
                                for i, j in T.nonzero()]}
  checked = cs.check_transversality(J, opts["samples"], opts["seed"])
  out["transversality"] = {"points_checked": len(checked), "violations": 0}
  rng = random.Random(opts["seed"])
  dev = 0.0
  for _ in range(opts["samples"]):
    u = [rng.uniform(-1, 1) for _ in range(2 * chart.n)]
    num = cs.nijenhuis_numeric(J, u)
    sym = cs.nijenhuis_evaluate_float(T, u)
    dev = max(dev, float(abs(num - sym).max()) if num.size else 0.0)
  out["numeric_check"] = {"points": opts["samples"], "max_deviation": float(f"{dev:.3e}"),
                          "within_tolerance": dev < 1e-6}
  return out


def cmd_dbar(spec, opts):
  chart = build_chart(spec)
  J = build_bacs(spec, chart)
  f = _element(spec, chart, spec.require("function")["f"], "function", "f")
  d = cs.dbar(J, f)
  labels = chart.frame_labels()
  return {"dbar": {labels[i]: c for i, c in enumerate(d) if not c.is_zero()},
          "holomorphic": all(c.is_zero() for c in d)}


def cmd_normal_form(spec, opts):
  chart = build_chart(spec)
  J = build_bacs(spec, chart)
  frame = build_frame(spec, chart)
  rep = cs.verify_normal_form(J, frame)
  out = {"checks": rep.checks, "passed": rep.passed, "failures": rep.failures,
         "omega": {f"{a},{b},{c}": w for (a, b, c), w in sorted(rep.omega.items())},
         "omega_vanishes": rep.omega_vanishes()}
  if rep.omega and not rep.omega_vanishes():
    f = cs.ddbar_potential(chart, rep.omega, opts["degree_cap"])
    shifted = cs.verify_normal_form(J, cs.shift_theta(frame, f))
    out["potential"] = f
    out["shifted"] = {"checks": shifted.checks, "omega_vanishes": shifted.omega_vanishes()}
  return out


def cmd_nn_correct(spec, opts):
  chart = build_chart(spec)
  J = build_bacs(spec, chart)
  seed = build_seed(spec, chart)
  fam, cc = fnn.correct_to_order(J, seed, opts["order"], degree_cap=opts["degree_cap"],
                                 threads=opts["threads"])
  orders = cc.residual_orders
  return {"order": opts["order"], "order_reached": fam.order_reached,
          "g": {f"{a} {list(q)}": c for (a, q), c in sorted(fam.g.items())},
          "h": {f"{j} {list(q)}": c for (j, q), c in sorted(fam.h.items())},
          "z": cc.z,
          "residual_orders": orders,
          "min_residual_order": min(orders.values(), default=math.inf)}


HANDLERS = {
    "monoid-analyze": cmd_monoid_analyze, "embed": cmd_embed, "strata": cmd_strata,
    "bracket": cmd_bracket, "nijenhuis": cmd_nijenhuis, "dbar": cmd_dbar,
    "normal-form": cmd_normal_form, "nn-correct": cmd_nn_correct,
}


def run(job: JobSpec) -> Report:
  t0 = time.perf_counter()
  try:
    opts = job.validated_options()
  except ValueError as e:
    return Report(job.command, None, dict(job.options), {},
                  {"error": {"name": "OptionError", "message": str(e)}}, 1)
  digest = None
  try:
    spec = parse_spec(job.input_path)
    digest = spec.digest
    results = HANDLERS[job.command](spec, opts)
    rep = Report(job.command, digest, opts, results, {"warnings": []}, 0)
  except ParseError as e:
    rep = Report(job.command, digest, opts, {}, {"error": {
        "name": "ParseError", "message": e.message, "line": e.line,
        "column": e.column, "expected": e.hint}}, 1)
  except DomainError as e:
    rep = Report(job.command, digest, opts, {}, {"error": {
        "name": e.name, "message": str(e), "witness": jsonable(e.witness)}}, 2)
  except BToricError as e:  # pragma: no cover - every library error is a domain error
    rep = Report(job.command, digest, opts, {}, {"error": {
        "name": type(e).__name__, "message": str(e)}}, 2)
  if opts.get("timing"):
    rep.timing = time.perf_counter() - t0
  return rep


def build_parser() -> argparse.ArgumentParser:
  parser = argparse.ArgumentParser(
      prog="btoric", description="Monoids, b-complex structures and formal"
      " Newlander-Nirenberg corrections on toric charts.")
  sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
  helps = {
      "monoid-analyze": "validate a monoid; faces, Hilbert basis, dual, filtration",
      "embed": "binomial equations of the model space",
      "strata": "depth strata and the strata of given points",
      "bracket": "Lie bracket of b-vector fields",
      "nijenhuis": "Nijenhuis tensor, transversality and numeric cross-check",
      "dbar": "∂̄ of a function",
      "normal-form": "verify a normal-form frame on the vertex stratum",
      "nn-correct": "order-by-order holomorphic chart correction",
  }
  for name in COMMANDS:
    p = sub.add_parser(name, help=helps[name])
    p.add_argument("spec", help="TOML spec file")
    p.add_argument("--json", action="store_true", help="emit JSON")
    p.add_argument("--timing", action="store_true", help="include wall time")
    if "order" in OPTIONS[name]:
      p.add_argument("--order", type=int, help="truncation order / filtration depth")
    if "samples" in OPTIONS[name]:
      p.add_argument("--samples", type=int, help="sample points per check")
    if "seed" in OPTIONS[name]:
      p.add_argument("--seed", type=int, help="random seed")
    if "threads" in OPTIONS[name]:
      p.add_argument("--threads", type=int, help="worker threads")
    if "degree_cap" in OPTIONS[name]:
      p.add_argument("--degree-cap", dest="degree_cap", type=int,
                     help="maximal z-degree of intermediate terms")
  return parser


def main(argv=None) -> int:
  args = build_parser().parse_args(argv)
  opts = {k: v for k, v in vars(args).items()
          if k not in ("command", "spec") and v not in (None, False)}
  rep = run(JobSpec(args.command, args.spec, opts))
  sys.stdout.write(rep.to_json() if args.json else rep.to_text())
  return rep.exit_code


if __name__ == "__main__":  # pragma: no cover
  sys.exit(main())
