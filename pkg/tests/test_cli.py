import json
import random
import subprocess
import sys

import pytest

from btoric.cli import JobSpec, main, run


def _run(capsys, *argv):
  code = main(list(argv))
  out = capsys.readouterr().out
  return code, out


def _json(capsys, *argv):
  code, out = _run(capsys, *argv, "--json")
  return code, json.loads(out)


def test_monoid_analyze_cone_2d(capsys, fixtures_dir):
  code, d = _json(capsys, "monoid-analyze", str(fixtures_dir / "cone_2d.toml"))
  r = d["results"]
  assert code == 0 and d["status"] == "ok"
  assert r["face_count"] == 4 and r["toric"] is True and r["gp_rank"] == 2
  assert r["codim_census"] == {"0": 1, "1": 2, "2": 1}
  assert r["double_dual_isomorphism"] is True
  assert d["schema_version"] == 1 and d["command"] == "monoid-analyze"
  assert len(d["input_sha256"]) == 64


def test_embed(capsys, fixtures_dir):
  _, d = _json(capsys, "embed", str(fixtures_dir / "cone_3d.toml"))
  assert d["results"]["equations"] == ["x1*x2 = x3*x4"]
  _, d = _json(capsys, "embed", str(fixtures_dir / "cone_2d.toml"))
  assert d["results"]["equations"] == ["x1*x2 = x3^2"]


def test_strata_points(capsys, fixtures_dir):
  _, d = _json(capsys, "strata", str(fixtures_dir / "cone_2d.toml"))
  pts = d["results"]["points"]
  assert [p["depth"] for p in pts] == [0, 1]


def test_bracket(capsys, fixtures_dir):
  _, d = _json(capsys, "bracket", str(fixtures_dir / "fields_n2.toml"))
  assert d["results"]["antisymmetric"] and d["results"]["jacobi"]


def test_nijenhuis_twist(capsys, fixtures_dir):
  code, d = _json(capsys, "nijenhuis", str(fixtures_dir / "twist_n2.toml"), "--samples", "2")
  r = d["results"]
  assert code == 0 and r["integrable"] is False and r["t10_involutive"] is False
  assert r["numeric_check"]["within_tolerance"]


def test_nn_correct_pullback(capsys, fixtures_dir):
  code, d = _json(capsys, "nn-correct", str(fixtures_dir / "pullback_n.toml"), "--order", "4")
  r = d["results"]
  assert code == 0
  assert all(v == "inf" or v >= 4 for v in r["residual_orders"].values())
  assert r["h"]["2 [1]"] == [[[0], [-1], [0], [0], 2, 1]]


def test_nn_correct_twist_is_domain_error(capsys, fixtures_dir):
  code, d = _json(capsys, "nn-correct", str(fixtures_dir / "twist_n2.toml"))
  assert code == 2 and d["status"] == "error"
  err = d["diagnostics"]["error"]
  assert err["name"] == "NotIntegrable" and err["witness"]["layer"] == 2


def test_normal_form_shift(capsys, fixtures_dir):
  _, d = _json(capsys, "normal-form", str(fixtures_dir / "frame_shift.toml"))
  r = d["results"]
  assert r["passed"] is False and r["shifted"]["omega_vanishes"] is True


def test_dbar(capsys, fixtures_dir):
  _, d = _json(capsys, "dbar", str(fixtures_dir / "cone_2d_times_z.toml"))
  assert d["results"]["holomorphic"] is True


def test_parse_error_exit_code(capsys, tmp_path):
  p = tmp_path / "bad.toml"
  p.write_text("[monoid]\ngenerators = [[1, 0], [1, 2], [1, 1]]\nrelations = [[[1], [0, 0, 2]]]\n")
  code, d = _json(capsys, "monoid-analyze", str(p))
  assert code == 1
  err = d["diagnostics"]["error"]
  assert err["name"] == "ParseError" and err["line"] == 3 and "relation 1" in err["message"]
  code, d = _json(capsys, "embed", str(tmp_path / "missing.toml"))
  assert code == 1


def test_option_validation():
  assert run(JobSpec("embed", "x.toml", {"order": 3})).exit_code == 1
  assert run(JobSpec("nn-correct", "x.toml", {"order": 0})).exit_code == 1
  assert run(JobSpec("frobnicate", "x.toml")).exit_code == 1
  with pytest.raises(SystemExit):
    main(["embed", "x.toml", "--order", "3"])


def test_byte_identical_reports(capsys, fixtures_dir):
  for argv in (["monoid-analyze", str(fixtures_dir / "cone_3d.toml")],
               ["nijenhuis", str(fixtures_dir / "twist_n2.toml"), "--samples", "2"],
               ["nn-correct", str(fixtures_dir / "pullback_cone_2d.toml")]):
    a = _run(capsys, *argv, "--json")[1]
    b = _run(capsys, *argv, "--json")[1]
    assert a == b
    assert "timing" not in a
    t1, t2 = _run(capsys, *argv)[1], _run(capsys, *argv)[1]
    assert t1 == t2


def test_timing_only_on_request(capsys, fixtures_dir):
  _, d = _json(capsys, "embed", str(fixtures_dir / "cone_2d.toml"), "--timing")
  assert d["timing_seconds"] >= 0


def test_console_script(fixtures_dir):
  res = subprocess.run([sys.executable, "-m", "btoric.cli", "embed",
                        str(fixtures_dir / "cone_3d.toml")], capture_output=True, text=True)
  assert res.returncode == 0 and "x1*x2 = x3*x4" in res.stdout


# ---------------------------------------------------------------------------
# fuzzing: mutated fixtures never crash and always map to exit code 0, 1 or 2

FUZZ_TARGETS = {
    "n_times_z": ["monoid-analyze", "strata"],
    "cone_2d": ["monoid-analyze", "embed", "strata"],
    "cone_3d": ["monoid-analyze", "embed"],
    "cone_2d_times_z": ["nijenhuis", "dbar", "normal-form", "nn-correct"],
    "pullback_n": ["nn-correct", "nijenhuis"],
    "pullback_cone_2d": ["nn-correct"],
    "twist_n2": ["nijenhuis", "nn-correct"],
    "frame_shift": ["normal-form"],
    "fields_n2": ["bracket"],
}
ALPHABET = "0123456789-[],=\"\n ./abcxyz#"


def mutate(text, rng):
  for _ in range(rng.randint(1, 3)):
    op, i = rng.randrange(5), rng.randrange(len(text) + 1)
    if op == 0:
      text = text[:i] + rng.choice(ALPHABET) + text[i:]
    elif op == 1:
      text = text[:i] + text[i + 1:]
    elif op == 2 and text:
      text = text[:i] + text[rng.randrange(len(text))] + text[i + 1:]
    elif op == 3:
      lines = text.split("\n")
      lines.insert(rng.randrange(len(lines)), rng.choice(lines))
      text = "\n".join(lines)
    else:
      digits = [k for k, c in enumerate(text) if c.isdigit()]
      if digits:
        k = rng.choice(digits)
        text = text[:k] + str(rng.randint(0, 9)) + text[k + 1:]
  return text


FUZZ_CASES = 10_000


def test_fuzzed_fixtures_never_crash(fixtures_dir, tmp_path):
  rng = random.Random(20261016)
  texts = {k: (fixtures_dir / f"{k}.toml").read_text() for k in FUZZ_TARGETS}
  path = tmp_path / "mutant.toml"
  codes = {0: 0, 1: 0, 2: 0}
  for _ in range(FUZZ_CASES):
    name = rng.choice(sorted(FUZZ_TARGETS))
    cmd = rng.choice(FUZZ_TARGETS[name])
    path.write_text(mutate(texts[name], rng))
    opts = {"samples": 1} if cmd == "nijenhuis" else {"order": 3} if cmd == "nn-correct" else {}
    rep = run(JobSpec(cmd, str(path), opts))
    rep.to_json()
    codes[rep.exit_code] += 1
  assert sum(codes.values()) == FUZZ_CASES
  assert codes[1] > 0 and codes[0] > 0
