import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from btoric.lattice_monoid import monoid

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "btoric" / "fixtures"

# generators and hand-written membership inequalities, straight from the
# definitions of the example monoids (used by brute-force oracles)
EXAMPLES = {
    "N": ([(1,)], lambda v: v[0] >= 0),
    "N2": ([(1, 0), (0, 1)], lambda v: v[0] >= 0 and v[1] >= 0),
    "cone_2d": ([(1, 0), (1, 2), (1, 1)], lambda v: 2 * v[0] >= v[1] >= 0),
    "cone_3d": ([(1, 0, 0), (0, 1, 1), (0, 1, 0), (1, 0, 1)],
             lambda v: v[0] >= 0 and v[1] >= 0 and v[0] + v[1] >= v[2] >= 0),
}


@pytest.fixture(scope="session")
def fixtures_dir():
  return FIXTURES


@pytest.fixture(scope="session")
def toric():
  return {name: monoid(gens) for name, (gens, _) in EXAMPLES.items()}


def pytest_terminal_summary(terminalreporter):
  try:
    from test_acceptance import RESULTS
  except ImportError:
    return
  if RESULTS:
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
      terminalreporter.write_line(line)
