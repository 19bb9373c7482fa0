"""The twelve acceptance criteria, at their stated tolerances.

``verify`` runs twice with the same seed and the full path count; criteria
1-11 are read from the first run's verify.json and criterion 12 compares the
two runs' artifacts byte for byte.
"""

import json

import pytest

from rholoewner import cli

SEED = 1234


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    dirs = [tmp_path_factory.mktemp(f"verify{k}") for k in (1, 2)]
    codes = [cli.main(["verify", "--seed", str(SEED), "--out", str(d)]) for d in dirs]
    return dirs, codes


@pytest.fixture(scope="module")
def report(runs):
    dirs, _ = runs
    body = json.loads((dirs[0] / "verify.json").read_text())
    return {c["number"]: c for c in body["criteria"]}


def _record(lines, passed, number, name, details):
    line = f"[{'PASS' if passed else 'FAIL'}] AC{number:02d} {name}  {json.dumps(details, sort_keys=True)}"
    lines.append(line)
    print(line)


@pytest.mark.parametrize("number", range(1, 12))
def test_criterion(number, report, acceptance_lines):
    c = report[number]
    _record(acceptance_lines, c["passed"], number, c["name"], c["details"])
    assert c["passed"], c["details"]


def test_criterion_12_determinism(runs, acceptance_lines):
    dirs, codes = runs
    names = sorted(p.name for p in dirs[0].iterdir())
    same = names == sorted(p.name for p in dirs[1].iterdir()) and all(
        (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names)
    _record(acceptance_lines, same, 12, "rerun artifacts are byte-identical", {"artifacts": names, "exit_codes": codes})
    assert same
