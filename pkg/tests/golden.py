"""Golden-file corpus for the command-line tool.

``corpus/cases.txt`` lists ``name | exit code | arguments``; each case runs
in ``corpus/docs`` and its stdout and stderr are frozen in
``corpus/expected/<name>.out`` and ``<name>.err``.  Run this module to
regenerate the expected files after an intentional output change.
"""

from __future__ import annotations

import contextlib
import io
import os
import shlex
import sys
from pathlib import Path
from typing import NamedTuple

from wstar.cli.main import main

CORPUS = Path(__file__).parent / "corpus"
DOCS = CORPUS / "docs"
EXPECTED = CORPUS / "expected"


class Case(NamedTuple):
    name: str
    exit: int
    env: dict
    argv: list


def load_cases() -> list:
    cases = []
    for line in (CORPUS / "cases.txt").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, code, rest = (part.strip() for part in line.split("|", 2))
        words = shlex.split(rest)
        env = {}
        while words and "=" in words[0] and words[0].split("=", 1)[0].isupper():
            k, v = words.pop(0).split("=", 1)
            env[k] = v
        cases.append(Case(name, int(code), env, words))
    return cases


def run_case(case: Case):
    """``(exit code, stdout, stderr)`` with a fixed environment and working directory."""
    out, err = io.StringIO(), io.StringIO()
    saved_env = {k: os.environ.get(k) for k in ["WSTAR_TOL", "COLUMNS", *case.env]}
    cwd = os.getcwd()
    try:
        os.environ.pop("WSTAR_TOL", None)
        os.environ["COLUMNS"] = "100"  # argparse wraps usage text to the terminal width
        os.environ.update(case.env)
        os.chdir(DOCS)
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(case.argv, stdout=out, stderr=err)
    finally:
        os.chdir(cwd)
        for k, v in saved_env.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v
    return code, out.getvalue(), err.getvalue()


def regenerate():
    EXPECTED.mkdir(exist_ok=True)
    for case in load_cases():
        code, out, err = run_case(case)
        if code != case.exit:
            print(f"{case.name}: exit {code}, manifest says {case.exit}", file=sys.stderr)
        (EXPECTED / f"{case.name}.out").write_text(out)
        (EXPECTED / f"{case.name}.err").write_text(err)


if __name__ == "__main__":
    regenerate()
