#!/usr/bin/env python3
"""Generate ground-truth traceback fixtures by running small scenario programs.

Each scenario is a tiny program written into the output directory and executed
with the reference interpreter; its stderr is captured verbatim (absolute path
prefixes rewritten to the stable "FIXTURE_ROOT/" marker) and the expected parse
fields, known by construction from the program source, are recorded in
manifest.json. The fixtures are committed with the main test suite; this
script exists to refresh or extend them.

Usage: generate.py <out_dir> [--interpreter PATH]
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import re
import shutil
import subprocess
import sys
from pathlib import Path

PREFIX_MARKER = "FIXTURE_ROOT"
FAKELIB_RELPATH = os.path.join("fakelib", "site-packages")

_FILE_LINE_RE = re.compile(
    r'^\s+File "(?P<file>[^"]*)", line (?P<line>\d+), in (?P<func>.*)$', re.MULTILINE
)
CAUSE_SEPARATOR = "The above exception was the direct cause of the following exception:"
CONTEXT_SEPARATOR = "During handling of the above exception, another exception occurred:"


class InterpreterMissing(Exception):
    pass


class GenerationDrift(Exception):
    """Captured stderr disagrees with the scenario's constructed expectations."""


def line_of(source: str, snippet: str) -> int:
    """1-based number of the first source line containing the snippet."""
    for i, line in enumerate(source.splitlines(), start=1):
        if snippet in line:
            return i
    raise ValueError(f"snippet {snippet!r} not found")


CHAINLIB_STEPS = 13

def _make_chainlib() -> str:
    lines = ['"""Fake vendored client used to produce dependency-heavy tracebacks."""', ""]
    lines += [
        "def step12(options):",
        '    return options["service_url"]',
    ]
    for i in range(CHAINLIB_STEPS - 2, -1, -1):
        lines += [
            "",
            f"def step{i}(options):",
            f"    return step{i + 1}(options)",
        ]
    return "\n".join(lines) + "\n"


CHAINLIB_SOURCE = _make_chainlib()


TYPE_ERROR_SRC = """\
def label_width(value):
    return len(value)

def main():
    return label_width(None)

main()
"""

VALUE_ERROR_SRC = """\
def parse_port(raw):
    return int(raw)

parse_port("forty-two")
"""

ATTRIBUTE_ERROR_SRC = """\
def normalize(text):
    return text.strip().lower()

normalize(None)
"""

INDEX_ERROR_SRC = """\
READINGS = [10, 20, 30]

def reading_at(position):
    return READINGS[position]

reading_at(7)
"""

NAME_ERROR_SRC = """\
def report():
    return "pages: " + str(total_pages)

report()
"""

RUNTIME_ERROR_SRC = """\
class Scheduler:
    def __init__(self):
        self.stopped = True

    def submit(self, job):
        if self.stopped:
            raise RuntimeError("scheduler is already stopped")

Scheduler().submit("nightly-report")
"""

KEY_ERROR_SRC = """\
CONFIG = {"host": "localhost"}

def setting(name):
    return CONFIG[name]

setting("port")
"""

ZERO_DIVISION_SRC = """\
def foo():
    return 1 / 0
foo()
"""

CHAINED_IMPLICIT_SRC = """\
def parse_num(raw):
    return "total: " + raw

def main():
    try:
        parse_num(3)
    except TypeError:
        raise ValueError("could not parse the count field")

main()
"""

CHAINED_EXPLICIT_SRC = """\
SETTINGS = {"theme": "dark"}

def lookup(name):
    try:
        return SETTINGS[name]
    except KeyError as exc:
        raise RuntimeError("missing required setting: " + name) from exc

lookup("editor")
"""

DEEP_RECURSION_SRC = """\
import sys
sys.setrecursionlimit(80)

def spin(n):
    return spin(n + 1)

spin(0)
"""

DEPENDENCY_FRAMES_SRC = """\
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)),
                                "fakelib", "site-packages"))

import chainlib

def main():
    return chainlib.step0({"region": "eu-west"})

main()
"""

TWO_TRACEBACKS_SRC = """\
import sys
import traceback

ITEMS = [1, 2, 3]

def risky(position):
    return ITEMS[position]

try:
    risky(9)
except IndexError:
    traceback.print_exc()
sys.stderr.write("retrying with a smaller index\\n")
risky(5)
"""

CLEAN_EXIT_SRC = """\
print("all good")
"""

KEYWORD_IN_OUTPUT_SRC = """\
import sys

print("starting housekeeping pass")
sys.stderr.write("notice: Traceback capture is enabled for this run\\n")
print("done")
"""

SYNTAX_ERROR_SRC = """\
def broken(:
    return 1
"""


def _frame(name: str, line: int, function: str) -> dict:
    return {
        "file": f"{PREFIX_MARKER}/{name}.py",
        "line": line,
        "function": function,
    }


def build_scenarios() -> list[dict]:
    """Scenario list with expectations derived from the program sources."""
    scenarios: list[dict] = []

    def add(name: str, category: str, source: str, exit_code: int,
            expected: dict, checks: list[str]) -> None:
        scenarios.append(
            {
                "name": name,
                "category": category,
                "source": source,
                "exit_code": exit_code,
                "expected": expected,
                "checks": checks,
            }
        )

    def tb_expected(exc_type: str, message: str, frame_count: int,
                    chain_depth: int, deepest: dict | None) -> dict:
        return {
            "has_traceback": True,
            "exception_type": exc_type,
            "exception_message": message,
            "frame_count": frame_count,
            "chain_depth": chain_depth,
            "deepest_user_frame": deepest,
        }

    add(
        "type_error", "TypeError", TYPE_ERROR_SRC, 1,
        tb_expected(
            "TypeError", "object of type 'NoneType' has no len()", 3, 1,
            _frame("type_error", line_of(TYPE_ERROR_SRC, "return len(value)"), "label_width"),
        ),
        ["TypeError: object of type 'NoneType' has no len()"],
    )
    add(
        "value_error", "ValueError", VALUE_ERROR_SRC, 1,
        tb_expected(
            "ValueError", "invalid literal for int() with base 10: 'forty-two'", 2, 1,
            _frame("value_error", line_of(VALUE_ERROR_SRC, "return int(raw)"), "parse_port"),
        ),
        ["ValueError: invalid literal for int() with base 10: 'forty-two'"],
    )
    add(
        "attribute_error", "AttributeError", ATTRIBUTE_ERROR_SRC, 1,
        tb_expected(
            "AttributeError", "'NoneType' object has no attribute 'strip'", 2, 1,
            _frame("attribute_error",
                   line_of(ATTRIBUTE_ERROR_SRC, "return text.strip().lower()"), "normalize"),
        ),
        ["AttributeError: 'NoneType' object has no attribute 'strip'"],
    )
    add(
        "index_error", "IndexError", INDEX_ERROR_SRC, 1,
        tb_expected(
            "IndexError", "list index out of range", 2, 1,
            _frame("index_error",
                   line_of(INDEX_ERROR_SRC, "return READINGS[position]"), "reading_at"),
        ),
        ["IndexError: list index out of range"],
    )
    add(
        "name_error", "NameError", NAME_ERROR_SRC, 1,
        tb_expected(
            "NameError", "name 'total_pages' is not defined", 2, 1,
            _frame("name_error",
                   line_of(NAME_ERROR_SRC, 'return "pages: " + str(total_pages)'), "report"),
        ),
        ["NameError: name 'total_pages' is not defined"],
    )
    add(
        "runtime_error", "RuntimeError", RUNTIME_ERROR_SRC, 1,
        tb_expected(
            "RuntimeError", "scheduler is already stopped", 2, 1,
            _frame("runtime_error",
                   line_of(RUNTIME_ERROR_SRC, "raise RuntimeError"), "submit"),
        ),
        ["RuntimeError: scheduler is already stopped"],
    )
    add(
        "key_error", "KeyError", KEY_ERROR_SRC, 1,
        tb_expected(
            "KeyError", "'port'", 2, 1,
            _frame("key_error", line_of(KEY_ERROR_SRC, "return CONFIG[name]"), "setting"),
        ),
        ["KeyError: 'port'"],
    )
    add(
        "zero_division", "ZeroDivisionError", ZERO_DIVISION_SRC, 1,
        tb_expected(
            "ZeroDivisionError", "division by zero", 2, 1,
            _frame("zero_division", line_of(ZERO_DIVISION_SRC, "return 1 / 0"), "foo"),
        ),
        ["ZeroDivisionError: division by zero"],
    )
    add(
        "chained_implicit", "ValueError", CHAINED_IMPLICIT_SRC, 1,
        tb_expected(
            "ValueError", "could not parse the count field", 2, 2,
            _frame("chained_implicit",
                   line_of(CHAINED_IMPLICIT_SRC, 'return "total: " + raw'), "parse_num"),
        ),
        [CONTEXT_SEPARATOR, "ValueError: could not parse the count field"],
    )
    add(
        "chained_explicit", "RuntimeError", CHAINED_EXPLICIT_SRC, 1,
        tb_expected(
            "RuntimeError", "missing required setting: editor", 2, 2,
            _frame("chained_explicit",
                   line_of(CHAINED_EXPLICIT_SRC, "return SETTINGS[name]"), "lookup"),
        ),
        [CAUSE_SEPARATOR, "RuntimeError: missing required setting: editor"],
    )
    add(
        "deep_recursion", "RecursionError", DEEP_RECURSION_SRC, 1,
        tb_expected(
            # frame_count is interpreter-dependent (elision point); filled in
            # from the capture after the run.
            "RecursionError", "maximum recursion depth exceeded", -1, 1,
            _frame("deep_recursion",
                   line_of(DEEP_RECURSION_SRC, "return spin(n + 1)"), "spin"),
        ),
        ["[Previous line repeated", "RecursionError: maximum recursion depth exceeded"],
    )
    add(
        "dependency_frames", "KeyError", DEPENDENCY_FRAMES_SRC, 1,
        tb_expected(
            "KeyError", "'service_url'", 2 + CHAINLIB_STEPS, 1,
            _frame("dependency_frames",
                   line_of(DEPENDENCY_FRAMES_SRC, "return chainlib.step0"), "main"),
        ),
        ["KeyError: 'service_url'", f"{PREFIX_MARKER}/fakelib/site-packages/chainlib.py"],
    )
    add(
        "two_tracebacks", "IndexError", TWO_TRACEBACKS_SRC, 1,
        tb_expected(
            "IndexError", "list index out of range", 2, 1,
            _frame("two_tracebacks",
                   line_of(TWO_TRACEBACKS_SRC, "return ITEMS[position]"), "risky"),
        ),
        ["retrying with a smaller index"],
    )
    add("clean_exit", "none", CLEAN_EXIT_SRC, 0, {"has_traceback": False}, [])
    add(
        "keyword_in_output", "none", KEYWORD_IN_OUTPUT_SRC, 0,
        {"has_traceback": False},
        ["Traceback capture is enabled"],
    )
    add(
        "syntax_error", "SyntaxError", SYNTAX_ERROR_SRC, 1,
        {"has_traceback": False},
        ["SyntaxError: invalid syntax"],
    )
    return scenarios


def _fill_recursion_fields(stderr_text: str, expected: dict) -> None:
    frames = _FILE_LINE_RE.findall(stderr_text)
    if not frames:
        raise GenerationDrift("recursion scenario produced no frame lines")
    expected["frame_count"] = len(frames)


def _verify(name: str, stderr_text: str, scenario: dict) -> None:
    for needle in scenario["checks"]:
        if needle not in stderr_text:
            raise GenerationDrift(f"{name}: expected {needle!r} in captured stderr")
    expected = scenario["expected"]
    if not expected.get("has_traceback"):
        if "Traceback (most recent call last):" in stderr_text:
            raise GenerationDrift(f"{name}: unexpected traceback header in stderr")
        return
    deepest = expected["deepest_user_frame"]
    frame_line = (
        f'  File "{deepest["file"]}", line {deepest["line"]}, in {deepest["function"]}'
    )
    if frame_line not in stderr_text:
        raise GenerationDrift(f"{name}: expected frame line {frame_line!r} in stderr")
    separators = stderr_text.count(CAUSE_SEPARATOR) + stderr_text.count(CONTEXT_SEPARATOR)
    if separators + 1 != expected["chain_depth"] and name != "two_tracebacks":
        raise GenerationDrift(f"{name}: chain separators disagree with expected depth")
    # Frame count covers the final block only.
    final_segment = re.split(
        re.escape(CAUSE_SEPARATOR) + "|" + re.escape(CONTEXT_SEPARATOR), stderr_text
    )[-1]
    if name == "two_tracebacks":
        final_segment = final_segment[final_segment.rindex("Traceback (most recent call last):"):]
    count = len(_FILE_LINE_RE.findall(final_segment))
    if count != expected["frame_count"]:
        raise GenerationDrift(
            f"{name}: final block has {count} frames, expected {expected['frame_count']}"
        )


def resolve_interpreter(interpreter: str) -> str:
    if os.path.sep in interpreter:
        if not os.path.isfile(interpreter):
            raise InterpreterMissing(f"interpreter not found: {interpreter}")
        return interpreter
    found = shutil.which(interpreter)
    if found is None:
        raise InterpreterMissing(f"interpreter not found on PATH: {interpreter}")
    return found


def generate_fixtures(out_dir: str | Path, interpreter: str = sys.executable) -> dict:
    """Run every scenario, write stderr fixtures, and return the manifest."""
    interpreter = resolve_interpreter(interpreter)
    out = Path(out_dir).resolve()
    out.mkdir(parents=True, exist_ok=True)

    fakelib_dir = out / FAKELIB_RELPATH
    if fakelib_dir.parent.exists():
        shutil.rmtree(fakelib_dir.parent)
    fakelib_dir.mkdir(parents=True)
    (fakelib_dir / "chainlib.py").write_text(CHAINLIB_SOURCE, encoding="utf-8")

    env = dict(os.environ, PYTHONDONTWRITEBYTECODE="1")
    prefix = str(out) + os.path.sep
    manifest_fixtures = []
    for scenario in build_scenarios():
        name = scenario["name"]
        script_path = out / f"{name}.py"
        script_path.write_text(scenario["source"], encoding="utf-8")
        proc = subprocess.run(
            [interpreter, str(script_path)],
            cwd=out,
            env=env,
            capture_output=True,
            timeout=60,
        )
        stderr_text = proc.stderr.decode("utf-8", errors="replace")
        stderr_text = stderr_text.replace(prefix, f"{PREFIX_MARKER}/")
        if proc.returncode != scenario["exit_code"]:
            raise GenerationDrift(
                f"{name}: exit code {proc.returncode}, expected {scenario['exit_code']}"
            )
        expected = scenario["expected"]
        if name == "deep_recursion":
            _fill_recursion_fields(stderr_text, expected)
        _verify(name, stderr_text, scenario)
        (out / f"{name}.stderr.txt").write_text(stderr_text, encoding="utf-8")
        manifest_fixtures.append(
            {
                "name": name,
                "category": scenario["category"],
                "script_file": f"{name}.py",
                "stderr_file": f"{name}.stderr.txt",
                "exit_code": scenario["exit_code"],
                "expected": expected,
            }
        )

    manifest = {
        "interpreter": platform.python_version(),
        "source_prefix": str(out),
        "fixtures": manifest_fixtures,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    # Scenario runs must not leave bytecode caches behind.
    for cache in out.rglob("__pycache__"):
        shutil.rmtree(cache)
    return manifest


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", help="directory that receives the fixture files")
    parser.add_argument(
        "--interpreter",
        default=sys.executable,
        help="reference interpreter to run scenarios with (default: this one)",
    )
    args = parser.parse_args(argv)
    try:
        manifest = generate_fixtures(args.out_dir, args.interpreter)
    except InterpreterMissing as exc:
        print(f"generate: {exc}", file=sys.stderr)
        return 1
    except GenerationDrift as exc:
        print(f"generate: drift detected: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest['fixtures'])} fixtures to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
