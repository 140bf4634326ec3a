"""Suite execution over the active assertion set, hermetic per run.

Table implementations evaluate in-process (canonical-args lookup with a
default). Source implementations go through an external runner adapter:
one child process per suite run, one request line on stdin, one response
line on stdout, line-delimited canonical JSON. A nonzero exit or an
unparseable/incomplete response is the adapter's fault, not the suite's.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass

from .errors import ProtocolViolation, RunnerUnavailable
from .values import MalformedValue, Value, canonical_text, parse_value, values_equal

__all__ = [
    "SuiteReport",
    "run_suite",
    "build_failure_report",
    "DEFAULT_CASE_TIMEOUT_MS",
    "SUITE_CAP_MS",
]

DEFAULT_CASE_TIMEOUT_MS = 2000
SUITE_CAP_MS = 60_000

RESULT_STATUSES = ("Pass", "Fail", "Error", "Timeout")


@dataclass(slots=True)
class SuiteReport:
    function_id: str
    implementation_version: int
    results: list  # [{behaviorId, assertionIndex, args, expected, status, actual?, errorText?}]
    duration_millis: int

    def all_pass(self) -> bool:
        return all(r["status"] == "Pass" for r in self.results)

    def failures(self) -> list:
        return [r for r in self.results if r["status"] != "Pass"]

    def to_value(self) -> dict:
        return {
            "functionId": self.function_id,
            "implementationVersion": self.implementation_version,
            "results": self.results,
            "durationMillis": self.duration_millis,
        }


def run_suite(
    implementation,
    assertions_by_behavior: dict[str, list],
    *,
    function_id: str = "",
    adapters: dict[str, list] | None = None,
    case_timeout_ms: int = DEFAULT_CASE_TIMEOUT_MS,
    suite_cap_ms: int = SUITE_CAP_MS,
    clock=None,
) -> SuiteReport:
    """Evaluate every active assertion against the implementation.

    `implementation` needs .kind plus either table fields (entries/default,
    via .lookup or dict access) or .source/.language_tag. Results keep the
    behavior order of the input mapping and assertion index order within it.
    """
    started = clock.now() if clock is not None else 0
    cases = []
    for behavior_id, assertions in assertions_by_behavior.items():
        for index, assertion in enumerate(assertions):
            cases.append((behavior_id, index, assertion["args"], assertion["expected"]))

    if getattr(implementation, "kind", None) == "Source":
        outcomes = _run_source_cases(implementation, cases, adapters or {}, case_timeout_ms, suite_cap_ms)
    else:
        outcomes = [("Ok", _table_lookup(implementation, args), "") for (_, _, args, _) in cases]

    results = []
    for (behavior_id, index, args, expected), (status, value, error_text) in zip(cases, outcomes):
        entry: dict = {
            "behaviorId": behavior_id,
            "assertionIndex": index,
            "args": args,
            "expected": expected,
        }
        if status == "Ok":
            if values_equal(value, expected):
                entry["status"] = "Pass"
            else:
                entry["status"] = "Fail"
                entry["actual"] = value
        elif status == "Timeout":
            entry["status"] = "Timeout"
            entry["errorText"] = error_text or "case timed out"
        else:
            entry["status"] = "Error"
            entry["errorText"] = error_text or "case errored"
        results.append(entry)
    duration = (clock.now() - started) if clock is not None else 0
    version = getattr(implementation, "version", 0)
    return SuiteReport(
        function_id=function_id,
        implementation_version=version,
        results=results,
        duration_millis=duration,
    )


def _table_lookup(implementation, args: list) -> Value:
    entries = getattr(implementation, "entries", {})
    default = getattr(implementation, "default", None)
    return entries.get(canonical_text(args), default)


def _run_source_cases(implementation, cases, adapters, case_timeout_ms, suite_cap_ms):
    tag = implementation.language_tag
    argv = adapters.get(tag)
    if not argv:
        raise RunnerUnavailable(f"no runner adapter configured for languageTag {tag!r}")
    request = {
        "languageTag": tag,
        "source": implementation.source,
        "timeoutMillis": case_timeout_ms,
        "cases": [
            {"caseId": f"c{i}", "args": args} for i, (_, _, args, _) in enumerate(cases)
        ],
    }
    try:
        process = subprocess.Popen(
            list(argv),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
    except OSError as exc:
        raise RunnerUnavailable(f"adapter {argv!r} failed to start: {exc}") from exc
    timed_out = False
    try:
        stdout, _ = process.communicate(
            canonical_text(request).encode("utf-8") + b"\n", timeout=suite_cap_ms / 1000.0
        )
    except subprocess.TimeoutExpired:
        process.kill()
        stdout, _ = process.communicate()
        timed_out = True
    if not timed_out and process.returncode != 0:
        raise RunnerUnavailable(f"adapter exited with status {process.returncode}")

    by_case: dict[str, dict] = {}
    line = stdout.split(b"\n", 1)[0] if stdout else b""
    if line:
        try:
            doc = parse_value(line)
        except MalformedValue as exc:
            raise ProtocolViolation(f"adapter response is not canonical JSON: {exc}") from None
        if not isinstance(doc, dict) or not isinstance(doc.get("results"), list):
            raise ProtocolViolation("adapter response must be an object with a results list")
        for item in doc["results"]:
            if not isinstance(item, dict) or "caseId" not in item:
                raise ProtocolViolation("adapter result entry lacks caseId")
            if item.get("status") not in ("Ok", "Error", "Timeout"):
                raise ProtocolViolation(f"adapter result has bad status {item.get('status')!r}")
            if item["caseId"] in by_case:
                raise ProtocolViolation(f"adapter answered case {item['caseId']} twice")
            by_case[item["caseId"]] = item
    elif not timed_out:
        raise ProtocolViolation("adapter produced no response line")

    unknown = set(by_case) - {f"c{i}" for i in range(len(cases))}
    if unknown:
        raise ProtocolViolation(f"adapter answered unknown cases: {sorted(unknown)}")

    outcomes = []
    for i in range(len(cases)):
        item = by_case.get(f"c{i}")
        if item is None:
            if timed_out:
                outcomes.append(("Timeout", None, "suite cap exceeded"))
                continue
            raise ProtocolViolation(f"adapter did not answer case c{i}")
        if item["status"] == "Ok":
            outcomes.append(("Ok", item.get("value"), ""))
        elif item["status"] == "Timeout":
            outcomes.append(("Timeout", None, str(item.get("errorText", ""))))
        else:
            outcomes.append(("Error", None, str(item.get("errorText", ""))))
    return outcomes


def build_failure_report(report: SuiteReport) -> dict:
    """Exactly the non-Pass entries, in (behavior order, assertion index) order."""
    entries = []
    for result in report.results:
        if result["status"] == "Pass":
            continue
        entry = {
            "behaviorId": result["behaviorId"],
            "assertionIndex": result["assertionIndex"],
            "args": result["args"],
            "expected": result["expected"],
            "status": result["status"],
        }
        if "actual" in result:
            entry["actual"] = result["actual"]
        if "errorText" in result:
            entry["errorText"] = result["errorText"]
        entries.append(entry)
    if not entries:
        raise ValueError("failure report requires at least one non-Pass result")
    return {
        "functionId": report.function_id,
        "implementationVersion": report.implementation_version,
        "entries": entries,
    }
