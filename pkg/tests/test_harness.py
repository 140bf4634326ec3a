"""Suite runs (table and source kinds) vs brute-force re-evaluation."""

from __future__ import annotations

import sys

import pytest

from microcrowd.errors import ProtocolViolation, RunnerUnavailable
from microcrowd.harness import build_failure_report, run_suite
from microcrowd.model import Implementation
from microcrowd.values import canonical_text, values_equal

PY_ADAPTER = {"python": [sys.executable, "-m", "microcrowd.runner_py"]}


def table(entries, default=None):
    return Implementation(
        kind="Table",
        entries={canonical_text(args): value for args, value in entries},
        default=default,
    )


def brute_force_expected_statuses(impl, assertions_by_behavior):
    """Independent recomputation of table-suite statuses."""
    out = []
    for bid, assertions in assertions_by_behavior.items():
        for idx, a in enumerate(assertions):
            actual = impl.entries.get(canonical_text(a["args"]), impl.default)
            status = "Pass" if values_equal(actual, a["expected"]) else "Fail"
            out.append((bid, idx, status))
    return out


def test_table_suite_pass_and_fail():
    impl = table([([1], 2), ([2], 4)], default=0)
    suite = {
        "b1": [{"args": [1], "expected": 2}],
        "b2": [{"args": [2], "expected": 5}, {"args": [3], "expected": 0}],
    }
    report = run_suite(impl, suite, function_id="f1")
    got = [(r["behaviorId"], r["assertionIndex"], r["status"]) for r in report.results]
    assert got == brute_force_expected_statuses(impl, suite)
    assert got == [("b1", 0, "Pass"), ("b2", 0, "Fail"), ("b2", 1, "Pass")]
    fail = report.results[1]
    assert fail["actual"] == 4 and fail["expected"] == 5
    assert not report.all_pass()


def test_default_value_covers_unknown_args():
    impl = table([], default=[])
    report = run_suite(impl, {"b1": [{"args": ["anything"], "expected": []}]})
    assert report.all_pass()


def test_failure_report_contains_exactly_non_pass_entries():
    impl = table([([1], 2)], default=None)
    suite = {
        "b1": [{"args": [1], "expected": 2}],
        "b2": [{"args": [9], "expected": 1}],
        "b3": [{"args": [1], "expected": 3}],
    }
    report = run_suite(impl, suite, function_id="f1")
    failure = build_failure_report(report)
    assert [e["behaviorId"] for e in failure["entries"]] == ["b2", "b3"]
    assert failure["entries"][0]["actual"] is None
    assert failure["entries"][1]["actual"] == 2
    assert failure["functionId"] == "f1"


def test_failure_report_requires_a_failure():
    impl = table([([1], 2)])
    report = run_suite(impl, {"b1": [{"args": [1], "expected": 2}]})
    with pytest.raises(ValueError):
        build_failure_report(report)


def test_report_is_deterministic():
    impl = table([([1], 2), ([2], 9)], default="d")
    suite = {
        "b1": [{"args": [1], "expected": 2}],
        "b2": [{"args": [2], "expected": 9}],
    }
    a = run_suite(impl, suite, function_id="f1").to_value()
    b = run_suite(impl, suite, function_id="f1").to_value()
    assert a == b


# --- source kind through the reference adapter --------------------------------


def source_impl(text):
    return Implementation(kind="Source", source=text, language_tag="python")


def test_source_suite_ok_error_and_isolation():
    impl = source_impl(
        "def classify(n):\n"
        "    if n < 0:\n"
        "        raise ValueError('negative')\n"
        "    return {'even': n % 2 == 0}\n"
    )
    suite = {
        "b1": [{"args": [2], "expected": {"even": True}}],
        "b2": [{"args": [-1], "expected": {"even": False}}],
        "b3": [{"args": [3], "expected": {"even": False}}],
    }
    report = run_suite(impl, suite, adapters=PY_ADAPTER)
    statuses = [r["status"] for r in report.results]
    assert statuses == ["Pass", "Error", "Pass"]
    assert "negative" in report.results[1]["errorText"]


def test_source_case_timeout():
    impl = source_impl(
        "def spin(n):\n"
        "    while True:\n"
        "        pass\n"
    )
    report = run_suite(
        impl,
        {"b1": [{"args": [1], "expected": 0}]},
        adapters=PY_ADAPTER,
        case_timeout_ms=100,
    )
    assert report.results[0]["status"] == "Timeout"


def test_missing_adapter_is_runner_unavailable():
    impl = source_impl("def f(x):\n    return x\n")
    with pytest.raises(RunnerUnavailable):
        run_suite(impl, {"b1": [{"args": [1], "expected": 1}]}, adapters={})


def test_unstartable_adapter_is_runner_unavailable():
    impl = source_impl("def f(x):\n    return x\n")
    with pytest.raises(RunnerUnavailable):
        run_suite(
            impl,
            {"b1": [{"args": [1], "expected": 1}]},
            adapters={"python": ["/nonexistent-adapter-binary"]},
        )


def test_nonzero_exit_is_runner_unavailable():
    impl = source_impl("def f(x):\n    return x\n")
    with pytest.raises(RunnerUnavailable):
        run_suite(
            impl,
            {"b1": [{"args": [1], "expected": 1}]},
            adapters={"python": [sys.executable, "-c", "import sys; sys.exit(3)"]},
        )


def test_garbage_response_is_protocol_violation():
    impl = source_impl("def f(x):\n    return x\n")
    with pytest.raises(ProtocolViolation):
        run_suite(
            impl,
            {"b1": [{"args": [1], "expected": 1}]},
            adapters={"python": [sys.executable, "-c", "input(); print('junk')"]},
        )


def test_unanswered_case_is_protocol_violation():
    impl = source_impl("def f(x):\n    return x\n")
    answers_one = (
        "import json,sys\n"
        "req=json.loads(sys.stdin.readline())\n"
        "print(json.dumps({'results':[{'caseId':'c0','status':'Ok','value':1}]}))\n"
    )
    with pytest.raises(ProtocolViolation):
        run_suite(
            impl,
            {
                "b1": [{"args": [1], "expected": 1}],
                "b2": [{"args": [2], "expected": 2}],
            },
            adapters={"python": [sys.executable, "-c", answers_one]},
        )


def test_source_load_failure_errors_every_case():
    impl = source_impl("this is not python")
    report = run_suite(
        impl,
        {"b1": [{"args": [1], "expected": 1}], "b2": [{"args": [2], "expected": 2}]},
        adapters=PY_ADAPTER,
    )
    assert [r["status"] for r in report.results] == ["Error", "Error"]
