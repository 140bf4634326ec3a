"""Reference runner adapter for Python source implementations.

Protocol: read one JSON request line from stdin
({languageTag, source, timeoutMillis, cases: [{caseId, args}]}), write one
JSON response line to stdout ({results: [{caseId, status, value|errorText}]}).

The source text must define exactly one top-level function; each case calls
it with the case args. Per-case timeouts run the call on a daemon thread.
The source is executed without sandboxing: suitable for trusted desk use
only, which is all this adapter is for.

Run as: python3 -m microcrowd.runner_py
"""

from __future__ import annotations

import json
import sys
import threading
import types


def _single_function(source: str):
    namespace: dict = {}
    exec(compile(source, "<implementation>", "exec"), namespace)  # noqa: S102
    functions = [
        v
        for v in namespace.values()
        if isinstance(v, types.FunctionType) and v.__module__ is None
    ]
    if len(functions) != 1:
        raise ValueError(f"source must define exactly one function, found {len(functions)}")
    return functions[0]


def _call_with_timeout(fn, args, timeout_ms: int):
    box: dict = {}

    def work():
        try:
            box["value"] = fn(*args)
        except BaseException as exc:  # noqa: BLE001 - reported, not swallowed
            box["error"] = f"{type(exc).__name__}: {exc}"

    thread = threading.Thread(target=work, daemon=True)
    thread.start()
    thread.join(timeout_ms / 1000.0)
    if thread.is_alive():
        return {"status": "Timeout", "errorText": f"exceeded {timeout_ms}ms"}
    if "error" in box:
        return {"status": "Error", "errorText": box["error"]}
    return {"status": "Ok", "value": box.get("value")}


def main() -> int:
    line = sys.stdin.readline()
    if not line.strip():
        return 2
    request = json.loads(line)
    timeout_ms = int(request.get("timeoutMillis", 2000))
    results = []
    try:
        fn = _single_function(request["source"])
    except Exception as exc:  # source didn't even load: every case errors
        for case in request.get("cases", []):
            results.append(
                {"caseId": case["caseId"], "status": "Error", "errorText": f"load: {exc}"}
            )
        print(json.dumps({"results": results}, sort_keys=True, separators=(",", ":")))
        return 0
    for case in request.get("cases", []):
        outcome = _call_with_timeout(fn, case.get("args", []), timeout_ms)
        outcome["caseId"] = case["caseId"]
        results.append(outcome)
    print(json.dumps({"results": results}, sort_keys=True, separators=(",", ":")))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
