"""Shipped crowd scenarios and scenario validation.

A scenario is the ground truth a simulated crowd works from: the project
spec to post, per-function behaviors with their assertions, which implement
step declares which helper, and the worker population. Implementation
tables are derived from the assertions unless a scenario supplies its own,
and either way they are checked against every assertion at load time.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ServiceError
from .model import parse_project_spec
from .values import MalformedValue, canonical_text, ensure_value

__all__ = [
    "InvalidScenario",
    "WorkerModel",
    "SimFunction",
    "Scenario",
    "parse_scenario",
    "shipped_scenario",
    "SHIPPED_NAMES",
]


class InvalidScenario(ValueError):
    pass


def _fail(message: str):
    raise InvalidScenario(message)


@dataclass(frozen=True)
class WorkerModel:
    count: int
    accuracy_p: float
    skip_p: float
    latency_min_ms: int
    latency_max_ms: int


@dataclass(frozen=True)
class SimFunction:
    name: str
    description: str
    params: list
    return_type: str
    declared_by: str | None  # None for endpoint roots
    behaviors: list
    implementation: dict  # ready-to-submit Table implementation


@dataclass(frozen=True)
class Scenario:
    name: str
    doc: dict
    project_spec: dict
    functions: dict  # name -> SimFunction
    worker_models: list
    seed: int
    max_steps: int

    @property
    def total_behaviors(self) -> int:
        return sum(len(fn.behaviors) for fn in self.functions.values())


def _parse_behaviors(name: str, raw, params: list) -> list:
    if not isinstance(raw, list) or not raw:
        _fail(f"oracle[{name}].behaviors must be a non-empty list")
    seen_statements = set()
    behaviors = []
    for i, b in enumerate(raw):
        where = f"oracle[{name}].behaviors[{i}]"
        if not isinstance(b, dict):
            _fail(f"{where} must be an object")
        statement = b.get("statement")
        if not isinstance(statement, str) or not statement.strip():
            _fail(f"{where}.statement must be a non-empty string")
        if statement in seen_statements:
            _fail(f"{where}: duplicate statement {statement!r}")
        seen_statements.add(statement)
        assertions = b.get("assertions")
        if not isinstance(assertions, list) or not assertions:
            _fail(f"{where}.assertions must be a non-empty list")
        for j, a in enumerate(assertions):
            if not isinstance(a, dict) or "args" not in a or "expected" not in a:
                _fail(f"{where}.assertions[{j}] needs args and expected")
            args = a["args"]
            if not isinstance(args, list) or len(args) != len(params):
                _fail(
                    f"{where}.assertions[{j}].args must be a list of arity {len(params)}"
                )
            try:
                ensure_value(args)
                ensure_value(a["expected"])
            except MalformedValue as exc:
                _fail(f"{where}.assertions[{j}]: {exc}")
        behaviors.append({"statement": statement, "assertions": assertions})
    return behaviors


def _build_table(name: str, behaviors: list, default, explicit) -> dict:
    entries: dict = {}
    for b in behaviors:
        for a in b["assertions"]:
            key = canonical_text(a["args"])
            if key in entries and entries[key] != a["expected"]:
                _fail(
                    f"oracle[{name}] contradicts itself: args {key} expect both "
                    f"{entries[key]!r} and {a['expected']!r}"
                )
            entries[key] = a["expected"]
    if explicit is not None:
        if not isinstance(explicit, dict) or explicit.get("kind") != "Table":
            _fail(f"oracle[{name}].implementation must be a Table")
        table = dict(explicit)
        got_entries = table.get("entries", {})
        for b in behaviors:
            for a in b["assertions"]:
                key = canonical_text(a["args"])
                produced = got_entries.get(key, table.get("default"))
                if produced != a["expected"]:
                    _fail(
                        f"oracle[{name}].implementation fails its own assertion "
                        f"on args {key}: produced {produced!r}, expected {a['expected']!r}"
                    )
        table.setdefault("declaredPseudoCalls", [])
        return table
    try:
        ensure_value(default)
    except MalformedValue as exc:
        _fail(f"oracle[{name}].default: {exc}")
    return {"kind": "Table", "entries": entries, "default": default, "declaredPseudoCalls": []}


def parse_scenario(doc) -> Scenario:
    if not isinstance(doc, dict):
        _fail("scenario must be an object")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        _fail("scenario.name must be a non-empty string")

    spec = doc.get("projectSpec")
    try:
        _, endpoints = parse_project_spec(spec)
    except ServiceError as exc:
        _fail(f"scenario.projectSpec: {exc.message}")
    route_names = {}
    for ep in endpoints:
        if ep.name in route_names:
            _fail(f"scenario.projectSpec: endpoint name {ep.name!r} used twice")
        route_names[ep.name] = ep

    oracle_raw = doc.get("oracle")
    if not isinstance(oracle_raw, dict) or not oracle_raw:
        _fail("scenario.oracle must be a non-empty object")

    functions: dict[str, SimFunction] = {}
    for fn_name, entry in oracle_raw.items():
        if not isinstance(entry, dict):
            _fail(f"oracle[{fn_name}] must be an object")
        endpoint = route_names.get(fn_name)
        if endpoint is not None:
            if entry.get("declaredBy") is not None:
                _fail(f"oracle[{fn_name}] is an endpoint root; declaredBy must be null")
            params = endpoint.request_schema
            return_type = "object"
            description = endpoint.description
            declared_by = None
        else:
            declared_by = entry.get("declaredBy")
            if not isinstance(declared_by, str):
                _fail(f"oracle[{fn_name}] is not an endpoint; it needs declaredBy")
            params = entry.get("params")
            if not isinstance(params, list):
                _fail(f"oracle[{fn_name}].params must be a list")
            return_type = entry.get("returnType")
            description = entry.get("description", "")
        behaviors = _parse_behaviors(fn_name, entry.get("behaviors"), params)
        table = _build_table(
            fn_name, behaviors, entry.get("default"), entry.get("implementation")
        )
        functions[fn_name] = SimFunction(
            name=fn_name,
            description=description,
            params=params,
            return_type=return_type,
            declared_by=declared_by,
            behaviors=behaviors,
            implementation=table,
        )

    for ep in endpoints:
        if ep.name not in functions:
            _fail(f"endpoint {ep.name!r} has no oracle entry")
    for fn in functions.values():
        if fn.declared_by is not None and fn.declared_by not in functions:
            _fail(f"oracle[{fn.name}].declaredBy names unknown function {fn.declared_by!r}")

    # helpers must be reachable from the roots through declaredBy edges
    reachable = {fn.name for fn in functions.values() if fn.declared_by is None}
    grew = True
    while grew:
        grew = False
        for fn in functions.values():
            if fn.name not in reachable and fn.declared_by in reachable:
                reachable.add(fn.name)
                grew = True
    orphans = sorted(set(functions) - reachable)
    if orphans:
        _fail(f"oracle functions never declared by any reachable step: {orphans}")

    # fill each declarer's pseudo-call list, sorted for determinism
    for fn in functions.values():
        declared = [
            {
                "name": helper.name,
                "description": helper.description,
                "params": helper.params,
                "returnType": helper.return_type,
            }
            for helper in sorted(functions.values(), key=lambda f: f.name)
            if helper.declared_by == fn.name
        ]
        fn.implementation["declaredPseudoCalls"] = declared

    models_raw = doc.get("workerModels")
    if not isinstance(models_raw, list) or not models_raw:
        _fail("scenario.workerModels must be a non-empty list")
    models = []
    for i, m in enumerate(models_raw):
        where = f"workerModels[{i}]"
        if not isinstance(m, dict):
            _fail(f"{where} must be an object")
        count = m.get("count")
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            _fail(f"{where}.count must be a positive integer")
        accuracy = m.get("accuracyP")
        skip = m.get("skipP", 0)
        for label, p in (("accuracyP", accuracy), ("skipP", skip)):
            if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0 <= p <= 1:
                _fail(f"{where}.{label} must be a probability in [0, 1]")
        latency = m.get("latency", {})
        lo = latency.get("minMillis", 100)
        hi = latency.get("maxMillis", 1000)
        ok = (
            isinstance(lo, int) and isinstance(hi, int)
            and not isinstance(lo, bool) and not isinstance(hi, bool)
            and 0 < lo <= hi
        )
        if not ok:
            _fail(f"{where}.latency needs integers 0 < minMillis <= maxMillis")
        models.append(
            WorkerModel(
                count=count,
                accuracy_p=float(accuracy),
                skip_p=float(skip),
                latency_min_ms=lo,
                latency_max_ms=hi,
            )
        )

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        _fail("scenario.seed must be an integer")
    max_steps = doc.get("maxSteps")
    if not isinstance(max_steps, int) or isinstance(max_steps, bool) or max_steps < 1:
        _fail("scenario.maxSteps must be a positive integer")

    return Scenario(
        name=name,
        doc=doc,
        project_spec=spec,
        functions=functions,
        worker_models=models,
        seed=seed,
        max_steps=max_steps,
    )


# --- shipped scenarios -------------------------------------------------------------


def _todo(title: str, done: bool = False) -> dict:
    return {"title": title, "done": done}


def _behavior(statement: str, *cases) -> dict:
    return {
        "statement": statement,
        "assertions": [{"args": list(args), "expected": expected} for args, expected in cases],
    }


_EMPTY_STATS = {"total": 0, "completed": 0, "active": 0}


def _small_doc() -> dict:
    endpoints = [
        {
            "method": "POST",
            "path": "/todos",
            "name": "addTodo",
            "description": "Append a new todo with the given title.",
            "requestSchema": [["todos", "list"], ["title", "string"]],
            "responseSchema": [["todos", "list"]],
        },
        {
            "method": "DELETE",
            "path": "/todos",
            "name": "removeTodo",
            "description": "Remove the todo at the given index.",
            "requestSchema": [["todos", "list"], ["index", "number"]],
            "responseSchema": [["todos", "list"]],
        },
        {
            "method": "PUT",
            "path": "/todos/complete",
            "name": "completeTodo",
            "description": "Mark the todo at the given index as done.",
            "requestSchema": [["todos", "list"], ["index", "number"]],
            "responseSchema": [["todos", "list"]],
        },
        {
            "method": "GET",
            "path": "/todos/stats",
            "name": "todoStats",
            "description": "Summarize how many todos are done and still open.",
            "requestSchema": [["todos", "list"]],
            "responseSchema": [["total", "number"], ["completed", "number"], ["active", "number"]],
        },
    ]
    oracle = {
        "addTodo": {
            "declaredBy": None,
            "default": {"todos": []},
            "behaviors": [
                _behavior(
                    "adds a new todo with the given title and marks it not done",
                    (([], "buy milk"), {"todos": [_todo("buy milk")]}),
                ),
                _behavior(
                    "keeps existing todos in order when adding",
                    (
                        ([_todo("water plants")], "call mom"),
                        {"todos": [_todo("water plants"), _todo("call mom")]},
                    ),
                ),
                _behavior(
                    "trims surrounding whitespace from the title before adding",
                    (([], "  walk dog  "), {"todos": [_todo("walk dog")]}),
                ),
            ],
        },
        "removeTodo": {
            "declaredBy": None,
            "default": {"todos": []},
            "behaviors": [
                _behavior(
                    "removes the todo at the given index",
                    (([_todo("a"), _todo("b")], 0), {"todos": [_todo("b")]}),
                ),
                _behavior(
                    "leaves the list unchanged when the index is out of range",
                    (([_todo("a")], 5), {"todos": [_todo("a")]}),
                ),
            ],
        },
        "completeTodo": {
            "declaredBy": None,
            "default": {"todos": []},
            "behaviors": [
                _behavior(
                    "marks the todo at the given index as done",
                    (([_todo("a")], 0), {"todos": [_todo("a", True)]}),
                ),
                _behavior(
                    "leaves other todos untouched when completing one",
                    (
                        ([_todo("a"), _todo("b")], 1),
                        {"todos": [_todo("a"), _todo("b", True)]},
                    ),
                ),
                _behavior(
                    "completing an already done todo changes nothing",
                    # first case deliberately shares args with the behavior above
                    # so a corrupted expectation surfaces as a conflict
                    (([_todo("a")], 0), {"todos": [_todo("a", True)]}),
                    (([_todo("a", True)], 0), {"todos": [_todo("a", True)]}),
                ),
            ],
        },
        "todoStats": {
            "declaredBy": None,
            "default": _EMPTY_STATS,
            "behaviors": [
                _behavior(
                    "reports totals split by completion",
                    (
                        ([_todo("a", True), _todo("b")],),
                        {"total": 2, "completed": 1, "active": 1},
                    ),
                    # shares the empty-list case with the behavior below
                    (([],), _EMPTY_STATS),
                ),
                _behavior("reports zeros for an empty list", (([],), _EMPTY_STATS)),
            ],
        },
        "normalizeTitle": {
            "declaredBy": "addTodo",
            "description": "Clean up a raw title string.",
            "params": [["title", "string"]],
            "returnType": "string",
            "default": "",
            "behaviors": [
                _behavior("strips surrounding whitespace", (("  walk dog  ",), "walk dog")),
                _behavior("collapses runs of inner spaces", (("buy   milk",), "buy milk")),
            ],
        },
        "countCompleted": {
            "declaredBy": "todoStats",
            "description": "Count how many todos are marked done.",
            "params": [["todos", "list"]],
            "returnType": "number",
            "default": 0,
            "behaviors": [
                _behavior(
                    "counts todos marked done",
                    (([_todo("a", True), _todo("b")],), 1),
                ),
                _behavior("counts zero for an empty list", (([],), 0)),
            ],
        },
    }
    return {
        "name": "todo-small",
        "projectSpec": {"name": "todo-service", "endpoints": endpoints},
        "oracle": oracle,
        "workerModels": [
            {
                "count": 3,
                "accuracyP": 0.8,
                "skipP": 0.0,
                "latency": {"minMillis": 200, "maxMillis": 1200},
            }
        ],
        "seed": 7,
        "maxSteps": 4000,
    }


def _large_doc() -> dict:
    base = _small_doc()
    endpoints = base["projectSpec"]["endpoints"] + [
        {
            "method": "GET",
            "path": "/todos",
            "name": "listTodos",
            "description": "List todos matching a completion filter.",
            "requestSchema": [["todos", "list"], ["filter", "string"]],
            "responseSchema": [["todos", "list"]],
        },
        {
            "method": "PUT",
            "path": "/todos/title",
            "name": "renameTodo",
            "description": "Give the todo at the given index a new title.",
            "requestSchema": [["todos", "list"], ["index", "number"], ["title", "string"]],
            "responseSchema": [["todos", "list"]],
        },
        {
            "method": "POST",
            "path": "/todos/clear",
            "name": "clearCompleted",
            "description": "Drop every todo that is already done.",
            "requestSchema": [["todos", "list"]],
            "responseSchema": [["todos", "list"]],
        },
        {
            "method": "PUT",
            "path": "/todos/priority",
            "name": "prioritizeTodo",
            "description": "Set a clamped priority on the todo at the given index.",
            "requestSchema": [["todos", "list"], ["index", "number"], ["priority", "number"]],
            "responseSchema": [["todos", "list"]],
        },
    ]

    def ranked(title: str, priority: int, done: bool = False) -> dict:
        return {"title": title, "done": done, "priority": priority}

    oracle = dict(base["oracle"])
    oracle["removeTodo"] = dict(
        oracle["removeTodo"],
        behaviors=oracle["removeTodo"]["behaviors"]
        + [_behavior("removing from an empty list yields an empty list", (([], 0), {"todos": []}))],
    )
    oracle["todoStats"] = dict(
        oracle["todoStats"],
        behaviors=oracle["todoStats"]["behaviors"]
        + [
            _behavior(
                "counts an all done list as fully completed",
                (
                    ([_todo("a", True), _todo("b", True)],),
                    {"total": 2, "completed": 2, "active": 0},
                ),
            )
        ],
    )
    oracle.update(
        {
            "listTodos": {
                "declaredBy": None,
                "default": {"todos": []},
                "behaviors": [
                    _behavior(
                        "returns every todo for the all filter",
                        (
                            ([_todo("a", True), _todo("b")], "all"),
                            {"todos": [_todo("a", True), _todo("b")]},
                        ),
                    ),
                    _behavior(
                        "returns only unfinished todos for the active filter",
                        (([_todo("a", True), _todo("b")], "active"), {"todos": [_todo("b")]}),
                    ),
                    _behavior(
                        "returns only finished todos for the done filter",
                        (([_todo("a", True), _todo("b")], "done"), {"todos": [_todo("a", True)]}),
                    ),
                    _behavior(
                        "returns an empty list when nothing matches",
                        (([_todo("a", True)], "active"), {"todos": []}),
                    ),
                ],
            },
            "renameTodo": {
                "declaredBy": None,
                "default": {"todos": []},
                "behaviors": [
                    _behavior(
                        "renames the todo at the given index in title case",
                        (([_todo("a")], 0, "walk dog"), {"todos": [_todo("Walk Dog")]}),
                    ),
                    _behavior(
                        "keeps other todos untouched when renaming",
                        (
                            ([_todo("a"), _todo("b")], 1, "cook"),
                            {"todos": [_todo("a"), _todo("Cook")]},
                        ),
                    ),
                    _behavior(
                        "leaves the list unchanged when the index is out of range",
                        (([_todo("a")], 3, "x"), {"todos": [_todo("a")]}),
                    ),
                ],
            },
            "clearCompleted": {
                "declaredBy": None,
                "default": {"todos": []},
                "behaviors": [
                    _behavior(
                        "drops todos that are done",
                        (([_todo("a", True), _todo("b")],), {"todos": [_todo("b")]}),
                    ),
                    _behavior(
                        "keeps the list when nothing is done",
                        (([_todo("a"), _todo("b")],), {"todos": [_todo("a"), _todo("b")]}),
                    ),
                    _behavior(
                        "clearing an all done list empties it",
                        (([_todo("a", True)],), {"todos": []}),
                    ),
                ],
            },
            "prioritizeTodo": {
                "declaredBy": None,
                "default": {"todos": []},
                "behaviors": [
                    _behavior(
                        "sets the priority on the todo at the index",
                        (([_todo("a")], 0, 2), {"todos": [ranked("a", 2)]}),
                    ),
                    _behavior(
                        "clamps priorities above three down to three",
                        (([_todo("a")], 0, 9), {"todos": [ranked("a", 3)]}),
                    ),
                    _behavior(
                        "clamps priorities below one up to one",
                        (([_todo("a")], 0, 0), {"todos": [ranked("a", 1)]}),
                    ),
                ],
            },
            "matchesFilter": {
                "declaredBy": "listTodos",
                "description": "Decide whether one todo matches a completion filter.",
                "params": [["todo", "object"], ["filter", "string"]],
                "returnType": "boolean",
                "default": False,
                "behaviors": [
                    _behavior(
                        "every todo matches the all filter", ((_todo("a", True), "all"), True)
                    ),
                    _behavior(
                        "an unfinished todo matches the active filter",
                        ((_todo("b"), "active"), True),
                    ),
                    _behavior(
                        "a finished todo does not match the active filter",
                        ((_todo("a", True), "active"), False),
                    ),
                ],
            },
            "isValidIndex": {
                "declaredBy": "removeTodo",
                "description": "Check that an index points inside the list.",
                "params": [["todos", "list"], ["index", "number"]],
                "returnType": "boolean",
                "default": False,
                "behaviors": [
                    _behavior("an index inside the list is valid", (([_todo("a")], 0), True)),
                    _behavior("an index past the end is not valid", (([_todo("a")], 1), False)),
                ],
            },
            "clampPriority": {
                "declaredBy": "prioritizeTodo",
                "description": "Clamp a priority into the 1..3 range.",
                "params": [["priority", "number"]],
                "returnType": "number",
                "default": 1,
                "behaviors": [
                    _behavior("passes through priorities between one and three", ((2,), 2)),
                    _behavior("caps priorities above three at three", ((9,), 3)),
                ],
            },
            "titleCase": {
                "declaredBy": "renameTodo",
                "description": "Capitalize each word of a title.",
                "params": [["title", "string"]],
                "returnType": "string",
                "default": "",
                "behaviors": [
                    _behavior("capitalizes each word", (("walk dog",), "Walk Dog")),
                    _behavior("keeps a single word capitalized", (("Cook",), "Cook")),
                ],
            },
        }
    )
    return {
        "name": "todo-large",
        "projectSpec": {"name": "todo-service-full", "endpoints": endpoints},
        "oracle": oracle,
        "workerModels": [
            {
                "count": 5,
                "accuracyP": 1.0,
                "skipP": 0.0,
                "latency": {"minMillis": 200, "maxMillis": 1500},
            }
        ],
        "seed": 42,
        "maxSteps": 12000,
    }


_SHIPPED = {"todo-small": _small_doc, "todo-large": _large_doc}
SHIPPED_NAMES = tuple(sorted(_SHIPPED))


def shipped_scenario(name: str) -> dict:
    """Raw document of a shipped scenario; KeyError for unknown names."""
    return _SHIPPED[name]()
