"""Simulated crowd: corruption model, worker policy, and end-to-end runs."""

import pytest

from microcrowd.scenarios import parse_scenario, shipped_scenario
from microcrowd.sim import (
    SimError,
    WireClient,
    _corruptible,
    _probe_test,
    compare_runs,
    corrupt_expected,
    corrupt_output,
    corrupted_body,
    honest_body,
    run_scenario,
)
from microcrowd.state import fold
from microcrowd.store import EventStore
from microcrowd.values import canonical_text


@pytest.fixture(scope="module")
def small():
    return parse_scenario(shipped_scenario("todo-small"))


def tiny_doc(**overrides) -> dict:
    doc = {
        "name": "tiny-echo",
        "projectSpec": {
            "name": "echo service",
            "endpoints": [
                {
                    "method": "POST",
                    "path": "/echo",
                    "name": "echo",
                    "description": "Echo the given word back.",
                    "requestSchema": [["word", "string"]],
                    "responseSchema": [["word", "string"]],
                }
            ],
        },
        "oracle": {
            "echo": {
                "declaredBy": None,
                "default": {"word": ""},
                "behaviors": [
                    {
                        "statement": "returns the word unchanged",
                        "assertions": [{"args": ["hi"], "expected": {"word": "hi"}}],
                    },
                    {
                        "statement": "echoes a different word too",
                        "assertions": [{"args": ["yo"], "expected": {"word": "yo"}}],
                    },
                ],
            }
        },
        "workerModels": [
            {
                "count": 1,
                "accuracyP": 1.0,
                "skipP": 0.0,
                "latency": {"minMillis": 50, "maxMillis": 200},
            }
        ],
        "seed": 5,
        "maxSteps": 600,
    }
    doc.update(overrides)
    return doc


class TestCorruptionPrimitives:
    SHAPES = [
        3,
        -1,
        2.5,
        "title",
        "",
        True,
        False,
        None,
        [1, 2, 3],
        {"total": 2, "active": 1},
        {"todos": [{"title": "a", "done": False}]},
        {},
        [],
        [{}, []],
    ]

    @pytest.mark.parametrize("value", SHAPES, ids=canonical_text)
    def test_corruptions_differ_from_honest_and_each_other(self, value):
        wrong_test = corrupt_expected(value)
        wrong_output = corrupt_output(value)
        assert wrong_test != value
        assert wrong_output != value
        # a corrupted expectation can never accidentally agree with a
        # corrupted table row, so no corruption pair self-heals
        assert wrong_test != wrong_output

    def test_original_value_is_untouched(self):
        value = {"todos": [{"title": "a", "done": False}]}
        corrupt_expected(value)
        corrupt_output(value)
        assert value == {"todos": [{"title": "a", "done": False}]}

    def test_first_leaf_in_sorted_key_order(self):
        # dict keys are visited in sorted order, so "active" moves first
        assert corrupt_expected({"total": 7, "active": 2}) == {"total": 7, "active": 3}
        assert corrupt_output({"total": 7, "active": 2}) == {"total": 7, "active": 1}

    def test_minimal_edits_by_shape(self):
        assert corrupt_expected(10) == 11
        assert corrupt_output(10) == 9
        assert corrupt_expected("ab") == "abx"
        assert corrupt_output("ab") == "ab#"
        assert corrupt_expected(True) is False
        assert corrupt_output(True) == "corrupted"


class TestWorkerPolicy:
    def view(self, kind, fn_name, **extra):
        return {"kind": kind, "function": {"name": fn_name}, **extra}

    def test_identify_declares_first_missing_statement(self, small):
        fn = small.functions["addTodo"]
        declared = [{"statement": fn.behaviors[0]["statement"], "state": "Tested"}]
        view = self.view("IdentifyBehavior", "addTodo", behaviors=declared)
        body = honest_body(view, small)
        assert body == {
            "kind": "IdentifyBehavior",
            "newStatement": fn.behaviors[1]["statement"],
        }

    def test_identify_votes_no_more_when_oracle_is_exhausted(self, small):
        fn = small.functions["addTodo"]
        declared = [{"statement": b["statement"]} for b in fn.behaviors]
        view = self.view("IdentifyBehavior", "addTodo", behaviors=declared)
        assert honest_body(view, small) == {
            "kind": "IdentifyBehavior",
            "noMoreBehaviors": True,
        }

    def test_write_test_copies_oracle_assertions(self, small):
        fn = small.functions["todoStats"]
        view = self.view(
            "WriteTest", "todoStats", behavior={"statement": fn.behaviors[0]["statement"]}
        )
        assert honest_body(view, small)["assertions"] == fn.behaviors[0]["assertions"]

    def test_write_test_probes_statements_outside_the_contract(self, small):
        view = self.view(
            "WriteTest", "addTodo", behavior={"statement": "sorts todos by color"}
        )
        body = honest_body(view, small)
        assert body["assertions"] == _probe_test(small.functions["addTodo"])
        (assertion,) = body["assertions"]
        assert len(assertion["args"]) == len(small.functions["addTodo"].params)
        assert assertion["expected"] == {"bogusBehaviorProbe": True}

    def test_probe_args_never_collide_with_oracle_args(self, small):
        for fn in small.functions.values():
            probe_key = canonical_text(_probe_test(fn)[0]["args"])
            oracle_keys = {
                canonical_text(a["args"]) for b in fn.behaviors for a in b["assertions"]
            }
            assert probe_key not in oracle_keys

    def test_implement_ships_the_oracle_table(self, small):
        view = self.view("ImplementBehavior", "addTodo")
        body = honest_body(view, small)
        assert body["implementation"] == small.functions["addTodo"].implementation
        assert [c["name"] for c in body["implementation"]["declaredPseudoCalls"]] == [
            "normalizeTitle"
        ]

    def test_debug_disputes_behaviors_outside_the_contract_first(self, small):
        fn = small.functions["addTodo"]
        good = fn.behaviors[0]
        view = self.view(
            "DebugFailure",
            "addTodo",
            activeTests=[
                {"behaviorId": "b-real", "statement": good["statement"], "assertions": good["assertions"]},
                {"behaviorId": "b-bogus", "statement": "sorts todos by color", "assertions": _probe_test(fn)},
            ],
            failureReport={
                "entries": [
                    {
                        "behaviorId": "b-bogus",
                        "args": _probe_test(fn)[0]["args"],
                        "expected": {"bogusBehaviorProbe": True},
                    }
                ]
            },
        )
        body = honest_body(view, small)
        assert body["outcome"] == "DisputeBehavior"
        assert body["behaviorId"] == "b-bogus"

    def test_debug_disputes_a_test_whose_expectation_is_off_oracle(self, small):
        fn = small.functions["addTodo"]
        good = fn.behaviors[0]
        wrong = corrupt_expected(good["assertions"][0]["expected"])
        view = self.view(
            "DebugFailure",
            "addTodo",
            activeTests=[
                {"behaviorId": "b1", "statement": good["statement"], "assertions": good["assertions"]}
            ],
            failureReport={
                "entries": [
                    {"behaviorId": "b1", "args": good["assertions"][0]["args"], "expected": wrong}
                ]
            },
        )
        body = honest_body(view, small)
        assert body["outcome"] == "DisputeTest"
        assert body["behaviorId"] == "b1"

    def test_debug_fixes_the_table_when_expectations_are_right(self, small):
        fn = small.functions["addTodo"]
        good = fn.behaviors[0]
        view = self.view(
            "DebugFailure",
            "addTodo",
            activeTests=[
                {"behaviorId": "b1", "statement": good["statement"], "assertions": good["assertions"]}
            ],
            failureReport={
                "entries": [
                    {
                        "behaviorId": "b1",
                        "args": good["assertions"][0]["args"],
                        "expected": good["assertions"][0]["expected"],
                    }
                ]
            },
        )
        body = honest_body(view, small)
        assert body["outcome"] == "FixedImplementation"
        assert body["implementation"] == fn.implementation

    def test_resolve_rewrites_only_sides_that_disagree_with_the_oracle(self, small):
        fn = small.functions["todoStats"]
        b0, b1 = fn.behaviors[0], fn.behaviors[1]
        corrupted = [dict(b1["assertions"][0], expected=corrupt_expected(b1["assertions"][0]["expected"]))]
        view = self.view(
            "ResolveConflict",
            "todoStats",
            sides=[
                {"behaviorId": "b1", "statement": b0["statement"], "assertions": b0["assertions"]},
                {"behaviorId": "b2", "statement": b1["statement"], "assertions": corrupted},
            ],
        )
        body = honest_body(view, small)
        assert body == {"kind": "ResolveConflict", "editedTests": {"b2": b1["assertions"]}}

    def test_resolve_restores_the_probe_form_for_bogus_sides(self, small):
        fn = small.functions["addTodo"]
        probe = _probe_test(fn)
        mangled = [dict(probe[0], expected=corrupt_expected(probe[0]["expected"]))]
        view = self.view(
            "ResolveConflict",
            "addTodo",
            sides=[
                {"behaviorId": "b9", "statement": "sorts todos by color", "assertions": mangled}
            ],
        )
        body = honest_body(view, small)
        assert body["editedTests"] == {"b9": probe}


class TestCorruptedBodies:
    def test_identify_claims_a_statement_off_the_contract(self, small):
        fn = small.functions["addTodo"]
        view = {"kind": "IdentifyBehavior", "function": {"name": "addTodo"}, "behaviors": []}
        honest = honest_body(view, small)
        body = corrupted_body(honest, view, small)
        assert body["newStatement"] == fn.behaviors[0]["statement"] + " twice"

    def test_corrupted_no_more_vote_claims_a_bogus_behavior(self, small):
        fn = small.functions["addTodo"]
        declared = [{"statement": b["statement"]} for b in fn.behaviors]
        view = {
            "kind": "IdentifyBehavior",
            "function": {"name": "addTodo"},
            "behaviors": declared,
        }
        honest = honest_body(view, small)
        assert honest == {"kind": "IdentifyBehavior", "noMoreBehaviors": True}
        body = corrupted_body(honest, view, small)
        assert body["newStatement"].endswith(" twice")

    def test_corrupted_test_perturbs_the_first_expected_value(self, small):
        fn = small.functions["todoStats"]
        view = {
            "kind": "WriteTest",
            "function": {"name": "todoStats"},
            "behavior": {"statement": fn.behaviors[0]["statement"]},
        }
        honest = honest_body(view, small)
        body = corrupted_body(honest, view, small)
        assert body["assertions"][0]["args"] == honest["assertions"][0]["args"]
        assert body["assertions"][0]["expected"] != honest["assertions"][0]["expected"]
        assert body["assertions"][1:] == honest["assertions"][1:]

    def test_corrupted_table_perturbs_the_first_active_row(self, small):
        fn = small.functions["addTodo"]
        active = [
            {
                "behaviorId": "b1",
                "statement": fn.behaviors[0]["statement"],
                "assertions": fn.behaviors[0]["assertions"],
            }
        ]
        view = {
            "kind": "ImplementBehavior",
            "function": {"name": "addTodo"},
            "activeTests": active,
        }
        honest = honest_body(view, small)
        body = corrupted_body(honest, view, small)
        key = canonical_text(fn.behaviors[0]["assertions"][0]["args"])
        assert body["implementation"]["entries"][key] != honest["implementation"]["entries"][key]

    def test_corruptible_kinds(self):
        assert _corruptible({"kind": "IdentifyBehavior", "newStatement": "x"})
        assert _corruptible({"kind": "WriteTest", "assertions": []})
        assert _corruptible({"kind": "ImplementBehavior", "implementation": {}})
        assert _corruptible({"kind": "DebugFailure", "outcome": "FixedImplementation"})
        assert not _corruptible({"kind": "DebugFailure", "outcome": "DisputeTest"})
        assert not _corruptible({"kind": "DebugFailure", "outcome": "DisputeBehavior"})
        assert not _corruptible({"kind": "ResolveConflict", "editedTests": {}})


def oracle_suites(scenario) -> dict:
    return {
        fn.name: {b["statement"]: b["assertions"] for b in fn.behaviors}
        for fn in scenario.functions.values()
    }


def suites_match_oracle(bundle, scenario) -> bool:
    want = oracle_suites(scenario)
    suites = bundle["suites"]
    if set(suites) != set(want):
        return False
    return all(
        rows and all(want[name].get(r["statement"]) == r["assertions"] for r in rows)
        for name, rows in suites.items()
    )


class TestRuns:
    def test_log_path_is_required(self):
        with pytest.raises(SimError, match="log_path"):
            run_scenario(tiny_doc())

    def test_service_unreachable_is_a_sim_error(self):
        client = WireClient("127.0.0.1", 9)  # discard port; nothing listens
        with pytest.raises(SimError, match="ServiceUnreachable"):
            client.request("POST", "/projects", body={})

    def test_perfect_tiny_run_hits_the_analytical_minimum(self, tmp_path):
        report = run_scenario(tiny_doc(), log_path=tmp_path / "tiny.log")
        assert report.outcome == "Completed"
        # 2 statements + 1 noMore vote + 2 tests + 1 implement
        assert report.total_microtasks == 6
        assert report.debug_tasks == 0
        assert report.conflicts_opened == 0
        assert suites_match_oracle(report.bundle, parse_scenario(tiny_doc()))

    def test_report_value_shape(self, tmp_path):
        report = run_scenario(tiny_doc(), log_path=tmp_path / "tiny.log")
        doc = report.to_value()
        assert doc["scenario"] == "tiny-echo"
        assert doc["seed"] == 5
        assert doc["outcome"] == "Completed"
        assert doc["totalMicrotasks"] == 6
        assert set(doc["countsByKind"]) == {
            "IdentifyBehavior",
            "WriteTest",
            "ImplementBehavior",
            "DebugFailure",
            "ResolveConflict",
        }
        assert doc["eventLogPath"].endswith("tiny.log")
        assert doc["metricsFromService"]["projectCompleted"] is True
        assert len(doc["finalStateSha256"]) == 64

    def test_completion_within_four_tasks_per_behavior(self, tmp_path):
        doc = shipped_scenario("todo-small")
        doc["workerModels"] = [dict(m, accuracyP=1.0) for m in doc["workerModels"]]
        scenario = parse_scenario(doc)
        report = run_scenario(scenario, seed=11, log_path=tmp_path / "bound.log")
        assert report.outcome == "Completed"
        assert report.total_microtasks <= 4 * scenario.total_behaviors

    def test_skips_delay_but_do_not_add_work(self, tmp_path):
        doc = shipped_scenario("todo-small")
        doc["workerModels"] = [
            dict(m, accuracyP=1.0, skipP=0.5) for m in doc["workerModels"]
        ]
        report = run_scenario(parse_scenario(doc), seed=11, log_path=tmp_path / "skid.log")
        assert report.outcome == "Completed"
        assert report.total_microtasks == 40
        assert report.metrics["skips"] > 0

    def test_same_seed_runs_are_byte_identical(self, tmp_path):
        run_scenario(tiny_doc(), seed=9, log_path=tmp_path / "a.log")
        run_scenario(tiny_doc(), seed=9, log_path=tmp_path / "b.log")
        assert compare_runs(tmp_path / "a.log", tmp_path / "b.log") == {"identical": True}

    def test_different_seeds_diverge(self, tmp_path):
        run_scenario(tiny_doc(), seed=9, log_path=tmp_path / "a.log")
        run_scenario(tiny_doc(), seed=10, log_path=tmp_path / "b.log")
        verdict = compare_runs(tmp_path / "a.log", tmp_path / "b.log")
        assert verdict["identical"] is False
        assert verdict["divergesAtSeq"] >= 1

    def test_truncated_log_diverges_at_the_cut(self, tmp_path):
        run_scenario(tiny_doc(), seed=9, log_path=tmp_path / "a.log")
        lines = (tmp_path / "a.log").read_bytes().splitlines(keepends=True)
        (tmp_path / "cut.log").write_bytes(b"".join(lines[:25]))
        verdict = compare_runs(tmp_path / "a.log", tmp_path / "cut.log")
        assert verdict == {"identical": False, "divergesAtSeq": 26}

    def test_zero_accuracy_hits_the_step_limit_with_stuck_tasks(self, tmp_path):
        doc = shipped_scenario("todo-small")
        doc["workerModels"] = [dict(m, accuracyP=0.0) for m in doc["workerModels"]]
        doc["maxSteps"] = 1500
        report = run_scenario(parse_scenario(doc), seed=3, log_path=tmp_path / "acc0.log")
        assert report.outcome == "StepLimit"

        state = fold(EventStore(tmp_path / "acc0.log").events)
        project = state.projects[report.project_id]
        assert project.stuck_ids(10)
        assert not project.completed

    def test_fault_progress_across_twenty_seeds(self, tmp_path):
        doc = shipped_scenario("todo-small")
        doc["workerModels"] = [dict(m, accuracyP=0.7) for m in doc["workerModels"]]
        doc["maxSteps"] = 50 * 40  # fifty times the minimal microtask count
        scenario = parse_scenario(doc)
        outcomes = [
            run_scenario(scenario, seed=s, log_path=tmp_path / f"fp{s}.log").outcome
            for s in range(1, 21)
        ]
        assert outcomes.count("Completed") >= 19

    @pytest.mark.parametrize("seed", [2, 6, 13])
    def test_no_corruption_ships_into_the_bundle(self, small, tmp_path, seed):
        report = run_scenario(small, seed=seed, log_path=tmp_path / f"r{seed}.log")
        assert report.outcome == "Completed"
        assert report.debug_tasks > 0 or report.conflicts_opened > 0
        assert suites_match_oracle(report.bundle, small)
