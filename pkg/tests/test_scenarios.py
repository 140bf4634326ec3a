"""Scenario documents: shipped catalogs and load-time validation."""

import copy

import pytest

from microcrowd.scenarios import (
    SHIPPED_NAMES,
    InvalidScenario,
    parse_scenario,
    shipped_scenario,
)
from microcrowd.values import canonical_text


@pytest.fixture
def small_doc():
    return shipped_scenario("todo-small")


@pytest.fixture
def small(small_doc):
    return parse_scenario(small_doc)


class TestShippedCatalog:
    def test_both_names_shipped(self):
        assert set(SHIPPED_NAMES) == {"todo-small", "todo-large"}

    def test_unknown_name_raises(self):
        with pytest.raises(KeyError):
            shipped_scenario("todo-enormous")

    def test_each_call_returns_a_fresh_document(self):
        a = shipped_scenario("todo-small")
        b = shipped_scenario("todo-small")
        assert a == b
        a["seed"] = 999
        assert b["seed"] != 999

    def test_small_shape(self, small):
        assert len(small.project_spec["endpoints"]) == 4
        assert len(small.functions) == 6
        assert small.total_behaviors == 14
        helpers = {f.name: f.declared_by for f in small.functions.values() if f.declared_by}
        assert helpers == {"normalizeTitle": "addTodo", "countCompleted": "todoStats"}

    def test_large_scenario_shape(self):
        scn = parse_scenario(shipped_scenario("todo-large"))
        assert len(scn.project_spec["endpoints"]) == 8
        # the acceptance bar is >= 13 functions and >= 36 tests
        assert len(scn.functions) == 14
        assert scn.total_behaviors == 38

    def test_oracle_tables_pass_their_own_assertions(self):
        for name in SHIPPED_NAMES:
            scn = parse_scenario(shipped_scenario(name))
            for fn in scn.functions.values():
                table = fn.implementation
                for b in fn.behaviors:
                    for a in b["assertions"]:
                        key = canonical_text(a["args"])
                        produced = table["entries"].get(key, table["default"])
                        assert produced == a["expected"], (name, fn.name, b["statement"])

    def test_roots_take_params_from_endpoint_schema(self, small):
        add = small.functions["addTodo"]
        assert add.declared_by is None
        assert add.params == [["todos", "list"], ["title", "string"]]
        assert add.return_type == "object"

    def test_declared_pseudo_calls_filled_on_declarer(self, small):
        calls = small.functions["addTodo"].implementation["declaredPseudoCalls"]
        assert [c["name"] for c in calls] == ["normalizeTitle"]
        assert calls[0]["params"] == small.functions["normalizeTitle"].params
        assert small.functions["removeTodo"].implementation["declaredPseudoCalls"] == []

    def test_helpers_sorted_by_name_on_declarer(self):
        scn = parse_scenario(shipped_scenario("todo-large"))
        for fn in scn.functions.values():
            names = [c["name"] for c in fn.implementation["declaredPseudoCalls"]]
            assert names == sorted(names)


def reject(doc, fragment):
    with pytest.raises(InvalidScenario, match=fragment):
        parse_scenario(doc)


class TestValidation:
    def test_non_object_scenario(self):
        reject(["not", "a", "scenario"], "must be an object")

    def test_missing_name(self, small_doc):
        del small_doc["name"]
        reject(small_doc, "scenario.name")

    def test_bad_project_spec(self, small_doc):
        small_doc["projectSpec"] = {"name": "broken", "endpoints": "not-a-list"}
        reject(small_doc, "scenario.projectSpec")

    def test_endpoint_without_oracle_entry(self, small_doc):
        del small_doc["oracle"]["todoStats"]
        del small_doc["oracle"]["countCompleted"]  # would dangle otherwise
        reject(small_doc, "has no oracle entry")

    def test_root_with_declared_by(self, small_doc):
        small_doc["oracle"]["addTodo"]["declaredBy"] = "todoStats"
        reject(small_doc, "declaredBy must be null")

    def test_helper_without_declared_by(self, small_doc):
        del small_doc["oracle"]["normalizeTitle"]["declaredBy"]
        reject(small_doc, "needs declaredBy")

    def test_declared_by_unknown_function(self, small_doc):
        small_doc["oracle"]["normalizeTitle"]["declaredBy"] = "ghostFunction"
        reject(small_doc, "unknown function")

    def test_unreachable_helper_cycle(self, small_doc):
        # two helpers declaring each other never hang off any root
        a = small_doc["oracle"]["normalizeTitle"]
        b = copy.deepcopy(a)
        a["declaredBy"] = "helperB"
        small_doc["oracle"]["helperB"] = b
        b["declaredBy"] = "normalizeTitle"
        reject(small_doc, "never declared")

    def test_duplicate_statement(self, small_doc):
        behaviors = small_doc["oracle"]["addTodo"]["behaviors"]
        behaviors[1]["statement"] = behaviors[0]["statement"]
        reject(small_doc, "duplicate statement")

    def test_blank_statement(self, small_doc):
        small_doc["oracle"]["addTodo"]["behaviors"][0]["statement"] = "   "
        reject(small_doc, "non-empty string")

    def test_empty_behavior_list(self, small_doc):
        small_doc["oracle"]["addTodo"]["behaviors"] = []
        reject(small_doc, "non-empty list")

    def test_assertion_arity_mismatch(self, small_doc):
        # addTodo takes (todos, title); one arg is too few
        small_doc["oracle"]["addTodo"]["behaviors"][0]["assertions"][0]["args"] = [[]]
        reject(small_doc, "arity")

    def test_assertion_missing_expected(self, small_doc):
        del small_doc["oracle"]["addTodo"]["behaviors"][0]["assertions"][0]["expected"]
        reject(small_doc, "args and expected")

    def test_contradictory_assertions_across_behaviors(self, small_doc):
        behaviors = small_doc["oracle"]["addTodo"]["behaviors"]
        first = behaviors[0]["assertions"][0]
        behaviors[1]["assertions"].append(
            {"args": first["args"], "expected": {"todos": [{"title": "other", "done": True}]}}
        )
        reject(small_doc, "contradicts itself")

    def test_explicit_table_must_pass_assertions(self, small_doc):
        small_doc["oracle"]["addTodo"]["implementation"] = {
            "kind": "Table",
            "entries": {},
            "default": {"todos": ["wrong"]},
        }
        reject(small_doc, "fails its own assertion")

    def test_explicit_non_table_rejected(self, small_doc):
        small_doc["oracle"]["addTodo"]["implementation"] = {
            "kind": "Source",
            "languageTag": "python",
            "text": "pass",
        }
        reject(small_doc, "must be a Table")

    def test_accuracy_out_of_range(self, small_doc):
        small_doc["workerModels"][0]["accuracyP"] = 1.5
        reject(small_doc, "probability")

    def test_boolean_probability_rejected(self, small_doc):
        small_doc["workerModels"][0]["accuracyP"] = True
        reject(small_doc, "probability")

    def test_skip_probability_out_of_range(self, small_doc):
        small_doc["workerModels"][0]["skipP"] = -0.2
        reject(small_doc, "probability")

    def test_latency_zero_min(self, small_doc):
        small_doc["workerModels"][0]["latency"] = {"minMillis": 0, "maxMillis": 100}
        reject(small_doc, "latency")

    def test_latency_min_above_max(self, small_doc):
        small_doc["workerModels"][0]["latency"] = {"minMillis": 500, "maxMillis": 100}
        reject(small_doc, "latency")

    def test_worker_count_positive(self, small_doc):
        small_doc["workerModels"][0]["count"] = 0
        reject(small_doc, "positive integer")

    def test_empty_worker_models(self, small_doc):
        small_doc["workerModels"] = []
        reject(small_doc, "non-empty list")

    def test_seed_must_be_integer(self, small_doc):
        small_doc["seed"] = "42"
        reject(small_doc, "seed")

    def test_max_steps_positive(self, small_doc):
        small_doc["maxSteps"] = 0
        reject(small_doc, "maxSteps")
