"""Contradiction detection between behaviors of one function.

A witness is a pair of assertions from distinct behaviors whose args are
canonically equal while the expected values are canonically unequal. Witnesses
are frozen into Conflict records at open time; a conflict resolves only
through its ResolveConflict ticket, never implicitly.
"""

from __future__ import annotations

from .values import Value, canonical_text

__all__ = ["Witness", "find_contradictions", "pair_key", "filter_new"]


class Witness:
    __slots__ = ("side_a", "side_b", "args", "expected_a", "expected_b")

    def __init__(self, side_a, side_b, args, expected_a, expected_b):
        self.side_a = side_a  # [behaviorId, assertionIndex]
        self.side_b = side_b
        self.args = args
        self.expected_a = expected_a
        self.expected_b = expected_b

    def key(self) -> tuple:
        return (tuple(self.side_a), tuple(self.side_b))

    def to_value(self) -> dict:
        return {
            "sideA": self.side_a,
            "sideB": self.side_b,
            "args": self.args,
            "expectedA": self.expected_a,
            "expectedB": self.expected_b,
        }


def find_contradictions(assertions_by_behavior: dict[str, list]) -> list[Witness]:
    """All contradictory assertion pairs across distinct behaviors.

    Input maps behaviorId -> assertion dicts ({"args": [...], "expected": v}),
    in behavior creation order; output is ordered by (position of behavior A,
    assertion index A, position of behavior B, assertion index B), with A
    always the earlier behavior.
    """
    # bucket by canonical args so only same-args assertions are compared
    buckets: dict[str, list[tuple[int, str, int, str, Value]]] = {}
    for position, (behavior_id, assertions) in enumerate(assertions_by_behavior.items()):
        for index, assertion in enumerate(assertions):
            args_key = canonical_text(assertion["args"])
            expected_key = canonical_text(assertion["expected"])
            buckets.setdefault(args_key, []).append(
                (position, behavior_id, index, expected_key, assertion)
            )
    witnesses: list[Witness] = []
    for group in buckets.values():
        for i in range(len(group)):
            pos_a, bid_a, idx_a, exp_a, assertion_a = group[i]
            for j in range(i + 1, len(group)):
                pos_b, bid_b, idx_b, exp_b, assertion_b = group[j]
                if bid_a == bid_b or exp_a == exp_b:
                    continue
                # group order follows behavior position, so side A is the earlier behavior
                witnesses.append(
                    Witness(
                        side_a=[bid_a, idx_a],
                        side_b=[bid_b, idx_b],
                        args=assertion_a["args"],
                        expected_a=assertion_a["expected"],
                        expected_b=assertion_b["expected"],
                    )
                )
    witnesses.sort(key=_order_key(assertions_by_behavior))
    return witnesses


def _order_key(assertions_by_behavior: dict[str, list]):
    position = {bid: i for i, bid in enumerate(assertions_by_behavior)}

    def key(w: Witness):
        return (position[w.side_a[0]], w.side_a[1], position[w.side_b[0]], w.side_b[1])

    return key


def pair_key(side_a, side_b) -> tuple:
    return (tuple(side_a), tuple(side_b))


def filter_new(witnesses: list[Witness], open_pair_keys: set[tuple]) -> list[Witness]:
    """Idempotence: drop witnesses whose pair already has an open conflict."""
    return [w for w in witnesses if w.key() not in open_pair_keys]
