/**
 * Pure render models for the status dashboard, plus a change feed derived by
 * diffing consecutive status documents so state transitions are visible as
 * they land.
 */

import { canonicalText } from "./values.js";
import { MICROTASK_KINDS, type MicrotaskKind, type StatusDoc } from "./wire.js";

export interface QueueRow {
  kind: MicrotaskKind;
  depth: number;
}

/** Queue depths exactly as reported, in priority order. */
export function queueRows(status: StatusDoc): QueueRow[] {
  return MICROTASK_KINDS.map((kind) => ({ kind, depth: status.queueDepths[kind] ?? 0 }));
}

export function describeChanges(prev: StatusDoc | null, next: StatusDoc): string[] {
  const lines: string[] = [];
  if (prev === null) {
    lines.push(`project ${next.projectId} "${next.name}" loaded`);
    return lines;
  }
  if (!prev.completed && next.completed) lines.push("project completed");

  const prevFns = new Map(prev.functions.map((f) => [f.functionId, f]));
  for (const fn of next.functions) {
    const before = prevFns.get(fn.functionId);
    if (before === undefined) {
      lines.push(`function ${fn.name} added (${fn.state})`);
      continue;
    }
    if (before.state !== fn.state) {
      lines.push(`function ${fn.name}: ${before.state} → ${fn.state}`);
    }
    if (before.implementationVersion !== fn.implementationVersion) {
      lines.push(`function ${fn.name}: implementation v${fn.implementationVersion ?? 0} stored`);
    }
    const prevBehaviors = new Map(before.behaviors.map((b) => [b.behaviorId, b]));
    for (const b of fn.behaviors) {
      const was = prevBehaviors.get(b.behaviorId);
      if (was === undefined) {
        lines.push(`${fn.name} ${b.behaviorId} "${b.statement}" added`);
      } else if (was.state !== b.state) {
        lines.push(`${fn.name} ${b.behaviorId}: ${was.state} → ${b.state}`);
      } else if (was.testVersion !== b.testVersion) {
        lines.push(`${fn.name} ${b.behaviorId}: test v${b.testVersion ?? 0} stored`);
      }
    }
  }

  const prevConflicts = new Set(prev.openConflicts.map((c) => c.id));
  const nextConflicts = new Set(next.openConflicts.map((c) => c.id));
  for (const c of next.openConflicts) {
    if (!prevConflicts.has(c.id)) {
      lines.push(`conflict ${c.id} opened on args ${canonicalText(c.args)}`);
    }
  }
  for (const c of prev.openConflicts) {
    if (!nextConflicts.has(c.id)) lines.push(`conflict ${c.id} closed`);
  }

  for (const kind of MICROTASK_KINDS) {
    const before = prev.queueDepths[kind] ?? 0;
    const after = next.queueDepths[kind] ?? 0;
    if (before !== after) lines.push(`queue ${kind}: ${before} → ${after}`);
  }

  for (const id of next.flags.stuck) {
    if (!prev.flags.stuck.includes(id)) lines.push(`stuck: ${id}`);
  }
  for (const id of next.flags.attention) {
    if (!prev.flags.attention.includes(id)) lines.push(`needs attention: ${id}`);
  }
  return lines;
}
