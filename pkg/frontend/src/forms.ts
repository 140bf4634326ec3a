/**
 * Form drafts and the builders that turn them into submission bodies.
 *
 * Drafts hold raw field text and belong to the page; nothing here touches the
 * server. A builder either returns a body that passed the shared validator or
 * the list of issues to pin on the form, so the submit path physically cannot
 * send a request the validator would have refused.
 */

import { canonicalText, parseValueText, type Value } from "./values.js";
import { validateSubmission, type Issue } from "./validate.js";
import type {
  AssertionDoc,
  ImplementationDoc,
  MicrotaskView,
  PseudoCallDoc,
  SubmissionBody,
} from "./wire.js";

export interface AssertionRowDraft {
  args: string[]; // one JSON text per parameter
  expected: string;
}

export interface TableRowDraft {
  args: string[];
  output: string;
}

export interface ParamRowDraft {
  name: string;
  scalar: string;
}

export interface PseudoCallRowDraft {
  name: string;
  returnType: string;
  description: string;
  params: ParamRowDraft[];
}

export interface IdentifyDraft {
  statement: string;
  noMore: boolean;
}

export interface ImplementDraft {
  mode: "Table" | "Source";
  rows: TableRowDraft[];
  defaultText: string;
  source: string;
  languageTag: string;
  pseudoCalls: PseudoCallRowDraft[];
}

export interface TestDraft {
  rows: AssertionRowDraft[];
}

export type DebugOutcome = "FixedImplementation" | "DisputeTest" | "DisputeBehavior";

export interface DebugDraft {
  outcome: DebugOutcome;
  behaviorId: string;
  reason: string;
  impl: ImplementDraft;
}

export interface ResolveSideDraft {
  behaviorId: string;
  editStatement: boolean;
  statement: string;
  editTest: boolean;
  rows: AssertionRowDraft[];
}

export interface ResolveDraft {
  sides: ResolveSideDraft[];
}

export type BuildResult = { body: SubmissionBody } | { issues: Issue[] };

const failed = (issues: Issue[]): BuildResult => ({ issues });

// --- prefills from a fetched view ------------------------------------------------

export function emptyAssertionRow(arity: number): AssertionRowDraft {
  return { args: Array.from({ length: arity }, () => ""), expected: "" };
}

export function assertionRows(assertions: AssertionDoc[]): AssertionRowDraft[] {
  return assertions.map((a) => ({
    args: a.args.map((v) => JSON.stringify(v)),
    expected: JSON.stringify(a.expected),
  }));
}

export function implementDraftFrom(view: MicrotaskView): ImplementDraft {
  const current = view.currentImplementation ?? null;
  const draft: ImplementDraft = {
    mode: "Table",
    rows: [],
    defaultText: "null",
    source: "",
    languageTag: "python",
    pseudoCalls: [],
  };
  if (current === null) return draft;
  draft.pseudoCalls = current.declaredPseudoCalls.map((d) => ({
    name: d.name,
    returnType: d.returnType,
    description: d.description,
    params: d.params.map(([name, scalar]) => ({ name, scalar })),
  }));
  if (current.kind === "Table") {
    draft.rows = Object.entries(current.entries).map(([key, output]) => ({
      args: (JSON.parse(key) as Value[]).map((v) => JSON.stringify(v)),
      output: JSON.stringify(output),
    }));
    draft.defaultText = JSON.stringify(current.default);
  } else {
    draft.mode = "Source";
    draft.source = current.source;
    draft.languageTag = current.languageTag;
  }
  return draft;
}

export function testDraftFrom(view: MicrotaskView): TestDraft {
  const current = view.currentTest;
  const arity = view.function.params.length;
  return { rows: current ? assertionRows(current.assertions) : [emptyAssertionRow(arity)] };
}

export function debugDraftFrom(view: MicrotaskView): DebugDraft {
  const firstFailure = view.failureReport?.entries[0];
  return {
    outcome: "FixedImplementation",
    behaviorId: firstFailure?.behaviorId ?? "",
    reason: "",
    impl: implementDraftFrom(view),
  };
}

export function resolveDraftFrom(view: MicrotaskView): ResolveDraft {
  return {
    sides: (view.sides ?? []).map((side) => ({
      behaviorId: side.behaviorId,
      editStatement: false,
      statement: side.statement,
      editTest: false,
      rows: assertionRows(side.assertions),
    })),
  };
}

// --- builders --------------------------------------------------------------------

export function buildIdentify(draft: IdentifyDraft, view: MicrotaskView): BuildResult {
  const body: SubmissionBody = draft.noMore
    ? { kind: "IdentifyBehavior", noMoreBehaviors: true }
    : { kind: "IdentifyBehavior", newStatement: draft.statement.trim() };
  const issues = validateSubmission(body, view);
  return issues.length > 0 ? failed(issues) : { body };
}

function parseRows(rows: AssertionRowDraft[], path: string): { assertions: AssertionDoc[] } | { issues: Issue[] } {
  const issues: Issue[] = [];
  const assertions: AssertionDoc[] = [];
  rows.forEach((row, i) => {
    const args: Value[] = [];
    row.args.forEach((text, j) => {
      const parsed = parseValueText(text);
      if ("error" in parsed) {
        issues.push({ path: `${path}[${i}].args[${j}]`, code: "MalformedBody", message: parsed.error });
      } else {
        args.push(parsed.value);
      }
    });
    const expected = parseValueText(row.expected);
    if ("error" in expected) {
      issues.push({ path: `${path}[${i}].expected`, code: "MalformedBody", message: expected.error });
      return;
    }
    assertions.push({ args, expected: expected.value });
  });
  return issues.length > 0 ? { issues } : { assertions };
}

export function buildTest(draft: TestDraft, view: MicrotaskView): BuildResult {
  const parsed = parseRows(draft.rows, "assertions");
  if ("issues" in parsed) return failed(parsed.issues);
  const body: SubmissionBody = { kind: "WriteTest", assertions: parsed.assertions };
  const issues = validateSubmission(body, view);
  return issues.length > 0 ? failed(issues) : { body };
}

function buildImplementationDoc(draft: ImplementDraft): { impl: ImplementationDoc } | { issues: Issue[] } {
  const issues: Issue[] = [];
  const declaredPseudoCalls: PseudoCallDoc[] = draft.pseudoCalls.map((row) => ({
    name: row.name.trim(),
    returnType: row.returnType,
    description: row.description,
    params: row.params.map((p) => [p.name.trim(), p.scalar] as [string, string]),
  }));
  if (draft.mode === "Source") {
    return {
      impl: {
        kind: "Source",
        source: draft.source,
        languageTag: draft.languageTag.trim(),
        declaredPseudoCalls,
      },
    };
  }
  const entries: Record<string, Value> = {};
  draft.rows.forEach((row, i) => {
    const args: Value[] = [];
    let bad = false;
    row.args.forEach((text, j) => {
      const parsed = parseValueText(text);
      if ("error" in parsed) {
        issues.push({ path: `table[${i}].args[${j}]`, code: "MalformedBody", message: parsed.error });
        bad = true;
      } else {
        args.push(parsed.value);
      }
    });
    const output = parseValueText(row.output);
    if ("error" in output) {
      issues.push({ path: `table[${i}].output`, code: "MalformedBody", message: output.error });
      bad = true;
    }
    if (bad) return;
    const key = canonicalText(args);
    if (key in entries) {
      issues.push({ path: `table[${i}].args`, code: "DuplicateTableRow", message: "these args already have a row" });
      return;
    }
    entries[key] = (output as { value: Value }).value;
  });
  const defaultParsed = parseValueText(draft.defaultText);
  if ("error" in defaultParsed) {
    issues.push({ path: "table.default", code: "MalformedBody", message: defaultParsed.error });
  }
  if (issues.length > 0) return { issues };
  return {
    impl: {
      kind: "Table",
      entries,
      default: (defaultParsed as { value: Value }).value,
      declaredPseudoCalls,
    },
  };
}

export function buildImplement(draft: ImplementDraft, view: MicrotaskView): BuildResult {
  const built = buildImplementationDoc(draft);
  if ("issues" in built) return failed(built.issues);
  const body: SubmissionBody = { kind: "ImplementBehavior", implementation: built.impl };
  const issues = validateSubmission(body, view);
  return issues.length > 0 ? failed(issues) : { body };
}

export function buildDebug(draft: DebugDraft, view: MicrotaskView): BuildResult {
  let body: SubmissionBody;
  if (draft.outcome === "FixedImplementation") {
    const built = buildImplementationDoc(draft.impl);
    if ("issues" in built) return failed(built.issues);
    body = { kind: "DebugFailure", outcome: draft.outcome, implementation: built.impl, reason: draft.reason };
  } else {
    body = { kind: "DebugFailure", outcome: draft.outcome, behaviorId: draft.behaviorId, reason: draft.reason };
  }
  const issues = validateSubmission(body, view);
  return issues.length > 0 ? failed(issues) : { body };
}

export function buildResolve(draft: ResolveDraft, view: MicrotaskView): BuildResult {
  const issues: Issue[] = [];
  const editedStatements: Record<string, string> = {};
  const editedTests: Record<string, AssertionDoc[]> = {};
  for (const side of draft.sides) {
    if (side.editStatement) editedStatements[side.behaviorId] = side.statement.trim();
    if (side.editTest) {
      const parsed = parseRows(side.rows, `editedTests.${side.behaviorId}`);
      if ("issues" in parsed) {
        issues.push(...parsed.issues);
      } else {
        editedTests[side.behaviorId] = parsed.assertions;
      }
    }
  }
  if (issues.length > 0) return failed(issues);
  const body: SubmissionBody = { kind: "ResolveConflict", editedStatements, editedTests };
  const after = validateSubmission(body, view);
  return after.length > 0 ? failed(after) : { body };
}
