/**
 * Shapes of the documents the service sends and accepts, as consumed by the
 * workspace. Field names and nesting follow the wire exactly.
 */

import type { Value } from "./values.js";

export type Schema = [string, string][]; // [fieldName, scalarType] pairs, order significant

export const SCALAR_TYPES = ["string", "number", "boolean", "list", "object"] as const;
export const HTTP_METHODS = ["GET", "POST", "PUT", "DELETE"] as const;
export const MICROTASK_KINDS = [
  "IdentifyBehavior",
  "WriteTest",
  "ImplementBehavior",
  "DebugFailure",
  "ResolveConflict",
] as const;
export type MicrotaskKind = (typeof MICROTASK_KINDS)[number];

// --- requests -----------------------------------------------------------------

export interface EndpointDoc {
  method: string;
  path: string;
  name: string;
  description: string;
  requestSchema: Schema;
  responseSchema: Schema;
}

export interface ProjectSpecDoc {
  name: string;
  endpoints: EndpointDoc[];
}

export interface AssertionDoc {
  args: Value[];
  expected: Value;
}

export interface PseudoCallDoc {
  name: string;
  params: Schema;
  returnType: string;
  description: string;
}

export type ImplementationDoc =
  | {
      kind: "Table";
      entries: Record<string, Value>; // canonical args text -> output
      default: Value;
      declaredPseudoCalls: PseudoCallDoc[];
    }
  | {
      kind: "Source";
      source: string;
      languageTag: string;
      declaredPseudoCalls: PseudoCallDoc[];
    };

export type SubmissionBody =
  | { kind: "IdentifyBehavior"; newStatement: string }
  | { kind: "IdentifyBehavior"; noMoreBehaviors: true }
  | { kind: "WriteTest"; assertions: AssertionDoc[] }
  | { kind: "ImplementBehavior"; implementation: ImplementationDoc }
  | {
      kind: "DebugFailure";
      outcome: "FixedImplementation";
      implementation: ImplementationDoc;
      reason: string;
    }
  | {
      kind: "DebugFailure";
      outcome: "DisputeTest" | "DisputeBehavior";
      behaviorId: string;
      reason: string;
    }
  | {
      kind: "ResolveConflict";
      editedStatements: Record<string, string>;
      editedTests: Record<string, AssertionDoc[]>;
    };

// --- responses ----------------------------------------------------------------

export interface ErrorDoc {
  error: string;
  message: string;
}

export interface BehaviorStatus {
  behaviorId: string;
  statement: string;
  state: string;
  testId: string | null;
  testVersion: number | null;
  revisionPending: boolean;
}

export interface FunctionStatus {
  functionId: string;
  name: string;
  description: string;
  params: Schema;
  returnType: string;
  origin: { kind: string; ref: string };
  state: string;
  behaviors: BehaviorStatus[];
  implementationVersion: number | null;
  noMoreCount: number;
}

export interface OpenMicrotask {
  microtaskId: string;
  kind: MicrotaskKind;
  state: string;
  functionId: string;
  attempt: number;
  skipCount: number;
  assignedWorker: string | null;
  leaseExpiry: number | null;
}

export interface ConflictDoc {
  id: string;
  functionId: string;
  sideA: [string, number];
  sideB: [string, number];
  args: Value[];
  expectedA: Value;
  expectedB: Value;
  state: string;
  ticketId: string | null;
  note: string;
}

export interface StatusDoc {
  projectId: string;
  name: string;
  completed: boolean;
  createdAt: number;
  functions: FunctionStatus[];
  queueDepths: Record<MicrotaskKind, number>;
  openMicrotasks: OpenMicrotask[];
  openConflicts: ConflictDoc[];
  flags: { stuck: string[]; attention: string[] };
  metrics?: Record<string, Value>;
}

export interface FunctionView {
  functionId: string;
  name: string;
  description: string;
  params: Schema;
  returnType: string;
  state: string;
}

export interface ActiveTestView {
  behaviorId: string;
  statement: string;
  assertions: AssertionDoc[];
}

export interface FailureEntry {
  behaviorId: string;
  assertionIndex: number;
  args: Value[];
  expected: Value;
  status: string; // Fail | Error | Timeout
  actual?: Value;
  errorText?: string;
}

export interface ConflictSideView {
  behaviorId: string;
  assertionIndex: number;
  statement: string;
  state: string;
  assertions: AssertionDoc[];
  testVersion: number | null;
}

export interface MicrotaskView {
  microtaskId: string;
  projectId: string;
  kind: MicrotaskKind;
  attempt: number;
  skipCount: number;
  leaseExpiry: number;
  function: FunctionView;
  // IdentifyBehavior
  behaviors?: { behaviorId: string; statement: string; state: string }[];
  noMoreCount?: number;
  identifyQuorum?: number;
  alreadyDeclared?: boolean;
  // WriteTest
  behavior?: { behaviorId: string; statement: string; state: string; revisionPending: boolean };
  currentTest?: { assertions: AssertionDoc[]; version: number } | null;
  // ImplementBehavior / DebugFailure
  currentImplementation?: ImplementationDoc | null;
  activeTests?: ActiveTestView[];
  knownFunctions?: { name: string; params: Schema; returnType: string }[];
  failureReport?: { functionId: string; implementationVersion: number; entries: FailureEntry[] };
  // ResolveConflict
  conflict?: ConflictDoc;
  sides?: ConflictSideView[];
}

export type FetchResult = { noWork: true } | { noWork: false; microtask: MicrotaskView };

export type SubmitResult =
  | { status: "accepted"; microtaskId: string; spawned: string[]; note: string }
  | { status: "rejected"; code: string; message: string; microtaskId: string; attempt: number };

export interface SkipResult {
  status: "skipped";
  microtaskId: string;
  skipCount: number;
  attention: boolean;
}

export interface RegisterResult {
  workerId: string;
  token: string;
}
